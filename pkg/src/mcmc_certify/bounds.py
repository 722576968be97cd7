"""Explicit bounds on the root-MSE of MCMC averages from drift/minorization constants.

Every function here is a pure function of its arguments.  The root-MSE bound
has the form

    sigma_as / sqrt(n) * (1 + C0 / n) + C1 / n + C2 / n

and the functions below produce upper bounds for sigma_as^2, C0, C1 and C2
under a geometric or a polynomial drift condition towards a small set J on
which P(x, .) >= beta * nu(.).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .errors import (
    InfeasibleError,
    InvalidInputError,
    MomentUnavailableError,
    OptimizationError,
    UnsupportedRegimeError,
)
from .numerics import golden_min

_EXP_DIGITS = 12


class Provenance(str, Enum):
    KNOWN_PI_V = "known_pi_V"
    DRIFT_ONLY = "drift_only"
    EMPIRICAL = "empirical"


class PlausibilityWarning(UserWarning):
    """Drift constants are legal but unusual (e.g. K < lambda + beta)."""


def _check_finite(**values):
    for name, v in values.items():
        if v is None:
            continue
        if not math.isfinite(v):
            raise InvalidInputError(f"{name} must be finite, got {v}")


@dataclass(frozen=True)
class GeometricDriftParams:
    """Constants of PV <= lam*V off J, PV <= K on J, and the small-set mass beta."""

    lam: float
    K: float
    beta: float
    small_set_label: str = ""

    def __post_init__(self):
        _check_finite(lam=self.lam, K=self.K, beta=self.beta)
        if not 0.0 < self.lam < 1.0:
            raise InvalidInputError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.K < 1.0:
            raise InvalidInputError(f"K must be >= 1, got {self.K}")
        if not 0.0 < self.beta <= 1.0:
            raise InvalidInputError(f"beta must lie in (0, 1], got {self.beta}")
        if self.K <= self.lam:
            raise InvalidInputError(f"K must exceed lambda (K={self.K}, lambda={self.lam})")
        if self.K < self.lam + self.beta:
            warnings.warn(
                f"K={self.K} < lambda + beta={self.lam + self.beta}; some bound terms go negative",
                PlausibilityWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class PolynomialDriftParams:
    """Constants of PV <= V - (1-lam) V^alpha off J, PV <= K on J."""

    lam: float
    K: float
    beta: float
    alpha: float
    small_set_label: str = ""

    def __post_init__(self):
        _check_finite(lam=self.lam, K=self.K, beta=self.beta, alpha=self.alpha)
        if not 0.0 < self.lam < 1.0:
            raise InvalidInputError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.K < 1.0:
            raise InvalidInputError(f"K must be >= 1, got {self.K}")
        if not 0.0 < self.beta <= 1.0:
            raise InvalidInputError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.K <= self.lam:
            raise InvalidInputError(f"K must exceed lambda (K={self.K}, lambda={self.lam})")
        if self.K < self.lam + self.beta:
            warnings.warn(
                f"K={self.K} < lambda + beta={self.lam + self.beta}; some bound terms go negative",
                PlausibilityWarning,
                stacklevel=3,
            )


MomentValue = Union[float, Callable[[int], float]]


def _ekey(eta: float) -> float:
    return round(float(eta), _EXP_DIGITS)


@dataclass(frozen=True)
class MomentInputs:
    """Exact values or upper bounds for the moments the bound formulas consume.

    ``pi_*`` are stationary moments, ``xi_*`` moments of the initial law and
    ``xiPn_*`` moments of the law at time n (a float, or a callable of n).
    ``start_V`` is V(x0) for a deterministic start; when set it determines
    every ``xi`` moment.  ``derived`` names the fields that were filled from
    drift constants rather than supplied by the caller.
    """

    pi_V: Optional[float] = None
    pi_sqrtV: Optional[float] = None
    pi_V_eta: Mapping[float, float] = field(default_factory=dict)
    xi_V: Optional[float] = None
    xi_sqrtV: Optional[float] = None
    xi_V_eta: Mapping[float, float] = field(default_factory=dict)
    start_V: Optional[float] = None
    xiPn_V: Optional[MomentValue] = None
    xiPn_sqrtV: Optional[MomentValue] = None
    fbar_norm: Optional[float] = None
    f_norm: Optional[float] = None
    inf_V: float = 1.0
    derived: frozenset = frozenset()

    def __post_init__(self):
        for name in ("pi_V", "pi_sqrtV", "xi_V", "xi_sqrtV", "start_V", "inf_V"):
            v = getattr(self, name)
            if v is None:
                continue
            _check_finite(**{name: v})
            if v < 1.0 - 1e-12:
                raise InvalidInputError(f"{name} must be >= 1 since V >= 1, got {v}")
        for name in ("fbar_norm", "f_norm"):
            v = getattr(self, name)
            if v is not None:
                _check_finite(**{name: v})
                if v < 0:
                    raise InvalidInputError(f"{name} must be >= 0, got {v}")
        # Jensen only constrains true moments; upper bounds may exceed it.
        exact = not ({"pi_V", "pi_sqrtV"} & set(self.derived))
        if exact and self.pi_V is not None and self.pi_sqrtV is not None:
            if self.pi_sqrtV > math.sqrt(self.pi_V) * (1 + 1e-12):
                raise InvalidInputError(
                    f"pi_sqrtV={self.pi_sqrtV} exceeds sqrt(pi_V)={math.sqrt(self.pi_V)} (Jensen)"
                )
        object.__setattr__(self, "pi_V_eta", {_ekey(k): float(v) for k, v in dict(self.pi_V_eta).items()})
        object.__setattr__(self, "xi_V_eta", {_ekey(k): float(v) for k, v in dict(self.xi_V_eta).items()})
        object.__setattr__(self, "derived", frozenset(self.derived))

    def pi_moment(self, eta: float, formula: str) -> float:
        k = _ekey(eta)
        if k == 1.0 and self.pi_V is not None:
            return self.pi_V
        if k == 0.5 and self.pi_sqrtV is not None:
            return self.pi_sqrtV
        if k == 0.0:
            return 1.0
        if k in self.pi_V_eta:
            return self.pi_V_eta[k]
        raise MomentUnavailableError(f"pi(V^{eta:g})", formula)

    def xi_moment(self, eta: float, formula: str) -> float:
        k = _ekey(eta)
        if self.start_V is not None:
            return self.start_V ** eta
        if k == 1.0 and self.xi_V is not None:
            return self.xi_V
        if k == 0.5 and self.xi_sqrtV is not None:
            return self.xi_sqrtV
        if k == 0.0:
            return 1.0
        if k in self.xi_V_eta:
            return self.xi_V_eta[k]
        raise MomentUnavailableError(f"xi(V^{eta:g})", formula)

    def require_fbar_norm(self, formula: str) -> float:
        if self.fbar_norm is None:
            raise MomentUnavailableError("fbar_norm", formula)
        return self.fbar_norm


@dataclass(frozen=True)
class BoundComponents:
    sigma_as_sq: float
    c0: float
    c1: float
    c2: float
    provenance: Provenance = Provenance.KNOWN_PI_V

    def __post_init__(self):
        for name in ("sigma_as_sq", "c0", "c1", "c2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidInputError(f"BoundComponents.{name} is not finite: {v}")

    @property
    def sigma_as(self) -> float:
        return math.sqrt(self.sigma_as_sq)

    def as_dict(self) -> dict:
        return {
            "sigma_as_sq": self.sigma_as_sq,
            "sigma_as": self.sigma_as,
            "c0": self.c0,
            "c1": self.c1,
            "c2": self.c2,
            "provenance": self.provenance.value,
        }


@dataclass(frozen=True)
class ConfidencePlan:
    epsilon: float
    alpha_conf: float
    n_min: int


def combine_mse_bound(comp: BoundComponents, n: int) -> float:
    """Upper bound on sqrt(E(theta_hat_n - theta)^2)."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    n = float(n)
    return comp.sigma_as / math.sqrt(n) * (1.0 + comp.c0 / n) + comp.c1 / n + comp.c2 / n


def _provenance(m: MomentInputs) -> Provenance:
    return Provenance.DRIFT_ONLY if ("pi_V" in m.derived or "pi_sqrtV" in m.derived) else Provenance.KNOWN_PI_V


def _xiPn(value: Optional[MomentValue], n: Optional[int], name: str) -> float:
    if value is None:
        raise MomentUnavailableError(name, "C2 bound (first-block bound with xi replaced by xi P^n)")
    if callable(value):
        if n is None:
            raise InvalidInputError(f"{name} depends on n but no n was given")
        return float(value(n))
    return float(value)


# ---------------------------------------------------------------------------
# geometric drift
# ---------------------------------------------------------------------------

def _geo_first_block_sq(p: GeometricDriftParams, start_V: float, start_sqrtV: float) -> float:
    """Bound on E_x(sum_{i<T} V^{1/2}(X_i))^2 averaged over the start law."""
    sl, sk = math.sqrt(p.lam), math.sqrt(p.K)
    om = 1.0 - sl
    r = sk - sl - p.beta
    return (start_V / om**2
            + 2.0 * r / (p.beta * om**2) * start_sqrtV
            + (p.beta * (p.K - p.lam - p.beta) + 2.0 * r**2) / (p.beta**2 * om**2))


def geo_c0(p: GeometricDriftParams, m: MomentInputs, variant: str = "sqrtV") -> float:
    if variant == "V":
        pi_V = m.pi_moment(1.0, "C0 bound (pi(V) form)")
        return (p.lam / (1 - p.lam) * pi_V
                + (p.K - p.lam - p.beta) / (p.beta * (1 - p.lam)) + 0.5)
    if variant == "sqrtV":
        sl, sk = math.sqrt(p.lam), math.sqrt(p.K)
        pis = m.pi_moment(0.5, "C0 bound (pi(V^1/2) form)")
        return sl / (1 - sl) * pis + (sk - sl - p.beta) / (p.beta * (1 - sl)) + 0.5
    raise InvalidInputError(f"c0_variant must be 'V' or 'sqrtV', got {variant!r}")


def geo_sigma_as_sq(p: GeometricDriftParams, m: MomentInputs) -> float:
    formula = "asymptotic variance bound (geometric drift)"
    fn = m.require_fbar_norm(formula)
    sl, sk = math.sqrt(p.lam), math.sqrt(p.K)
    pi_V = m.pi_moment(1.0, formula)
    pis = m.pi_moment(0.5, formula)
    core = (1 + sl) / (1 - sl) * pi_V + 2.0 * (sk - sl - p.beta) / (p.beta * (1 - sl)) * pis
    return fn * fn * core


def geo_bounds(p: GeometricDriftParams, m: MomentInputs, n: Optional[int] = None,
               c0_variant: str = "sqrtV") -> BoundComponents:
    """Bounds on (sigma_as^2, C0, C1, C2) under geometric drift.

    ``m`` must carry pi(V), pi(V^1/2), the start moments and fbar_norm in the
    V^{1/2}-norm, either supplied or filled by :func:`geo_complementary`.
    """
    c0 = geo_c0(p, m, c0_variant)
    s2 = geo_sigma_as_sq(p, m)
    fn = m.require_fbar_norm("C1 bound")
    c1_formula = "C1 bound (first block from xi)"
    c1 = fn * math.sqrt(max(_geo_first_block_sq(p, m.xi_moment(1.0, c1_formula),
                                                 m.xi_moment(0.5, c1_formula)), 0.0))
    xn = _xiPn(m.xiPn_V, n, "xiPn_V")
    xns = _xiPn(m.xiPn_sqrtV, n, "xiPn_sqrtV")
    c2 = fn * math.sqrt(max(_geo_first_block_sq(p, xn, xns), 0.0))
    return BoundComponents(s2, c0, c1, c2, _provenance(m))


def geo_pi_V_bound(p: GeometricDriftParams) -> float:
    return (p.K - p.lam) / (1 - p.lam)


def geo_pi_sqrtV_bound(p: GeometricDriftParams) -> float:
    sl = math.sqrt(p.lam)
    return (math.sqrt(p.K) - sl) / (1 - sl)


def geo_complementary(p: GeometricDriftParams, partial: MomentInputs,
                      sqrtV_rule: str = "drift") -> MomentInputs:
    """Fill missing moments with the drift-only complementary bounds.

    A supplied pi(V) is turned into pi(V^1/2) <= sqrt(pi(V)).  When pi(V) is
    itself unknown, pi(V^1/2) comes from its own drift bound (``sqrtV_rule=
    "drift"``) or from sqrt of the pi(V) bound (``"jensen"``, never looser).
    The xi P^n moments are capped at K/(1-lam) and K^1/2/(1-lam^1/2) when the
    start moments lie below those levels.
    """
    if sqrtV_rule not in ("drift", "jensen"):
        raise InvalidInputError(f"sqrtV_rule must be 'drift' or 'jensen', got {sqrtV_rule!r}")
    if partial.fbar_norm is None and partial.f_norm is None:
        raise InvalidInputError("either fbar_norm or f_norm must be supplied")
    upd: dict = {}
    derived = set(partial.derived)
    pi_V = partial.pi_V
    if pi_V is None:
        pi_V = geo_pi_V_bound(p)
        upd["pi_V"] = pi_V
        derived.add("pi_V")
    if partial.pi_sqrtV is None:
        if "pi_V" in derived and sqrtV_rule == "drift":
            upd["pi_sqrtV"] = geo_pi_sqrtV_bound(p)
        else:
            upd["pi_sqrtV"] = math.sqrt(pi_V)
        if "pi_V" in derived:
            derived.add("pi_sqrtV")

    xi_V, xi_sqrtV = partial.xi_V, partial.xi_sqrtV
    if partial.start_V is not None:
        xi_V = partial.start_V if xi_V is None else xi_V
        xi_sqrtV = math.sqrt(partial.start_V) if xi_sqrtV is None else xi_sqrtV
    if xi_V is not None and xi_sqrtV is None:
        xi_sqrtV = math.sqrt(xi_V)
    if xi_V is not None:
        upd["xi_V"] = xi_V
    if xi_sqrtV is not None:
        upd["xi_sqrtV"] = xi_sqrtV

    cap_V = p.K / (1 - p.lam)
    sl = math.sqrt(p.lam)
    cap_sqrtV = math.sqrt(p.K) / (1 - sl)
    if partial.xiPn_V is None and xi_V is not None and xi_V <= cap_V:
        upd["xiPn_V"] = cap_V
        derived.add("xiPn_V")
    if partial.xiPn_sqrtV is None and xi_sqrtV is not None and xi_sqrtV <= cap_sqrtV:
        upd["xiPn_sqrtV"] = cap_sqrtV
        derived.add("xiPn_sqrtV")

    if partial.fbar_norm is None:
        factor = 1.0 + geo_pi_sqrtV_bound(p) / math.sqrt(partial.inf_V)
        upd["fbar_norm"] = partial.f_norm * factor
        derived.add("fbar_norm")
    return replace(partial, derived=frozenset(derived), **upd)


# ---------------------------------------------------------------------------
# polynomial drift
# ---------------------------------------------------------------------------

def _poly_q(p: PolynomialDriftParams) -> float:
    a, lam, b = p.alpha, p.lam, p.beta
    return (2 * p.K ** (a / 2) - 2 - 2 * b) / (a * b * (1 - lam)) + 1 / b


def _poly_block_constant(p: PolynomialDriftParams) -> float:
    """Start-independent terms shared by the C1 and C2 bounds."""
    a, lam, b, K = p.alpha, p.lam, p.beta, p.K
    q = _poly_q(p)
    return ((a * (1 - lam) + 4) / (a * b * (1 - lam))
            + (K ** (2 * a - 1) - 1 - b) / ((2 * a - 1) * b * (1 - lam))
            + 4 * (K**a - 1 - b) / (a**2 * b * (1 - lam) ** 2)
            + 2 * q * q - 2 * q)


def _poly_half_coef(p: PolynomialDriftParams) -> float:
    a, lam, b, K = p.alpha, p.lam, p.beta, p.K
    return ((8 * K ** (a / 2) - 8 - 8 * b) / (a**2 * b * (1 - lam) ** 2)
            + (4 - 4 * b) / (a * b * (1 - lam)))


def _require_poly_regime(p: PolynomialDriftParams) -> None:
    if p.alpha <= 2.0 / 3.0:
        raise UnsupportedRegimeError(
            f"polynomial-drift bounds require alpha > 2/3 (got alpha={p.alpha}); "
            "the 1/2 < alpha <= 2/3 variant needs extra hypotheses and is not provided"
        )


def poly_bounds(p: PolynomialDriftParams, m: MomentInputs) -> BoundComponents:
    """Bounds on (sigma_as^2, C0, C1, C2) under polynomial drift with alpha > 2/3.

    ``fbar_norm`` is taken in the V^{3 alpha/2 - 1}-norm.
    """
    a, lam, b, K = p.alpha, p.lam, p.beta, p.K
    _require_poly_regime(p)
    om = 1 - lam

    f_c0 = "C0 bound (polynomial drift)"
    c0 = m.pi_moment(a, f_c0) / (a * om) + (K**a - 1 - b) / (b * a * om) + 1 / b - 0.5

    f_s = "asymptotic variance bound (polynomial drift)"
    fn = m.require_fbar_norm(f_s)
    core = (m.pi_moment(3 * a - 2, f_s)
            + 4 * m.pi_moment(2 * a - 1, f_s) / (a * om)
            + 2 * ((2 * K ** (a / 2) - 2 - 2 * b) / (a * b * om) + 1 / b - 1)
            * m.pi_moment(1.5 * a - 1, f_s))
    s2 = fn * fn * core

    f_c1 = "C1 bound (polynomial drift)"
    c1_sq = (m.xi_moment(2 * a - 1, f_c1) / ((2 * a - 1) * om)
             + 4 * m.xi_moment(a, f_c1) / (a**2 * om**2)
             + _poly_half_coef(p) * m.xi_moment(a / 2, f_c1)
             + _poly_block_constant(p))
    c1 = fn * math.sqrt(max(c1_sq, 0.0))

    r = (K - lam) / om
    c2_sq = (r ** ((4 * a - 2) / a) / ((2 * a - 1) * b ** ((2 * a - 1) / a) * om)
             + 4 * (K - lam) ** 2 / (a**2 * b * om**4)
             + _poly_half_coef(p) * (K - lam) / (math.sqrt(b) * om)
             + _poly_block_constant(p))
    c2 = fn * math.sqrt(max(c2_sq, 0.0))
    return BoundComponents(s2, c0, c1, c2, _provenance(m))


def poly_pi_V_eta_bound(p: PolynomialDriftParams, eta: float) -> float:
    if eta > p.alpha + 1e-15:
        raise InvalidInputError(f"exponent eta={eta} exceeds alpha={p.alpha}")
    return ((p.K - p.lam) / (1 - p.lam)) ** (eta / p.alpha)


def pi_J_lower(p: PolynomialDriftParams | GeometricDriftParams) -> float:
    """Lower bound (1 - lam)/(K - lam) on the stationary mass of the small set."""
    return (1 - p.lam) / (p.K - p.lam)


def nu_Pn_V_eta_bound(p: PolynomialDriftParams, eta: float) -> float:
    """Bound on E_nu V^eta(X_n), uniform in n, for eta <= alpha."""
    if eta > p.alpha + 1e-15:
        raise InvalidInputError(f"exponent eta={eta} exceeds alpha={p.alpha}")
    return p.beta ** (-eta / p.alpha) * ((p.K - p.lam) / (1 - p.lam)) ** (2 * eta / p.alpha)


def poly_complementary(p: PolynomialDriftParams, eta: float, partial: MomentInputs) -> MomentInputs:
    """Fill pi(V^eta) and (if needed) fbar_norm in the V^eta-norm for eta <= alpha."""
    if not 0 <= eta <= p.alpha + 1e-15:
        raise InvalidInputError(f"exponent eta={eta} must lie in [0, alpha={p.alpha}]")
    bound = poly_pi_V_eta_bound(p, eta)
    derived = set(partial.derived)
    pi_eta = dict(partial.pi_V_eta)
    key = _ekey(eta)
    have = key in pi_eta or (key == 1.0 and partial.pi_V is not None)
    upd: dict = {}
    if not have:
        pi_eta[key] = bound
        upd["pi_V_eta"] = pi_eta
        if key == 1.0:
            upd["pi_V"] = bound
            derived.add("pi_V")
        derived.add(f"pi_V^{key:g}")
    if partial.fbar_norm is None:
        if partial.f_norm is None:
            raise InvalidInputError("either fbar_norm or f_norm must be supplied")
        upd["fbar_norm"] = partial.f_norm * (1.0 + bound)
        derived.add("fbar_norm")
    out = replace(partial, derived=frozenset(derived), **upd)
    if any(d.startswith("pi_V") for d in derived) and "pi_V" not in derived:
        out = replace(out, derived=out.derived | {"pi_V"})
    return out


def poly_required_exponents(alpha: float) -> tuple[float, ...]:
    return (alpha, 2 * alpha - 1, 3 * alpha - 2, 1.5 * alpha - 1)


def poly_complete_moments(p: PolynomialDriftParams, partial: MomentInputs) -> MomentInputs:
    """Fill every stationary moment poly_bounds needs (fbar_norm in the V^{3a/2-1}-norm)."""
    _require_poly_regime(p)
    m = partial
    # fbar_norm first, in the norm poly_bounds consumes.
    m = poly_complementary(p, 1.5 * p.alpha - 1, m)
    for eta in poly_required_exponents(p.alpha):
        m = poly_complementary(p, eta, m)
    return m


# ---------------------------------------------------------------------------
# planning and small-set optimisation
# ---------------------------------------------------------------------------

def confidence_plan(bound_fn: Callable[[int], float], epsilon: float, alpha_conf: float,
                    ceiling: int = 10**12) -> ConfidencePlan:
    """Least n with bound_fn(n)^2 <= epsilon^2 * alpha_conf (Chebyshev planning).

    ``bound_fn`` must be nonincreasing in n; the search doubles from n = 1 and
    then bisects on integers.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < alpha_conf < 1:
        raise InvalidInputError(f"alpha_conf must lie in (0, 1), got {alpha_conf}")
    target = epsilon * epsilon * alpha_conf

    def ok(n: int) -> bool:
        v = bound_fn(n)
        return math.isfinite(v) and v * v <= target

    if ok(1):
        return ConfidencePlan(epsilon, alpha_conf, 1)
    lo, hi = 1, 2
    while not ok(hi):
        lo = hi
        hi *= 2
        if lo >= ceiling:
            raise InfeasibleError(f"bound does not reach eps^2*alpha={target:g} within n <= {ceiling}")
        hi = min(hi, ceiling)
        if hi == lo:
            raise InfeasibleError(f"bound does not reach eps^2*alpha={target:g} within n <= {ceiling}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return ConfidencePlan(epsilon, alpha_conf, hi)


def optimize_small_set(objective: Callable[[float], float], a_lo: float, a_hi: float,
                       grid: int = 400, tol: float = 1e-4) -> tuple[float, float]:
    """Grid scan followed by golden-section refinement of a 1-D objective."""
    if not a_lo < a_hi:
        raise InvalidInputError(f"empty range [{a_lo}, {a_hi}]")
    xs = np.linspace(a_lo, a_hi, grid)

    def safe(x: float) -> float:
        try:
            v = float(objective(x))
        except (ValueError, ArithmeticError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    vals = np.array([safe(x) for x in xs])
    if not np.isfinite(vals).any():
        raise OptimizationError("objective is nonfinite on the whole range")
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, grid - 1)]
    if lo == hi:
        return float(xs[i]), float(vals[i])
    x, v = golden_min(safe, float(lo), float(hi), tol=tol)
    if vals[i] < v:
        return float(xs[i]), float(vals[i])
    return x, v

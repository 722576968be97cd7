"""A synthetic polynomially ergodic chain with a known small set and atom law.

State (x, s) with x >= 1 and a sign s in {-1, +1}.  From x the chain jumps
to a fresh draw 1 + Exp(1) with probability p(x) = c x^(alpha - 1); otherwise
it drifts outwards to x + Exp(1).  Independently, s is kept with probability
``persist`` and flipped otherwise.  With V(x, s) = x,

    PV(x) = x + 1 - p(x) (x - 1),

which satisfies PV <= V - (1 - lam) V^alpha beyond the threshold x_J.  The
target f = s x^(3 alpha / 2 - 1) has mean 0 by symmetry and unit norm in the
V^(3 alpha / 2 - 1) weighting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..bounds import PolynomialDriftParams
from ..errors import ConstructionError, InvalidInputError
from .base import SplitChainBase


@dataclass(frozen=True)
class ToyPolyParams:
    alpha: float = 0.8
    lam: float = 0.5
    jump: float = 0.9
    persist: float = 0.75
    x_J: Optional[float] = None

    def __post_init__(self):
        if not 2.0 / 3.0 < self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in (2/3, 1], got {self.alpha}")
        if not 0 < self.jump <= 1:
            raise InvalidInputError(f"jump must lie in (0, 1], got {self.jump}")
        if not 1 - self.jump < self.lam < 1:
            raise InvalidInputError(f"lam must lie in (1 - jump, 1) = ({1 - self.jump}, 1), got {self.lam}")
        if not 0 < self.persist < 1:
            raise InvalidInputError(f"persist must lie in (0, 1), got {self.persist}")


def _jump_prob(x, p: ToyPolyParams):
    return p.jump * np.asarray(x, dtype=float) ** (p.alpha - 1)


def _pv(x, p: ToyPolyParams):
    x = np.asarray(x, dtype=float)
    return x + 1 - _jump_prob(x, p) * (x - 1)


def _drift_gap(x, p: ToyPolyParams):
    """PV - V + (1 - lam) V^alpha; must be <= 0 outside the small set."""
    x = np.asarray(x, dtype=float)
    return _pv(x, p) - x + (1 - p.lam) * x**p.alpha


def small_set_threshold(p: ToyPolyParams) -> float:
    """Least x beyond which the drift inequality holds (bisection)."""
    lo, hi = 1.0, 2.0
    while _drift_gap(hi, p) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            raise ConstructionError("drift inequality never holds")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _drift_gap(mid, p) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def verify_drift(p: ToyPolyParams, x_J: float, K: float, n_grid: int = 10_000, x_max: float = 1e8) -> float:
    """Check the drift inequality on a log-spaced grid; returns the worst gap off J."""
    grid = np.geomspace(1.0, x_max, n_grid)
    off = grid[grid > x_J]
    on = grid[grid <= x_J]
    worst = float(np.max(_drift_gap(off, p))) if off.size else -math.inf
    if worst > 0:
        raise ConstructionError(f"drift inequality fails off J: max gap {worst:.3g}")
    if on.size and np.max(_pv(on, p)) > K * (1 + 1e-12):
        raise ConstructionError("PV exceeds K on J")
    return worst


def toy_poly_params(p: ToyPolyParams) -> PolynomialDriftParams:
    x_J = p.x_J if p.x_J is not None else small_set_threshold(p)
    if _drift_gap(x_J, p) > 0:
        raise ConstructionError(f"x_J={x_J} is below the drift threshold")
    grid = np.linspace(1.0, x_J, 4001)
    K = float(max(np.max(_pv(grid, p)), _pv(x_J, p)))
    K = max(K, 1.0)
    beta = 2 * min(p.persist, 1 - p.persist) * float(_jump_prob(x_J, p))
    return PolynomialDriftParams(p.lam, K, beta, p.alpha, f"J=[1,{x_J:.6g}]")


class ToyPolyModel(SplitChainBase):
    state_dim = 2

    def __init__(self, p: ToyPolyParams = ToyPolyParams()):
        self.p = p
        self.x_J = p.x_J if p.x_J is not None else small_set_threshold(p)
        self.drift = toy_poly_params(ToyPolyParams(p.alpha, p.lam, p.jump, p.persist, self.x_J))
        verify_drift(p, self.x_J, self.drift.K)
        self.beta = self.drift.beta
        self.theta = 0.0
        self.f_exponent = 1.5 * p.alpha - 1
        self._qmin = min(p.persist, 1 - p.persist)
        self._pmin = float(_jump_prob(self.x_J, p))

    def start_state(self, x: float = 1.0, s: float = 1.0) -> np.ndarray:
        return np.array([x, s])

    def step(self, x, rng):
        xs, s = x[:, 0], x[:, 1]
        u = rng.random(xs.shape)
        e = rng.standard_exponential(xs.shape)
        jump = u < _jump_prob(xs, self.p)
        xn = np.where(jump, 1.0 + e, xs + e)
        flip = rng.random(xs.shape) >= self.p.persist
        sn = np.where(flip, -s, s)
        return np.stack([xn, sn], axis=1)

    def in_small_set(self, x):
        return x[:, 0] <= self.x_J

    def _log_q(self, x, y):
        same = x[:, 1] == y[:, 1]
        return np.where(same, math.log(self.p.persist), math.log(1 - self.p.persist))

    def log_transition_density(self, x, y):
        xs, ys = x[:, 0], y[:, 0]
        pj = _jump_prob(xs, self.p)
        dens = pj * np.exp(-(ys - 1))
        dens = dens + np.where(ys > xs, (1 - pj) * np.exp(-(ys - xs)), 0.0)
        with np.errstate(divide="ignore"):
            return np.log(dens) + self._log_q(x, y)

    def log_nu_density(self, y):
        return -(y[:, 0] - 1) + math.log(0.5)

    def V(self, x):
        return x[:, 0]

    def f(self, x):
        return x[:, 1] * x[:, 0] ** self.f_exponent

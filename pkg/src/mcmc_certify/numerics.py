"""Special functions, reproducible random streams and 1-D minimization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, InvalidInputError

_SQRT2 = math.sqrt(2.0)
_FPMIN = 1e-300
_EPS = 1e-16


def normal_cdf(x: float) -> float:
    """Standard normal distribution function."""
    if not math.isfinite(x):
        if math.isnan(x):
            raise InvalidInputError("normal_cdf: x is NaN")
        return 1.0 if x > 0 else 0.0
    return 0.5 * math.erfc(-x / _SQRT2)


def _betacf(a: float, b: float, x: float, max_iter: int) -> float:
    # Modified Lentz evaluation of the continued fraction for I_x(a, b).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _stirling_tail(z: float) -> float:
    z2 = z * z
    return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)


def _lgamma_ratio(b: float, a: float) -> float:
    """log(Gamma(b + a) / Gamma(b)) without cancellation for large b."""
    if b < 1e3:
        return math.lgamma(b + a) - math.lgamma(b)
    return ((b - 0.5) * math.log1p(a / b) + a * math.log(b + a) - a
            + _stirling_tail(b + a) - _stirling_tail(b))


def _log_beta(a: float, b: float) -> float:
    if a > b:
        a, b = b, a
    return math.lgamma(a) - _lgamma_ratio(b, a)


def betainc_regularized(a: float, b: float, x: float, max_iter: int = 200_000) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise InvalidInputError("betainc_regularized requires a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"betainc_regularized: x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x, max_iter) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x, max_iter) / b


def student_t_cdf(x: float, df: float) -> float:
    """Distribution function of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise InvalidInputError("student_t_cdf requires df > 0")
    if math.isnan(x):
        raise InvalidInputError("student_t_cdf: x is NaN")
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    if x == 0.0:
        return 0.5
    # Two algebraically equivalent forms; pick the one whose argument is away from 1.
    if x * x < df:
        z = x * x / (df + x * x)
        tail = 0.5 * (1.0 - betainc_regularized(0.5, df / 2.0, z))
    else:
        z = df / (df + x * x)
        tail = 0.5 * betainc_regularized(df / 2.0, 0.5, z)
    return 1.0 - tail if x > 0 else tail


def gamma_cdf(x: float, shape: float, rate: float = 1.0, max_iter: int = 10_000) -> float:
    """Gamma(shape, rate) distribution function (regularized lower incomplete gamma)."""
    if shape <= 0 or rate <= 0:
        raise InvalidInputError(f"gamma_cdf needs shape, rate > 0, got {shape}, {rate}")
    z = x * rate
    if z <= 0:
        return 0.0
    log_pref = shape * math.log(z) - z - math.lgamma(shape)
    if z < shape + 1.0:
        term = total = 1.0 / shape
        a = shape
        for _ in range(max_iter):
            a += 1.0
            term *= z / a
            total += term
            if abs(term) < abs(total) * _EPS:
                return math.exp(log_pref + math.log(total))
        raise ConvergenceError("gamma_cdf series did not converge")
    # Continued fraction for the upper tail (modified Lentz).
    b = z + 1.0 - shape
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - shape)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return 1.0 - math.exp(log_pref) * h
    raise ConvergenceError("gamma_cdf continued fraction did not converge")


def gamma_logpdf(x, shape: float, rate):
    """Log density of Gamma(shape, rate); vectorised over ``x`` and ``rate``."""
    x = np.asarray(x, dtype=float)
    rate = np.asarray(rate, dtype=float)
    return shape * np.log(rate) + (shape - 1) * np.log(x) - rate * x - math.lgamma(shape)


def student_t_logpdf(x, df: float):
    """Log density of Student's t; vectorised over ``x``."""
    x = np.asarray(x, dtype=float)
    c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return c - 0.5 * (df + 1) * np.log1p(x * x / df)


def normal_logpdf(x, mean=0.0, sd=1.0):
    z = (np.asarray(x, dtype=float) - mean) / sd
    return -0.5 * z * z - np.log(sd) - 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one independent random stream.

    Backed by the Philox4x64 counter-based generator; the 128-bit Philox key
    is the concatenation of the two 64-bit words, so every pair yields its own
    stream and the same pair always reproduces the same sequence.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2**64):
                raise InvalidInputError(f"RngStream.{name} must be an unsigned 64-bit integer, got {v}")

    def generator(self) -> np.random.Generator:
        key = (int(self.stream_id) << 64) | int(self.seed)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        """Derive a child stream; children of distinct indices are distinct."""
        mixed = np.random.SeedSequence([self.seed, self.stream_id, index]).generate_state(1, np.uint64)[0]
        return RngStream(self.seed, int(mixed))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6,
               max_iter: int = 500) -> tuple[float, float]:
    """Golden-section search for a minimiser of a unimodal ``fn`` on [lo, hi]."""
    if not lo < hi:
        raise InvalidInputError(f"golden_min needs lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = fn(x1), fn(x2)
    it = 0
    while b - a > tol:
        it += 1
        if it > max_iter:
            raise ConvergenceError(f"golden_min exceeded {max_iter} iterations")
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = fn(x2)
    x = 0.5 * (a + b)
    fx = fn(x)
    # Endpoints win for monotone objectives.
    for cand in (lo, hi):
        fc = fn(cand)
        if fc < fx:
            x, fx = cand, fc
    return x, fx

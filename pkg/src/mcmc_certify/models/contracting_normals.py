"""AR(1) chain P(x, .) = N(c x, 1 - c^2) with stationary law N(0, 1).

V(x) = 1 + x^2, J = [-d, d], f(x) = x.  The minorizing measure is the
overlap of the two extreme transition laws N(+-c d, 1 - c^2) restricted to
[-d, d], whose total mass is beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..bounds import GeometricDriftParams
from ..errors import InvalidInputError
from ..numerics import normal_cdf, normal_logpdf
from .base import SplitChainBase


@dataclass(frozen=True)
class ContractingNormalsParams:
    c: float
    d: float

    def __post_init__(self):
        if not abs(self.c) < 1:
            raise InvalidInputError(f"|c| must be < 1, got c={self.c}")
        if not self.d > 1:
            raise InvalidInputError(f"small-set half-width d must exceed 1, got {self.d}")


def contracting_lambda(c: float, d: float) -> float:
    # PV(x) = 2 - c^2 + c^2 x^2, so sup_{|x|>d} PV/V is attained at |x| = d.
    c2 = c * c
    return c2 + 2 * (1 - c2) / (1 + d * d)


def contracting_params(p: ContractingNormalsParams) -> GeometricDriftParams:
    c, d = p.c, p.d
    c2 = c * c
    s = math.sqrt(1 - c2)
    lam = contracting_lambda(c, d)
    K = 2 + c2 * (d * d - 1)
    # Upper tails keep beta accurate when both arguments are large.
    beta = 2 * (normal_cdf(-abs(c) * d / s) - normal_cdf(-(1 + abs(c)) * d / s))
    return GeometricDriftParams(lam, K, beta, f"J=[-{d:g},{d:g}]")


def ar1_mean_variance(c: float, n: int, stationary: bool = False) -> float:
    """Exact Var of (1/n) sum_{i<n} X_i, from X_0 = 0 or from X_0 ~ N(0, 1)."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if c == 0:
        return (n - 1) / n**2 if not stationary else 1.0 / n
    if stationary:
        # sum_{i,j<n} c^{|i-j|}
        s = n * (1 + c) / (1 - c) - 2 * c * (1 - c**n) / (1 - c) ** 2
        return s / n**2
    # X_0 = 0: Cov(X_i, X_j) = c^{|j-i|} (1 - c^{2 min(i,j)}).
    c2 = c * c
    i = np.arange(n, dtype=float)
    diag = 1 - c2**i
    # Off-diagonal: 2 sum_{i<j} c^{j-i} (1 - c^{2i}) = 2 sum_i (1 - c^{2i}) * c (1 - c^{n-1-i}) / (1 - c)
    off = 2 * np.sum(diag * c * (1 - c ** (n - 1 - i)) / (1 - c))
    return float(np.sum(diag) + off) / n**2


def contracting_exact_plan(c: float, epsilon: float, alpha_conf: float, stationary: bool = False,
                           ceiling: int = 10**9) -> int:
    """Least n with P(|theta_hat_n| < epsilon) > 1 - alpha_conf under the exact Gaussian law.

    The search returns the least n after which the condition holds for
    every larger n tested by the monotone scan, so a degenerate n = 1 at
    X_0 = 0 (where theta_hat_1 = 0 exactly) does not count.
    """
    if not abs(c) < 1:
        raise InvalidInputError(f"|c| must be < 1, got {c}")
    if not epsilon > 0 or not 0 < alpha_conf < 1:
        raise InvalidInputError("epsilon must be > 0 and alpha_conf in (0, 1)")

    def ok(n: int) -> bool:
        v = ar1_mean_variance(c, n, stationary)
        if v <= 0:
            return True
        return 2 * normal_cdf(epsilon / math.sqrt(v)) - 1 > 1 - alpha_conf

    # The variance is eventually decreasing; walk to the first qualifying n
    # past the transient, then bisect.
    lo, hi = 1, 2
    while not ok(hi):
        lo = hi
        hi *= 2
        if hi > ceiling:
            raise InvalidInputError(f"no qualifying n below {ceiling}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


class ContractingNormalsModel(SplitChainBase):
    state_dim = 0

    def __init__(self, p: ContractingNormalsParams):
        self.p = p
        self.c = p.c
        self.d = p.d
        self.s = math.sqrt(1 - p.c**2)
        self.drift = contracting_params(p)
        self.beta = self.drift.beta
        self.theta = 0.0
        self._log_beta = math.log(self.beta)

    def step(self, x, rng):
        return self.c * x + self.s * rng.standard_normal(x.shape)

    def in_small_set(self, x):
        return np.abs(x) <= self.d

    def log_transition_density(self, x, y):
        return normal_logpdf(y, self.c * np.asarray(x), self.s)

    def log_beta_nu(self, y):
        y = np.asarray(y, dtype=float)
        out = normal_logpdf(np.abs(y) + abs(self.c) * self.d, 0.0, self.s)
        return np.where(np.abs(y) <= self.d, out, -np.inf)

    def log_nu_density(self, y):
        return self.log_beta_nu(y) - self._log_beta

    def V(self, x):
        return 1 + np.asarray(x) ** 2

    def f(self, x):
        return np.asarray(x, dtype=float)

    def sample_stationary(self, size, rng):
        return rng.standard_normal(size)

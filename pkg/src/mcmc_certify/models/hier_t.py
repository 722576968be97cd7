"""Gibbs chain for the location of a normal/inverse-gamma hierarchical model.

After integrating out the variance, the chain on the location is

    mu_i = sqrt(1 + mu_{i-1}^2 / t) * theta_i,   theta_i ~ Student-t(t),

with V(mu) = 1 + mu^2 and small set J = [-a, a].  The target is the
posterior mean, f(mu) = mu, which is 0 under the stationary law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..bounds import GeometricDriftParams
from ..errors import InadmissibleSmallSetError, InvalidInputError
from ..numerics import student_t_cdf, student_t_logpdf
from .base import SplitChainBase


@dataclass(frozen=True)
class HierTParams:
    t: int
    a: float

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 4:
            raise InvalidInputError(f"t must be an integer >= 4, got {self.t}")
        thr = admissible_threshold(self.t)
        if not self.a > thr:
            raise InadmissibleSmallSetError(
                f"small-set half-width a={self.a} must exceed sqrt(t/(t-3))={thr:.6g}"
            )


def admissible_threshold(t: int) -> float:
    return math.sqrt(t / (t - 3))


def hier_t_drift(p: HierTParams) -> tuple[float, float, float]:
    """(lambda, K, pi(V)) of the drift condition towards [-a, a]."""
    t, a2 = p.t, p.a * p.a
    lam = ((2 * t - 3) / (1 + a2) + 1) / (t - 2)
    K = 2 + (a2 + 2) / (t - 2)
    pi_V = (2 * t - 3) / (t - 3)
    return lam, K, pi_V


def hier_t_h(t: int, a: float) -> float:
    """|mu| beyond which p(mu | a) exceeds p(mu | 0)."""
    a2 = a * a
    denom = (1 + a2 / t) ** (t / (t + 1)) - 1
    rad = a2 / denom - t
    if not rad >= 0:
        raise InadmissibleSmallSetError(f"negative radicand in h(a) for t={t}, a={a}")
    return math.sqrt(rad)


def hier_t_minorization(p: HierTParams) -> tuple[float, float]:
    """(h(a), beta) for the minorization on [-a, a]."""
    t = p.t
    h = hier_t_h(t, p.a)
    inner = h / math.sqrt(1 + p.a * p.a / t)

    def central(x):
        return 2 * student_t_cdf(x, t) - 1

    beta = 1 - central(h) + central(inner)
    return h, beta


def hier_t_params(p: HierTParams, label: str = "") -> GeometricDriftParams:
    lam, K, _ = hier_t_drift(p)
    _, beta = hier_t_minorization(p)
    return GeometricDriftParams(lam, K, beta, label or f"J=[-{p.a:g},{p.a:g}]")


def hier_t_exact_mse(t: int, n: int, mu0: float = 0.0) -> float:
    """Exact E(theta_hat_n^2) for the chain started at mu0."""
    if t < 4:
        raise InvalidInputError(f"t must be >= 4, got {t}")
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    q = 1 - (1 / (t - 2)) ** n
    return (t / (n * (t - 3))
            - t * (t - 2) / (n * n * (t - 3) ** 2) * q
            + (t - 2) / (n * n * (t - 3)) * q * mu0 * mu0)


def hier_t_sigma_as(t: int) -> float:
    return math.sqrt(t / (t - 3))


class HierTModel(SplitChainBase):
    state_dim = 0

    def __init__(self, p: HierTParams):
        self.p = p
        self.t = p.t
        self.a = p.a
        self.h, self.beta = hier_t_minorization(p)
        self.theta = 0.0
        self._log_beta = math.log(self.beta)

    def step(self, x, rng):
        t = self.t
        z = rng.standard_normal(x.shape)
        chi = rng.chisquare(t, x.shape)
        return np.sqrt(1 + x * x / t) * z / np.sqrt(chi / t)

    def in_small_set(self, x):
        return np.abs(x) <= self.a

    def log_transition_density(self, x, y):
        s = np.sqrt(1 + np.asarray(x) ** 2 / self.t)
        return student_t_logpdf(np.asarray(y) / s, self.t) - np.log(s)

    def p_min(self, y):
        y = np.asarray(y, dtype=float)
        return np.exp(np.minimum(self.log_transition_density(0.0, y),
                                 self.log_transition_density(self.a, y)))

    def log_nu_density(self, y):
        y = np.asarray(y, dtype=float)
        lm = np.minimum(self.log_transition_density(0.0, y), self.log_transition_density(self.a, y))
        return lm - self._log_beta

    def V(self, x):
        return 1 + np.asarray(x) ** 2

    def f(self, x):
        return np.asarray(x, dtype=float)

    def sample_stationary(self, size, rng):
        # Marginally mu is a scaled Student-t with t-1 degrees of freedom.
        t = self.t
        z = rng.standard_normal(size)
        chi = rng.chisquare(t - 1, size)
        return math.sqrt(t / (t - 1)) * z / np.sqrt(chi / (t - 1))

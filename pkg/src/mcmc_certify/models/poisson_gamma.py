"""Gibbs sampler for the Poisson-Gamma hierarchical model of pump failures.

    y_i ~ Poisson(t_i phi_i),  phi_i ~ Gamma(alpha_h, r),  r ~ Gamma(sigma_h, gamma_h)

One scan draws r | phi and then every phi_i | r.  The state is stored as a
vector (phi_1, ..., phi_m, r).  V = 1 + (sum phi - 6.5)^2 and the small set is
J = {4 <= sum phi <= 9}.  Because the scan starts with r, the kernel depends
on the state only through sum phi, and minorization comes from the overlap
of the r-conditionals at sum phi = 4 and sum phi = 9.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from ..bounds import GeometricDriftParams
from ..errors import InvalidInputError, ModelError
from ..numerics import gamma_cdf, gamma_logpdf
from .base import SplitChainBase

DATA_ENV = "MCMC_CERTIFY_DATA"
PUMPS_SHA256 = "4b6951b6d619c209cc9fad04d7cadbf28ff9f9191ad0a27a9f2bb32745674e5f"

# Published drift/minorization constants for J = {4 <= sum phi <= 9}.
REFERENCE_DRIFT = GeometricDriftParams(0.46, 3.3, 0.14, "J={4<=sum(phi)<=9}")
REFERENCE_SHIFT = 3.327
REFERENCE_F_NORM = 3.327


@dataclass(frozen=True)
class PumpData:
    y: np.ndarray
    t: np.ndarray
    source: str = ""

    @property
    def m(self) -> int:
        return len(self.y)


def pump_data_path() -> Path:
    override = os.environ.get(DATA_ENV)
    if override:
        p = Path(override)
        return p / "pumps.csv" if p.is_dir() else p
    return Path(str(resources.files("mcmc_certify.models") / "data" / "pumps.csv"))


def load_pump_data(path: Optional[os.PathLike] = None, verify: bool = True) -> PumpData:
    """Read the pump CSV (header ``pump,y,t``; ``#`` lines are comments)."""
    p = Path(path) if path is not None else pump_data_path()
    if not p.is_file():
        raise ModelError(f"pump data file not found: {p}")
    raw = p.read_bytes()
    if verify:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != PUMPS_SHA256:
            raise ModelError(f"pump data checksum mismatch for {p}: {digest}")
    lines = [ln for ln in raw.decode("utf-8").splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(lines)))
    if reader.fieldnames != ["pump", "y", "t"]:
        raise ModelError(f"pump data header must be pump,y,t; got {reader.fieldnames}")
    rows = list(reader)
    y = np.array([float(r["y"]) for r in rows])
    t = np.array([float(r["t"]) for r in rows])
    if len(rows) == 0 or np.any(y < 0) or np.any(t <= 0):
        raise ModelError("pump data must have nonnegative counts and positive exposures")
    return PumpData(y, t, str(p))


@dataclass(frozen=True)
class PumpParams:
    alpha_h: float = 1.802
    sigma_h: float = 0.01
    gamma_h: float = 1.0
    shift: float = REFERENCE_SHIFT
    component: int = 0
    j_lo: float = 4.0
    j_hi: float = 9.0
    v_center: float = 6.5


class PumpModel(SplitChainBase):
    def __init__(self, params: PumpParams = PumpParams(), data: Optional[PumpData] = None):
        self.params = params
        self.data = data if data is not None else load_pump_data()
        if not 0 <= params.component < self.data.m:
            raise InvalidInputError(f"component must lie in [0, {self.data.m}), got {params.component}")
        if min(params.alpha_h, params.sigma_h, params.gamma_h) <= 0:
            raise InvalidInputError("hyperparameters must be positive")
        self.state_dim = self.data.m + 1
        self.r_shape = self.data.m * params.alpha_h + params.sigma_h
        self.phi_shape = self.data.y + params.alpha_h
        self._phi_lgam = np.array([math.lgamma(a) for a in self.phi_shape])
        self.rate_lo = params.gamma_h + params.j_lo
        self.rate_hi = params.gamma_h + params.j_hi
        self.r_cross = self.r_shape * math.log(self.rate_hi / self.rate_lo) / (self.rate_hi - self.rate_lo)
        # Below r_cross the higher-rate density dominates, above it the lower.
        self.beta = (gamma_cdf(self.r_cross, self.r_shape, self.rate_lo)
                     + 1.0 - gamma_cdf(self.r_cross, self.r_shape, self.rate_hi))
        self.theta = None
        self.drift = REFERENCE_DRIFT

    def start_state(self, phi_sum: float = 6.5, r: float = 1.0) -> np.ndarray:
        phi = np.full(self.data.m, phi_sum / self.data.m)
        return np.concatenate([phi, [r]])

    def step(self, x, rng):
        if np.any(x[:, :-1] <= 0):
            raise ModelError("pump state must have positive phi")
        rate_r = self.params.gamma_h + x[:, :-1].sum(axis=1)
        r = rng.gamma(self.r_shape, 1.0 / rate_r)
        rates = self.data.t[None, :] + r[:, None]
        phi = rng.gamma(self.phi_shape[None, :], 1.0 / rates)
        return np.concatenate([phi, r[:, None]], axis=1)

    def _phi_logpdf(self, y):
        phi, r = y[:, :-1], y[:, -1]
        rates = self.data.t[None, :] + r[:, None]
        a = self.phi_shape[None, :]
        lp = a * np.log(rates) + (a - 1) * np.log(phi) - rates * phi - self._phi_lgam[None, :]
        return lp.sum(axis=1)

    def log_transition_density(self, x, y):
        rate_r = self.params.gamma_h + x[:, :-1].sum(axis=1)
        return gamma_logpdf(y[:, -1], self.r_shape, rate_r) + self._phi_logpdf(y)

    def _log_r_min(self, r):
        return np.minimum(gamma_logpdf(r, self.r_shape, self.rate_lo),
                          gamma_logpdf(r, self.r_shape, self.rate_hi))

    def log_nu_density(self, y):
        return self._log_r_min(y[:, -1]) + self._phi_logpdf(y) - math.log(self.beta)

    def regen_ratio(self, x, y):
        # The phi factors cancel.
        rate_r = self.params.gamma_h + x[:, :-1].sum(axis=1)
        return np.exp(self._log_r_min(y[:, -1]) - gamma_logpdf(y[:, -1], self.r_shape, rate_r))

    def in_small_set(self, x):
        s = x[:, :-1].sum(axis=1)
        return (s >= self.params.j_lo) & (s <= self.params.j_hi)

    def V(self, x):
        return 1 + (x[:, :-1].sum(axis=1) - self.params.v_center) ** 2

    def f(self, x):
        return x[:, self.params.component] - self.params.shift

    def project(self, x):
        return x[:, :-1].sum(axis=1)

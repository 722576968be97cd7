"""Interface a Markov chain implements to be simulated with regenerations.

All methods are vectorised over a leading batch axis: ``x`` holds one state
per chain, either as shape ``(B,)`` for scalar chains or ``(B, d)``.
"""

from __future__ import annotations

from typing import Optional, Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class SplitChainModel(Protocol):
    beta: float
    theta: Optional[float]

    def step(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...

    def in_small_set(self, x: np.ndarray) -> np.ndarray: ...

    def log_transition_density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray: ...

    def log_nu_density(self, y: np.ndarray) -> np.ndarray: ...

    def V(self, x: np.ndarray) -> np.ndarray: ...

    def f(self, x: np.ndarray) -> np.ndarray: ...


class SplitChainBase:
    """Shared helpers; subclasses fill in the kernel-specific pieces."""

    beta: float = 1.0
    theta: Optional[float] = None
    state_dim: int = 0  # 0 for scalar states

    def initial(self, x0, size: int) -> np.ndarray:
        x0 = np.asarray(x0, dtype=float)
        if self.state_dim == 0:
            return np.full(size, float(x0))
        return np.broadcast_to(x0, (size, self.state_dim)).copy()

    def regen_ratio(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """beta * nu(y) / p(y | x); meaningful for x in the small set."""
        return np.exp(np.log(self.beta) + self.log_nu_density(y) - self.log_transition_density(x, y))

    def project(self, x: np.ndarray) -> np.ndarray:
        """Scalar summary of each state, used for trajectory export."""
        return x if self.state_dim == 0 else x[..., 0]

    def sample_stationary(self, size: int, rng: np.random.Generator) -> Optional[np.ndarray]:
        return None

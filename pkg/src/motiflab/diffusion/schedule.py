"""Linear-beta noise schedule and the v-parameterization algebra.

Timesteps are 1-based: t in [1, T], with beta_1 .. beta_T linear between the
endpoints. Network timestep indices are t - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass
class DiffusionSchedule:
    timesteps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    beta: np.ndarray = field(init=False, repr=False)
    alpha_bar: np.ndarray = field(init=False, repr=False)
    sqrt_ab: np.ndarray = field(init=False, repr=False)
    sqrt_1mab: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.timesteps < 1:
            raise ContractError("timesteps must be >= 1")
        self.beta = np.linspace(self.beta_start, self.beta_end, self.timesteps,
                                dtype=np.float64)
        if self.beta.min() <= 0 or self.beta.max() >= 1:
            raise ContractError("beta values must lie in (0, 1)")
        self.alpha_bar = np.cumprod(1.0 - self.beta)
        if np.any(np.diff(self.alpha_bar) >= 0):
            raise ContractError("alpha_bar must be strictly decreasing")
        self.sqrt_ab = np.sqrt(self.alpha_bar)
        self.sqrt_1mab = np.sqrt(1.0 - self.alpha_bar)

    def _coeffs(self, t):
        """(sqrt(alpha_bar_t), sqrt(1 - alpha_bar_t)) for 1-based t, broadcastable."""
        t = np.asarray(t)
        if np.any(t < 1) or np.any(t > self.timesteps):
            raise ContractError(f"t must lie in [1, {self.timesteps}]")
        idx = t.astype(np.int64) - 1
        extra = (1,) * 4  # broadcast over (L, H, W, C)
        a = self.sqrt_ab[idx].reshape(np.shape(idx) + extra if np.shape(idx) else ())
        b = self.sqrt_1mab[idx].reshape(np.shape(idx) + extra if np.shape(idx) else ())
        return a, b


def q_sample(schedule: DiffusionSchedule, z0: np.ndarray, t, eps: np.ndarray) -> np.ndarray:
    """Forward noising: z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps."""
    if np.shape(eps) != np.shape(z0):
        raise ContractError("eps must match z0's shape")
    a, b = schedule._coeffs(t)
    return a * z0 + b * eps


def v_target(schedule: DiffusionSchedule, z0: np.ndarray, eps: np.ndarray, t) -> np.ndarray:
    """v = sqrt(ab_t) eps - sqrt(1 - ab_t) z0."""
    a, b = schedule._coeffs(t)
    return a * eps - b * z0


def z0_from_v(schedule: DiffusionSchedule, z_t: np.ndarray, v: np.ndarray, t) -> np.ndarray:
    """Invert the rotation: z0 = sqrt(ab_t) z_t - sqrt(1 - ab_t) v."""
    a, b = schedule._coeffs(t)
    return a * z_t - b * v


def eps_from_v(schedule: DiffusionSchedule, z_t: np.ndarray, v: np.ndarray, t) -> np.ndarray:
    """eps = sqrt(1 - ab_t) z_t + sqrt(ab_t) v."""
    a, b = schedule._coeffs(t)
    return b * z_t + a * v

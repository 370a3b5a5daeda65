"""Training objective: plain MSE plus the motion-weighted focal term.

The focal term multiplies the residual by the latent-aligned motion heatmap
inside the squared norm, so a weight of m contributes m^2 per element. An
"inverse" mode swaps in (1 - m), and a non-default linear-weight flag applies
m to the squared residual instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

HEATMAP_MODES = ("motif", "inverse", "none")


@dataclass(frozen=True)
class LossSpec:
    lambda_motif: float = 1.0
    heatmap_mode: str = "motif"
    eps_residual: bool = False      # weight the noise-space residual instead of v-space
    square_weight: bool = True      # weight inside the norm (default) vs on the square

    def __post_init__(self):
        if not np.isfinite(self.lambda_motif) or self.lambda_motif < 0:
            raise ContractError("lambda_motif must be finite and >= 0")
        if self.heatmap_mode not in HEATMAP_MODES:
            raise ContractError(f"heatmap_mode must be one of {HEATMAP_MODES}")


def diffusion_loss(pred: np.ndarray, target: np.ndarray) -> float:
    if pred.shape != target.shape:
        raise ContractError(f"pred/target shape mismatch: {pred.shape} vs {target.shape}")
    r = pred - target
    return float(np.mean(np.square(r)))


def _weight(m_prime: np.ndarray, mode: str) -> np.ndarray | None:
    if mode == "none":
        return None
    if m_prime.min() < 0.0 or m_prime.max() > 1.0:
        raise ContractError("heatmap values must lie in [0, 1]")
    return m_prime if mode == "motif" else 1.0 - m_prime


def motif_loss(pred: np.ndarray, target: np.ndarray, m_prime: np.ndarray,
               mode: str = "motif", square_weight: bool = True) -> float:
    """Mean of ||w * (pred - target)||^2 elementwise, w broadcast over channels."""
    if mode not in HEATMAP_MODES:
        raise ContractError(f"mode must be one of {HEATMAP_MODES}")
    if pred.shape != target.shape:
        raise ContractError(f"pred/target shape mismatch: {pred.shape} vs {target.shape}")
    if m_prime.shape != pred.shape[:-1]:
        raise ContractError(
            f"heatmap shape {m_prime.shape} must equal latent spatial dims {pred.shape[:-1]}")
    w = _weight(m_prime, mode)
    if w is None:
        return 0.0
    r = pred - target
    w = w[..., None]
    if square_weight:
        return float(np.mean(np.square(w * r)))
    return float(np.mean(w * np.square(r)))


def total_loss(pred: np.ndarray, target: np.ndarray, m_prime: np.ndarray,
               lambda_motif: float = 1.0, mode: str = "motif",
               square_weight: bool = True) -> float:
    """Joint objective: diffusion MSE + lambda * motion focal term."""
    if not np.isfinite(lambda_motif) or lambda_motif < 0:
        raise ContractError("lambda_motif must be finite and >= 0")
    base = diffusion_loss(pred, target)
    if lambda_motif == 0.0 or mode == "none":
        return base
    return base + lambda_motif * motif_loss(pred, target, m_prime, mode, square_weight)

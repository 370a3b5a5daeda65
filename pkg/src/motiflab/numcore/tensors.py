"""Validation helpers for the dense array types used across the package.

Videos are numpy arrays of shape (L, H, W, C) with values in [0, 1];
latents are (L, H', W', C') real arrays. We pass plain ndarrays around and
validate at module boundaries instead of wrapping them in classes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, NumericError


def check_finite(x: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{name} contains non-finite values")
    return x


def check_video(x: np.ndarray, name: str = "video") -> np.ndarray:
    """Validate an (L, H, W, C) pixel tensor: dims >= 1, finite, values in [0, 1]."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise ContractError(f"{name} must have 4 dims (L,H,W,C), got shape {x.shape}")
    if min(x.shape) < 1:
        raise ContractError(f"{name} dims must all be >= 1, got shape {x.shape}")
    check_finite(x, name)
    if x.min() < 0.0 or x.max() > 1.0:
        raise ContractError(f"{name} values must lie in [0,1]")
    return x


def check_latent(x: np.ndarray, name: str = "latent") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 4:
        raise ContractError(f"{name} must have 4 dims (L,H',W',C'), got shape {x.shape}")
    if min(x.shape) < 1:
        raise ContractError(f"{name} dims must all be >= 1, got shape {x.shape}")
    check_finite(x, name)
    return x


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "arrays") -> None:
    if a.shape != b.shape:
        raise ContractError(f"{what} must share a shape: {a.shape} vs {b.shape}")

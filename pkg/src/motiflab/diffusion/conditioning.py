"""First-frame conditioning and classifier-free prompt dropout."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .latent import encode


def pool_global_feature(cond_latent: np.ndarray) -> np.ndarray:
    """Spatially pooled per-channel feature of a condition latent."""
    return np.asarray(cond_latent).mean(axis=tuple(range(cond_latent.ndim - 1)))


def make_condition(first_frame: np.ndarray, p: int, n_frames: int,
                   prompt_index: int, null_index: int,
                   rng: np.random.Generator | None = None,
                   drop_prob: float = 0.1):
    """Build the condition latent and the (possibly dropped) prompt index.

    The first frame is encoded and replicated across all n_frames for channel
    concatenation; with probability drop_prob the prompt is replaced by the
    null token so the model also learns the unconditional branch.
    """
    frame = np.asarray(first_frame)
    if frame.ndim != 3:
        raise ContractError(f"first frame must be (H, W, C), got {frame.shape}")
    if n_frames < 1:
        raise ContractError("n_frames must be >= 1")
    lat = encode(frame[None], p)                     # (1, H', W', C')
    cond = np.repeat(lat, n_frames, axis=0)
    effective = prompt_index
    if rng is not None and drop_prob > 0 and rng.random() < drop_prob:
        effective = null_index
    return cond, effective

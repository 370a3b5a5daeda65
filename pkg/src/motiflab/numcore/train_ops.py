"""Joint loss evaluation with exact reverse-mode gradients over a batch."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..diffusion.losses import LossSpec, _weight
from ..errors import ContractError
from .network import DenoiserParams, backward_batch, forward_batch
from .tensors import check_finite


@dataclass
class BatchItem:
    """One training example, already in latent space."""

    z_t: np.ndarray          # (L, H', W', C') noisy latent
    target_v: np.ndarray     # (L, H', W', C') v-target
    m_prime: np.ndarray      # (L, H', W') latent-aligned motion heatmap
    cond: np.ndarray         # (L, H', W', C') condition latent
    t: int                   # 1-based schedule timestep
    prompt_index: int

    # residual scale for the eps-weighting flag; 1.0 keeps the v residual
    residual_scale: float = 1.0


def loss_and_grads(params: DenoiserParams, batch: list[BatchItem],
                   loss_spec: LossSpec, with_parts: bool = False):
    """Batch-mean joint loss and its exact gradients w.r.t. every parameter.

    Returns (loss, grads), or (loss, grads, parts) with per-term values when
    with_parts is set.
    """
    if len(batch) == 0:
        raise ContractError("empty batch")
    z = np.stack([b.z_t for b in batch])
    cond = np.stack([b.cond for b in batch])
    target = np.stack([b.target_v for b in batch])
    m = np.stack([b.m_prime for b in batch])
    t_idx = np.array([b.t - 1 for b in batch], dtype=np.int64)
    p_idx = np.array([b.prompt_index for b in batch], dtype=np.int64)
    scale = np.array([b.residual_scale for b in batch]).reshape(-1, 1, 1, 1, 1)
    if not loss_spec.eps_residual:
        scale = np.ones_like(scale)

    pred, cache = forward_batch(params, z, cond, t_idx, p_idx, want_cache=True)
    r = scale * (pred - target)
    n_el = r[0].size

    loss_diff = float(np.mean(np.square(r)))
    w = _weight(m, loss_spec.heatmap_mode)
    lam = loss_spec.lambda_motif
    if w is None:
        loss_motif = 0.0
        wgain = 0.0
    else:
        w = w[..., None]
        if loss_spec.square_weight:
            loss_motif = float(np.mean(np.square(w * r)))
            wgain = np.square(w)
        else:
            loss_motif = float(np.mean(w * np.square(r)))
            wgain = w
    gain = 1.0 + lam * wgain
    dpred = (2.0 / (len(batch) * n_el)) * np.square(scale) * gain * (pred - target)
    loss = loss_diff + lam * loss_motif

    grads = backward_batch(params, cache, dpred.astype(pred.dtype))
    for name, g in grads.items():
        check_finite(g, f"grad[{name}]")
    if with_parts:
        return loss, grads, {"diffusion": loss_diff, "motif": loss_motif}
    return loss, grads

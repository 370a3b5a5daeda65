"""Dense-array numerics: toy video denoiser, exact gradients, optimizer."""

from .network import (
    DenoiserConfig,
    DenoiserParams,
    denoiser_forward,
    forward_batch,
    init_params,
)
from .optim import Optimizer, optimizer_step
from .gradcheck import finite_diff_check
from .train_ops import BatchItem, loss_and_grads
from .tensors import check_finite, check_video

__all__ = [
    "DenoiserConfig",
    "DenoiserParams",
    "denoiser_forward",
    "forward_batch",
    "init_params",
    "Optimizer",
    "optimizer_step",
    "finite_diff_check",
    "BatchItem",
    "loss_and_grads",
    "check_finite",
    "check_video",
]

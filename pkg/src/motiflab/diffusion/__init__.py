"""Diffusion machinery: schedule, latents, losses, conditioning, training, sampling."""

from .schedule import DiffusionSchedule, q_sample, v_target, z0_from_v, eps_from_v
from .latent import encode, decode
from .losses import LossSpec, diffusion_loss, motif_loss, total_loss
from .conditioning import make_condition, pool_global_feature
from .sampler import ddim_sample, ddim_sample_latent

_TRAINING_NAMES = ("TrainConfig", "TrainResult", "train", "prepare_clips",
                   "load_model_bundle")


def __getattr__(name):
    # training pulls in numcore.train_ops, which itself needs .losses from this
    # package; defer the import so package init stays acyclic
    if name in _TRAINING_NAMES:
        from . import training
        return getattr(training, name)
    raise AttributeError(name)

__all__ = [
    "DiffusionSchedule", "q_sample", "v_target", "z0_from_v", "eps_from_v",
    "encode", "decode",
    "LossSpec", "diffusion_loss", "motif_loss", "total_loss",
    "make_condition", "pool_global_feature",
    "TrainConfig", "train",
    "ddim_sample", "ddim_sample_latent",
]

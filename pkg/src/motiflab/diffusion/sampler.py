"""Deterministic DDIM sampling (eta = 0) under the v-parameterization with
classifier-free guidance."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..numcore.network import DenoiserParams, forward_batch
from .latent import decode
from .schedule import DiffusionSchedule


def _timestep_path(timesteps: int, steps: int) -> list[int]:
    """Descending 1-based timesteps: `steps` points evenly spread over [1, T]."""
    ts = np.unique(np.linspace(1, timesteps, steps).round().astype(int))
    return list(ts[::-1])


def ddim_sample_latent(predict_v, shape: tuple[int, ...],
                       schedule: DiffusionSchedule, steps: int = 50,
                       guidance: float = 7.5, seed: int = 0) -> np.ndarray:
    """Run the DDIM trajectory in latent space.

    predict_v(z_t, t, guided) must return the guided v prediction for the
    1-based timestep t; `guided` is the guidance scale (the callee applies
    v_null + g * (v_cond - v_null), or ignores it for unconditional models).
    """
    if not 1 <= steps <= schedule.timesteps:
        raise ContractError(f"steps must lie in [1, {schedule.timesteps}]")
    if guidance < 0:
        raise ContractError("guidance must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal(shape)
    path = _timestep_path(schedule.timesteps, steps)
    for i, t in enumerate(path):
        v = predict_v(z, t, guidance)
        a, b = schedule._coeffs(t)
        z0_hat = a * z - b * v
        eps_hat = b * z + a * v
        if i + 1 < len(path):
            t_next = path[i + 1]
            an, bn = schedule._coeffs(t_next)
            z = an * z0_hat + bn * eps_hat
        else:
            z = z0_hat
    return z


def make_guided_predictor(params: DenoiserParams, cond: np.ndarray,
                          prompt_index: int):
    """Classifier-free guided v predictor for a trained denoiser.

    Evaluates the conditional and null-prompt branches in one batched forward
    pass; g=1 reduces to the conditional prediction, g=0 to the null branch.
    """
    null_index = params.config.vocab_size

    def predict_v(z_t, t, g):
        t_idx = t - 1
        if g == 1.0:
            return forward_batch(params, z_t[None], cond[None],
                                 np.array([t_idx]), np.array([prompt_index]))[0]
        both = forward_batch(
            params, np.stack([z_t, z_t]), np.stack([cond, cond]),
            np.array([t_idx, t_idx]), np.array([prompt_index, null_index]))
        v_cond, v_null = both[0], both[1]
        return v_null + g * (v_cond - v_null)

    return predict_v


def ddim_sample(params: DenoiserParams, cond_latent: np.ndarray,
                prompt_index: int, p: int, schedule: DiffusionSchedule,
                steps: int = 50, guidance: float = 7.5, seed: int = 0,
                latent_shift: float = 0.0, latent_scale: float = 1.0) -> np.ndarray:
    """Generate a video from a condition latent and prompt; decoded to pixels
    and clamped to [0, 1].

    cond_latent must already be in the model's normalized latent space; the
    shift/scale pair undoes that normalization before pixel decoding.
    """
    predict = make_guided_predictor(params, cond_latent, prompt_index)
    z0 = ddim_sample_latent(predict, cond_latent.shape, schedule,
                            steps=steps, guidance=guidance, seed=seed)
    video = decode(z0 / latent_scale + latent_shift, p)
    return np.clip(video, 0.0, 1.0)

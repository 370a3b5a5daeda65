"""Metric primitives for comparing trained models on the synthetic bench."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..motionmap.flow import FlowField, estimate_flow_video, flow_intensity
from ..motionmap.heatmap import binarize
from ..numcore.network import DenoiserParams, forward_batch
from ..numcore.train_ops import BatchItem
from ..synthvid.scenarios import DIRECTIONS
from ..diffusion.latent import encode
from ..diffusion.sampler import ddim_sample
from ..diffusion.schedule import DiffusionSchedule, q_sample, v_target

CLASSIFIER_VERBS = tuple(DIRECTIONS) + ("static",)


def _presmooth(video: np.ndarray) -> np.ndarray:
    """Temporal 3-tap + spatial 5-point box filter: suppresses per-frame pixel
    flicker in imperfect generations without changing coherent motion."""
    pad = np.concatenate([video[:1], video, video[-1:]], axis=0)
    v = (pad[:-2] + pad[1:-1] + pad[2:]) / 3.0
    p = np.pad(v, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
    return (p[:, :-2, 1:-1] + p[:, 2:, 1:-1] + p[:, 1:-1, :-2]
            + p[:, 1:-1, 2:] + p[:, 1:-1, 1:-1]) / 5.0


def classify_motion(video_or_flow, static_threshold: float = 0.01,
                    region_quantile: float = 0.9, presmooth: bool = True) -> str:
    """Dominant-motion label: one of 8 directions or "static".

    Takes the intensity-weighted mean flow vector over the top-decile
    intensity region (background noise never votes), normalized by the frame
    extent; below static_threshold the clip counts as static.
    """
    if isinstance(video_or_flow, FlowField):
        flow = video_or_flow
    else:
        video = np.asarray(video_or_flow)
        if presmooth:
            video = _presmooth(video)
        flow = estimate_flow_video(video)
    inten = flow_intensity(flow)
    extent = max(inten.shape[1], inten.shape[2])
    q = np.quantile(inten, region_quantile)
    region = inten >= q
    weights = inten[region]
    if weights.sum() <= 0:
        return "static"
    mu = (flow.uv[region] * weights[:, None]).sum(axis=0) / weights.sum() / extent
    mag = math.hypot(*mu)
    if mag < static_threshold:
        return "static"
    return max(DIRECTIONS, key=lambda verb: mu[0] * DIRECTIONS[verb][0]
               + mu[1] * DIRECTIONS[verb][1])


def first_frame_fidelity(generated: np.ndarray, cond_image: np.ndarray) -> tuple[float, float]:
    """(MSE, PSNR) between generated frame 0 and the condition image."""
    frame = np.asarray(generated)[0]
    cond = np.asarray(cond_image)
    if frame.shape != cond.shape:
        raise ContractError(f"dims mismatch: {frame.shape} vs {cond.shape}")
    mse = float(np.mean(np.square(frame - cond)))
    psnr = float("inf") if mse == 0 else float(10.0 * math.log10(1.0 / mse))
    return mse, psnr


def dynamic_degree(video: np.ndarray, flow: FlowField | None = None) -> float:
    """Mean normalized flow intensity over all frame pairs and pixels."""
    video = np.asarray(video)
    if flow is None:
        if video.ndim != 4 or video.shape[0] < 2:
            raise ContractError("need >= 2 frames")
        flow = estimate_flow_video(video)
    inten = flow_intensity(flow)
    return float(inten.mean() / max(inten.shape[1], inten.shape[2]))


def static_baseline(cond_image: np.ndarray, n_frames: int) -> np.ndarray:
    """The degenerate generation: the condition image repeated n_frames times."""
    if n_frames < 1:
        raise ContractError("n_frames must be >= 1")
    cond = np.asarray(cond_image)
    if cond.ndim != 3:
        raise ContractError(f"condition image must be (H,W,C), got {cond.shape}")
    return np.repeat(cond[None], n_frames, axis=0)


@dataclass
class ValItem:
    """A held-out clip prepared for loss evaluation."""

    z0: np.ndarray          # (L, H', W', C')
    cond: np.ndarray        # (L, H', W', C')
    m_prime: np.ndarray     # (L, H', W')
    prompt_index: int


def masked_loss_ratio(sq_residuals: np.ndarray, mask: np.ndarray) -> float:
    """(mean squared residual inside the mask) / (mean over all elements).

    Spatially uniform residuals give exactly 1; NaN when the mask is empty.
    """
    sq_residuals = np.asarray(sq_residuals, dtype=np.float64)
    if mask.shape != sq_residuals.shape:
        raise ContractError(f"mask shape {mask.shape} != residuals {sq_residuals.shape}")
    if not mask.any():
        return float("nan")
    total = sq_residuals.mean()
    if total == 0:
        return float("nan")
    return float(sq_residuals[mask].mean() / total)


def loss_ratio(params: DenoiserParams, schedule: DiffusionSchedule,
               valset: list[ValItem], mask_threshold: float = 0.5,
               buckets: int = 5, samples_per_bucket: int = 4,
               seed: int = 0) -> list[dict]:
    """High-motion loss ratio per timestep bucket.

    For each of `buckets` equal-width timestep ranges over [1, T], evaluates
    the per-element squared v-residual on every val clip at a deterministic
    grid of timesteps with seeded noise, and returns
    (masked mean) / (overall mean) per bucket; NaN when the mask is empty
    across the valset.
    """
    if not valset:
        raise ContractError("empty valset")
    t_max = schedule.timesteps
    edges = np.linspace(1, t_max + 1, buckets + 1).astype(int)
    curve = []
    for b in range(buckets):
        lo, hi = int(edges[b]), int(edges[b + 1] - 1)
        ts = np.unique(np.linspace(lo, hi, samples_per_bucket).round().astype(int))
        masked_sum = 0.0
        masked_n = 0
        total_sum = 0.0
        total_n = 0
        for i, item in enumerate(valset):
            mask = binarize(item.m_prime, mask_threshold)
            for t in ts:
                rng = np.random.Generator(np.random.PCG64(
                    (seed * 1_000_003 + i * 7919 + int(t)) & (2 ** 63 - 1)))
                eps = rng.standard_normal(item.z0.shape)
                z_t = q_sample(schedule, item.z0, int(t), eps)
                v = v_target(schedule, item.z0, eps, int(t))
                pred = forward_batch(
                    params, z_t[None].astype(params.groups["conv_in.w"].dtype),
                    item.cond[None], np.array([int(t) - 1]),
                    np.array([item.prompt_index]))[0]
                sq = np.square(pred - v)
                total_sum += float(sq.sum())
                total_n += sq.size
                if mask.any():
                    sel = sq[mask]
                    masked_sum += float(sel.sum())
                    masked_n += sel.size
        ratio = float("nan")
        if masked_n > 0 and total_sum > 0:
            ratio = (masked_sum / masked_n) / (total_sum / total_n)
        curve.append({"bucket": b, "t_lo": lo, "t_hi": hi, "ratio": ratio})
    return curve


def generate_for_pair(bundle, cond_image: np.ndarray, prompt_index: int,
                      n_frames: int, steps: int = 50, guidance: float = 7.5,
                      seed: int = 0) -> np.ndarray:
    """DDIM generation conditioned on a start image and prompt.

    bundle is a diffusion.training.ModelBundle; the condition image is
    encoded and normalized exactly as during training.
    """
    lat = encode(np.asarray(cond_image)[None], bundle.pool)
    lat = (lat - bundle.latent_shift) * bundle.latent_scale
    dtype = bundle.params.groups["conv_in.w"].dtype
    cond = np.repeat(lat, n_frames, axis=0).astype(dtype)
    return ddim_sample(bundle.params, cond, prompt_index, bundle.pool,
                       bundle.schedule, steps=steps, guidance=guidance, seed=seed,
                       latent_shift=bundle.latent_shift,
                       latent_scale=bundle.latent_scale)


def prompt_accuracy(bundle, pairs, n_frames: int, seeds=(0,), steps: int = 50,
                    guidance: float = 7.5, static_threshold: float = 0.003,
                    generator=None) -> tuple[float, list[dict]]:
    """Fraction of (pair, seed) generations whose dominant motion matches the
    prompt verb.

    `pairs` is a list of dicts with keys cond_image (H,W,C array), verb and
    triple; verbs must be classifier-supported. `generator(pair, seed)`
    overrides the sampler so baselines such as the static repeater can be
    scored with the same code.
    """
    details = []
    n_ok = 0
    n_tot = 0
    for pair in pairs:
        verb = pair["verb"]
        if verb not in CLASSIFIER_VERBS:
            raise ContractError(f"verb {verb!r} not classifier-supported")
        for seed in seeds:
            if generator is not None:
                video = generator(pair, seed)
            else:
                video = generate_for_pair(bundle, pair["cond_image"],
                                          bundle.vocab.index_of(pair["triple"]),
                                          n_frames, steps=steps,
                                          guidance=guidance, seed=seed)
            got = classify_motion(video, static_threshold=static_threshold)
            ok = got == verb
            n_ok += ok
            n_tot += 1
            details.append({"pair_id": pair.get("pair_id", ""), "verb": verb,
                            "predicted": got, "seed": seed, "correct": bool(ok)})
    return (n_ok / n_tot if n_tot else float("nan")), details

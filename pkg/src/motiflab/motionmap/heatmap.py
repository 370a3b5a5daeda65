"""Motion heatmaps: flow magnitude -> steep sigmoid -> latent-aligned pooling.

Intensity is measured as a fraction of the frame extent (divided by
max(H, W)) before the sigmoid, so the published gain/threshold constants
(100, 0.05) are resolution independent: the midpoint sits at motion of 5% of
the frame per time step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import ContractError
from .flow import FlowField, estimate_flow_video, flow_intensity

DEFAULT_GAIN = 100.0
DEFAULT_THRESHOLD = 0.05


def normalize_intensity(intensity: np.ndarray, gain: float = DEFAULT_GAIN,
                        threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Steep sigmoid 1 / (1 + exp(gain * (threshold - x))), elementwise.

    Expects intensity already scaled to the sigmoid's input domain (fractions
    of the frame extent). Strictly increasing; exactly 0.5 at the threshold.
    """
    x = np.asarray(intensity, dtype=np.float64)
    return expit(gain * (x - threshold))


@dataclass
class MotionHeatmap:
    """Per-frame motion intensity in [0, 1] plus its latent-aligned pooling."""

    m: np.ndarray                    # (L, H, W)
    gain: float = DEFAULT_GAIN
    threshold: float = DEFAULT_THRESHOLD
    pool: int | None = None
    m_prime: np.ndarray | None = None

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=np.float64)
        if self.m.ndim != 3:
            raise ContractError(f"heatmap must be (L,H,W), got {self.m.shape}")
        if self.m.min() < 0.0 or self.m.max() > 1.0:
            raise ContractError("heatmap entries must lie in [0, 1]")

    def with_pool(self, p: int) -> "MotionHeatmap":
        return MotionHeatmap(self.m, self.gain, self.threshold, p,
                             downsample_heatmap(self.m, p))


def heatmap_for_video(video_or_flow, gain: float = DEFAULT_GAIN,
                      threshold: float = DEFAULT_THRESHOLD,
                      frame_extent: int | None = None,
                      alpha: float = 0.02, iters: int = 100,
                      levels: int = 3) -> MotionHeatmap:
    """Build the (L, H, W) heatmap from a video (estimated flow) or a FlowField.

    The last frame's map duplicates its predecessor's, keeping the heatmap
    temporally aligned with the L video frames.
    """
    if isinstance(video_or_flow, FlowField):
        flow = video_or_flow
    else:
        video = np.asarray(video_or_flow)
        if video.ndim != 4 or video.shape[0] < 2:
            raise ContractError("need an (L,H,W,C) video with >= 2 frames")
        flow = estimate_flow_video(video, alpha=alpha, iters=iters, levels=levels)
    inten = flow_intensity(flow)                       # (L-1, H, W) px/frame
    extent = frame_extent or max(inten.shape[1], inten.shape[2])
    m_pairs = normalize_intensity(inten / extent, gain, threshold)
    m = np.concatenate([m_pairs, m_pairs[-1:]], axis=0)
    return MotionHeatmap(m, gain, threshold)


def downsample_heatmap(m: np.ndarray, p: int) -> np.ndarray:
    """Area-average pooling over p x p blocks; mean-preserving per frame."""
    m = np.asarray(m)
    if m.ndim != 3:
        raise ContractError(f"heatmap must be (L,H,W), got {m.shape}")
    l, h, w = m.shape
    if p < 1 or h % p or w % p:
        raise ContractError(f"pooling factor {p} must divide H={h} and W={w}")
    return m.reshape(l, h // p, p, w // p, p).mean(axis=(2, 4))


def binarize(m: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    m = np.asarray(m)
    if m.min() < 0.0 or m.max() > 1.0:
        raise ContractError("heatmap entries must lie in [0, 1]")
    return m >= threshold


def motion_stats(video_or_flow, mask_threshold: float = 0.5,
                 gain: float = DEFAULT_GAIN, threshold: float = DEFAULT_THRESHOLD,
                 **flow_kwargs) -> tuple[float, float, float]:
    """(static fraction, moving fraction, mean normalized intensity).

    Fractions come from the binarized heatmap over the L-1 frame pairs; they
    sum to 1 by construction.
    """
    if isinstance(video_or_flow, FlowField):
        flow = video_or_flow
    else:
        flow = estimate_flow_video(np.asarray(video_or_flow), **flow_kwargs)
    inten = flow_intensity(flow)
    extent = max(inten.shape[1], inten.shape[2])
    norm = inten / extent
    mask = binarize(normalize_intensity(norm, gain, threshold), mask_threshold)
    moving = float(mask.mean())
    return 1.0 - moving, moving, float(norm.mean())

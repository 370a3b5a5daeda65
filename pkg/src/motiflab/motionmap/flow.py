"""Dense optical flow via a classical variational (Horn-Schunck style) solver
with coarse-to-fine warping for displacements beyond a pixel or two."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from ..errors import ContractError

_KX = 0.25 * np.array([[-1.0, 1.0], [-1.0, 1.0]])
_KY = 0.25 * np.array([[-1.0, -1.0], [1.0, 1.0]])
_KT = 0.25 * np.ones((2, 2))
_AVG = np.array([[1 / 12, 1 / 6, 1 / 12],
                 [1 / 6, 0.0, 1 / 6],
                 [1 / 12, 1 / 6, 1 / 12]])


@dataclass
class FlowField:
    """(L-1, H, W, 2) per-frame-pair displacements in px/frame; components are
    (u, v) = (+x right, +y down)."""

    uv: np.ndarray
    provenance: str = "estimated"

    def __post_init__(self):
        self.uv = np.asarray(self.uv, dtype=np.float64)
        if self.uv.ndim != 4 or self.uv.shape[-1] != 2:
            raise ContractError(f"flow must be (L-1,H,W,2), got {self.uv.shape}")
        if self.provenance not in ("estimated", "oracle"):
            raise ContractError(f"bad provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.uv)):
            raise ContractError("flow must be finite")


def _luminance(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim == 3:
        return frame.mean(axis=-1)
    if frame.ndim == 2:
        return frame
    raise ContractError(f"frame must be (H,W) or (H,W,C), got {frame.shape}")


def warp_backward(img: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Sample img at p + flow(p) with bilinear interpolation, clamped borders."""
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    x = np.clip(xs + flow[..., 0], 0.0, w - 1.0)
    y = np.clip(ys + flow[..., 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    return ((1 - fy) * ((1 - fx) * img[y0, x0] + fx * img[y0, x1])
            + fy * ((1 - fx) * img[y1, x0] + fx * img[y1, x1]))


def _hs_pair(a: np.ndarray, b: np.ndarray, alpha: float, iters: int):
    # correlation (not convolution): the derivative kernels are antisymmetric
    fx = correlate(a, _KX, mode="nearest") + correlate(b, _KX, mode="nearest")
    fy = correlate(a, _KY, mode="nearest") + correlate(b, _KY, mode="nearest")
    ft = correlate(b, _KT, mode="nearest") - correlate(a, _KT, mode="nearest")
    u = np.zeros_like(a)
    v = np.zeros_like(a)
    den = alpha * alpha + fx * fx + fy * fy
    for _ in range(iters):
        ubar = correlate(u, _AVG, mode="nearest")
        vbar = correlate(v, _AVG, mode="nearest")
        der = (fx * ubar + fy * vbar + ft) / den
        u = ubar - fx * der
        v = vbar - fy * der
    return u, v


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2 * 2, w // 2 * 2
    img = img[:h2, :w2]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def _upsample2_flow(flow: np.ndarray, h: int, w: int) -> np.ndarray:
    up = 2.0 * np.repeat(np.repeat(flow, 2, axis=0), 2, axis=1)
    out = np.zeros((h, w, 2))
    hh, ww = min(h, up.shape[0]), min(w, up.shape[1])
    out[:hh, :ww] = up[:hh, :ww]
    if hh < h:
        out[hh:] = out[hh - 1:hh]
    if ww < w:
        out[:, ww:] = out[:, ww - 1:ww]
    return out


def estimate_flow(frame_a: np.ndarray, frame_b: np.ndarray, alpha: float = 0.02,
                  iters: int = 100, levels: int = 3) -> np.ndarray:
    """Estimate (H, W, 2) flow from frame_a to frame_b.

    Minimizes brightness constancy plus alpha-weighted smoothness with
    Jacobi-style sweeps at each pyramid level, warping frame_b by the coarse
    estimate before refining. iters=0 returns a zero field. Deterministic.
    """
    a = _luminance(frame_a)
    b = _luminance(frame_b)
    if a.shape != b.shape:
        raise ContractError(f"frames must share dims: {a.shape} vs {b.shape}")
    if alpha <= 0:
        raise ContractError("alpha must be > 0")
    if iters < 0 or levels < 1:
        raise ContractError("iters must be >= 0 and levels >= 1")
    if iters == 0:
        return np.zeros(a.shape + (2,))

    pyr = [(a, b)]
    for _ in range(levels - 1):
        if min(pyr[-1][0].shape) < 8:
            break
        pyr.append((_downsample2(pyr[-1][0]), _downsample2(pyr[-1][1])))

    flow = np.zeros(pyr[-1][0].shape + (2,))
    for lev in range(len(pyr) - 1, -1, -1):
        al, bl = pyr[lev]
        if lev < len(pyr) - 1:
            flow = _upsample2_flow(flow, *al.shape)
        b_warp = warp_backward(bl, flow)
        du, dv = _hs_pair(al, b_warp, alpha, iters)
        flow = flow + np.stack([du, dv], axis=-1)
    return flow


def estimate_flow_video(video: np.ndarray, alpha: float = 0.02, iters: int = 100,
                        levels: int = 3) -> FlowField:
    video = np.asarray(video)
    if video.ndim != 4 or video.shape[0] < 2:
        raise ContractError("need an (L,H,W,C) video with L >= 2")
    uv = np.stack([estimate_flow(video[l], video[l + 1], alpha, iters, levels)
                   for l in range(video.shape[0] - 1)])
    return FlowField(uv, "estimated")


def flow_intensity(flow: FlowField | np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean magnitude, px/frame; shape (L-1, H, W)."""
    uv = flow.uv if isinstance(flow, FlowField) else np.asarray(flow)
    return np.hypot(uv[..., 0], uv[..., 1])

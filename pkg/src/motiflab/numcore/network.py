"""A small fixed denoiser over video latents, with hand-derived gradients.

Architecture: an input 3x3 conv, two residual blocks of per-frame 3x3
convolutions modulated by scale-shift (time, frame-position and prompt
embeddings), each followed by a residual 3-tap depthwise temporal
convolution across frames, and an output 3x3 conv back to latent channels.
Everything is plain numpy; the backward pass is written out explicitly and
verified against central finite differences (see gradcheck).

Conditioning on the first-frame latent happens either by channel
concatenation ("x_cat"), by a spatially pooled feature vector mixed into
the scale-shift embedding ("global_feat"), or both.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from ..errors import ContractError, NumericError
from .tensors import check_finite

CONDITIONING_MODES = ("x_cat", "global_feat", "both")


@dataclass(frozen=True)
class DenoiserConfig:
    channels: int                  # latent channels C' (input z and output v)
    width: int = 32
    time_dim: int = 16
    frame_dim: int = 8
    prompt_dim: int = 16
    vocab_size: int = 32           # real prompt indices are [0, vocab_size); vocab_size = null
    conditioning: str = "x_cat"
    timesteps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    leak_feature: bool = True   # feed the analytic still-video v as input channels

    def __post_init__(self):
        if self.conditioning not in CONDITIONING_MODES:
            raise ContractError(f"conditioning must be one of {CONDITIONING_MODES}")
        for name in ("time_dim", "frame_dim"):
            if getattr(self, name) % 2:
                raise ContractError(f"{name} must be even (sin/cos halves)")
        if min(self.channels, self.width, self.prompt_dim, self.vocab_size,
               self.timesteps) < 1:
            raise ContractError("all dims must be >= 1")

    @property
    def cat_channels(self) -> int:
        # x_cat concatenates the condition latent, plus (by default) the
        # analytic still-video v: the image-leakage shortcut the loss corrects
        if self.conditioning not in ("x_cat", "both"):
            return 0
        return self.channels * (2 if self.leak_feature else 1)

    @property
    def in_channels(self) -> int:
        return self.channels + self.cat_channels

    @property
    def emb_dim(self) -> int:
        extra = self.channels if self.conditioning in ("global_feat", "both") else 0
        return self.time_dim + self.frame_dim + self.prompt_dim + extra

    def group_shapes(self) -> dict[str, tuple[int, ...]]:
        k, ci, co, e = self.width, self.in_channels, self.channels, self.emb_dim
        return {
            "conv_in.w": (3, 3, ci, k), "conv_in.b": (k,),
            "film1.w": (e, 2 * k), "film1.b": (2 * k,),
            "block1.w": (3, 3, k, k), "block1.b": (k,),
            "tconv1.w": (3, k, k), "tconv1.b": (k,),
            "film2.w": (e, 2 * k), "film2.b": (2 * k,),
            "block2.w": (3, 3, k, k), "block2.b": (k,),
            "tconv2.w": (3, k, k), "tconv2.b": (k,),
            "conv_out.w": (3, 3, k, co), "conv_out.b": (co,),
            "prompt_table": (self.vocab_size + 1, self.prompt_dim),
        }

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "DenoiserConfig":
        return cls(**json.loads(s))


@dataclass
class DenoiserParams:
    """Named parameter groups plus the config and seed they were built from."""

    config: DenoiserConfig
    groups: dict[str, np.ndarray]
    seed: int = 0

    def count(self) -> int:
        return sum(g.size for g in self.groups.values())

    def copy(self) -> "DenoiserParams":
        return DenoiserParams(self.config, {k: v.copy() for k, v in self.groups.items()},
                              self.seed)

    def astype(self, dtype) -> "DenoiserParams":
        return DenoiserParams(self.config,
                              {k: v.astype(dtype) for k, v in self.groups.items()},
                              self.seed)

    def check(self) -> "DenoiserParams":
        shapes = self.config.group_shapes()
        if set(shapes) != set(self.groups):
            raise ContractError("parameter groups do not match config")
        for name, g in self.groups.items():
            if g.shape != shapes[name]:
                raise ContractError(f"group {name}: shape {g.shape} != {shapes[name]}")
            check_finite(g, f"params[{name}]")
        return self


def zeros_like_groups(params: DenoiserParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.groups.items()}


def init_params(config: DenoiserConfig, seed: int = 0, dtype=np.float32,
                zero_out: bool = True) -> DenoiserParams:
    """He fan-in initialization, deterministic given (config, seed).

    zero_out zeroes the output conv so the initial prediction is exactly 0
    (residual-style start); disable for gradient-check tests that need every
    layer's gradient path live.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    groups: dict[str, np.ndarray] = {}
    for name, shape in config.group_shapes().items():
        if name.endswith(".b"):
            g = np.zeros(shape)
        elif name == "prompt_table":
            g = rng.standard_normal(shape) / math.sqrt(config.prompt_dim)
        else:
            fan_in = int(np.prod(shape[:-1]))
            g = rng.standard_normal(shape) * math.sqrt(2.0 / fan_in)
        if zero_out and name == "conv_out.w":
            g = np.zeros(shape)
        groups[name] = g.astype(dtype)
    return DenoiserParams(config, groups, seed)


# ---------------------------------------------------------------------------
# primitive ops (forward + explicit backward)

def _im2col(x: np.ndarray) -> np.ndarray:
    """3x3 'same' patches of (N, H, W, Ci) as an (N*H*W, 9*Ci) matrix."""
    n, h, wd, ci = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    s = xp.strides
    cols = np.lib.stride_tricks.as_strided(
        xp, (n, h, wd, 3, 3, ci), (s[0], s[1], s[2], s[1], s[2], s[3]))
    return cols.reshape(n * h * wd, 9 * ci)


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None,
            cols: np.ndarray | None = None) -> np.ndarray:
    """Per-frame 3x3 'same' convolution; x is (N, H, W, Ci), w is (3,3,Ci,Co).

    Pass precomputed `cols` (from _im2col) to skip the patch extraction.
    """
    n, h, wd, ci = x.shape
    if cols is None:
        cols = _im2col(x)
    y = cols @ w.reshape(9 * ci, -1)
    if b is not None:
        y += b
    return y.reshape(n, h, wd, -1)


def _conv2d_back(x: np.ndarray, w: np.ndarray, dy: np.ndarray,
                 cols: np.ndarray | None = None):
    """Gradients of _conv2d: returns (dx, dw, db)."""
    n, h, wd, ci = x.shape
    co = w.shape[-1]
    if cols is None:
        cols = _im2col(x)
    dy_flat = dy.reshape(n * h * wd, co)
    dw = (cols.T @ dy_flat).reshape(3, 3, ci, co)
    db = dy_flat.sum(axis=0)
    # dx: correlate dy with the kernel flipped in both spatial dims, in/out swapped
    w_rot = w[::-1, ::-1].transpose(0, 1, 3, 2)
    dx = _conv2d(dy, np.ascontiguousarray(w_rot))
    return dx, dw, db


def _tconv(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Channel-mixing 3-tap temporal conv; x is (B, L, H, W, C), w is (3, C, C)."""
    L = x.shape[1]
    xp = np.pad(x, ((0, 0), (1, 1), (0, 0), (0, 0), (0, 0)))
    return (xp[:, :L] @ w[0] + xp[:, 1:L + 1] @ w[1] + xp[:, 2:L + 2] @ w[2]) + b


def _tconv_back(x: np.ndarray, w: np.ndarray, dy: np.ndarray):
    L = x.shape[1]
    xp = np.pad(x, ((0, 0), (1, 1), (0, 0), (0, 0), (0, 0)))
    axes4 = ([0, 1, 2, 3], [0, 1, 2, 3])
    dw = np.stack([np.tensordot(xp[:, k:L + k], dy, axes=axes4) for k in range(3)])
    db = dy.sum(axis=(0, 1, 2, 3))
    dyp = np.pad(dy, ((0, 0), (1, 1), (0, 0), (0, 0), (0, 0)))
    dx = (dyp[:, 2:L + 2] @ w[0].T + dyp[:, 1:L + 1] @ w[1].T
          + dyp[:, :L] @ w[2].T)
    return dx, dw, db


def _silu(x: np.ndarray):
    sig = expit(x)
    return x * sig, sig


def _silu_back(x: np.ndarray, sig: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return dy * sig * (1.0 + x * (1.0 - sig))


def _film(h: np.ndarray, e: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Scale-shift: h * (1 + s) + t with (s, t) generated from the embedding e.

    h is (B, L, H, W, C); e is (B, L, E); returns (out, s) with s kept for backward.
    """
    k = h.shape[-1]
    st = e @ w + b                      # (B, L, 2K)
    s = st[..., :k][:, :, None, None, :]
    t = st[..., k:][:, :, None, None, :]
    return h * (1.0 + s) + t, s


def _film_back(h: np.ndarray, e: np.ndarray, w: np.ndarray, s: np.ndarray,
               dy: np.ndarray):
    ds = np.sum(dy * h, axis=(2, 3))    # (B, L, K)
    dt = np.sum(dy, axis=(2, 3))
    dst = np.concatenate([ds, dt], axis=-1)
    dh = dy * (1.0 + s)
    e2 = e.reshape(-1, e.shape[-1])
    dst2 = dst.reshape(-1, dst.shape[-1])
    dw = e2.T @ dst2
    db = dst2.sum(axis=0)
    de = dst @ w.T
    return dh, de, dw, db


def sinusoidal_embedding(pos: np.ndarray, dim: int, dtype=np.float64) -> np.ndarray:
    """Transformer-style sin/cos embedding of integer positions."""
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = np.asarray(pos, dtype=np.float64)[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1).astype(dtype)


def _schedule_coeffs(cfg: DenoiserConfig):
    beta = np.linspace(cfg.beta_start, cfg.beta_end, cfg.timesteps)
    ab = np.cumprod(1.0 - beta)
    return np.sqrt(ab), np.sqrt(1.0 - ab)


def still_video_v(cfg: DenoiserConfig, z: np.ndarray, cond: np.ndarray,
                  t_index: np.ndarray) -> np.ndarray:
    """The v the schedule implies if the clip were the condition frame frozen.

    With a = sqrt(ab_t), b = sqrt(1-ab_t) and eps0 = (z - a*cond)/b:
    v_still = a*eps0 - b*cond. Supplied as an input feature: it is the
    conditional-image-leakage shortcut, so the network only has to learn
    motion corrections on top of it. Clipped: near t=0 the 1/b factor blows
    up exactly where the still hypothesis is wrong (moving regions).
    """
    sa, sb = _schedule_coeffs(cfg)
    shape = (-1,) + (1,) * (z.ndim - 1)
    a = sa[t_index].reshape(shape)
    b = sb[t_index].reshape(shape)
    eps0 = (z - a * cond) / b
    return np.clip(a * eps0 - b * cond, -4.0, 4.0)


# ---------------------------------------------------------------------------
# full network

def _build_embedding(params: DenoiserParams, cond: np.ndarray, l_frames: int,
                     t_index: np.ndarray, prompt_index: np.ndarray, dtype):
    cfg = params.config
    b = t_index.shape[0]
    temb = sinusoidal_embedding(t_index, cfg.time_dim, dtype)          # (B, Td)
    femb = sinusoidal_embedding(np.arange(l_frames), cfg.frame_dim, dtype)  # (L, Fd)
    pemb = params.groups["prompt_table"][prompt_index]                 # (B, Pd)
    parts = [
        np.broadcast_to(temb[:, None, :], (b, l_frames, cfg.time_dim)),
        np.broadcast_to(femb[None], (b, l_frames, cfg.frame_dim)),
        np.broadcast_to(pemb[:, None, :], (b, l_frames, cfg.prompt_dim)),
    ]
    if cfg.conditioning in ("global_feat", "both"):
        gvec = cond.mean(axis=(1, 2, 3))                               # (B, C')
        parts.append(np.broadcast_to(gvec[:, None, :], (b, l_frames, cfg.channels)))
    return np.concatenate(parts, axis=-1)


def forward_batch(params: DenoiserParams, z: np.ndarray, cond: np.ndarray,
                  t_index: np.ndarray, prompt_index: np.ndarray,
                  want_cache: bool = False):
    """Predict v for a batch; z and cond are (B, L, H', W', C').

    Returns the prediction, or (prediction, cache) when want_cache is set.
    """
    cfg = params.config
    z = np.asarray(z)
    cond = np.asarray(cond)
    t_index = np.atleast_1d(np.asarray(t_index, dtype=np.int64))
    prompt_index = np.atleast_1d(np.asarray(prompt_index, dtype=np.int64))
    if z.ndim != 5 or cond.ndim != 5:
        raise ContractError(f"expected (B,L,H,W,C) arrays, got {z.shape} / {cond.shape}")
    if z.shape[-1] != cfg.channels or cond.shape[-1] != cfg.channels:
        raise ContractError(f"channel mismatch: {z.shape[-1]} vs config {cfg.channels}")
    if z.shape[:4] != cond.shape[:4]:
        raise ContractError(f"z and cond must share (B,L,H,W): {z.shape} vs {cond.shape}")
    if np.any(t_index < 0) or np.any(t_index >= cfg.timesteps):
        raise ContractError(f"t_index out of [0, {cfg.timesteps})")
    if np.any(prompt_index < 0) or np.any(prompt_index > cfg.vocab_size):
        raise ContractError(f"prompt_index out of [0, {cfg.vocab_size}]")
    check_finite(z, "z_t")
    check_finite(cond, "cond")

    g = params.groups
    bsz, L = z.shape[:2]
    dtype = g["conv_in.w"].dtype
    e = _build_embedding(params, cond, L, t_index, prompt_index, dtype)

    if cfg.cat_channels:
        parts = [z, cond]
        if cfg.leak_feature:
            parts.append(still_video_v(cfg, z, cond, t_index))
        x = np.concatenate(parts, axis=-1)
    else:
        x = z
    x = np.ascontiguousarray(x, dtype=dtype)
    cols = {}

    def conv(inp5, name):
        flat = inp5.reshape(bsz * L, *inp5.shape[2:])
        c = _im2col(flat)
        if want_cache:
            cols[name] = c
        y = _conv2d(flat, g[name + ".w"], g[name + ".b"], cols=c)
        return y.reshape(inp5.shape[:4] + (y.shape[-1],))

    h0 = conv(x, "conv_in")
    f1, s1 = _film(h0, e, g["film1.w"], g["film1.b"])
    a1, sig1 = _silu(f1)
    h1 = h0 + conv(a1, "block1")
    u1 = h1 + _tconv(h1, g["tconv1.w"], g["tconv1.b"])

    f2, s2 = _film(u1, e, g["film2.w"], g["film2.b"])
    a2, sig2 = _silu(f2)
    h2 = u1 + conv(a2, "block2")
    u2 = h2 + _tconv(h2, g["tconv2.w"], g["tconv2.b"])

    out = conv(u2, "conv_out")

    if not want_cache:
        return out
    cache = dict(e=e, x=x, h0=h0, f1=f1, s1=s1, sig1=sig1, a1=a1, h1=h1, u1=u1,
                 f2=f2, s2=s2, sig2=sig2, a2=a2, h2=h2, u2=u2, cols=cols,
                 prompt_index=prompt_index, bsz=bsz, L=L)
    return out, cache


def backward_batch(params: DenoiserParams, cache: dict, dout: np.ndarray) -> dict:
    """Exact reverse-mode gradients of forward_batch w.r.t. every parameter group."""
    cfg = params.config
    g = params.groups
    bsz, L = cache["bsz"], cache["L"]
    cols = cache["cols"]
    grads = zeros_like_groups(params)

    def conv_back(inp5, wname, dy5):
        flat = inp5.reshape(bsz * L, *inp5.shape[2:])
        dy = dy5.reshape(bsz * L, *dy5.shape[2:])
        dx, dw, db = _conv2d_back(flat, g[wname + ".w"], dy, cols=cols[wname])
        grads[wname + ".w"] += dw
        grads[wname + ".b"] += db
        return dx.reshape(inp5.shape[:4] + (inp5.shape[4],))

    du2 = conv_back(cache["u2"], "conv_out", dout)

    # temporal conv 2 (residual)
    dtx, dw, db = _tconv_back(cache["h2"], g["tconv2.w"], du2)
    grads["tconv2.w"] += dw
    grads["tconv2.b"] += db
    dh2 = du2 + dtx

    # block 2
    da2 = conv_back(cache["a2"], "block2", dh2)
    df2 = _silu_back(cache["f2"], cache["sig2"], da2)
    du1_f, de2, dw, db = _film_back(cache["u1"], cache["e"], g["film2.w"],
                                    cache["s2"], df2)
    grads["film2.w"] += dw
    grads["film2.b"] += db
    du1 = dh2 + du1_f

    # temporal conv 1 (residual)
    dtx, dw, db = _tconv_back(cache["h1"], g["tconv1.w"], du1)
    grads["tconv1.w"] += dw
    grads["tconv1.b"] += db
    dh1 = du1 + dtx

    # block 1
    da1 = conv_back(cache["a1"], "block1", dh1)
    df1 = _silu_back(cache["f1"], cache["sig1"], da1)
    dh0_f, de1, dw, db = _film_back(cache["h0"], cache["e"], g["film1.w"],
                                    cache["s1"], df1)
    grads["film1.w"] += dw
    grads["film1.b"] += db
    dh0 = dh1 + dh0_f

    # input conv (input gradient discarded; inputs are data, not parameters)
    dy = dh0.reshape(bsz * L, *dh0.shape[2:])
    dy_flat = dy.reshape(-1, dy.shape[-1])
    grads["conv_in.w"] += (cols["conv_in"].T @ dy_flat).reshape(3, 3, -1, cfg.width)
    grads["conv_in.b"] += dy_flat.sum(axis=0)

    # prompt table rows: the prompt slice of the embedding gradient
    de = de1 + de2                                             # (B, L, E)
    p0 = cfg.time_dim + cfg.frame_dim
    dprompt = de[..., p0:p0 + cfg.prompt_dim].sum(axis=1)      # (B, Pd)
    np.add.at(grads["prompt_table"], cache["prompt_index"], dprompt)
    return grads


def denoiser_forward(params: DenoiserParams, z_t: np.ndarray, cond: np.ndarray,
                     t_index: int, prompt_index: int) -> np.ndarray:
    """Single-clip forward pass: (L, H', W', C') in, predicted v out."""
    out = forward_batch(params, z_t[None], cond[None],
                        np.array([t_index]), np.array([prompt_index]))
    return out[0]

"""Lossless per-frame space-to-depth latent codec.

encode rearranges each (H, W, C) frame into (H/p, W/p, C*p*p); decode is the
exact inverse, so decode(encode(x)) is bit-identical to x.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError


def encode(video: np.ndarray, p: int) -> np.ndarray:
    video = np.asarray(video)
    if video.ndim != 4:
        raise ContractError(f"expected (L,H,W,C) video, got shape {video.shape}")
    l, h, w, c = video.shape
    if p < 1 or h % p or w % p:
        raise ContractError(f"pooling factor {p} must divide H={h} and W={w}")
    z = video.reshape(l, h // p, p, w // p, p, c)
    z = z.transpose(0, 1, 3, 2, 4, 5)
    return z.reshape(l, h // p, w // p, p * p * c)


def decode(latent: np.ndarray, p: int) -> np.ndarray:
    latent = np.asarray(latent)
    if latent.ndim != 4:
        raise ContractError(f"expected (L,H',W',C') latent, got shape {latent.shape}")
    l, hp, wp, cp = latent.shape
    if p < 1 or cp % (p * p):
        raise ContractError(f"latent channels {cp} not divisible by p*p={p * p}")
    c = cp // (p * p)
    x = latent.reshape(l, hp, wp, p, p, c)
    x = x.transpose(0, 1, 3, 2, 4, 5)
    return x.reshape(l, hp * p, wp * p, c)

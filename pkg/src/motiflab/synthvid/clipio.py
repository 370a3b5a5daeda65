"""Binary clip container and PNG sequence export.

Layout (little-endian):
    magic   4s   b"MVC1"
    version u32  currently 1
    L,H,W,C u32 x 4
    seed    u64
    dtype   u8   0 = float32, 1 = float64
    pad     7s   zeros
    data    raw row-major frame data, L*H*W*C values

The container is the lossless interchange format; PNG export quantizes to
8-bit and is meant for previews and the annotation UI.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ContractError

_MAGIC = b"MVC1"
_HEADER = struct.Struct("<4sIIIIIQB7x")
_DTYPES = {0: np.float32, 1: np.float64}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def write_clip(path, video: np.ndarray, seed: int = 0) -> None:
    video = np.asarray(video)
    if video.ndim != 4:
        raise ContractError(f"expected (L,H,W,C) video, got shape {video.shape}")
    code = _CODES.get(video.dtype)
    if code is None:
        raise ContractError(f"unsupported dtype {video.dtype}")
    l, h, w, c = video.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, l, h, w, c, seed & (2 ** 64 - 1), code))
        fh.write(np.ascontiguousarray(video).tobytes())


def read_clip(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ContractError(f"{path}: truncated header")
        magic, version, l, h, w, c, seed, code = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ContractError(f"{path}: not a clip container")
        if version != 1:
            raise ContractError(f"{path}: unsupported container version {version}")
        dtype = _DTYPES.get(code)
        if dtype is None:
            raise ContractError(f"{path}: unknown dtype code {code}")
        data = np.frombuffer(fh.read(), dtype=dtype)
    expected = l * h * w * c
    if data.size != expected:
        raise ContractError(f"{path}: payload has {data.size} values, expected {expected}")
    return data.reshape(l, h, w, c).copy(), seed


def to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(frame) * 255.0 + 0.5, 0, 255).astype(np.uint8)


def save_frame_png(path, frame: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = to_uint8(frame)
    if arr.shape[-1] == 1:
        arr = arr[..., 0]
    Image.fromarray(arr).save(path)


def load_frame_png(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr


def export_png_sequence(directory, video: np.ndarray) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(np.asarray(video)):
        p = directory / f"frame_{i:04d}.png"
        save_frame_png(p, frame)
        paths.append(p)
    return paths

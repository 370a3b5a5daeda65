"""Versioned checkpoint container: config echo + step count + parameter groups.

A checkpoint is a single .npz file; arrays round-trip bit-exactly, the config
and any extra metadata are embedded as JSON strings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ContractError
from .network import DenoiserConfig, DenoiserParams

FORMAT_VERSION = 1


def save_checkpoint(path, params: DenoiserParams, step: int,
                    extra: dict | None = None) -> None:
    payload = {
        "__version__": np.array(FORMAT_VERSION),
        "__step__": np.array(step),
        "__seed__": np.array(params.seed),
        "__config__": np.array(params.config.to_json()),
        "__extra__": np.array(json.dumps(extra or {}, sort_keys=True)),
    }
    for name, g in params.groups.items():
        payload["param:" + name] = g
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[DenoiserParams, int, dict]:
    with np.load(path) as data:
        version = int(data["__version__"])
        if version != FORMAT_VERSION:
            raise ContractError(f"unsupported checkpoint version {version}")
        config = DenoiserConfig.from_json(str(data["__config__"]))
        step = int(data["__step__"])
        seed = int(data["__seed__"])
        extra = json.loads(str(data["__extra__"]))
        groups = {k[len("param:"):]: data[k] for k in data.files if k.startswith("param:")}
    params = DenoiserParams(config, groups, seed).check()
    return params, step, extra

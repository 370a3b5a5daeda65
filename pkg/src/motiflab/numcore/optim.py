"""First-order optimizer: Adam-style moments with a plain-SGD mode."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, NumericError
from .network import DenoiserParams


class Optimizer:
    """Holds moment state; step() updates parameters in place.

    mode="adam" uses (0.9, 0.999, 1e-8); mode="sgd" is plain gradient descent.
    """

    def __init__(self, params: DenoiserParams, lr: float = 1e-3, mode: str = "adam",
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        if lr <= 0:
            raise ContractError("lr must be > 0")
        if mode not in ("adam", "sgd"):
            raise ContractError("mode must be 'adam' or 'sgd'")
        self.lr = lr
        self.mode = mode
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.groups.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.groups.items()}

    def step(self, params: DenoiserParams, grads: dict[str, np.ndarray],
             lr: float | None = None) -> DenoiserParams:
        if set(grads) != set(params.groups):
            raise ContractError("grads not isomorphic to params")
        for k, g in grads.items():
            if g.shape != params.groups[k].shape:
                raise ContractError(f"grad {k}: shape {g.shape} != {params.groups[k].shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in {k}; step refused")
        lr = self.lr if lr is None else lr
        self.step_count += 1
        if self.mode == "sgd":
            for k, g in grads.items():
                params.groups[k] -= lr * g
            return params
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * np.square(g)
            params.groups[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params


def optimizer_step(params: DenoiserParams, grads: dict[str, np.ndarray], lr: float,
                   opt: Optimizer) -> DenoiserParams:
    """One descent step; moment state advances inside `opt`."""
    return opt.step(params, grads, lr=lr)

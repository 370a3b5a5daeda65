"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ContractError
from .network import DenoiserParams

LossAndGrads = Callable[[DenoiserParams], tuple[float, dict[str, np.ndarray]]]


def finite_diff_check(params: DenoiserParams, loss_fn: LossAndGrads,
                      h: float = 1e-5, samples_per_group: int = 4,
                      seed: int = 0) -> float:
    """Max relative error between analytic gradients and central differences.

    Samples a few coordinates from every parameter group, evaluates
    (f(p+h) - f(p-h)) / 2h with everything else fixed, and compares to the
    analytic gradient at the center point. Error is
    |analytic - fd| / max(|analytic|, 1e-12).
    """
    if h <= 0:
        raise ContractError("h must be > 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    _, grads = loss_fn(params)
    worst = 0.0
    for name in sorted(params.groups):
        g = params.groups[name]
        n = min(samples_per_group, g.size)
        idxs = rng.choice(g.size, size=n, replace=False)
        flat = g.reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = loss_fn(params)
            flat[i] = orig - h
            lm, _ = loss_fn(params)
            flat[i] = orig
            fd = (lp - lm) / (2.0 * h)
            analytic = grads[name].reshape(-1)[i]
            err = abs(analytic - fd) / max(abs(analytic), 1e-12)
            worst = max(worst, err)
    return worst

"""Automatic evaluation: loss-ratio curves, prompt following, fidelity,
dynamic degree, the static baseline, and comparison reports."""

from .metrics import (
    classify_motion,
    dynamic_degree,
    first_frame_fidelity,
    loss_ratio,
    prompt_accuracy,
    static_baseline,
)
from .report import EvalReport, compare

__all__ = [
    "classify_motion", "dynamic_degree", "first_frame_fidelity", "loss_ratio",
    "prompt_accuracy", "static_baseline", "EvalReport", "compare",
]

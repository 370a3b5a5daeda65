"""Procedural sprite videos with exact ground-truth flow, plus the synthetic
evaluation benchmark."""

from .scenarios import (
    DIRECTIONS,
    SPEED_FRACS,
    TRANSLATION_VERBS,
    VERBS,
    PromptSpec,
    Scenario,
    SpriteSpec,
    Vocabulary,
    default_scenarios,
)
from .generator import Clip, DatasetConfig, gen_clip, gen_dataset
from .bench import BenchConfig, BenchManifest, BenchPair, build_bench
from .clipio import read_clip, write_clip, export_png_sequence

__all__ = [
    "DIRECTIONS", "SPEED_FRACS", "TRANSLATION_VERBS", "VERBS",
    "PromptSpec", "Scenario", "SpriteSpec", "Vocabulary", "default_scenarios",
    "Clip", "DatasetConfig", "gen_clip", "gen_dataset",
    "BenchConfig", "BenchManifest", "BenchPair", "build_bench",
    "read_clip", "write_clip", "export_png_sequence",
]

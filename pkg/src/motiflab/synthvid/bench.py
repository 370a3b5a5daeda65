"""Synthetic evaluation benchmark: start frames plus motion prompts.

Every enabled scenario contributes an images x prompts grid; the manifest is
a tab-separated file with one record per (image, prompt) pair and a stable
field order, preceded by comment lines with the counts summary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError
from .clipio import save_frame_png
from .generator import render_start_frame
from .scenarios import PromptSpec, Scenario, Vocabulary, default_scenarios

_COLUMNS = ("image_id", "image_file", "prompt_id", "prompt_text", "scenario_id")


@dataclass(frozen=True)
class BenchPair:
    image_id: str
    image_file: str
    prompt_id: str
    prompt_text: str
    scenario_id: str


@dataclass
class BenchManifest:
    pairs: list[BenchPair] = field(default_factory=list)

    @property
    def n_images(self) -> int:
        return len({p.image_id for p in self.pairs})

    @property
    def n_prompts(self) -> int:
        return len({p.prompt_id for p in self.pairs})

    def check(self) -> "BenchManifest":
        seen = set()
        per_image: dict[str, set] = {}
        for p in self.pairs:
            key = (p.image_id, p.prompt_id)
            if key in seen:
                raise ContractError(f"duplicate (image, prompt) pair {key}")
            seen.add(key)
            per_image.setdefault(p.image_id, set()).add(p.prompt_id)
        for img, prompts in per_image.items():
            if len(prompts) < 3:
                raise ContractError(f"image {img} has only {len(prompts)} prompts (< 3)")
        return self

    def to_tsv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [
            "# motif bench manifest v1",
            f"# pairs={len(self.pairs)} images={self.n_images} prompts={self.n_prompts}",
            "\t".join(_COLUMNS),
        ]
        for p in self.pairs:
            lines.append("\t".join(getattr(p, c) for c in _COLUMNS))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def from_tsv(cls, path) -> "BenchManifest":
        rows = []
        header = None
        for line in Path(path).read_text().splitlines():
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if header is None:
                if tuple(parts) != _COLUMNS:
                    raise ContractError(f"unexpected manifest columns {parts}")
                header = parts
                continue
            if len(parts) != len(_COLUMNS):
                raise ContractError(f"malformed manifest row: {line!r}")
            rows.append(BenchPair(**dict(zip(_COLUMNS, parts))))
        return cls(rows).check()


@dataclass(frozen=True)
class BenchConfig:
    height: int = 64
    width: int = 64
    images_per_scenario: int = 4
    scenario_ids: tuple[str, ...] | None = None    # None = all stock scenarios
    verbs: tuple[str, ...] | None = None           # optional prompt filter
    out_dir: str = "bench"


def build_bench(config: BenchConfig, seed: int,
                scenarios: tuple[Scenario, ...] | None = None,
                vocab: Vocabulary | None = None) -> BenchManifest:
    """Render start frames and write the manifest under config.out_dir."""
    if scenarios is None:
        scenarios, vocab = default_scenarios()
    if config.scenario_ids is not None:
        wanted = set(config.scenario_ids)
        scenarios = tuple(sc for sc in scenarios if sc.scenario_id in wanted)
    if not scenarios:
        raise ContractError("no scenarios enabled")
    if len(scenarios) >= 4:
        if not any(sc.multi_object for sc in scenarios):
            raise ContractError("bench with >= 4 scenarios must include a multi_object one")
        if not any(sc.novel_object for sc in scenarios):
            raise ContractError("bench with >= 4 scenarios must include a novel_object one")

    out = Path(config.out_dir)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    pairs: list[BenchPair] = []
    for sc in scenarios:
        n_img = min(config.images_per_scenario, len(sc.backgrounds))
        kept = [(i, p) for i, p in enumerate(sc.prompts)
                if config.verbs is None or p.verb in config.verbs]
        if not kept:
            continue
        for k in range(n_img):
            image_id = f"{sc.scenario_id}-img{k}"
            rel = f"images/{image_id}.png"
            frame = render_start_frame(sc, k, config.height, config.width)
            save_frame_png(out / rel, frame)
            for i, pr in kept:
                pairs.append(BenchPair(
                    image_id=image_id, image_file=rel,
                    prompt_id=f"{sc.scenario_id}-p{i}", prompt_text=pr.text,
                    scenario_id=sc.scenario_id))
    manifest = BenchManifest(pairs).check()
    manifest.to_tsv(out / "manifest.tsv")
    return manifest


def resolve_prompt(scenarios, prompt_id: str) -> tuple[Scenario, PromptSpec]:
    """Map a manifest prompt_id ("<scenario_id>-p<i>") back to its PromptSpec."""
    sid, sep, idx = prompt_id.rpartition("-p")
    if not sep:
        raise ContractError(f"malformed prompt_id {prompt_id!r}")
    for sc in scenarios:
        if sc.scenario_id == sid:
            i = int(idx)
            if not 0 <= i < len(sc.prompts):
                raise ContractError(f"prompt index {i} out of range for {sid}")
            return sc, sc.prompts[i]
    raise ContractError(f"unknown scenario {sid!r}")

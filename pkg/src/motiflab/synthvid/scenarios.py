"""Scenario and prompt catalog for the procedural video generator.

A scenario fixes a sprite roster, a set of background styles, and the motion
prompts that are executable from the start pose. Prompts are discrete:
(target selector, motion verb, speed), with a deterministic embedding index
shared across scenarios for identical triples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import ContractError

_SQ2 = 1.0 / math.sqrt(2.0)

# flow convention: (u, v) = (+x right, +y down) in pixel coordinates
DIRECTIONS: dict[str, tuple[float, float]] = {
    "right": (1.0, 0.0),
    "left": (-1.0, 0.0),
    "up": (0.0, -1.0),
    "down": (0.0, 1.0),
    "up_right": (_SQ2, -_SQ2),
    "up_left": (-_SQ2, -_SQ2),
    "down_right": (_SQ2, _SQ2),
    "down_left": (-_SQ2, _SQ2),
}

TRANSLATION_VERBS = tuple(DIRECTIONS)
VERBS = TRANSLATION_VERBS + ("grow", "shrink", "enter", "static")
SPEEDS = ("slow", "fast")

# speed as a fraction of max(H, W) per frame; slow sits below the heatmap
# threshold (5% of frame extent), fast well above it
SPEED_FRACS = {"slow": 0.02, "fast": 0.08}

COLORS: dict[str, tuple[float, float, float]] = {
    "red": (0.85, 0.12, 0.12),
    "green": (0.10, 0.72, 0.22),
    "blue": (0.15, 0.28, 0.90),
    "yellow": (0.95, 0.85, 0.12),
    "magenta": (0.82, 0.16, 0.78),
    "cyan": (0.12, 0.78, 0.84),
    "orange": (0.95, 0.55, 0.10),
    "white": (0.96, 0.96, 0.96),
}

SHAPES = ("square", "circle", "diamond")

_DIR_TEXT = {
    "right": "to the right", "left": "to the left", "up": "upward", "down": "downward",
    "up_right": "up and to the right", "up_left": "up and to the left",
    "down_right": "down and to the right", "down_left": "down and to the left",
}


@dataclass(frozen=True)
class SpriteSpec:
    shape: str
    color_name: str
    half_frac: float                  # half-extent as a fraction of min(H, W)
    start: tuple[float, float]        # fractional center (x, y)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ContractError(f"unknown shape {self.shape!r}")
        if self.color_name not in COLORS:
            raise ContractError(f"unknown color {self.color_name!r}")
        if not 0.0 < self.half_frac < 0.5:
            raise ContractError("half_frac must be in (0, 0.5)")

    @property
    def color(self) -> tuple[float, float, float]:
        return COLORS[self.color_name]


@dataclass(frozen=True)
class BackgroundStyle:
    base: tuple[float, float, float]  # mean color, each channel in (0, 1)
    contrast: float                   # peak-to-peak texture amplitude
    waves: int = 4
    phase_seed: int = 0


@dataclass(frozen=True)
class PromptSpec:
    scenario_id: str
    selector: str                     # target color name
    verb: str
    speed: str
    embedding_index: int
    text: str

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ContractError(f"unknown verb {self.verb!r}")
        if self.speed not in SPEEDS:
            raise ContractError(f"unknown speed {self.speed!r}")

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.selector, self.verb, self.speed)


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    backgrounds: tuple[BackgroundStyle, ...]
    sprites: tuple[SpriteSpec, ...]
    prompts: tuple[PromptSpec, ...]
    multi_object: bool = False
    novel_object: bool = False

    def __post_init__(self):
        if len(self.backgrounds) < 3:
            raise ContractError("a scenario needs >= 3 background styles")
        if self.multi_object and len(self.sprites) < 2:
            raise ContractError("multi_object scenarios need >= 2 sprites")
        names = [s.color_name for s in self.sprites]
        if len(set(names)) != len(names):
            raise ContractError("sprites must be distinguishable by color")
        for pr in self.prompts:
            if pr.verb == "enter":
                if pr.selector in names:
                    raise ContractError(
                        f"{self.scenario_id}: entering sprite {pr.selector} already on screen")
            elif pr.selector not in names:
                raise ContractError(
                    f"{self.scenario_id}: prompt targets unknown sprite {pr.selector!r}")

    def sprite_by_color(self, color_name: str) -> SpriteSpec:
        for s in self.sprites:
            if s.color_name == color_name:
                return s
        raise ContractError(f"no sprite colored {color_name!r} in {self.scenario_id}")


class Vocabulary:
    """Bijection between prompt triples and embedding indices.

    Indices cover [0, size); `size` itself is reserved for the null token.
    """

    def __init__(self, triples):
        self.triples = tuple(sorted(set(map(tuple, triples))))
        self._index = {t: i for i, t in enumerate(self.triples)}

    @classmethod
    def from_scenarios(cls, scenarios) -> "Vocabulary":
        return cls(p.triple for sc in scenarios for p in sc.prompts)

    @property
    def size(self) -> int:
        return len(self.triples)

    @property
    def null_index(self) -> int:
        return len(self.triples)

    def index_of(self, triple) -> int:
        try:
            return self._index[tuple(triple)]
        except KeyError:
            raise ContractError(f"prompt triple {triple} not in vocabulary") from None

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self._index


def prompt_text(selector: str, verb: str, speed: str, shape: str) -> str:
    speed_text = " slowly" if speed == "slow" else " quickly"
    if verb in DIRECTIONS:
        return f"the {selector} {shape} moves {_DIR_TEXT[verb]}{speed_text}"
    if verb == "grow":
        return f"the {selector} {shape} grows{speed_text}"
    if verb == "shrink":
        return f"the {selector} {shape} shrinks{speed_text}"
    if verb == "enter":
        return f"a {selector} {shape} enters from the left{speed_text}"
    return f"the {selector} {shape} stays perfectly still"


def _palette(i: int) -> BackgroundStyle:
    # kept noticeably darker than every sprite color so the luminance contrast
    # stays strong for the flow estimator
    bases = [
        (0.26, 0.24, 0.22), (0.18, 0.24, 0.28), (0.28, 0.24, 0.17),
        (0.20, 0.20, 0.27), (0.27, 0.19, 0.23), (0.21, 0.28, 0.21),
        (0.30, 0.27, 0.22), (0.17, 0.22, 0.20),
    ]
    return BackgroundStyle(base=bases[i % len(bases)], contrast=0.2,
                           waves=4, phase_seed=17 * i + 3)


def _make_prompts(scenario_id: str, entries, shapes_by_color) -> tuple[PromptSpec, ...]:
    out = []
    for selector, verb, speed in entries:
        out.append(PromptSpec(
            scenario_id=scenario_id, selector=selector, verb=verb, speed=speed,
            embedding_index=-1,  # assigned by finalize_vocabulary
            text=prompt_text(selector, verb, speed, shapes_by_color.get(selector, "circle")),
        ))
    return tuple(out)


def finalize_vocabulary(scenarios) -> tuple[tuple[Scenario, ...], Vocabulary]:
    """Assign shared embedding indices to every prompt across the scenario set."""
    vocab = Vocabulary.from_scenarios(scenarios)
    fixed = []
    for sc in scenarios:
        prompts = tuple(
            PromptSpec(p.scenario_id, p.selector, p.verb, p.speed,
                       vocab.index_of(p.triple), p.text)
            for p in sc.prompts)
        fixed.append(Scenario(sc.scenario_id, sc.backgrounds, sc.sprites, prompts,
                              sc.multi_object, sc.novel_object))
    return tuple(fixed), vocab


def default_scenarios(n_backgrounds: int = 4) -> tuple[tuple[Scenario, ...], Vocabulary]:
    """The stock catalog: 22 scenarios mixing single-sprite, multi-object and
    novel-object setups; prompt-set sizes are 14x4 + 8x3 so four images per
    scenario yield 320 image-text pairs."""
    scenarios = []
    colors = list(COLORS)

    # 13 single-sprite scenarios cycling shapes/colors and verb menus
    single_menus = [
        [("left", "fast"), ("right", "fast"), ("up", "slow"), ("down", "fast")],
        [("up", "fast"), ("down", "slow"), ("grow", "fast"), ("static", "slow")],
        [("right", "slow"), ("left", "fast"), ("down_right", "fast"), ("static", "slow")],
        [("up_left", "fast"), ("down_right", "slow"), ("right", "fast"), ("static", "slow")],
        [("grow", "slow"), ("shrink", "fast"), ("up", "fast"), ("static", "slow")],
        [("left", "slow"), ("right", "fast"), ("up_right", "fast")],
        [("down", "fast"), ("up", "fast"), ("shrink", "slow"), ("static", "slow")],
        [("down_left", "fast"), ("up_right", "slow"), ("left", "fast")],
        [("right", "fast"), ("grow", "fast"), ("static", "slow"), ("down", "slow")],
        [("up", "slow"), ("down", "fast"), ("left", "fast")],
        [("shrink", "fast"), ("grow", "slow"), ("right", "slow"), ("static", "slow")],
        [("up_left", "slow"), ("down_right", "fast"), ("down", "fast")],
        [("left", "fast"), ("up", "fast"), ("down_left", "slow"), ("static", "slow")],
    ]
    for i, menu in enumerate(single_menus):
        color = colors[i % len(colors)]
        shape = SHAPES[i % len(SHAPES)]
        sprite = SpriteSpec(shape, color, half_frac=0.10 + 0.02 * (i % 3), start=(0.5, 0.5))
        entries = [(color, verb, speed) for verb, speed in menu]
        scenarios.append(Scenario(
            scenario_id=f"s{i:02d}_{color}_{shape}",
            backgrounds=tuple(_palette(i + j) for j in range(n_backgrounds)),
            sprites=(sprite,),
            prompts=_make_prompts(f"s{i:02d}_{color}_{shape}", entries, {color: shape}),
        ))

    # 5 multi-object scenarios: two sprites, prompts select one by color and
    # move it away from the other (plus static/grow options)
    multi_defs = [
        (("red", "square", (0.34, 0.5)), ("blue", "circle", (0.72, 0.5)),
         [("red", "left", "fast"), ("blue", "right", "fast"), ("red", "up", "slow"),
          ("blue", "static", "slow")]),
        (("green", "circle", (0.5, 0.34)), ("yellow", "diamond", (0.5, 0.7)),
         [("green", "up", "fast"), ("yellow", "down", "fast"), ("green", "static", "slow")]),
        (("magenta", "diamond", (0.34, 0.34)), ("cyan", "square", (0.7, 0.7)),
         [("magenta", "up_left", "fast"), ("cyan", "down_right", "fast"),
          ("magenta", "shrink", "slow"), ("cyan", "grow", "slow")]),
        (("orange", "square", (0.34, 0.66)), ("white", "circle", (0.7, 0.32)),
         [("orange", "down_left", "fast"), ("white", "up_right", "fast"),
          ("orange", "static", "slow")]),
        (("blue", "diamond", (0.3, 0.5)), ("red", "circle", (0.74, 0.5)),
         [("blue", "left", "slow"), ("red", "right", "slow"), ("blue", "down", "fast"),
          ("red", "up", "fast")]),
    ]
    for j, (sa, sb, menu) in enumerate(multi_defs):
        i = 13 + j
        sprites = tuple(SpriteSpec(sh, cn, 0.08, st) for cn, sh, st in (sa, sb))
        shapes_by_color = {sa[0]: sa[1], sb[0]: sb[1]}
        sid = f"s{i:02d}_pair_{sa[0]}_{sb[0]}"
        scenarios.append(Scenario(
            scenario_id=sid,
            backgrounds=tuple(_palette(i + j2) for j2 in range(n_backgrounds)),
            sprites=sprites,
            prompts=_make_prompts(sid, menu, shapes_by_color),
            multi_object=True,
        ))

    # 4 novel-object scenarios: one resident sprite on the right; a new sprite
    # can enter from the left edge
    novel_defs = [
        ("yellow", "square", "red", [("red", "enter", "fast"), ("yellow", "right", "slow"),
                                     ("yellow", "static", "slow")]),
        ("cyan", "circle", "orange", [("orange", "enter", "fast"), ("cyan", "up", "fast"),
                                      ("cyan", "grow", "slow"), ("cyan", "static", "slow")]),
        ("green", "diamond", "magenta", [("magenta", "enter", "slow"), ("green", "down", "fast"),
                                         ("green", "static", "slow")]),
        ("white", "square", "blue", [("blue", "enter", "fast"), ("white", "shrink", "fast"),
                                     ("white", "left", "slow"), ("white", "static", "slow")]),
    ]
    for j, (res_color, res_shape, new_color, menu) in enumerate(novel_defs):
        i = 18 + j
        sid = f"s{i:02d}_novel_{new_color}"
        sprite = SpriteSpec(res_shape, res_color, 0.10, (0.68, 0.5))
        scenarios.append(Scenario(
            scenario_id=sid,
            backgrounds=tuple(_palette(i + j) for j in range(n_backgrounds)),
            sprites=(sprite,),
            prompts=_make_prompts(sid, menu, {res_color: res_shape, new_color: "circle"}),
            novel_object=True,
        ))

    return finalize_vocabulary(scenarios)

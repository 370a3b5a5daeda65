"""Clip rendering with exact per-pixel flow and moving-pixel masks.

Sprites are solid-color shapes with an analytic ~1px anti-aliased edge, so
sub-pixel positions render consistently and the ground-truth flow warp
reconstructs the next frame exactly away from occlusion boundaries.
Backgrounds are static seeded cosine-mixture textures, guaranteeing nonzero
image gradients for the flow estimator.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from ..motionmap.flow import FlowField
from .scenarios import (
    COLORS, DIRECTIONS, SPEED_FRACS, VERBS, BackgroundStyle, PromptSpec, Scenario,
    Vocabulary, default_scenarios,
)


def _stable_seed(*parts) -> int:
    h = hashlib.sha256("|".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "little")


def render_background(style: BackgroundStyle, h: int, w: int,
                      offset: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Static smooth texture: base color plus a bounded cosine mixture.

    `offset` shifts the texture content by (dx, dy) pixels analytically (no
    resampling, no seams) - used by tests that need an exactly known motion.
    """
    rng = np.random.Generator(np.random.PCG64(style.phase_seed))
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    xs = xs - offset[0]
    ys = ys - offset[1]
    img = np.empty((h, w, 3))
    for c in range(3):
        waves = np.zeros((h, w))
        amps = rng.uniform(0.5, 1.0, style.waves)
        amps *= (style.contrast / 2.0) / amps.sum()
        for k in range(style.waves):
            period = rng.uniform(6.0, max(12.0, max(h, w) / 2.0))
            theta = rng.uniform(0.0, 2 * np.pi)
            phase = rng.uniform(0.0, 2 * np.pi)
            fx, fy = np.cos(theta) / period, np.sin(theta) / period
            waves += amps[k] * np.cos(2 * np.pi * (fx * xs + fy * ys) + phase)
        img[..., c] = style.base[c] + waves
    return np.clip(img, 0.0, 1.0)


def _coverage(shape: str, cx: float, cy: float, half: float,
              xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    dx = np.abs(xs - cx)
    dy = np.abs(ys - cy)
    if shape == "square":
        return np.clip(half + 0.5 - dx, 0, 1) * np.clip(half + 0.5 - dy, 0, 1)
    if shape == "circle":
        return np.clip(half + 0.5 - np.hypot(xs - cx, ys - cy), 0, 1)
    if shape == "diamond":
        return np.clip(half + 0.5 - (dx + dy), 0, 1)
    raise ContractError(f"unknown shape {shape!r}")


_TEX_DEPTH = 0.4


def _sprite_shade(shape: str, color_name: str, cx: float, cy: float, half: float,
                  xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Brightness modulation in sprite-anchored normalized coordinates.

    The pattern rides along with translation and rescales with growth, so
    brightness constancy along the oracle flow holds exactly; it also gives
    the flow estimator gradients inside otherwise flat sprites. Darkens only
    (shade in [1 - depth, 1]) so bright colors stay inside [0, 1].
    """
    rng = np.random.Generator(np.random.PCG64(_stable_seed("tex", shape, color_name)))
    qx = (xs - cx) / half
    qy = (ys - cy) / half
    tex = np.zeros_like(qx)
    amps = rng.uniform(0.5, 1.0, 4)
    amps *= 0.5 / amps.sum()
    th0 = rng.uniform(0, np.pi)
    for k in range(4):
        fr = rng.uniform(0.6, 1.1)
        # spread wave directions so no sprite ends up with 1D (aperture) texture
        th = th0 + k * (np.pi / 4.0) + rng.uniform(-0.2, 0.2)
        ph = rng.uniform(0, 2 * np.pi)
        tex += amps[k] * np.cos(2 * np.pi * fr * (np.cos(th) * qx + np.sin(th) * qy) + ph)
    return 1.0 - _TEX_DEPTH * (0.5 + tex)


@dataclass
class _SpriteTrack:
    """Per-frame kinematics of one sprite: centers, halves, visibility."""

    shape: str
    color: tuple[float, float, float]
    centers: np.ndarray              # (L, 2) float (x, y)
    halves: np.ndarray               # (L,) float
    moving: bool                     # this is the prompt's target
    color_name: str = ""

    def composite(self, img: np.ndarray, l: int, xs: np.ndarray, ys: np.ndarray):
        cx, cy = self.centers[l]
        a = _coverage(self.shape, cx, cy, self.halves[l], xs, ys)
        shade = _sprite_shade(self.shape, self.color_name, cx, cy, self.halves[l], xs, ys)
        rgb = np.asarray(self.color) * shade[..., None]
        return img * (1.0 - a[..., None]) + rgb * a[..., None], a


@dataclass
class Clip:
    video: np.ndarray                # (L, H, W, 3) in [0, 1]
    flow: FlowField                  # oracle flow, (L-1, H, W, 2) px/frame
    mask: np.ndarray                 # (L, H, W) bool, moving pixels (last row duplicated)
    prompt: PromptSpec
    scenario_id: str
    seed: int


def _simulate_tracks(scenario: Scenario, prompt: PromptSpec, L: int, h: int, w: int,
                     speed_px: float, jitter: np.ndarray) -> list[_SpriteTrack]:
    mind = min(h, w)
    maxd = max(h, w)

    tracks: list[_SpriteTrack] = []
    target = prompt.selector
    for sp in scenario.sprites:
        half = sp.half_frac * mind
        c0 = np.array([sp.start[0] * w, sp.start[1] * h], dtype=np.float64)
        c0 = c0 + (jitter if sp.color_name == target else 0.0)
        tracks.append(_SpriteTrack(sp.shape, sp.color, np.tile(c0, (L, 1)),
                                   np.full(L, half), moving=False,
                                   color_name=sp.color_name))

    def others_clear(c: np.ndarray, half: float, me: int, l: int) -> bool:
        for j, tr in enumerate(tracks):
            if j == me:
                continue
            if np.max(np.abs(c - tr.centers[l])) < half + tr.halves[l] + 2.0:
                return False
        return True

    verb = prompt.verb
    if verb == "static":
        return tracks

    if verb == "enter":
        half = 0.08 * mind
        step = max(speed_px, 1.5)
        centers = np.zeros((L, 2))
        cy = 0.5 * h
        x = -half - 0.6   # fully offscreen for frames 0 and 1
        me = len(tracks)
        tracks.append(_SpriteTrack("circle", COLORS[prompt.selector],
                                   centers, np.full(L, half), moving=True,
                                   color_name=prompt.selector))
        for l in range(L):
            if l >= 2:   # first visible pixels appear at frame 2
                nx = x + step
                if nx < w - half - 1 and others_clear(np.array([nx, cy]), half, me, l):
                    x = nx
            centers[l] = (x, cy)
        return tracks

    # pick the target sprite's track
    idx = [i for i, sp in enumerate(scenario.sprites) if sp.color_name == target]
    if not idx:
        raise ContractError(f"prompt not applicable: no sprite {target!r}")
    me = idx[0]
    tr = tracks[me]
    tr.moving = True
    half = tr.halves[0]

    if verb in ("grow", "shrink"):
        rate = speed_px if verb == "grow" else -speed_px
        hcur = half
        for l in range(L):
            tr.halves[l] = hcur
            nxt = hcur + rate
            c = tr.centers[l]
            fits = (nxt >= 0.04 * mind and
                    nxt < min(c[0], w - 1 - c[0], c[1], h - 1 - c[1]) - 1 and
                    others_clear(c, nxt, me, l))
            if fits:
                hcur = nxt
        return tracks

    d = np.array(DIRECTIONS[verb])
    step = d * speed_px
    c = tr.centers[0].copy()
    for l in range(L):
        tr.centers[l] = c
        nxt = c + step
        inside = (half + 1.0 <= nxt[0] <= w - 1 - half - 1.0 and
                  half + 1.0 <= nxt[1] <= h - 1 - half - 1.0)
        if inside and others_clear(nxt, half, me, min(l + 1, L - 1)):
            c = nxt
    return tracks


def render_start_frame(scenario: Scenario, bg_index: int, height: int = 64,
                       width: int = 64) -> np.ndarray:
    """The scenario's exact start pose (no jitter): roster sprites on the
    chosen background. This is the condition image the benchmark ships."""
    bg = render_background(scenario.backgrounds[bg_index], height, width)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    img = bg
    mind = min(height, width)
    for sp in scenario.sprites:
        tr = _SpriteTrack(sp.shape, sp.color,
                          np.array([[sp.start[0] * width, sp.start[1] * height]]),
                          np.array([sp.half_frac * mind]), moving=False,
                          color_name=sp.color_name)
        img, _ = tr.composite(img, 0, xs, ys)
    return img


def gen_clip(scenario: Scenario, prompt: PromptSpec, seed: int, *,
             frames: int = 8, height: int = 64, width: int = 64,
             bg_index: int | None = None, stride: int = 1,
             speed_px: float | None = None) -> Clip:
    """Render one clip realizing the prompt; returns video + exact flow + mask.

    The seed picks the background style and a sub-pixel start jitter; the
    optional speed_px overrides the slow/fast fraction mapping (tests use it
    to pin exact per-frame displacements). stride multiplies the per-frame
    motion, mimicking temporal subsampling of a longer clip.
    """
    if prompt.scenario_id != scenario.scenario_id:
        raise ContractError(
            f"prompt {prompt.scenario_id!r} not applicable to {scenario.scenario_id!r}")
    if prompt.verb not in VERBS:
        raise ContractError(f"unknown verb {prompt.verb!r}")
    if frames < 1 or height < 8 or width < 8:
        raise ContractError("need frames >= 1 and dims >= 8")
    if stride < 1:
        raise ContractError("stride must be >= 1")

    rng = np.random.Generator(np.random.PCG64(_stable_seed(scenario.scenario_id,
                                                           prompt.embedding_index, seed)))
    if bg_index is None:
        bg_index = int(rng.integers(len(scenario.backgrounds)))
    jitter = rng.uniform(-0.5, 0.5, size=2)
    if speed_px is None:
        speed_px = SPEED_FRACS[prompt.speed] * max(height, width)
    speed_px *= stride

    bg = render_background(scenario.backgrounds[bg_index], height, width)
    tracks = _simulate_tracks(scenario, prompt, frames, height, width, speed_px, jitter)

    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    video = np.empty((frames, height, width, 3))
    alphas = np.zeros((frames, height, width))      # target sprite coverage
    for l in range(frames):
        img = bg.copy()
        for tr in tracks:
            img, a = tr.composite(img, l, xs, ys)
            if tr.moving:
                alphas[l] = a
        video[l] = img

    flow = np.zeros((max(frames - 1, 0), height, width, 2))
    mask = np.zeros((frames, height, width), dtype=bool)
    for tr in tracks:
        if not tr.moving:
            continue
        for l in range(frames - 1):
            dc = tr.centers[l + 1] - tr.centers[l]
            dh = tr.halves[l + 1] - tr.halves[l]
            region = alphas[l] > 0.0
            if abs(dh) > 0:
                factor = tr.halves[l + 1] / tr.halves[l] - 1.0
                flow[l, region, 0] += factor * (xs[region] - tr.centers[l][0])
                flow[l, region, 1] += factor * (ys[region] - tr.centers[l][1])
                mask[l] |= alphas[l] > 0.5
            if np.any(dc != 0.0):
                flow[l, region, 0] += dc[0]
                flow[l, region, 1] += dc[1]
                mask[l] |= alphas[l] > 0.5
    if frames >= 2:
        mask[frames - 1] = mask[frames - 2]

    return Clip(video=video, flow=FlowField(flow, "oracle"), mask=mask,
                prompt=prompt, scenario_id=scenario.scenario_id, seed=seed)


@dataclass(frozen=True)
class DatasetConfig:
    frames: int = 8
    height: int = 64
    width: int = 64
    n_clips: int = 64
    verbs: tuple[str, ...] = VERBS
    speeds: tuple[str, ...] = ("slow", "fast")
    stride_choices: tuple[int, ...] = (1,)
    scenario_preset: str = "default"   # only the stock catalog is built in

    def __post_init__(self):
        for v in self.verbs:
            if v not in VERBS:
                raise ContractError(f"unknown verb {v!r}")
        if self.n_clips < 0:
            raise ContractError("n_clips must be >= 0")


def gen_dataset(config: DatasetConfig, seed: int,
                scenarios: tuple[Scenario, ...] | None = None,
                vocab: Vocabulary | None = None):
    """Deterministic clip stream, class-balanced over motion verbs.

    Yields Clip objects; identical (config, seed) reproduce identical bytes.
    """
    if scenarios is None:
        scenarios, vocab = default_scenarios()
    rng = np.random.Generator(np.random.PCG64(seed))

    by_verb: dict[str, list[tuple[Scenario, PromptSpec]]] = {}
    for sc in scenarios:
        for pr in sc.prompts:
            if pr.verb in config.verbs and pr.speed in config.speeds:
                by_verb.setdefault(pr.verb, []).append((sc, pr))
    verbs = [v for v in config.verbs if v in by_verb]
    if config.n_clips > 0 and not verbs:
        raise ContractError("no prompts match the configured verb/speed filter")

    def clips():
        for i in range(config.n_clips):
            verb = verbs[i % len(verbs)]
            options = by_verb[verb]
            sc, pr = options[int(rng.integers(len(options)))]
            stride = int(config.stride_choices[int(rng.integers(len(config.stride_choices)))])
            clip_seed = int(rng.integers(2 ** 62))
            yield gen_clip(sc, pr, clip_seed, frames=config.frames,
                           height=config.height, width=config.width, stride=stride)

    return clips()

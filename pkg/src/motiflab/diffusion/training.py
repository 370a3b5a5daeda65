"""Seeded training loop: synthetic clips -> latents -> weighted v-prediction.

Everything downstream of the config seed is deterministic in single-threaded
mode: dataset pool, initialization, timestep/noise draws and prompt dropout
all come from one generator consumed in a fixed order.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError, NumericError
from ..motionmap.heatmap import downsample_heatmap, heatmap_for_video
from ..numcore.checkpoint import save_checkpoint
from ..numcore.network import DenoiserConfig, DenoiserParams, init_params
from ..numcore.optim import Optimizer
from ..numcore.train_ops import BatchItem, loss_and_grads
from ..synthvid.generator import DatasetConfig, gen_dataset
from ..synthvid.scenarios import Vocabulary, default_scenarios
from .latent import encode
from .losses import LossSpec
from .schedule import DiffusionSchedule, q_sample, v_target


@dataclass(frozen=True)
class TrainConfig:
    # clip geometry
    frames: int = 8
    height: int = 32
    width: int = 32
    pool: int = 2
    # dataset
    n_clips: int = 64
    verbs: tuple[str, ...] = ("left", "right", "up", "down", "static")
    speeds: tuple[str, ...] = ("fast",)
    # model
    model_width: int = 32
    time_dim: int = 16
    frame_dim: int = 8
    prompt_dim: int = 16
    conditioning: str = "x_cat"
    # objective
    lambda_motif: float = 1.0
    heatmap_mode: str = "motif"
    eps_residual: bool = False
    square_weight: bool = True
    heatmap_source: str = "oracle"     # oracle flow by default; "estimated" opts in
    # latent normalization: diffusion operates on (latent - shift) * scale so the
    # signal is unit-ish variance against the N(0,1) noise
    latent_shift: float = 0.5
    latent_scale: float = 4.0
    leak_feature: bool = True
    # schedule
    timesteps: int = 1000
    # loop
    steps: int = 2000
    batch_size: int = 2
    lr: float = 1e-3
    optimizer: str = "adam"
    drop_prob: float = 0.1
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.heatmap_source not in ("oracle", "estimated"):
            raise ContractError("heatmap_source must be 'oracle' or 'estimated'")
        if self.steps < 0 or self.batch_size < 1 or self.n_clips < 1:
            raise ContractError("steps >= 0, batch_size >= 1, n_clips >= 1 required")


@dataclass
class PreparedClip:
    z0: np.ndarray           # (L, H', W', C')
    cond: np.ndarray         # (L, H', W', C') first-frame latent, replicated
    m_prime: np.ndarray      # (L, H', W')
    prompt_index: int


@dataclass
class TrainResult:
    params: DenoiserParams
    metrics: list[dict]
    vocab: Vocabulary
    schedule: DiffusionSchedule
    config: TrainConfig
    out_dir: Path | None = None
    checkpoint_path: Path | None = None


def prepare_clips(config: TrainConfig, seed: int,
                  vocab: Vocabulary | None = None) -> tuple[list[PreparedClip], Vocabulary]:
    scenarios, default_vocab = default_scenarios()
    vocab = vocab or default_vocab
    ds = DatasetConfig(frames=config.frames, height=config.height, width=config.width,
                       n_clips=config.n_clips, verbs=config.verbs, speeds=config.speeds)
    dtype = np.dtype(config.dtype)
    out = []
    for clip in gen_dataset(ds, seed, scenarios=scenarios, vocab=vocab):
        z0 = ((encode(clip.video, config.pool) - config.latent_shift)
              * config.latent_scale).astype(dtype)
        cond = np.repeat(z0[:1], config.frames, axis=0)
        source = clip.flow if config.heatmap_source == "oracle" else clip.video
        hm = heatmap_for_video(source)
        m_prime = downsample_heatmap(hm.m, config.pool).astype(dtype)
        out.append(PreparedClip(z0, cond, m_prime, vocab.index_of(clip.prompt.triple)))
    return out, vocab


def checkpoint_extra(config: TrainConfig, vocab: Vocabulary) -> dict:
    return {
        "train_config": asdict(config),
        "vocab_triples": [list(t) for t in vocab.triples],
        "pool": config.pool,
        "timesteps": config.timesteps,
        "latent_shift": config.latent_shift,
        "latent_scale": config.latent_scale,
    }


def train(config: TrainConfig, out_dir=None, progress: bool = False,
          heartbeat_every: int = 200) -> TrainResult:
    """Run the loop; optionally write checkpoint + metrics + figures to out_dir."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    clips, vocab = prepare_clips(config, seed=config.seed)

    dtype = np.dtype(config.dtype)
    c_latent = 3 * config.pool * config.pool
    net_cfg = DenoiserConfig(
        channels=c_latent, width=config.model_width, time_dim=config.time_dim,
        frame_dim=config.frame_dim, prompt_dim=config.prompt_dim,
        vocab_size=vocab.size, conditioning=config.conditioning,
        timesteps=config.timesteps, leak_feature=config.leak_feature)
    params = init_params(net_cfg, seed=config.seed, dtype=dtype)
    schedule = DiffusionSchedule(config.timesteps)
    spec = LossSpec(config.lambda_motif, config.heatmap_mode,
                    config.eps_residual, config.square_weight)
    opt = Optimizer(params, lr=config.lr, mode=config.optimizer)

    metrics: list[dict] = []
    t_start = time.time()
    for step in range(config.steps):
        idxs = rng.integers(0, len(clips), size=config.batch_size)
        ts = rng.integers(1, config.timesteps + 1, size=config.batch_size)
        drops = rng.random(config.batch_size) < config.drop_prob
        batch = []
        for j, (ci, t) in enumerate(zip(idxs, ts)):
            pc = clips[ci]
            eps = rng.standard_normal(pc.z0.shape).astype(dtype)
            t = int(t)
            z_t = q_sample(schedule, pc.z0, t, eps).astype(dtype)
            v = v_target(schedule, pc.z0, eps, t).astype(dtype)
            prompt = vocab.null_index if drops[j] else pc.prompt_index
            batch.append(BatchItem(z_t, v, pc.m_prime, pc.cond, t, prompt,
                                   residual_scale=float(schedule.sqrt_ab[t - 1])))
        loss, grads, parts = loss_and_grads(params, batch, spec, with_parts=True)
        if not np.isfinite(loss):
            raise NumericError(
                f"non-finite loss at step {step} (diffusion={parts['diffusion']}, "
                f"motif={parts['motif']}); aborting")
        opt.step(params, grads)
        metrics.append({"step": step, "loss_total": loss,
                        "loss_diffusion": parts["diffusion"],
                        "loss_motif": parts["motif"]})
        if progress and (step % heartbeat_every == 0 or step == config.steps - 1):
            print(f"  step {step + 1}/{config.steps}  total={loss:.5f}  "
                  f"diff={parts['diffusion']:.5f}  motif={parts['motif']:.5f}  "
                  f"elapsed={time.time() - t_start:.1f}s", flush=True)

    result = TrainResult(params, metrics, vocab, schedule, config)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = out_dir / "checkpoint.npz"
        save_checkpoint(ckpt, params, config.steps, extra=checkpoint_extra(config, vocab))
        _write_metrics(out_dir / "metrics.csv", metrics)
        (out_dir / "config_echo.json").write_text(
            json.dumps(asdict(config), indent=2, sort_keys=True) + "\n")
        if metrics:
            _plot_losses(out_dir / "loss_curve.png", metrics)
        result.out_dir = out_dir
        result.checkpoint_path = ckpt
    return result


def _write_metrics(path: Path, metrics: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["step", "loss_total",
                                                "loss_diffusion", "loss_motif"])
        writer.writeheader()
        writer.writerows(metrics)


def _plot_losses(path: Path, metrics: list[dict]) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    steps = [m["step"] for m in metrics]
    fig, ax = plt.subplots(figsize=(7, 4))
    for key, label in (("loss_total", "total"), ("loss_diffusion", "diffusion"),
                       ("loss_motif", "motion focal")):
        ax.plot(steps, [m[key] for m in metrics], label=label, linewidth=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


@dataclass
class ModelBundle:
    """A checkpoint plus everything needed to sample from it."""

    params: object
    schedule: DiffusionSchedule
    vocab: Vocabulary
    pool: int
    latent_shift: float
    latent_scale: float
    step: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def frames(self) -> int:
        return int(self.extra["train_config"]["frames"])


def bundle_from_result(result: TrainResult) -> ModelBundle:
    cfg = result.config
    return ModelBundle(result.params, result.schedule, result.vocab, cfg.pool,
                       cfg.latent_shift, cfg.latent_scale, cfg.steps,
                       checkpoint_extra(cfg, result.vocab))


def load_model_bundle(path) -> ModelBundle:
    """Load a checkpoint plus the vocabulary/schedule/scaling it carries."""
    from ..numcore.checkpoint import load_checkpoint

    params, step, extra = load_checkpoint(path)
    vocab = Vocabulary(tuple(map(tuple, extra["vocab_triples"])))
    schedule = DiffusionSchedule(extra.get("timesteps", 1000))
    return ModelBundle(params, schedule, vocab, int(extra.get("pool", 1)),
                       float(extra.get("latent_shift", 0.0)),
                       float(extra.get("latent_scale", 1.0)), step, extra)

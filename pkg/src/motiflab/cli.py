"""Single entry point: dataset/bench generation, flow/heatmap tools, training,
sampling, evaluation, serving, and offline tallying.

Every run writes a config echo next to its outputs and is reproducible from
(config, seed). Unknown keys in config files are errors. Env overrides:
MOTIF_OUT_DIR prefixes relative output paths, MOTIF_THREADS caps BLAS threads
(applied before numpy loads).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path


def _apply_thread_env() -> None:
    n = os.environ.get("MOTIF_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def _out_path(p: str) -> Path:
    base = os.environ.get("MOTIF_OUT_DIR")
    path = Path(p)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def load_config(cls, path, overrides: dict | None = None):
    """Strict dataclass config loader: unknown keys are errors, lists become
    tuples to match the dataclass fields."""
    from .errors import ContractError

    raw = json.loads(Path(path).read_text()) if path else {}
    if not isinstance(raw, dict):
        raise ContractError(f"{path}: config must be a JSON object")
    raw.update(overrides or {})
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(raw) - set(fields)
    if unknown:
        raise ContractError(
            f"{path or 'config'}: unknown keys {sorted(unknown)}; "
            f"valid keys: {sorted(fields)}")
    coerced = {}
    for k, v in raw.items():
        if isinstance(v, list):
            v = tuple(v)
        coerced[k] = v
    return cls(**coerced)


def _echo_config(out_dir: Path, payload: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_data(args) -> int:
    import numpy as np
    from .synthvid.generator import DatasetConfig, gen_dataset
    from .synthvid.clipio import write_clip

    cfg = load_config(DatasetConfig, args.config)
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["clip_file\tscenario_id\tselector\tverb\tspeed\tprompt_text"]
    for i, clip in enumerate(gen_dataset(cfg, args.seed)):
        name = f"clip_{i:05d}.bin"
        write_clip(out / name, clip.video.astype(np.float32), seed=clip.seed)
        pr = clip.prompt
        rows.append(f"{name}\t{clip.scenario_id}\t{pr.selector}\t{pr.verb}"
                    f"\t{pr.speed}\t{pr.text}")
    (out / "index.tsv").write_text("\n".join(rows) + "\n")
    _echo_config(out, {"command": "data", "seed": args.seed,
                       "config": dataclasses.asdict(cfg)})
    print(f"wrote {cfg.n_clips} clips to {out}")
    return 0


def cmd_bench(args) -> int:
    from .synthvid.bench import BenchConfig, build_bench

    overrides = {"out_dir": str(_out_path(args.out))}
    cfg = load_config(BenchConfig, args.config, overrides)
    manifest = build_bench(cfg, seed=args.seed)
    out = Path(cfg.out_dir)
    _echo_config(out, {"command": "bench", "seed": args.seed,
                       "config": dataclasses.asdict(cfg)})
    print(f"bench: {len(manifest.pairs)} pairs, {manifest.n_images} images, "
          f"{manifest.n_prompts} prompts -> {out}")
    return 0


def cmd_flow(args) -> int:
    import numpy as np
    from .synthvid.clipio import read_clip
    from .motionmap.flow import estimate_flow_video, flow_intensity

    video, _ = read_clip(args.infile)
    field = estimate_flow_video(video, alpha=args.alpha, iters=args.iters,
                                levels=args.levels)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savez(out, uv=field.uv, provenance=field.provenance)
    inten = flow_intensity(field)
    print(f"flow: frames={video.shape[0]} mean_intensity={inten.mean():.4f} "
          f"max_intensity={inten.max():.4f} px/frame -> {out}")
    return 0


def cmd_heatmap(args) -> int:
    import numpy as np
    from .synthvid.clipio import read_clip, write_clip
    from .motionmap.heatmap import heatmap_for_video, motion_stats

    video, _ = read_clip(args.infile)
    hm = heatmap_for_video(video)
    out = _out_path(args.out)
    write_clip(out, hm.m[..., None].astype(np.float64))
    static_frac, moving_frac, mean_int = motion_stats(video)
    print(f"heatmap: frames={hm.m.shape[0]} static={static_frac:.4f} "
          f"moving={moving_frac:.4f} mean_norm_intensity={mean_int:.5f} -> {out}")
    return 0


def cmd_train(args) -> int:
    from .diffusion.training import TrainConfig, train

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = load_config(TrainConfig, args.config, overrides)
    out = _out_path(args.out)
    result = train(cfg, out_dir=out, progress=True)
    final = result.metrics[-1]["loss_total"] if result.metrics else float("nan")
    print(f"checkpoint: {result.checkpoint_path} (final loss {final:.5f})")
    return 0


def cmd_gen(args) -> int:
    import numpy as np
    from .diffusion.training import load_model_bundle
    from .evalkit.metrics import generate_for_pair
    from .synthvid.clipio import load_frame_png, write_clip, export_png_sequence

    bundle = load_model_bundle(args.ckpt)
    out = _out_path(args.out)
    if args.bench:
        return _gen_bench(args, bundle, out)
    if not (args.image and args.prompt):
        print("gen: need --image and --prompt (or --bench)", file=sys.stderr)
        return 2
    img = load_frame_png(args.image)
    triple = tuple(args.prompt.split(","))
    if len(triple) != 3:
        print("gen: --prompt must be 'selector,verb,speed'", file=sys.stderr)
        return 2
    video = generate_for_pair(bundle, img, bundle.vocab.index_of(triple),
                              bundle.frames, steps=args.steps,
                              guidance=args.guidance, seed=args.seed)
    write_clip(out, video.astype(np.float32), seed=args.seed)
    if args.png_dir:
        export_png_sequence(_out_path(args.png_dir), video)
    print(f"generated {video.shape} -> {out}")
    return 0


def _gen_bench(args, bundle, out: Path) -> int:
    """Generate every bench pair into the annotation asset convention."""
    import json as _json
    from .evalkit.metrics import generate_for_pair
    from .evalkit.report import load_bench_pairs
    from .synthvid.bench import BenchManifest
    from .synthvid.clipio import export_png_sequence
    from .synthvid.scenarios import default_scenarios

    scenarios, _ = default_scenarios()
    manifest = BenchManifest.from_tsv(Path(args.bench) / "manifest.tsv")
    pairs = load_bench_pairs(args.bench, manifest, scenarios)
    for pair in pairs:
        image_id, prompt_id = pair["pair_id"].split("|")
        video = generate_for_pair(bundle, pair["cond_image"],
                                  bundle.vocab.index_of(pair["triple"]),
                                  bundle.frames, steps=args.steps,
                                  guidance=args.guidance, seed=args.seed)
        vdir = out / f"{image_id}__{prompt_id}"
        export_png_sequence(vdir, video)
        (vdir / "meta.json").write_text(_json.dumps(
            {"frames": int(video.shape[0]), "fps": 4,
             "height": int(video.shape[1]), "width": int(video.shape[2])}) + "\n")
    _echo_config(out, {"command": "gen", "ckpt": str(args.ckpt),
                       "bench": str(args.bench), "seed": args.seed,
                       "steps": args.steps, "guidance": args.guidance})
    print(f"generated {len(pairs)} bench videos -> {out}")
    return 0


def cmd_eval(args) -> int:
    from .diffusion.training import load_model_bundle
    from .evalkit.report import compare, load_bench_pairs
    from .synthvid.bench import BenchManifest
    from .synthvid.scenarios import default_scenarios

    scenarios, _ = default_scenarios()
    manifest = BenchManifest.from_tsv(Path(args.bench) / "manifest.tsv")
    pairs = load_bench_pairs(args.bench, manifest, scenarios)
    entries = []
    n_frames = None
    for spec in args.ckpt or []:
        name, _, path = spec.partition("=")
        if not path:
            print("eval: --ckpt needs name=path", file=sys.stderr)
            return 2
        bundle = load_model_bundle(path)
        n_frames = n_frames or bundle.frames
        entries.append((name, bundle))
    if args.static_baseline:
        entries.append(("static", None))
    if not entries:
        print("eval: nothing to evaluate", file=sys.stderr)
        return 2
    n_frames = n_frames or 8
    seeds = tuple(int(s) for s in args.seeds.split(","))
    out = _out_path(args.out)
    compare(entries, pairs, n_frames, seeds=seeds, out_dir=out,
            steps=args.steps, guidance=args.guidance)
    _echo_config(out, {"command": "eval", "bench": str(args.bench),
                       "models": [e[0] for e in entries], "seeds": list(seeds),
                       "steps": args.steps, "guidance": args.guidance})
    return 0


def cmd_serve(args) -> int:
    from .annoservice.session_setup import serve_from_config

    return serve_from_config(Path(args.session_config), port=args.port,
                             static_dir=args.static, log_path=args.log)


def cmd_tally(args) -> int:
    from .annoservice.service import AnnotationService

    svc = AnnotationService.from_log(args.log)
    sessions = [args.session] if args.session else svc.session_ids()
    out = {}
    for sid in sessions:
        agg = svc.aggregate(sid)
        out[sid] = agg.to_dict()
        print(f"session {sid}: {agg.model_x} {agg.ti2v_score_x:.1f}% vs "
              f"{agg.model_y} {agg.ti2v_score_y:.1f}%  "
              f"(decided {agg.tasks_decided}/{agg.tasks_total}, "
              f"votes {agg.vote_count})")
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="motif",
                                 description="motion-weighted TI2V diffusion lab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("data", help="generate a clip dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_data)

    p = sub.add_parser("bench", help="build the synthetic benchmark")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("flow", help="estimate optical flow for a clip file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=0.02)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(fn=cmd_flow)

    p = sub.add_parser("heatmap", help="motion heatmap + stats for a clip file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_heatmap)

    p = sub.add_parser("train", help="train a denoiser")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("gen", help="sample videos from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--image")
    p.add_argument("--prompt", help="selector,verb,speed")
    p.add_argument("--bench", help="generate every pair of this bench dir")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--guidance", type=float, default=7.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--png-dir", default=None)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("eval", help="compare checkpoints on a bench")
    p.add_argument("--ckpt", action="append", metavar="NAME=PATH")
    p.add_argument("--bench", required=True)
    p.add_argument("--static-baseline", action="store_true")
    p.add_argument("--seeds", default="0")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--guidance", type=float, default=7.5)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--session-config", required=True)
    p.add_argument("--static", default=None, help="static UI directory")
    p.add_argument("--log", default=None, help="vote log path override")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("tally", help="recompute aggregates from a vote log")
    p.add_argument("--log", required=True)
    p.add_argument("--session", default=None)
    p.set_defaults(fn=cmd_tally)
    return ap


def main(argv=None) -> int:
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    from .errors import ContractError, NumericError

    try:
        return args.fn(args)
    except (ContractError, NumericError) as e:
        print(f"motif {args.command}: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"motif {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

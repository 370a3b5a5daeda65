"""Model comparison reports: delimited tables, JSON, and rendered figures."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..synthvid.bench import BenchManifest, resolve_prompt
from ..synthvid.clipio import load_frame_png
from .metrics import (
    CLASSIFIER_VERBS,
    classify_motion,
    dynamic_degree,
    first_frame_fidelity,
    generate_for_pair,
    static_baseline,
)

_TSV_COLUMNS = ("model_id", "prompt_accuracy", "fidelity_mse", "fidelity_psnr",
                "dynamic_degree", "degenerate_static")


@dataclass
class EvalReport:
    model_id: str
    metrics: dict = field(default_factory=dict)
    loss_ratio_curve: list | None = None
    per_scenario: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    degenerate_static: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def load_bench_pairs(bench_dir, manifest: BenchManifest, scenarios,
                     verbs=CLASSIFIER_VERBS) -> list[dict]:
    """Materialize manifest rows into evaluation pairs with loaded images."""
    bench_dir = Path(bench_dir)
    pairs = []
    image_cache: dict[str, np.ndarray] = {}
    for row in manifest.pairs:
        sc, prompt = resolve_prompt(scenarios, row.prompt_id)
        if prompt.verb not in verbs:
            continue
        if row.image_file not in image_cache:
            image_cache[row.image_file] = load_frame_png(bench_dir / row.image_file)
        pairs.append({
            "pair_id": f"{row.image_id}|{row.prompt_id}",
            "cond_image": image_cache[row.image_file],
            "verb": prompt.verb,
            "triple": prompt.triple,
            "scenario_id": row.scenario_id,
        })
    if not pairs:
        raise ContractError("no bench pairs left after the verb filter")
    return pairs


def evaluate_model(model_id: str, bundle, pairs: list[dict], n_frames: int,
                   seeds=(0,), steps: int = 50, guidance: float = 7.5,
                   loss_ratio_curve=None) -> EvalReport:
    """Score one model (or the static baseline when bundle is None) on pairs.

    bundle is a diffusion.training.ModelBundle.
    """
    acc_num = 0
    n = 0
    fid = []
    dyn = []
    per_scn: dict[str, list] = {}
    for pair in pairs:
        for seed in seeds:
            if bundle is None:
                video = static_baseline(pair["cond_image"], n_frames)
            else:
                video = generate_for_pair(
                    bundle, pair["cond_image"],
                    bundle.vocab.index_of(pair["triple"]), n_frames,
                    steps=steps, guidance=guidance, seed=seed)
            got = classify_motion(video)
            ok = got == pair["verb"]
            acc_num += ok
            n += 1
            fid.append(first_frame_fidelity(video, pair["cond_image"])[0])
            dyn.append(dynamic_degree(video))
            per_scn.setdefault(pair["scenario_id"], []).append(float(ok))
    mse = float(np.mean(fid))
    dd = float(np.mean(dyn))
    psnr = float("inf") if mse == 0 else float(10.0 * np.log10(1.0 / mse))
    report = EvalReport(
        model_id=model_id,
        metrics={"prompt_accuracy": acc_num / n, "fidelity_mse": mse,
                 "fidelity_psnr": psnr, "dynamic_degree": dd},
        loss_ratio_curve=loss_ratio_curve,
        per_scenario={k: float(np.mean(v)) for k, v in sorted(per_scn.items())},
        seeds=list(seeds),
        degenerate_static=bool(mse < 1e-6 and dd < 1e-6),
    )
    return report


def compare(entries: list[tuple[str, object]], pairs: list[dict], n_frames: int,
            seeds=(0,), out_dir=None, steps: int = 50, guidance: float = 7.5,
            loss_curves: dict | None = None, quiet: bool = False) -> list[EvalReport]:
    """Evaluate several models on the same pairs and emit the report bundle.

    entries: (model_id, bundle-or-None) with None meaning the static baseline.
    Writes report.tsv + report.json + figures under out_dir when given, and
    prints a fixed-width table unless quiet.
    """
    if not entries:
        raise ContractError("need at least one model")
    loss_curves = loss_curves or {}
    reports = [evaluate_model(mid, bundle, pairs, n_frames, seeds=seeds,
                              steps=steps, guidance=guidance,
                              loss_ratio_curve=loss_curves.get(mid))
               for mid, bundle in entries]
    if out_dir is not None:
        write_report_files(reports, Path(out_dir))
    if not quiet:
        print(format_table(reports))
    return reports


def format_table(reports: list[EvalReport]) -> str:
    head = (f"{'model':<16}{'prompt_acc':>11}{'fid_mse':>12}{'fid_psnr':>10}"
            f"{'dyn_degree':>12}  flags")
    lines = [head, "-" * len(head)]
    for r in reports:
        m = r.metrics
        flag = "DEGENERATE-STATIC" if r.degenerate_static else ""
        lines.append(
            f"{r.model_id:<16}{m['prompt_accuracy']:>11.3f}{m['fidelity_mse']:>12.3e}"
            f"{m['fidelity_psnr']:>10.2f}{m['dynamic_degree']:>12.5f}  {flag}")
    degenerate = [r.model_id for r in reports if r.degenerate_static]
    if degenerate:
        lines.append(
            f"warning: {', '.join(degenerate)} wins image fidelity while generating "
            "no motion; automatic image-alignment metrics cannot rank it honestly")
    return "\n".join(lines)


def write_report_files(reports: list[EvalReport], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["\t".join(_TSV_COLUMNS)]
    for r in reports:
        m = r.metrics
        rows.append("\t".join([
            r.model_id, f"{m['prompt_accuracy']:.6f}", f"{m['fidelity_mse']:.6e}",
            f"{m['fidelity_psnr']:.4f}", f"{m['dynamic_degree']:.6f}",
            str(r.degenerate_static).lower()]))
    (out_dir / "report.tsv").write_text("\n".join(rows) + "\n")
    (out_dir / "report.json").write_text(
        json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True,
                   default=float) + "\n")
    _plot_report(reports, out_dir)


def _plot_report(reports: list[EvalReport], out_dir: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ids = [r.model_id for r in reports]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].bar(ids, [r.metrics["prompt_accuracy"] for r in reports], color="#4878cf")
    axes[0].set_ylabel("prompt accuracy")
    axes[0].set_ylim(0, 1)
    axes[1].bar(ids, [r.metrics["dynamic_degree"] for r in reports], color="#d65f5f")
    axes[1].set_ylabel("dynamic degree")
    for ax in axes:
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(out_dir / "metrics.png", dpi=120)
    plt.close(fig)

    with_curves = [r for r in reports if r.loss_ratio_curve]
    if with_curves:
        fig, ax = plt.subplots(figsize=(5.5, 4))
        for r in with_curves:
            xs = [c["t_lo"] for c in r.loss_ratio_curve]
            ys = [c["ratio"] for c in r.loss_ratio_curve]
            ax.plot(xs, ys, marker="o", label=r.model_id)
        ax.set_xlabel("timestep bucket start")
        ax.set_ylabel("high-motion loss ratio")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "loss_ratio.png", dpi=120)
        plt.close(fig)

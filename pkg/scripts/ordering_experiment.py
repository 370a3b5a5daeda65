"""The decisive experiment: 3 loss modes x 3 seeds, loss-ratio + accuracy."""
import json
import sys
import time
from pathlib import Path

import numpy as np

from motiflab.diffusion.training import TrainConfig, train, bundle_from_result, prepare_clips
from motiflab.evalkit.metrics import (ValItem, loss_ratio, generate_for_pair,
                                      classify_motion)
from motiflab.numcore.checkpoint import save_checkpoint
from motiflab.diffusion.training import checkpoint_extra
from motiflab.synthvid import default_scenarios
from motiflab.synthvid.generator import render_start_frame

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
OUT = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("/tmp/ordering")
SEEDS = (0, 1, 2)
MODES = {"baseline": dict(lambda_motif=0.0),
         "motif": dict(lambda_motif=1.0),
         "inv": dict(lambda_motif=1.0, heatmap_mode="inverse")}

OUT.mkdir(parents=True, exist_ok=True)
bundles = {}
for mode, kw in MODES.items():
    for seed in SEEDS:
        cfg = TrainConfig(steps=STEPS, seed=seed, batch_size=2, **kw)
        path = OUT / f"{mode}_s{seed}.npz"
        t0 = time.time()
        res = train(cfg)
        save_checkpoint(path, res.params, cfg.steps, extra=checkpoint_extra(cfg, res.vocab))
        bundles[(mode, seed)] = bundle_from_result(res)
        first = np.mean([m["loss_total"] for m in res.metrics[:50]])
        last = np.mean([m["loss_total"] for m in res.metrics[-50:]])
        print(f"{mode} s{seed}: {time.time()-t0:.0f}s loss {first:.3f}->{last:.4f}",
              flush=True)

# loss-ratio curves on a holdout set
val_cfg = TrainConfig(steps=0, **MODES["motif"])
clips, _ = prepare_clips(val_cfg, seed=31337)
valset = [ValItem(c.z0.astype(np.float64), c.cond.astype(np.float64),
                  c.m_prime.astype(np.float64), c.prompt_index) for c in clips[:16]]
curves = {}
for (mode, seed), b in bundles.items():
    curves[f"{mode}_s{seed}"] = [c["ratio"] for c in
                                 loss_ratio(b.params, b.schedule, valset, seed=1)]
    print(f"{mode} s{seed} ratio: {[round(r, 3) for r in curves[f'{mode}_s{seed}']]}",
          flush=True)
for seed in SEEDS:
    wins = sum(1 for a, b in zip(curves[f"motif_s{seed}"], curves[f"baseline_s{seed}"])
               if a <= b)
    print(f"seed {seed}: motif<=baseline in {wins}/5 buckets", flush=True)

# bench pairs at train resolution
scenarios, _ = default_scenarios()
pairs = []
for sc in scenarios:
    for i, pr in enumerate(sc.prompts):
        if pr.verb not in ("left", "right", "up", "down", "static"):
            continue
        if pr.speed != "fast" and pr.verb != "static":
            continue
        img = render_start_frame(sc, bg_index=0, height=32, width=32)
        pairs.append({"pair_id": f"{sc.scenario_id}-p{i}", "cond_image": img,
                      "verb": pr.verb, "triple": pr.triple})
print(f"bench: {len(pairs)} pairs", flush=True)

for guidance in (1.5, 2.5, 4.0):
    print(f"--- guidance {guidance}", flush=True)
    accs = {}
    for (mode, seed), b in bundles.items():
        ok = 0
        for pair in pairs:
            video = generate_for_pair(b, pair["cond_image"],
                                      b.vocab.index_of(pair["triple"]), 8,
                                      steps=50, guidance=guidance, seed=77)
            ok += classify_motion(video) == pair["verb"]
        accs[(mode, seed)] = ok / len(pairs)
        print(f"  {mode} s{seed}: {ok}/{len(pairs)} = {ok/len(pairs):.3f}", flush=True)
    for mode in MODES:
        med = float(np.median([accs[(mode, s)] for s in SEEDS]))
        print(f"  median {mode}: {med:.3f}", flush=True)
(OUT / "summary.json").write_text(json.dumps({"curves": curves}, indent=2))

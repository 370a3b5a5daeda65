"""Calibration experiment: does MotiF beat the baseline on the toy lab?"""
import sys
import time

import numpy as np

from motiflab.diffusion.training import TrainConfig, train, prepare_clips
from motiflab.evalkit.metrics import ValItem, loss_ratio, generate_for_pair, classify_motion
from motiflab.synthvid import default_scenarios
from motiflab.synthvid.generator import render_start_frame
from motiflab.synthvid.scenarios import TRANSLATION_VERBS

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
SEED = int(sys.argv[2]) if len(sys.argv) > 2 else 0

base_kw = dict(steps=STEPS, seed=SEED, batch_size=2)
runs = {
    "baseline": TrainConfig(lambda_motif=0.0, **base_kw),
    "motif": TrainConfig(lambda_motif=1.0, **base_kw),
    "inv": TrainConfig(lambda_motif=1.0, heatmap_mode="inverse", **base_kw),
}
results = {}
for name, cfg in runs.items():
    t0 = time.time()
    results[name] = train(cfg, progress=False)
    m = results[name].metrics
    f = np.mean([x["loss_total"] for x in m[:50]])
    l = np.mean([x["loss_total"] for x in m[-50:]])
    print(f"{name}: {time.time()-t0:.0f}s loss {f:.3f}->{l:.4f} (x{l/f:.3f})", flush=True)

# hold-out valset (different seed stream than training data)
val_cfg = runs["motif"]
clips, vocab = prepare_clips(val_cfg, seed=SEED + 9999)
valset = [ValItem(c.z0.astype(np.float64), c.cond.astype(np.float64),
                  c.m_prime.astype(np.float64), c.prompt_index) for c in clips[:16]]

curves = {}
for name in ("baseline", "motif"):
    r = results[name]
    t0 = time.time()
    curves[name] = loss_ratio(r.params, r.schedule, valset, buckets=5, seed=1)
    print(name, "loss-ratio", [round(c["ratio"], 3) for c in curves[name]],
          f"({time.time()-t0:.0f}s)", flush=True)
wins = sum(1 for a, b in zip(curves["motif"], curves["baseline"])
           if a["ratio"] <= b["ratio"])
print("motif <= baseline in", wins, "of 5 buckets", flush=True)

# tiny bench: single-sprite scenarios, supported verbs, at train resolution
scenarios, _ = default_scenarios()
pairs = []
for sc in scenarios[:8]:
    for i, pr in enumerate(sc.prompts):
        if pr.verb not in TRANSLATION_VERBS + ("static",):
            continue
        img = render_start_frame(sc, bg_index=0, height=32, width=32)
        pairs.append({"pair_id": f"{sc.scenario_id}-p{i}", "cond_image": img,
                      "verb": pr.verb, "triple": pr.triple})

for name, r in results.items():
    t0 = time.time()
    ok = 0
    for pair in pairs:
        video = generate_for_pair(r.params, r.schedule, pair["cond_image"],
                                  r.vocab.index_of(pair["triple"]), 2, 8,
                                  steps=50, guidance=7.5, seed=123)
        got = classify_motion(video)
        ok += got == pair["verb"]
    print(f"{name}: prompt acc {ok}/{len(pairs)} = {ok/len(pairs):.3f} "
          f"({time.time()-t0:.0f}s)", flush=True)

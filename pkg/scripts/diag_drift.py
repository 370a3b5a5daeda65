"""Analyze generation structure: drift vs flicker, guidance, per-verb accuracy."""
import sys
import time
from pathlib import Path

import numpy as np

from motiflab.diffusion.training import (TrainConfig, train, bundle_from_result,
                                         checkpoint_extra, load_model_bundle)
from motiflab.numcore.checkpoint import save_checkpoint
from motiflab.evalkit.metrics import classify_motion, generate_for_pair, _presmooth
from motiflab.motionmap import estimate_flow_video, flow_intensity
from motiflab.synthvid import default_scenarios
from motiflab.synthvid.generator import render_start_frame

CKPT = Path("/tmp/probe_motif.npz")
STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 3000

if CKPT.exists() and len(sys.argv) > 2 and sys.argv[2] == "reuse":
    bundle = load_model_bundle(CKPT)
    print("reusing", CKPT, flush=True)
else:
    cfg = TrainConfig(lambda_motif=1.0, steps=STEPS, seed=0, batch_size=4, lr=2e-3)
    t0 = time.time()
    res = train(cfg)
    print(f"trained {STEPS} steps bs4 in {time.time()-t0:.0f}s "
          f"({(time.time()-t0)/STEPS*1000:.0f} ms/step)", flush=True)
    save_checkpoint(CKPT, res.params, cfg.steps, extra=checkpoint_extra(cfg, res.vocab))
    bundle = bundle_from_result(res)

scenarios, _ = default_scenarios()
sc = scenarios[0]
img = render_start_frame(sc, 0, 32, 32)

# structure probe: per-pair mean flow vector of one generation
for g in (1.5, 2.5):
    pr = [p for p in sc.prompts if p.verb == "right"][0]
    video = generate_for_pair(bundle, img, bundle.vocab.index_of(pr.triple), 8,
                              steps=50, guidance=g, seed=7)
    ff = estimate_flow_video(video)
    vecs = ff.uv.reshape(7, -1, 2).mean(axis=1)
    sm = _presmooth(video)
    ffs = estimate_flow_video(sm)
    vecs_s = ffs.uv.reshape(7, -1, 2).mean(axis=1)
    flick = [float(np.abs(video[l + 1] - video[l]).mean()) for l in range(7)]
    print(f"g={g} verb=right: mean-flow/pair raw {np.round(vecs, 2).tolist()}",
          flush=True)
    print(f"   smoothed {np.round(vecs_s, 2).tolist()} flicker {np.round(flick, 3).tolist()}",
          flush=True)

# per-verb accuracy on a 20-pair bench, guidance sweep
pairs = []
for sc in scenarios:
    for i, pr in enumerate(sc.prompts):
        if pr.verb in ("left", "right", "up", "down") and pr.speed == "fast":
            pairs.append((sc, pr))
        elif pr.verb == "static":
            pairs.append((sc, pr))
pairs = pairs[:24]
print(f"{len(pairs)} pairs", flush=True)
for g in (1.0, 1.5, 2.5, 4.0):
    hits = {}
    for sc, pr in pairs:
        img = render_start_frame(sc, 0, 32, 32)
        video = generate_for_pair(bundle, img, bundle.vocab.index_of(pr.triple), 8,
                                  steps=50, guidance=g, seed=7)
        got = classify_motion(video)
        hits.setdefault(pr.verb, []).append(got)
    total = sum(len(v) for v in hits.values())
    ok = sum(sum(1 for x in v if x == k) for k, v in hits.items())
    print(f"g={g}: acc {ok}/{total}  " +
          "  ".join(f"{k}:{[x for x in v]}" for k, v in sorted(hits.items())), flush=True)

"""Sweep training knobs; report still-feature adherence and generation quality."""
import itertools
import sys
import time

import numpy as np

from motiflab.diffusion.training import TrainConfig, train, bundle_from_result, prepare_clips
from motiflab.diffusion.schedule import q_sample, v_target
from motiflab.numcore.network import forward_batch, still_video_v
from motiflab.evalkit.metrics import (classify_motion, first_frame_fidelity,
                                      dynamic_degree, generate_for_pair)
from motiflab.synthvid import default_scenarios
from motiflab.synthvid.generator import render_start_frame
from motiflab.synthvid.scenarios import TRANSLATION_VERBS

scenarios, _ = default_scenarios()

def quick_eval(res, label):
    bundle = bundle_from_result(res)
    # still-feature adherence on val data
    clips, _ = prepare_clips(res.config, seed=777)
    rng = np.random.default_rng(3)
    rows = []
    for t in (300, 700, 950):
        es, el, ev = [], [], []
        for pc in clips[:6]:
            z0 = pc.z0.astype(np.float64)
            eps = rng.standard_normal(z0.shape)
            z_t = q_sample(res.schedule, z0, t, eps)
            v = v_target(res.schedule, z0, eps, t)
            pred = forward_batch(res.params, z_t[None].astype(np.float32), pc.cond[None],
                                 np.array([t - 1]), np.array([pc.prompt_index]))[0]
            vl = still_video_v(res.params.config, z_t[None], pc.cond[None],
                               np.array([t - 1]))[0]
            es.append(np.mean((pred - v) ** 2))
            el.append(np.mean((vl - v) ** 2))
            ev.append(np.mean(v ** 2))
        rows.append(f"t={t}: net {np.mean(es)/np.mean(ev):.3f} leak {np.mean(el)/np.mean(ev):.3f}")
    # small bench eval
    ok = tot = 0
    fids, dyns = [], []
    for sc in scenarios[:6]:
        for pr in sc.prompts:
            if pr.verb not in ("left", "right", "up", "down", "static"):
                continue
            img = render_start_frame(sc, 0, 32, 32)
            video = generate_for_pair(bundle, img, res.vocab.index_of(pr.triple), 8,
                                      steps=50, guidance=2.0, seed=9)
            got = classify_motion(video)
            tot += 1; ok += got == pr.verb
            fids.append(first_frame_fidelity(video, img)[0])
            dyns.append(dynamic_degree(video))
    print(f"{label}: vMSE/E[v2] [{' | '.join(rows)}] acc={ok}/{tot} "
          f"fid0={np.mean(fids):.4f} dyn={np.mean(dyns):.4f}", flush=True)

for steps, lr, width, bs in [(4000, 1e-3, 32, 2), (2000, 2e-3, 48, 2),
                             (4000, 2e-3, 48, 2), (4000, 2e-3, 32, 4)]:
    cfg = TrainConfig(lambda_motif=1.0, steps=steps, seed=0, batch_size=bs,
                      lr=lr, model_width=width)
    t0 = time.time()
    res = train(cfg)
    quick_eval(res, f"steps={steps} lr={lr} w={width} bs={bs} ({time.time()-t0:.0f}s, "
                    f"final={np.mean([m['loss_total'] for m in res.metrics[-50:]]):.4f})")

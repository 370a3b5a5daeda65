"""Diagnose generation quality: fidelity, motion, guidance sweep."""
import sys
import time

import numpy as np

from motiflab.diffusion.training import TrainConfig, train, bundle_from_result
from motiflab.diffusion.schedule import DiffusionSchedule
from motiflab.diffusion.sampler import ddim_sample_latent
from motiflab.evalkit.metrics import (classify_motion, first_frame_fidelity,
                                      dynamic_degree, generate_for_pair)
from motiflab.motionmap import estimate_flow_video, flow_intensity
from motiflab.synthvid import default_scenarios, gen_clip
from motiflab.synthvid.generator import render_start_frame

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 2000

# sampler sanity: exact analytic denoiser must reconstruct its target
sched = DiffusionSchedule(1000)
rng = np.random.default_rng(0)
z_star = rng.standard_normal((4, 8, 8, 6))

def exact_predict(z_t, t, g):
    a, b = sched._coeffs(t)
    eps = (z_t - a * z_star) / b
    return a * eps - b * z_star

for steps in (50, 1000):
    out = ddim_sample_latent(exact_predict, z_star.shape, sched, steps=steps,
                             guidance=1.0, seed=3)
    print(f"analytic-denoiser DDIM steps={steps}: max|out - target| = "
          f"{np.abs(out - z_star).max():.2e}", flush=True)

cfg = TrainConfig(lambda_motif=1.0, steps=STEPS, seed=0, batch_size=2)
t0 = time.time()
res = train(cfg)
bundle = bundle_from_result(res)
print(f"trained {STEPS} steps in {time.time()-t0:.0f}s "
      f"final50={np.mean([m['loss_total'] for m in res.metrics[-50:]]):.4f}", flush=True)

scenarios, vocab = default_scenarios()
sc = scenarios[0]
pr = [p for p in sc.prompts if p.verb == "right"][0]
img = render_start_frame(sc, 0, 32, 32)
pidx = res.vocab.index_of(pr.triple)

for g in (0.0, 1.0, 2.0, 4.0, 7.5):
    video = generate_for_pair(bundle, img, pidx, 8, steps=50, guidance=g, seed=5)
    mse, _ = first_frame_fidelity(video, img)
    dd = dynamic_degree(video)
    got = classify_motion(video)
    ff = estimate_flow_video(video)
    ii = flow_intensity(ff)
    mu = ff.uv[ii >= np.quantile(ii, .9)].mean(axis=0)
    per_frame = [float(np.mean((video[l] - img) ** 2)) for l in range(8)]
    print(f"g={g:4}: fid0={mse:.5f} dyn={dd:.5f} cls={got:10s} "
          f"mu=({mu[0]:+.2f},{mu[1]:+.2f}) frameMSE={[round(x,4) for x in per_frame]}",
          flush=True)

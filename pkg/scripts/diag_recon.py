"""Where does v-prediction fail: one-shot z0-hat error per timestep."""
import sys
import time

import numpy as np

from motiflab.diffusion.training import TrainConfig, train, prepare_clips
from motiflab.diffusion.schedule import q_sample, v_target, z0_from_v
from motiflab.numcore.network import forward_batch

STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
LR = float(sys.argv[2]) if len(sys.argv) > 2 else 1e-3
WIDTH = int(sys.argv[3]) if len(sys.argv) > 3 else 32

cfg = TrainConfig(lambda_motif=1.0, steps=STEPS, seed=0, batch_size=2,
                  lr=LR, model_width=WIDTH)
t0 = time.time()
res = train(cfg)
print(f"{STEPS} steps lr={LR} width={WIDTH}: {time.time()-t0:.0f}s "
      f"final50={np.mean([m['loss_total'] for m in res.metrics[-50:]]):.4f}", flush=True)

clips, _ = prepare_clips(cfg, seed=4242)
rng = np.random.default_rng(7)
for t in (1, 10, 50, 150, 300, 500, 700, 900, 1000):
    verrs, vsigs, zerrs, zsigs = [], [], [], []
    for pc in clips[:8]:
        z0 = pc.z0.astype(np.float64)
        eps = rng.standard_normal(z0.shape)
        z_t = q_sample(res.schedule, z0, t, eps)
        v = v_target(res.schedule, z0, eps, t)
        pred = forward_batch(res.params, z_t[None].astype(np.float32),
                             pc.cond[None], np.array([t - 1]),
                             np.array([pc.prompt_index]))[0]
        z0_hat = z0_from_v(res.schedule, z_t, pred.astype(np.float64), t)
        verrs.append(np.mean((pred - v) ** 2)); vsigs.append(np.mean(v ** 2))
        zerrs.append(np.mean((z0_hat - z0) ** 2)); zsigs.append(np.mean((z0 - z0.mean()) ** 2))
    print(f"t={t:4d}: v-MSE/E[v^2] = {np.mean(verrs)/np.mean(vsigs):.3f}   "
          f"z0hat-MSE = {np.mean(zerrs):.4f} (z0 var {np.mean(zsigs):.4f})", flush=True)

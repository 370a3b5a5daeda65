"""Tune classification settings on the saved probe checkpoint + oracle clips."""
import numpy as np

from motiflab.diffusion.training import load_model_bundle
from motiflab.evalkit.metrics import generate_for_pair
from motiflab.motionmap import estimate_flow_video, flow_intensity
from motiflab.synthvid import default_scenarios, gen_clip
from motiflab.synthvid.generator import render_start_frame
from motiflab.synthvid.scenarios import DIRECTIONS, TRANSLATION_VERBS

bundle = load_model_bundle("/tmp/probe_motif.npz")
scenarios, _ = default_scenarios()


def smooth(video, temporal=True, spatial=0):
    v = np.asarray(video)
    if temporal:
        pad = np.concatenate([v[:1], v, v[-1:]], axis=0)
        v = (pad[:-2] + pad[1:-1] + pad[2:]) / 3.0
    for _ in range(spatial):
        p = np.pad(v, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="edge")
        v = (p[:, :-2, 1:-1] + p[:, 2:, 1:-1] + p[:, 1:-1, :-2]
             + p[:, 1:-1, 2:] + p[:, 1:-1, 1:-1]) / 5.0
    return v


def classify(video, thr, temporal=True, spatial=0, q=0.9):
    v = smooth(video, temporal, spatial)
    ff = estimate_flow_video(v)
    inten = flow_intensity(ff)
    ext = max(v.shape[1], v.shape[2])
    region = inten >= np.quantile(inten, q)
    w = inten[region]
    if w.sum() <= 0:
        return "static"
    mu = (ff.uv[region] * w[:, None]).sum(axis=0) / w.sum() / ext
    mag = np.hypot(*mu)
    if mag < thr:
        return "static"
    return max(DIRECTIONS, key=lambda vb: mu[0] * DIRECTIONS[vb][0]
               + mu[1] * DIRECTIONS[vb][1])


# cache generations once (guidance 1.5)
pairs = []
for sc in scenarios:
    for i, pr in enumerate(sc.prompts):
        if (pr.verb in ("left", "right", "up", "down") and pr.speed == "fast") \
                or pr.verb == "static":
            pairs.append((sc, pr))
pairs = pairs[:24]
videos = []
for sc, pr in pairs:
    img = render_start_frame(sc, 0, 32, 32)
    videos.append(generate_for_pair(bundle, img, bundle.vocab.index_of(pr.triple),
                                    8, steps=50, guidance=1.5, seed=7))
print("generated", len(videos), flush=True)

for thr in (0.003, 0.006, 0.01):
    for spatial in (0, 1, 2):
        for q in (0.9, 0.95):
            ok = sum(classify(v, thr, True, spatial, q) == pr.verb
                     for v, (sc, pr) in zip(videos, pairs))
            print(f"thr={thr} spatial={spatial} q={q}: {ok}/24", flush=True)

# oracle-clip sanity with the winning-ish settings must stay >= 0.98 at 64px
for thr, spatial, q in ((0.006, 1, 0.9), (0.006, 2, 0.9), (0.01, 1, 0.9)):
    ok = tot = 0
    for sc in scenarios:
        for pr in sc.prompts:
            if pr.verb not in TRANSLATION_VERBS + ("static",):
                continue
            clip = gen_clip(sc, pr, seed=11, frames=8, height=64, width=64)
            tot += 1
            ok += classify(clip.video, thr, True, spatial, q) == pr.verb
    print(f"oracle64 thr={thr} spatial={spatial} q={q}: {ok}/{tot}", flush=True)

"""Flow estimation and the motion-heatmap pipeline."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import binary_erosion

from motiflab.errors import ContractError
from motiflab.motionmap import (
    FlowField,
    binarize,
    downsample_heatmap,
    estimate_flow,
    estimate_flow_video,
    flow_intensity,
    heatmap_for_video,
    motion_stats,
    normalize_intensity,
)
from motiflab.synthvid import default_scenarios, gen_clip
from motiflab.synthvid.generator import render_background
from motiflab.synthvid.scenarios import _palette

from test_synthvid import make_single_scenario


class TestEstimateFlow:
    def test_identical_frames_zero_flow(self):
        bg = render_background(_palette(0), 48, 48)
        assert np.all(estimate_flow(bg, bg) == 0.0)

    def test_iters_zero_returns_zero_field(self):
        bg = render_background(_palette(1), 32, 32)
        shifted = render_background(_palette(1), 32, 32, offset=(3.0, 0.0))
        assert np.all(estimate_flow(bg, shifted, iters=0) == 0.0)

    def test_unit_shift_recovered(self):
        style = _palette(2)
        a = render_background(style, 64, 64)
        b = render_background(style, 64, 64, offset=(1.0, 0.0))
        fl = estimate_flow(a, b)
        interior = fl[8:-8, 8:-8]
        assert 0.8 <= interior[..., 0].mean() <= 1.2
        assert np.abs(interior[..., 1]).mean() < 0.2

    def test_sprite_intensity_close_to_oracle_in_mask_interior(self):
        # slow cardinal motions: the variational estimator recovers the
        # magnitude within half a pixel inside the sprite (pooled over clips)
        scenarios, _ = default_scenarios()
        abs_err = []
        for sc in scenarios[:6]:
            prompts = [p for p in sc.prompts
                       if p.verb in ("left", "right", "up", "down")]
            if not prompts:
                continue
            clip = gen_clip(sc, prompts[0], seed=2, frames=6, height=64,
                            width=64, speed_px=1.5)
            est = flow_intensity(estimate_flow_video(clip.video))
            orc = flow_intensity(clip.flow)
            core = np.stack([binary_erosion(f, iterations=2)
                             for f in clip.mask[:-1]])
            if core.any():
                abs_err.append(np.abs(est[core] - orc[core]))
        assert len(abs_err) >= 3
        assert float(np.concatenate(abs_err).mean()) < 0.5

    def test_mismatched_frames_rejected(self):
        with pytest.raises(ContractError):
            estimate_flow(np.zeros((8, 8)), np.zeros((8, 9)))


class TestFlowIntensity:
    def test_three_four_five(self):
        uv = np.zeros((1, 2, 2, 2))
        uv[..., 0] = 3.0
        uv[..., 1] = 4.0
        assert np.allclose(flow_intensity(FlowField(uv, "oracle")), 5.0)

    def test_zero_field(self):
        assert np.all(flow_intensity(np.zeros((2, 4, 4, 2))) == 0.0)

    def test_oracle_translation_intensity(self):
        sc = make_single_scenario()
        clip = gen_clip(sc, sc.prompts[0], seed=1, frames=4, height=64,
                        width=64, speed_px=2.0)
        inten = flow_intensity(clip.flow)
        assert np.allclose(inten[clip.mask[:-1]], 2.0)


class TestNormalizeIntensity:
    def test_fixed_point_at_threshold(self):
        assert normalize_intensity(0.05) == pytest.approx(0.5, abs=1e-12)

    def test_published_values(self):
        assert normalize_intensity(0.0) == pytest.approx(0.006692850924, abs=1e-6)
        assert normalize_intensity(0.15) == pytest.approx(0.9999546021, abs=1e-6)

    @given(st.floats(0.0, 0.15), st.floats(0.0, 0.15))
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing(self, x, y):
        # strict monotonicity holds wherever the sigmoid has spare float
        # resolution; far in the tails it saturates to exactly 0.0/1.0
        if abs(x - y) < 1e-9:
            return
        lo, hi = sorted((x, y))
        assert normalize_intensity(lo) < normalize_intensity(hi)

    @given(st.floats(-1.0, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_range_open_unit_interval(self, x):
        v = float(normalize_intensity(x))
        assert 0.0 <= v <= 1.0


class TestHeatmap:
    def test_static_video_near_zero(self):
        bg = render_background(_palette(3), 32, 32)
        video = np.repeat(bg[None], 5, axis=0)
        hm = heatmap_for_video(video)
        assert hm.m.max() <= 0.01

    def test_fast_flow_saturates(self):
        # normalized intensity >= 0.15 maps to >= 0.999
        uv = np.zeros((3, 16, 16, 2))
        uv[:, 4:12, 4:12, 0] = 0.15 * 16
        hm = heatmap_for_video(FlowField(uv, "oracle"))
        assert hm.m[:, 4:12, 4:12].min() >= 0.999

    def test_shape_and_last_frame_duplicated(self):
        sc = make_single_scenario()
        clip = gen_clip(sc, sc.prompts[0], seed=3, frames=5, height=32, width=32)
        hm = heatmap_for_video(clip.flow)
        assert hm.m.shape == (5, 32, 32)
        assert np.array_equal(hm.m[-1], hm.m[-2])

    def test_single_frame_rejected(self):
        with pytest.raises(ContractError):
            heatmap_for_video(np.zeros((1, 8, 8, 3)))

    def test_range_invariant(self):
        sc = make_single_scenario()
        clip = gen_clip(sc, sc.prompts[0], seed=4, frames=4, height=32, width=32)
        hm = heatmap_for_video(clip.video)
        assert hm.m.min() >= 0.0 and hm.m.max() <= 1.0


class TestDownsample:
    def test_constant_preserved(self):
        m = np.full((2, 8, 8), 0.7)
        assert np.allclose(downsample_heatmap(m, 2), 0.7)

    def test_block_mean(self):
        m = np.zeros((1, 2, 2))
        m[0, 1, :] = 1.0
        assert downsample_heatmap(m, 2)[0, 0, 0] == pytest.approx(0.5, abs=0.0)

    def test_mean_preserving(self):
        rng = np.random.default_rng(5)
        m = rng.random((3, 16, 16))
        for p in (2, 4):
            d = downsample_heatmap(m, p)
            for l in range(3):
                assert d[l].mean() == pytest.approx(m[l].mean(), abs=1e-12)
            assert d.min() >= 0.0 and d.max() <= 1.0

    def test_non_divisible_rejected(self):
        with pytest.raises(ContractError):
            downsample_heatmap(np.zeros((1, 9, 8)), 2)


class TestBinarize:
    def test_threshold_zero_all_ones(self):
        m = np.random.default_rng(6).random((2, 4, 4))
        assert binarize(m, 0.0).all()

    def test_threshold_above_one_all_zeros(self):
        m = np.random.default_rng(7).random((2, 4, 4))
        assert not binarize(m, 1.0001).any()

    def test_iou_against_oracle_mask(self):
        # 2 px/frame sprite at 32x32 sits above the polarization threshold
        scenarios, _ = default_scenarios()
        ious = []
        for sc in scenarios[:8]:
            prompts = [p for p in sc.prompts
                       if p.verb in ("left", "right", "up", "down")]
            if not prompts:
                continue
            clip = gen_clip(sc, prompts[0], seed=3, frames=8, height=32,
                            width=32, speed_px=2.0)
            mask = binarize(heatmap_for_video(clip.flow).m, 0.5)
            inter = (mask & clip.mask).sum()
            union = (mask | clip.mask).sum()
            ious.append(inter / union)
        assert len(ious) >= 4
        assert min(ious) >= 0.7

    def test_out_of_range_rejected(self):
        with pytest.raises(ContractError):
            binarize(np.array([[-0.1]]), 0.5)


class TestMotionStats:
    def test_static_video(self):
        bg = render_background(_palette(4), 32, 32)
        video = np.repeat(bg[None], 4, axis=0)
        static, moving, mean_int = motion_stats(video)
        assert static == 1.0
        assert moving == 0.0
        assert mean_int < 1e-6

    def test_fractions_sum_to_one(self):
        sc = make_single_scenario()
        clip = gen_clip(sc, sc.prompts[0], seed=8, frames=4, height=32, width=32)
        static, moving, _ = motion_stats(clip.video)
        assert static + moving == pytest.approx(1.0, abs=1e-12)

    def test_sprite_moving_fraction(self):
        # 10x10 sprite in 64x64, fast enough to polarize: ~2.4-3.5% moving
        sc = make_single_scenario(half_frac=5 / 64, start=(0.4, 0.5))
        clip = gen_clip(sc, sc.prompts[0], seed=9, frames=5, height=64,
                        width=64, speed_px=5.2)
        _, moving, _ = motion_stats(clip.flow)
        assert 0.02 <= moving <= 0.036


class TestOracleAgreement:
    def test_estimated_vs_oracle_heatmaps_close(self):
        scenarios, _ = default_scenarios()
        mads = []
        idx = 0
        for sc in scenarios:
            for pr in sc.prompts:
                idx += 1
                if idx % 5:
                    continue
                clip = gen_clip(sc, pr, seed=5, frames=6, height=64, width=64)
                est = heatmap_for_video(clip.video)
                orc = heatmap_for_video(clip.flow)
                mads.append(float(np.abs(est.m - orc.m).mean()))
        assert len(mads) >= 10
        assert float(np.mean(mads)) < 0.1

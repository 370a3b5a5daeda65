"""Schedule, latent codec, losses, conditioning, sampler, training loop."""

import numpy as np
import pytest

from motiflab.diffusion import (
    DiffusionSchedule,
    LossSpec,
    decode,
    diffusion_loss,
    encode,
    eps_from_v,
    make_condition,
    motif_loss,
    pool_global_feature,
    q_sample,
    total_loss,
    v_target,
    z0_from_v,
)
from motiflab.diffusion.sampler import ddim_sample_latent, make_guided_predictor
from motiflab.diffusion.training import TrainConfig, train
from motiflab.errors import ContractError
from motiflab.numcore import DenoiserConfig, forward_batch, init_params


@pytest.fixture(scope="module")
def schedule():
    return DiffusionSchedule(1000)


class TestSchedule:
    def test_default_invariants(self, schedule):
        ab = schedule.alpha_bar
        assert np.all(np.diff(ab) < 0)
        assert ab[0] > 0.999
        assert ab[-1] < 0.01
        assert 0 < schedule.beta.min() and schedule.beta.max() < 1
        assert np.all((ab > 0) & (ab < 1))

    def test_snr_strictly_decreasing(self, schedule):
        snr = schedule.alpha_bar / (1.0 - schedule.alpha_bar)
        assert np.all(np.diff(snr) < 0)

    def test_q_sample_near_identity_at_t1(self, schedule):
        assert schedule.sqrt_ab[0] > 0.9999
        rng = np.random.default_rng(0)
        z0 = rng.standard_normal((2, 4, 4, 3))
        eps = np.zeros_like(z0)
        assert np.allclose(q_sample(schedule, z0, 1, eps),
                           schedule.sqrt_ab[0] * z0)

    def test_q_sample_near_noise_at_T(self, schedule):
        rng = np.random.default_rng(1)
        z0 = rng.standard_normal((2, 8, 8, 3))
        eps = rng.standard_normal(z0.shape)
        z_t = q_sample(schedule, z0, schedule.timesteps, eps)
        assert np.linalg.norm(z_t - eps) / np.linalg.norm(eps) < 0.1

    def test_t_out_of_range(self, schedule):
        z = np.zeros((1, 2, 2, 1))
        with pytest.raises(ContractError):
            q_sample(schedule, z, 0, z)
        with pytest.raises(ContractError):
            q_sample(schedule, z, schedule.timesteps + 1, z)

    def test_v_target_limits(self, schedule):
        rng = np.random.default_rng(2)
        z0 = rng.standard_normal((2, 4, 4, 3))
        eps = rng.standard_normal(z0.shape)
        t = 123
        assert np.allclose(v_target(schedule, np.zeros_like(z0), eps, t),
                           schedule.sqrt_ab[t - 1] * eps)
        assert np.allclose(v_target(schedule, z0, np.zeros_like(eps), t),
                           -schedule.sqrt_1mab[t - 1] * z0)

    @pytest.mark.parametrize("t", [1, 7, 250, 500, 999, 1000])
    def test_v_round_trip_identity(self, schedule, t):
        rng = np.random.default_rng(t)
        z0 = rng.standard_normal((2, 4, 4, 3))
        eps = rng.standard_normal(z0.shape)
        z_t = q_sample(schedule, z0, t, eps)
        v = v_target(schedule, z0, eps, t)
        assert np.abs(z0_from_v(schedule, z_t, v, t) - z0).max() < 1e-10
        assert np.abs(eps_from_v(schedule, z_t, v, t) - eps).max() < 1e-10


class TestLatentCodec:
    def test_p1_identity(self):
        x = np.random.default_rng(3).random((2, 4, 6, 3))
        assert np.array_equal(encode(x, 1), x.reshape(2, 4, 6, 3))
        assert np.array_equal(decode(encode(x, 1), 1), x)

    def test_shape_arithmetic(self):
        x = np.zeros((1, 16, 16, 3))
        assert encode(x, 2).shape == (1, 8, 8, 12)

    @pytest.mark.parametrize("p", [1, 2, 4])
    def test_round_trip_bit_exact(self, p):
        x = np.random.default_rng(p).random((3, 16, 8, 3))
        assert np.array_equal(decode(encode(x, p), p), x)

    def test_non_divisible_rejected(self):
        with pytest.raises(ContractError):
            encode(np.zeros((1, 15, 16, 3)), 2)


class TestLosses:
    def test_zero_when_equal(self):
        x = np.random.default_rng(4).random((2, 4, 4, 3))
        assert diffusion_loss(x, x) == 0.0

    def test_unit_residual(self):
        a = np.zeros((2, 4, 4, 3))
        assert diffusion_loss(a + 1.0, a) == pytest.approx(1.0, abs=0.0)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(5)
        pred = rng.standard_normal((2, 3, 3, 2))
        target = rng.standard_normal(pred.shape)
        m = rng.random(pred.shape[:-1])
        brute_diff = 0.0
        brute_motif = 0.0
        n = 0
        for idx in np.ndindex(pred.shape):
            r = pred[idx] - target[idx]
            brute_diff += r * r
            w = m[idx[:-1]]
            brute_motif += (w * r) ** 2
            n += 1
        assert diffusion_loss(pred, target) == pytest.approx(brute_diff / n, rel=1e-12)
        assert motif_loss(pred, target, m) == pytest.approx(brute_motif / n, rel=1e-12)

    def test_motif_identities(self):
        rng = np.random.default_rng(6)
        pred = rng.standard_normal((2, 4, 4, 3))
        target = rng.standard_normal(pred.shape)
        zeros = np.zeros(pred.shape[:-1])
        ones = np.ones(pred.shape[:-1])
        halves = np.full(pred.shape[:-1], 0.5)
        base = diffusion_loss(pred, target)
        assert motif_loss(pred, target, zeros) == 0.0
        assert motif_loss(pred, target, ones) == pytest.approx(base, rel=1e-15)
        assert motif_loss(pred, target, halves) == pytest.approx(0.25 * base, rel=1e-12)

    def test_motif_inverse_and_linear_modes(self):
        rng = np.random.default_rng(7)
        pred = rng.standard_normal((2, 4, 4, 3))
        target = rng.standard_normal(pred.shape)
        m = rng.random(pred.shape[:-1])
        assert motif_loss(pred, target, m, mode="inverse") == pytest.approx(
            motif_loss(pred, target, 1.0 - m), rel=1e-12)
        assert motif_loss(pred, target, m, mode="none") == 0.0
        # linear weighting applies m once on the squared residual
        lin = motif_loss(pred, target, m, square_weight=False)
        sq = motif_loss(pred, target, np.sqrt(m))
        assert lin == pytest.approx(sq, rel=1e-12)

    def test_motif_bounded_by_diffusion(self):
        rng = np.random.default_rng(8)
        pred = rng.standard_normal((2, 4, 4, 3))
        target = rng.standard_normal(pred.shape)
        m = rng.random(pred.shape[:-1])
        assert 0.0 <= motif_loss(pred, target, m) <= diffusion_loss(pred, target)

    def test_total_loss(self):
        rng = np.random.default_rng(9)
        pred = rng.standard_normal((2, 4, 4, 3))
        target = rng.standard_normal(pred.shape)
        m = np.ones(pred.shape[:-1])
        base = diffusion_loss(pred, target)
        assert total_loss(pred, target, m, 0.0) == pytest.approx(base, abs=0.0)
        assert total_loss(pred, target, m, 2.0) == pytest.approx(3.0 * base, rel=1e-12)
        assert LossSpec().lambda_motif == 1.0  # published default

    def test_heatmap_out_of_range_rejected(self):
        pred = np.zeros((1, 2, 2, 1))
        bad = np.full((1, 2, 2), 1.5)
        with pytest.raises(ContractError):
            motif_loss(pred, pred, bad)

    def test_negative_lambda_rejected(self):
        with pytest.raises(ContractError):
            LossSpec(lambda_motif=-1.0)


class TestConditioning:
    def test_replication_and_no_drop(self):
        rng = np.random.default_rng(10)
        frame = rng.random((8, 8, 3))
        cond, idx = make_condition(frame, p=2, n_frames=5, prompt_index=3,
                                   null_index=9, rng=None)
        assert cond.shape == (5, 4, 4, 12)
        for l in range(5):
            assert np.array_equal(cond[l], cond[0])
        assert idx == 3

    def test_drop_rate_monte_carlo(self):
        rng = np.random.default_rng(11)
        frame = np.zeros((4, 4, 3))
        n = 100_000
        drops = 0
        for _ in range(n):
            _, idx = make_condition(frame, 1, 1, 0, 99, rng=rng, drop_prob=0.1)
            drops += idx == 99
        assert 0.095 <= drops / n <= 0.105

    def test_global_feature_of_constant_image(self):
        frame = np.full((4, 4, 3), 0.625)
        cond, _ = make_condition(frame, 1, 2, 0, 1, rng=None)
        feat = pool_global_feature(cond)
        assert np.allclose(feat, 0.625)


class TestSampler:
    def test_analytic_denoiser_reconstructs_target(self):
        sched = DiffusionSchedule(200)
        rng = np.random.default_rng(12)
        z_star = rng.standard_normal((2, 4, 4, 3))

        def exact(z_t, t, g):
            a, b = sched._coeffs(t)
            eps = (z_t - a * z_star) / b
            return a * eps - b * z_star

        out = ddim_sample_latent(exact, z_star.shape, sched,
                                 steps=sched.timesteps, guidance=1.0, seed=0)
        assert np.abs(out - z_star).max() < 1e-3

    def test_same_seed_same_output(self):
        sched = DiffusionSchedule(100)
        cfg = DenoiserConfig(channels=3, width=4, time_dim=4, frame_dim=2,
                             prompt_dim=4, vocab_size=3, timesteps=100)
        params = init_params(cfg, seed=0)
        cond = np.random.default_rng(13).standard_normal((2, 4, 4, 3)).astype(np.float32)
        pred = make_guided_predictor(params, cond, 1)
        a = ddim_sample_latent(pred, cond.shape, sched, steps=10, guidance=7.5, seed=5)
        b = ddim_sample_latent(pred, cond.shape, sched, steps=10, guidance=7.5, seed=5)
        assert np.array_equal(a, b)

    def test_cfg_identities(self):
        cfg = DenoiserConfig(channels=2, width=4, time_dim=4, frame_dim=2,
                             prompt_dim=4, vocab_size=3, timesteps=50)
        params = init_params(cfg, seed=1)
        rng = np.random.default_rng(14)
        cond = rng.standard_normal((2, 4, 4, 2)).astype(np.float32)
        z = rng.standard_normal((2, 4, 4, 2)).astype(np.float32)
        predict = make_guided_predictor(params, cond, prompt_index=2)
        t = 17
        cond_only = forward_batch(params, z[None], cond[None],
                                  np.array([t - 1]), np.array([2]))[0]
        null_only = forward_batch(params, z[None], cond[None],
                                  np.array([t - 1]),
                                  np.array([cfg.vocab_size]))[0]
        assert np.allclose(predict(z, t, 1.0), cond_only, atol=1e-6)
        assert np.allclose(predict(z, t, 0.0), null_only, atol=1e-6)

    def test_bad_steps_and_guidance(self):
        sched = DiffusionSchedule(50)
        with pytest.raises(ContractError):
            ddim_sample_latent(lambda *a: None, (1, 2, 2, 1), sched, steps=0)
        with pytest.raises(ContractError):
            ddim_sample_latent(lambda *a: None, (1, 2, 2, 1), sched, steps=10,
                               guidance=-1.0)


def small_train_config(**kw):
    base = dict(frames=4, height=16, width=16, pool=2, n_clips=6,
                verbs=("right", "static"), speeds=("fast",), model_width=8,
                time_dim=4, frame_dim=2, prompt_dim=4, steps=8, batch_size=2,
                seed=3, timesteps=50)
    base.update(kw)
    return TrainConfig(**base)


class TestTrainLoop:
    def test_zero_steps_checkpoint_equals_init(self):
        cfg = small_train_config(steps=0)
        result = train(cfg)
        fresh = init_params(result.params.config, seed=cfg.seed, dtype=np.float32)
        for k in fresh.groups:
            assert np.array_equal(result.params.groups[k], fresh.groups[k])

    def test_same_seed_identical_metrics(self):
        cfg = small_train_config()
        m1 = train(cfg).metrics
        m2 = train(cfg).metrics
        assert m1 == m2

    def test_training_writes_outputs(self, tmp_path):
        cfg = small_train_config()
        result = train(cfg, out_dir=tmp_path / "run")
        assert (tmp_path / "run" / "checkpoint.npz").is_file()
        assert (tmp_path / "run" / "metrics.csv").is_file()
        assert (tmp_path / "run" / "config_echo.json").is_file()
        assert (tmp_path / "run" / "loss_curve.png").is_file()
        assert result.checkpoint_path.is_file()

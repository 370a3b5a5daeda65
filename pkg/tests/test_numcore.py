"""Denoiser network, gradients, optimizer, checkpoint container."""

import numpy as np
import pytest

from motiflab.diffusion.losses import LossSpec
from motiflab.errors import ContractError, NumericError
from motiflab.numcore import (
    BatchItem,
    DenoiserConfig,
    Optimizer,
    denoiser_forward,
    finite_diff_check,
    init_params,
    loss_and_grads,
)
from motiflab.numcore.checkpoint import load_checkpoint, save_checkpoint
from motiflab.numcore.network import DenoiserParams
from motiflab.numcore.optim import optimizer_step


def tiny_config(**kw):
    base = dict(channels=2, width=2, time_dim=2, frame_dim=2, prompt_dim=2,
                vocab_size=2, timesteps=50)
    base.update(kw)
    return DenoiserConfig(**base)


def random_batch(cfg, rng, n=2, frames=3, hw=4):
    items = []
    for _ in range(n):
        items.append(BatchItem(
            z_t=rng.standard_normal((frames, hw, hw, cfg.channels)),
            target_v=rng.standard_normal((frames, hw, hw, cfg.channels)),
            m_prime=rng.random((frames, hw, hw)),
            cond=rng.standard_normal((frames, hw, hw, cfg.channels)),
            t=int(rng.integers(1, cfg.timesteps + 1)),
            prompt_index=int(rng.integers(0, cfg.vocab_size + 1)),
        ))
    return items


class TestForward:
    def test_zero_params_zero_output(self):
        cfg = DenoiserConfig(channels=12, vocab_size=5)
        params = init_params(cfg, seed=0, dtype=np.float64)
        for g in params.groups.values():
            g[:] = 0.0
        rng = np.random.default_rng(1)
        z = rng.standard_normal((8, 16, 16, 12))
        cond = rng.standard_normal((8, 16, 16, 12))
        out = denoiser_forward(params, z, cond, 3, 2)
        assert np.all(out == 0.0)

    def test_deterministic_given_seed(self):
        cfg = DenoiserConfig(channels=12, vocab_size=5)
        p1 = init_params(cfg, seed=7, dtype=np.float64)
        p2 = init_params(cfg, seed=7, dtype=np.float64)
        for k in p1.groups:
            assert np.array_equal(p1.groups[k], p2.groups[k])
        rng = np.random.default_rng(2)
        z = rng.standard_normal((8, 16, 16, 12))
        cond = rng.standard_normal((8, 16, 16, 12))
        a = denoiser_forward(p1, z, cond, 11, 0)
        b = denoiser_forward(p1, z, cond, 11, 0)
        assert np.array_equal(a, b)

    def test_output_shape_matches_input(self):
        cfg = DenoiserConfig(channels=12, vocab_size=5)
        params = init_params(cfg, seed=0)
        rng = np.random.default_rng(3)
        z = rng.standard_normal((8, 16, 16, 12))
        cond = rng.standard_normal((8, 16, 16, 12))
        assert denoiser_forward(params, z, cond, 0, 5).shape == (8, 16, 16, 12)

    def test_shape_mismatch_rejected(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0)
        rng = np.random.default_rng(4)
        z = rng.standard_normal((3, 4, 4, 2))
        cond = rng.standard_normal((3, 4, 8, 2))
        with pytest.raises(ContractError):
            denoiser_forward(params, z, cond, 0, 0)

    def test_nonfinite_input_rejected(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0)
        z = np.full((3, 4, 4, 2), np.nan)
        cond = np.zeros((3, 4, 4, 2))
        with pytest.raises(NumericError):
            denoiser_forward(params, z, cond, 0, 0)

    def test_t_and_prompt_range_checked(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0)
        z = np.zeros((3, 4, 4, 2))
        with pytest.raises(ContractError):
            denoiser_forward(params, z, z, cfg.timesteps, 0)
        with pytest.raises(ContractError):
            denoiser_forward(params, z, z, 0, cfg.vocab_size + 1)


class TestLossAndGrads:
    def test_lambda_zero_matches_plain_diffusion_grads(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=5, dtype=np.float64)
        batch = random_batch(cfg, np.random.default_rng(6))
        _, g0 = loss_and_grads(params, batch, LossSpec(lambda_motif=0.0))
        _, g_none = loss_and_grads(params, batch, LossSpec(heatmap_mode="none"))
        for k in g0:
            assert np.array_equal(g0[k], g_none[k])

    def test_zero_heatmap_equals_plain_loss(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=5, dtype=np.float64)
        batch = random_batch(cfg, np.random.default_rng(7))
        for item in batch:
            item.m_prime = np.zeros_like(item.m_prime)
        l_w, g_w = loss_and_grads(params, batch, LossSpec(lambda_motif=1.0))
        l_p, g_p = loss_and_grads(params, batch, LossSpec(heatmap_mode="none"))
        assert l_w == pytest.approx(l_p, abs=0.0)
        for k in g_w:
            assert np.array_equal(g_w[k], g_p[k])

    def test_empty_batch_rejected(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0)
        with pytest.raises(ContractError):
            loss_and_grads(params, [], LossSpec())

    def test_gradients_match_finite_differences(self):
        # the randomized-denoiser oracle: <= 500 params, double precision
        cfg = tiny_config()
        params = init_params(cfg, seed=1, dtype=np.float64, zero_out=False)
        assert params.count() <= 500
        batch = random_batch(cfg, np.random.default_rng(8))
        spec = LossSpec(lambda_motif=1.0)

        def fn(p):
            return loss_and_grads(p, batch, spec)

        err = finite_diff_check(params, fn, h=1e-5, samples_per_group=4, seed=0)
        assert err < 1e-4

    def test_gradient_scales_with_heatmap_weight(self):
        # d(total)/d(pred) carries the (1 + lambda * m'^2) gain
        cfg = tiny_config()
        params = init_params(cfg, seed=2, dtype=np.float64)
        rng = np.random.default_rng(9)
        base = random_batch(cfg, rng, n=1)
        for m_val, expected_gain in ((0.0, 1.0), (1.0, 2.0)):
            for item in base:
                item.m_prime = np.full_like(item.m_prime, m_val)
            _, grads = loss_and_grads(params, base, LossSpec(lambda_motif=1.0))
            _, plain = loss_and_grads(params, base, LossSpec(heatmap_mode="none"))
            for k in grads:
                assert np.allclose(grads[k], expected_gain * plain[k],
                                   rtol=1e-12, atol=1e-15)


class TestFiniteDiffCheck:
    def test_linear_loss_is_exact(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=3, dtype=np.float64, zero_out=False)
        for g in params.groups.values():
            g *= 0.1   # keep |loss| small so fd cancellation stays tiny

        def linear(p):
            loss = sum(float(g.sum()) for g in p.groups.values())
            return loss, {k: np.ones_like(v) for k, v in p.groups.items()}

        assert finite_diff_check(params, linear, h=1e-5) < 1e-10

    def test_quadratic_loss_small_error(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=4, dtype=np.float64, zero_out=False)
        for g in params.groups.values():
            g *= 0.1

        def quad(p):
            loss = sum(float(np.sum(g * g)) for g in p.groups.values())
            return loss, {k: 2.0 * v for k, v in p.groups.items()}

        assert finite_diff_check(params, quad, h=1e-5) < 1e-8

    def test_h_must_be_positive(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=0, dtype=np.float64)
        with pytest.raises(ContractError):
            finite_diff_check(params, lambda p: (0.0, {}), h=0.0)


def scalar_params(w0: float) -> DenoiserParams:
    cfg = tiny_config()
    return DenoiserParams(cfg, {"w": np.array([w0])}, seed=0)


class TestOptimizer:
    def test_zero_grads_leave_params_unchanged(self):
        cfg = tiny_config()
        params = init_params(cfg, seed=6, dtype=np.float64)
        before = params.copy()
        opt = Optimizer(params, lr=1e-3, mode="adam")
        opt.step(params, {k: np.zeros_like(v) for k, v in params.groups.items()})
        for k in params.groups:
            assert np.array_equal(params.groups[k], before.groups[k])

    def test_plain_gradient_quadratic_single_step(self):
        # f(w) = w^2, w0 = 1, lr = 0.1 -> w1 = 1 - 0.1 * 2 = 0.8
        params = scalar_params(1.0)
        opt = Optimizer(params, lr=0.1, mode="sgd")
        optimizer_step(params, {"w": np.array([2.0 * 1.0])}, 0.1, opt)
        assert params.groups["w"][0] == pytest.approx(0.8, abs=1e-15)

    def test_sgd_matches_oracle_recurrence_and_reduces_10x(self):
        params = scalar_params(1.0)
        opt = Optimizer(params, lr=0.1, mode="sgd")
        w_expected = 1.0
        for _ in range(200):
            optimizer_step(params, {"w": 2.0 * params.groups["w"].copy()}, 0.1, opt)
            w_expected = w_expected - 0.1 * 2.0 * w_expected
            assert params.groups["w"][0] == pytest.approx(w_expected, rel=1e-12)
        assert w_expected ** 2 <= 1.0 / 10.0

    def test_adam_reduces_quadratic_10x(self):
        params = scalar_params(1.0)
        opt = Optimizer(params, lr=0.1, mode="adam")
        for _ in range(200):
            opt.step(params, {"w": 2.0 * params.groups["w"].copy()})
        assert params.groups["w"][0] ** 2 <= 1.0 / 10.0

    def test_nonfinite_grads_refused(self):
        params = scalar_params(1.0)
        opt = Optimizer(params, lr=0.1)
        with pytest.raises(NumericError):
            opt.step(params, {"w": np.array([np.inf])})
        assert params.groups["w"][0] == 1.0

    def test_bad_lr_rejected(self):
        params = scalar_params(1.0)
        with pytest.raises(ContractError):
            Optimizer(params, lr=0.0)

    def test_first_step_deterministic(self):
        cfg = tiny_config()
        runs = []
        for _ in range(2):
            params = init_params(cfg, seed=11, dtype=np.float64)
            batch = random_batch(cfg, np.random.default_rng(12))
            _, grads = loss_and_grads(params, batch, LossSpec())
            opt = Optimizer(params, lr=1e-3)
            opt.step(params, grads)
            runs.append(params)
        for k in runs[0].groups:
            assert np.array_equal(runs[0].groups[k], runs[1].groups[k])


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        cfg = tiny_config()
        params = init_params(cfg, seed=13, dtype=np.float64)
        path = tmp_path / "ck.npz"
        save_checkpoint(path, params, step=42, extra={"note": "x"})
        loaded, step, extra = load_checkpoint(path)
        assert step == 42
        assert extra == {"note": "x"}
        assert loaded.config == cfg
        assert loaded.seed == params.seed
        for k in params.groups:
            assert np.array_equal(loaded.groups[k], params.groups[k])
            assert loaded.groups[k].dtype == params.groups[k].dtype

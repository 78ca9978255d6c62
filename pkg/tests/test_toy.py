from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from equiproj import TrainingDivergedError, rotate2d
from equiproj.defect import empirical_defect
from equiproj.toy import (
    AdamState,
    ToyDataset,
    TrainConfig,
    accuracy,
    adam_step,
    defect_rotations,
    embed,
    embed_batch,
    final_defect,
    forward,
    forward_batch,
    gen_disk_annulus,
    gen_wavey_rings,
    init_params,
    loss,
    loss_and_grads,
    model_fn,
    train_toy,
)


@pytest.fixture(scope="module")
def small_params():
    return init_params(TrainConfig(seed=3, hidden=3))


class TestEmbed:
    def test_origin_convention_degree_independent(self, small_params):
        h = embed((0.0, 0.0), small_params)
        for m in range(h.shape[0]):
            assert_allclose(h[m], h[0], atol=0)
        assert_allclose(h[0].imag, 0.0, atol=0)

    def test_unit_x_has_zero_phase(self, small_params):
        h = embed((1.0, 0.0), small_params)
        widths = np.exp(
            -((1.0 - small_params.radial_centers) ** 2)
            / (2 * small_params.radial_width**2)
        )
        for m in range(h.shape[0]):
            assert_allclose(h[m], widths, atol=1e-15)

    def test_rotation_covariance_all_degrees(self, small_params):
        rng = np.random.default_rng(0)
        degrees = small_params.degrees()
        for _ in range(10):
            p = rng.normal(size=2) * 2
            theta = rng.uniform(0, 2 * np.pi)
            rotated = embed_batch(rotate2d(theta, p[None, :]), small_params)[0]
            phased = np.exp(1j * degrees * theta)[:, None] * embed(p, small_params)
            assert np.max(np.abs(rotated - phased)) < 1e-12

    def test_non_finite_rejected(self, small_params):
        with pytest.raises(ValueError):
            embed((np.nan, 0.0), small_params)


class TestForward:
    def test_zero_weights_give_bias(self, small_params):
        params = replace(
            small_params,
            w1=np.zeros_like(small_params.w1),
            w2=np.zeros_like(small_params.w2),
            bias=0.73,
        )
        assert forward((0.3, -0.2), params) == pytest.approx(0.73)

    def test_masked_weights_invariant_logit(self, small_params):
        m1, m2 = small_params.masks()
        params = replace(small_params, w1=small_params.w1 * m1, w2=small_params.w2 * m2)
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(20, 2)) * 1.5
        base = forward_batch(pts, params)
        for theta in defect_rotations(seed=5):
            rotated = forward_batch(rotate2d(theta, pts), params)
            assert np.max(np.abs(rotated - base)) < 1e-9

    def test_matches_straight_line_evaluation(self, small_params):
        rng = np.random.default_rng(2)
        p = rng.normal(size=2)
        h = embed(p, small_params).reshape(-1)
        y2 = small_params.w2 @ (small_params.w1 @ h)
        n_deg = 2 * small_params.max_degree + 1
        hm = y2.reshape(n_deg, small_params.hidden)
        h0 = sum(hm[m] * hm[n_deg - 1 - m] for m in range(n_deg))
        expected = float(np.real(h0) @ small_params.w_final + small_params.bias)
        assert abs(forward(p, small_params) - expected) < 1e-12


class TestLoss:
    def test_saturated_sigmoid_loss_tiny(self, small_params):
        params = replace(
            small_params,
            w1=np.zeros_like(small_params.w1),
            w2=np.zeros_like(small_params.w2),
            bias=20.0,
        )
        pts = np.array([[0.1, 0.2], [1.0, -1.0]])
        labels = np.array([1, 1])
        cfg = TrainConfig(seed=0, hidden=small_params.hidden)
        assert loss((pts, labels), params, cfg) < 1e-8

    def test_masked_weights_zero_perp_penalty(self, small_params):
        m1, m2 = small_params.masks()
        params = replace(small_params, w1=small_params.w1 * m1, w2=small_params.w2 * m2)
        cfg = TrainConfig(seed=0, hidden=small_params.hidden, lambda_perp=3.0)
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(6, 2))
        labels = np.where(rng.normal(size=6) > 0, 1, -1)
        _, parts, _ = loss_and_grads(pts, labels, params, cfg)
        assert parts["penalty_perp"] == 0.0

    def test_empty_batch_rejected(self, small_params):
        cfg = TrainConfig(seed=0, hidden=small_params.hidden)
        with pytest.raises(ValueError):
            loss((np.zeros((0, 2)), np.zeros(0)), small_params, cfg)

    @pytest.mark.parametrize("draw", range(3))
    def test_gradients_match_finite_differences(self, draw):
        cfg = TrainConfig(
            seed=100 + draw, hidden=3, lambda_g=0.05, lambda_perp=0.07
        )
        params = init_params(cfg)
        rng = np.random.default_rng(200 + draw)
        pts = rng.normal(size=(6, 2)) * 1.5
        labels = np.where(rng.normal(size=6) > 0, 1, -1)
        _, _, grads = loss_and_grads(pts, labels, params, cfg)
        step = 1e-5
        values = params.trainable()
        worst = 0.0
        for name, arr in values.items():
            flat = np.atleast_1d(arr).reshape(-1)
            g_flat = np.atleast_1d(grads[name]).reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                plus = loss((pts, labels), params.with_trainable(values), cfg)
                flat[i] = orig - step
                minus = loss((pts, labels), params.with_trainable(values), cfg)
                flat[i] = orig
                fd = (plus - minus) / (2 * step)
                g = g_flat[i]
                # relative error < 1e-4 with an absolute floor of 1e-8 for
                # entries too small for central differences to resolve
                excess = abs(fd - g) / max(1e-4 * abs(g), 1e-8)
                worst = max(worst, excess)
        assert worst < 1.0


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        cfg = TrainConfig(seed=0)
        params = {"x": np.array([1.0, -2.0])}
        state = AdamState.zeros_like(params)
        new_params, _ = adam_step(params, {"x": np.zeros(2)}, state, cfg)
        assert_allclose(new_params["x"], params["x"], atol=0)

    def test_zero_gradient_decays_moments(self):
        cfg = TrainConfig(seed=0)
        params = {"x": np.array([1.0, -2.0])}
        state = AdamState.zeros_like(params)
        state.m["x"][:] = 0.5
        state.v["x"][:] = 0.25
        _, new_state = adam_step(params, {"x": np.zeros(2)}, state, cfg)
        assert_allclose(new_state.m["x"], cfg.adam_beta1 * 0.5, atol=0)
        assert_allclose(new_state.v["x"], cfg.adam_beta2 * 0.25, atol=0)

    def test_constant_gradient_limit_is_lr(self):
        cfg = TrainConfig(seed=0, lr=0.01)
        params = {"x": np.zeros(1)}
        state = AdamState.zeros_like(params)
        g = {"x": np.array([0.37])}
        prev = params["x"].copy()
        for _ in range(500):
            params, state = adam_step(params, g, state, cfg)
            update = params["x"] - prev
            prev = params["x"].copy()
        assert abs(abs(update[0]) - cfg.lr) < 0.01 * cfg.lr
        assert update[0] < 0  # moves against the gradient

    def test_first_step_hand_formula(self):
        cfg = TrainConfig(seed=0, lr=0.003)
        params = {"x": np.array([1.0])}
        state = AdamState.zeros_like(params)
        g = np.array([0.8])
        new_params, _ = adam_step(params, {"x": g}, state, cfg)
        m_hat = g  # (1-b1)g / (1-b1)
        v_hat = g * g
        expected = params["x"] - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        assert_allclose(new_params["x"], expected, atol=1e-12)


class TestDatasets:
    def test_disk_annulus_bounds(self):
        data = gen_disk_annulus(500, seed=0)
        radii = np.linalg.norm(data.points, axis=1)
        inner = radii[data.labels == 1]
        outer = radii[data.labels == -1]
        assert np.all(inner <= 1.0)
        assert np.all((2.3 <= outer) & (outer <= 3.0))
        angles = np.arctan2(data.points[:, 1], data.points[:, 0])
        assert np.all(np.abs(angles[data.labels == -1]) <= np.pi / 4 + 1e-12)

    def test_disk_annulus_outer_radius_mean(self):
        data = gen_disk_annulus(1000, seed=1)
        outer = np.linalg.norm(data.points[data.labels == -1], axis=1)
        assert abs(outer.mean() - 2.65) < 0.02

    def test_wavey_rings_zero_amplitude_bounds(self):
        data = gen_wavey_rings(400, sigma_perp=0.0, seed=2)
        radii = np.linalg.norm(data.points, axis=1)
        inner = radii[data.labels == 1]
        outer = radii[data.labels == -1]
        assert np.all((0.95 - 1e-12 <= inner) & (inner <= 1.25 + 1e-12))
        assert np.all((1.98 - 1e-12 <= outer) & (outer <= 2.42 + 1e-12))

    def test_wavey_rings_large_amplitude_span(self):
        data = gen_wavey_rings(2000, sigma_perp=1.0, seed=3)
        # the signed inner radius spans [-0.05, 2.25]; reflected points make
        # the observed |r| small near zero and large near the top end
        inner = np.linalg.norm(data.points[data.labels == 1], axis=1)
        assert inner.max() <= 2.25 + 1e-9
        assert inner.max() > 2.0
        assert inner.min() < 0.1

    def test_default_split_sizes(self):
        data = gen_wavey_rings(350, sigma_perp=0.5, seed=4)
        assert len(data.train_idx) == 560
        assert len(data.test_idx) == 140

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            gen_disk_annulus(0)
        with pytest.raises(ValueError):
            gen_wavey_rings(10, sigma_perp=-0.5)

    def test_dataset_partition_invariant(self):
        with pytest.raises(ValueError):
            ToyDataset(
                points=np.zeros((4, 2)),
                labels=np.array([1, 1, -1, -1]),
                train_idx=np.array([0, 1]),
                test_idx=np.array([1, 2, 3]),
            )


class TestTrainToy:
    def test_deterministic_history(self):
        data = gen_disk_annulus(40, seed=5)
        cfg = TrainConfig(seed=6, epochs=25, lambda_perp=0.01, hidden=4)
        r1 = train_toy(data, cfg)
        r2 = train_toy(data, cfg)
        assert len(r1.history) == 25
        for a, b in zip(r1.history, r2.history):
            assert a == b
        assert np.array_equal(r1.params.w1, r2.params.w1)
        assert np.array_equal(r1.params.w2, r2.params.w2)

    def test_hard_projection_keeps_masked_blocks_zero(self):
        data = gen_disk_annulus(30, seed=7)
        cfg = TrainConfig(seed=8, epochs=15, hidden=4, hard_project=True)
        result = train_toy(data, cfg)
        m1, m2 = result.params.masks()
        assert np.max(np.abs(result.params.w1 * (1 - m1))) == 0.0
        assert np.max(np.abs(result.params.w2 * (1 - m2))) == 0.0

    def test_divergence_raises_with_last_epoch(self):
        data = gen_disk_annulus(20, seed=9)
        cfg = TrainConfig(seed=10, epochs=5, lr=1e200, hidden=3)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError) as err:
                train_toy(data, cfg)
        assert err.value.last_finite_epoch >= 0

    def test_penalty_drives_defect_down_tenfold(self):
        data = gen_disk_annulus(60, seed=11)
        base = train_toy(data, TrainConfig(seed=12, epochs=200))
        regularised = train_toy(data, TrainConfig(seed=12, epochs=200, lambda_perp=10.0))
        assert final_defect(regularised) * 10 <= final_defect(base)

    def test_unregularised_run_fits_training_data(self):
        data = gen_disk_annulus(60, seed=13)
        result = train_toy(data, TrainConfig(seed=14, epochs=200))
        assert accuracy(result.params, data.train_points, data.train_labels) >= 0.95

    def test_history_defect_cadence(self):
        data = gen_disk_annulus(20, seed=15)
        cfg = TrainConfig(seed=16, epochs=45, hidden=3)
        result = train_toy(data, cfg)
        recorded = [row.epoch for row in result.history if row.empirical_defect is not None]
        assert recorded == [0, 20, 40, 44]

    def test_final_defect_matches_manual_evaluation(self):
        data = gen_disk_annulus(25, seed=17)
        cfg = TrainConfig(seed=18, epochs=21, hidden=3)
        result = train_toy(data, cfg)
        manual = empirical_defect(
            model_fn(result.params), data.points, defect_rotations(cfg.seed)
        )
        assert final_defect(result) == pytest.approx(manual, rel=1e-12)

import json

import numpy as np
import pytest

from ddica import tape as T
from ddica.entropy import EntropyConfig
from ddica.errors import ConfigError, DimensionError, NumericError
from ddica.linalg import symmetric_eigen
from ddica.metrics import match_components
from ddica.network import (
    ModelState, NetworkConfig, TrainConfig, adam_step, forward, init_model,
    load_model, predict_sources, save_model, tc_gradient_check, train,
)
from ddica.rng import make_rng, split_seed
from ddica.whitening import WhiteningConfig

SMALL = NetworkConfig(input_dim=4, output_dim=2, hidden_widths=(8, 8), seed=0)


def states_equal(a: ModelState, b: ModelState) -> bool:
    pairs = list(zip(a.weights, b.weights)) + list(zip(a.biases, b.biases))
    return all(np.array_equal(x, y) for x, y in pairs)


class TestInitModel:
    def test_default_has_nine_affine_layers(self):
        cfg = NetworkConfig(input_dim=10, output_dim=3)
        m = init_model(cfg)
        assert len(m.weights) == 9

    def test_same_seed_bit_identical(self):
        assert states_equal(init_model(SMALL), init_model(SMALL))

    def test_different_seed_differs(self):
        other = NetworkConfig(input_dim=4, output_dim=2, hidden_widths=(8, 8), seed=1)
        assert not states_equal(init_model(SMALL), init_model(other))

    def test_biases_zero(self):
        m = init_model(SMALL)
        for b in m.biases:
            np.testing.assert_array_equal(b, np.zeros_like(b))

    def test_weight_mean_near_zero(self):
        # ~1e5 draws; uniform(-L, L) has sd L/sqrt(3)
        cfg = NetworkConfig(input_dim=300, output_dim=3, hidden_widths=(340,), seed=4)
        m = init_model(cfg)
        w = m.weights[0]
        limit = np.sqrt(6.0 / sum(w.shape))
        se = limit / np.sqrt(3.0) / np.sqrt(w.size)
        assert abs(w.mean()) < 3 * se

    def test_zero_width_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(input_dim=4, output_dim=2, hidden_widths=(8, 0))

    def test_output_wider_than_input_rejected(self):
        with pytest.raises(ConfigError):
            NetworkConfig(input_dim=2, output_dim=3)


class TestForward:
    def test_output_shape(self):
        m = init_model(SMALL)
        tp = T.Tape()
        out = forward(m, np.random.default_rng(0).standard_normal((4, 32)), tp)
        assert out.shape == (2, 32)

    def test_zero_weights_collapse_reports_diagnostics(self):
        m = init_model(SMALL)
        for w in m.weights:
            w[:] = 0.0
        tp = T.Tape()
        diagnostics = {}
        out = forward(m, np.ones((4, 16)), tp, diagnostics=diagnostics)
        assert np.all(np.isfinite(out.value))
        np.testing.assert_array_equal(out.value, np.zeros((2, 16)))
        assert diagnostics["floored_eigenvalues"] == 2

    def test_single_orthogonal_layer_reproduces_rotation(self):
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        cfg = NetworkConfig(input_dim=3, output_dim=3, hidden_widths=(), seed=0)
        m = init_model(cfg)
        m.weights[0][:] = q
        # input with empirical covariance exactly I
        z = rng.standard_normal((3, 64))
        z -= z.mean(axis=1, keepdims=True)
        e = symmetric_eigen(z @ z.T / 64)
        z = (e.eigenvectors / np.sqrt(e.eigenvalues)) @ e.eigenvectors.T @ z
        tp = T.Tape()
        out = forward(m, z, tp)
        assert np.abs(out.value - q @ z).max() < 1e-9

    def test_dimension_mismatch(self):
        m = init_model(SMALL)
        with pytest.raises(DimensionError):
            forward(m, np.zeros((5, 16)), T.Tape())


class TestAdamStep:
    def grads_like(self, m, fill):
        return {
            "w": [np.full_like(w, fill) for w in m.weights],
            "b": [np.full_like(b, fill) for b in m.biases],
        }

    def test_zero_gradient_fixed_point(self):
        m = init_model(SMALL)
        before = [w.copy() for w in m.weights]
        adam_step(m, self.grads_like(m, 0.0), TrainConfig())
        for w0, w1 in zip(before, m.weights):
            np.testing.assert_array_equal(w0, w1)
        assert m.step == 1

    def test_first_step_is_signed_learning_rate(self):
        m = init_model(SMALL)
        before = [w.copy() for w in m.weights]
        tcfg = TrainConfig(learning_rate=1e-3)
        adam_step(m, self.grads_like(m, 2.5), tcfg)
        for w0, w1 in zip(before, m.weights):
            # bias-corrected first step: -lr * g / (|g| + eps) = -lr * sign(g)
            np.testing.assert_allclose(w0 - w1, np.full_like(w0, 1e-3), rtol=1e-6)

    def test_lr_times_zero_is_identity_with_zero_grads(self):
        m = init_model(SMALL)
        before = [w.copy() for w in m.weights]
        adam_step(m, self.grads_like(m, 0.0), TrainConfig(learning_rate=1e-9))
        for w0, w1 in zip(before, m.weights):
            np.testing.assert_array_equal(w0, w1)

    def test_nan_gradient_aborts(self):
        m = init_model(SMALL)
        grads = self.grads_like(m, 1.0)
        grads["w"][0][0, 0] = np.nan
        with pytest.raises(NumericError):
            adam_step(m, grads, TrainConfig())

    def test_shape_mismatch_rejected(self):
        m = init_model(SMALL)
        grads = self.grads_like(m, 1.0)
        grads["w"][0] = np.zeros((1, 1))
        with pytest.raises(DimensionError):
            adam_step(m, grads, TrainConfig())


def quick_tcfg(**kw):
    defaults = dict(
        learning_rate=1e-3, batch_size=16, epochs=2, seed=5,
        whitening=WhiteningConfig(iterations_per_pair=50),
        entropy=EntropyConfig(),
    )
    defaults.update(kw)
    return TrainConfig(**defaults)


class TestTrain:
    def test_history_length_matches_steps(self):
        m = init_model(SMALL)
        x = make_rng(2).standard_normal((4, 50))
        m, hist = train(m, x, quick_tcfg())
        assert len(hist) == 2 * (50 // 16)

    def test_deterministic_trajectories(self):
        x = make_rng(3).standard_normal((4, 40))
        m1, h1 = train(init_model(SMALL), x, quick_tcfg())
        m2, h2 = train(init_model(SMALL), x, quick_tcfg())
        assert h1 == h2
        assert states_equal(m1, m2)

    def test_whitened_outputs_at_every_step(self):
        # needs the full default iteration budget when the pre-whitening
        # covariance happens to have clustered eigenvalues
        x = make_rng(4).standard_normal((4, 48))
        covs = []

        def on_step(step, loss, out, diag):
            covs.append(np.abs(out @ out.T / out.shape[1] - np.eye(2)).max())

        train(init_model(SMALL), x, quick_tcfg(whitening=WhiteningConfig()), on_step=on_step)
        assert covs and max(covs) < 1e-3

    def test_no_decrease_on_independent_inputs(self):
        # already independent, whitened, non-Gaussian inputs: TC starts low
        # and 200 steps at the default rate must not blow it up
        rng = make_rng(6)
        s = np.vstack([rng.uniform(-1, 1, 400), np.sign(rng.standard_normal(400))])
        s = s - s.mean(axis=1, keepdims=True)
        e = symmetric_eigen(s @ s.T / 400)
        s = (e.eigenvectors / np.sqrt(e.eigenvalues)) @ e.eigenvectors.T @ s
        cfg = NetworkConfig(input_dim=2, output_dim=2, hidden_widths=(8, 8), seed=7)
        tcfg = quick_tcfg(learning_rate=1e-4, batch_size=100, epochs=50, seed=8)
        m, hist = train(init_model(cfg), s, tcfg)
        assert len(hist) == 200
        assert hist[-1] <= 2.0 * hist[0] + 1e-6

    def test_batch_size_larger_than_data_rejected(self):
        with pytest.raises(DimensionError):
            train(init_model(SMALL), np.zeros((4, 8)), quick_tcfg(batch_size=16))


class TestPersistence:
    def test_round_trip_exact(self, tmp_path):
        m = init_model(SMALL)
        x = make_rng(9).standard_normal((4, 40))
        m, _ = train(m, x, quick_tcfg(epochs=1))
        path = tmp_path / "model.json"
        save_model(m, path)
        back = load_model(path)
        assert states_equal(m, back)
        assert back.step == m.step
        for a, b in zip(m.m_w, back.m_w):
            np.testing.assert_array_equal(a, b)

    def test_save_load_save_is_stable(self, tmp_path):
        m = init_model(SMALL)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(m, p1)
        save_model(load_model(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_document_schema(self, tmp_path):
        m = init_model(SMALL)
        path = tmp_path / "model.json"
        save_model(m, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"config", "layers", "adam", "step"}
        assert all(set(layer) == {"w", "b"} for layer in doc["layers"])


def test_gradient_check_reduced_net():
    assert tc_gradient_check(0) < 1e-4


def test_linear_two_source_separation():
    # end-to-end oracle: sine + uniform noise through a random 2x2 mixing
    rng = make_rng(42)
    n = 2000
    s = np.vstack([np.sin(np.linspace(0, 8 * np.pi, n)), rng.uniform(-1, 1, n)])
    x = rng.standard_normal((2, 2)) @ s
    xc = x - x.mean(axis=1, keepdims=True)
    e = symmetric_eigen(xc @ xc.T / n)
    xw = (e.eigenvectors / np.sqrt(e.eigenvalues)) @ e.eigenvectors.T @ xc

    cfg = NetworkConfig(input_dim=2, output_dim=2, seed=1)
    wcfg = WhiteningConfig(iterations_per_pair=50)
    tcfg = TrainConfig(learning_rate=1e-4, batch_size=256, epochs=150, seed=2, whitening=wcfg)
    m, hist = train(init_model(cfg), xw, tcfg)
    assert len(hist) <= 5000
    est = predict_sources(m, xw, wcfg, whiten_seed=split_seed(tcfg.seed, 1))
    match = match_components(est, s)
    assert match.mean_abs_corr >= 0.95

import numpy as np
import pytest

from ddica import tape as T
from ddica.errors import DimensionError
from ddica.linalg import symmetric_eigen
from ddica.whitening import WhiteningConfig, whiten_forward, whiten_reference

CFG = WhiteningConfig()


def run_forward(z, cfg=CFG, seed=0, diagnostics=None):
    tp = T.Tape()
    zv = tp.leaf(z)
    out = whiten_forward(zv, cfg, tp, seed=seed, diagnostics=diagnostics)
    return out.value.copy()


def spread_input(rng, p, n, eigenvalues):
    """Input whose covariance has prescribed well-separated eigenvalues."""
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    z = rng.standard_normal((p, n))
    z -= z.mean(axis=1, keepdims=True)
    cov = z @ z.T / n
    e = symmetric_eigen(cov)
    w = (e.eigenvectors / np.sqrt(e.eigenvalues)) @ e.eigenvectors.T
    return (q * np.sqrt(eigenvalues)) @ q.T @ w @ z


def test_already_white_input_passes_through():
    rng = np.random.default_rng(0)
    z = spread_input(rng, 3, 128, np.array([1.0, 1.0, 1.0]))
    out = run_forward(z)
    zc = z - z.mean(axis=1, keepdims=True)
    assert np.abs(out - zc).max() < 1e-6


def test_diagonal_covariance_rescales_rows():
    rng = np.random.default_rng(1)
    base = spread_input(rng, 2, 256, np.array([1.0, 1.0]))
    z = np.diag([2.0, 1.0]) @ base  # covariance diag(4, 1)
    out = run_forward(z)
    np.testing.assert_allclose(out, np.diag([0.5, 1.0]) @ z, atol=1e-6)
    cov = out @ out.T / 256
    assert np.abs(cov - np.eye(2)).max() < 1e-6


def test_matches_oracle_on_separated_spectra():
    rng = np.random.default_rng(2)
    for trial in range(10):
        z = spread_input(rng, 3, 256, np.array([2.5, 1.0, 0.35]))
        fwd = run_forward(z, seed=trial)
        ref = whiten_reference(z, CFG)
        assert np.abs(fwd - ref).max() < 1e-5
        cov = fwd @ fwd.T / 256
        assert np.abs(cov - np.eye(3)).max() < 1e-3


def test_reference_idempotent():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((3, 200)) * np.array([[3.0], [1.0], [0.5]])
    once = whiten_reference(z, CFG)
    twice = whiten_reference(once, CFG)
    assert np.abs(once - twice).max() < 1e-6


def test_reference_centers_rows():
    rng = np.random.default_rng(4)
    z = rng.standard_normal((3, 100)) + 5.0
    out = whiten_reference(z, CFG)
    assert np.abs(out.mean(axis=1)).max() < 1e-12


def test_uncentered_variant():
    rng = np.random.default_rng(5)
    z = rng.standard_normal((2, 300))
    cfg = WhiteningConfig(center=False)
    out = run_forward(z, cfg)
    second_moment = out @ out.T / 300
    assert np.abs(second_moment - np.eye(2)).max() < 1e-3


def test_whitening_matrix_symmetric():
    rng = np.random.default_rng(6)
    z = spread_input(rng, 3, 128, np.array([3.0, 1.2, 0.4]))
    zc = z - z.mean(axis=1, keepdims=True)
    out = run_forward(z)
    # recover W from out = W zc via least squares; must be symmetric
    w = out @ np.linalg.pinv(zc)
    assert np.abs(w - w.T).max() < 1e-9


def test_gradient_matches_fd():
    rng = np.random.default_rng(7)
    z = spread_input(rng, 3, 64, np.array([2.0, 1.0, 0.45]))
    probe = rng.standard_normal((3, 64))
    cfg = WhiteningConfig(iterations_per_pair=40)

    def loss_of(zz):
        tp = T.Tape()
        out = whiten_forward(tp.leaf(zz), cfg, tp, seed=3)
        return float((out.value * probe).sum())

    tp = T.Tape()
    zv = tp.leaf(z)
    out = whiten_forward(zv, cfg, tp, seed=3)
    loss = T.sum_all(T.hadamard(out, tp.const(probe)))
    analytic = tp.backward(loss)[zv.nid]
    step = 1e-5
    worst = 0.0
    for i in range(3):
        for j in range(0, 64, 7):
            keep = z[i, j]
            z[i, j] = keep + step
            up = loss_of(z)
            z[i, j] = keep - step
            down = loss_of(z)
            z[i, j] = keep
            fd = (up - down) / (2 * step)
            worst = max(worst, abs(fd - analytic[i, j]) / max(abs(fd), abs(analytic[i, j]), 1e-6))
    assert worst < 1e-3


def test_orthogonal_input_rotation_keeps_output_white():
    rng = np.random.default_rng(8)
    z = spread_input(rng, 3, 256, np.array([2.0, 0.9, 0.3]))
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    for data in (z, q @ z):
        out = run_forward(data)
        cov = out @ out.T / 256
        assert np.abs(cov - np.eye(3)).max() < 1e-3


def test_rank_error_when_too_few_samples():
    tp = T.Tape()
    zv = tp.leaf(np.zeros((4, 4)))
    with pytest.raises(DimensionError):
        whiten_forward(zv, CFG, tp)


def test_collapsed_input_floors_and_reports():
    diagnostics = {}
    out = run_forward(np.zeros((3, 32)), diagnostics=diagnostics)
    assert np.all(np.isfinite(out))
    assert diagnostics["floored_eigenvalues"] == 3


def test_forward_deterministic_given_seed():
    rng = np.random.default_rng(9)
    z = rng.standard_normal((3, 100))
    np.testing.assert_array_equal(run_forward(z, seed=11), run_forward(z, seed=11))

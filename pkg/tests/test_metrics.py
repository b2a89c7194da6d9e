import numpy as np
import pytest

from ddica.errors import DegenerateComponentError, DimensionError, NumericError
from ddica.metrics import (
    _match_exhaustive, _match_greedy, amari_index, match_components, pmse, score_report,
)
from ddica.rng import make_rng


class TestMatchComponents:
    def test_self_match(self):
        rng = make_rng(0)
        gt = rng.standard_normal((3, 100))
        m = match_components(gt, gt)
        assert m.permutation == [0, 1, 2]
        assert m.signs == [1, 1, 1]
        np.testing.assert_allclose(m.correlations, np.ones(3), atol=1e-12)

    def test_permuted_and_flipped(self):
        rng = make_rng(1)
        gt = rng.standard_normal((4, 200))
        # est rows: [-gt2, gt0, -gt3, gt1]
        est = gt[[2, 0, 3, 1]] * np.array([[-1.0], [1.0], [-1.0], [1.0]])
        m = match_components(est, gt)
        assert m.permutation == [1, 3, 0, 2]
        assert m.signs == [1, 1, -1, -1]
        assert m.mean_abs_corr > 1.0 - 1e-12

    def test_noisy_match_monte_carlo(self):
        # unit-variance truth plus sd-0.5 noise: |r| ~ 1/sqrt(1.25) = 0.894
        scores = []
        for seed in range(20):
            rng = make_rng(seed)
            gt = rng.standard_normal((3, 1089))
            est = gt + 0.5 * rng.standard_normal((3, 1089))
            scores.append(match_components(est, gt).mean_abs_corr)
        assert 0.85 <= np.mean(scores) <= 0.95

    def test_invariant_to_est_row_permutation_and_sign(self):
        rng = make_rng(2)
        gt = rng.standard_normal((3, 150))
        est = gt + 0.3 * rng.standard_normal((3, 150))
        base = match_components(est, gt)
        shuffled = match_components(est[[2, 0, 1]] * -1.0, gt)
        np.testing.assert_allclose(base.correlations, shuffled.correlations, atol=1e-12)

    def test_extra_estimated_components_allowed(self):
        rng = make_rng(3)
        gt = rng.standard_normal((2, 80))
        est = np.vstack([rng.standard_normal((1, 80)), gt])
        m = match_components(est, gt)
        assert m.permutation == [1, 2]

    def test_constant_row_rejected(self):
        rng = make_rng(4)
        gt = rng.standard_normal((2, 50))
        bad = np.vstack([np.ones((1, 50)), gt[1:]])
        with pytest.raises(DegenerateComponentError):
            match_components(bad, gt)
        with pytest.raises(DegenerateComponentError):
            match_components(gt, bad)

    def test_fewer_estimates_than_truth_rejected(self):
        rng = make_rng(5)
        with pytest.raises(DimensionError):
            match_components(rng.standard_normal((2, 50)), rng.standard_normal((3, 50)))

    def test_greedy_agrees_with_exhaustive_usually(self):
        # correlation matrices from actual noisy matchings, where one
        # assignment dominates; iid-random matrices would not qualify
        agree = 0
        trials = 200
        for seed in range(trials):
            rng = make_rng(seed)
            gt = rng.standard_normal((4, 60))
            est = gt[rng.permutation(4)] + 0.8 * rng.standard_normal((4, 60))
            ec = est - est.mean(axis=1, keepdims=True)
            gc = gt - gt.mean(axis=1, keepdims=True)
            absr = np.abs(
                (gc @ ec.T)
                / np.outer(np.linalg.norm(gc, axis=1), np.linalg.norm(ec, axis=1))
            )
            if _match_greedy(absr, 4, 4) == list(_match_exhaustive(absr, 4, 4)):
                agree += 1
        assert agree / trials >= 0.95


class TestPmse:
    def test_identical_signals(self):
        rng = make_rng(6)
        v = rng.standard_normal(100)
        assert pmse(v, v) == 0.0

    def test_inverted_signal(self):
        rng = make_rng(7)
        v = rng.uniform(0, 1, 100)
        # min-max of (1 - v01) mirrors the signal; orientation match recovers it
        assert pmse(1.0 - v, v) < 1e-12

    def test_uniform_perturbation_bound(self):
        # E[(U(0, 0.1))^2] = 0.01 / 3 = 0.0033; allow 3x slack for
        # renormalization effects
        rng = make_rng(8)
        gt = rng.uniform(0, 1, 2000)
        est = gt + rng.uniform(0, 0.1, 2000)
        assert pmse(est, gt) <= 0.01

    def test_scale_and_shift_invariance(self):
        rng = make_rng(9)
        v = rng.standard_normal(300)
        assert pmse(5.0 * v - 2.0, v) < 1e-12

    def test_constant_gt_rejected(self):
        with pytest.raises(DegenerateComponentError):
            pmse(np.arange(5.0), np.ones(5))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            pmse(np.arange(4.0), np.arange(5.0))


class TestAmariIndex:
    def test_perfect_unmixing(self):
        rng = make_rng(10)
        a = rng.standard_normal((3, 3))
        assert amari_index(np.linalg.inv(a), a) < 1e-12

    def test_scaled_permutation_is_zero(self):
        p = np.array([[0.0, 2.0, 0.0], [0.0, 0.0, -0.5], [3.0, 0.0, 0.0]])
        assert amari_index(p, np.eye(3)) < 1e-12

    def test_all_ones_two_by_two_is_maximal(self):
        # rows: 2/1 - 1 = 1 each; cols the same; total 4 / (2*2*1) = 1
        assert amari_index(np.ones((2, 2)), np.eye(2)) == 1.0

    def test_zero_row_rejected(self):
        p = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NumericError):
            amari_index(p, np.eye(2))

    def test_shape_validation(self):
        with pytest.raises(DimensionError):
            amari_index(np.eye(2), np.eye(3))


def test_score_report_shape(tmp_path):
    rng = make_rng(11)
    gt = rng.standard_normal((3, 120))
    est = gt[[1, 0, 2]] + 0.1 * rng.standard_normal((3, 120))
    report = score_report(est, gt, w_est=np.eye(3), a_true=np.eye(3))
    assert set(report) == {"mean_abs_corr", "per_component", "permutation", "pmse", "amari"}
    assert len(report["pmse"]) == 3
    assert report["amari"] is not None
    report2 = score_report(est, gt)
    assert report2["amari"] is None

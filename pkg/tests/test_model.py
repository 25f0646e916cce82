import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svyadjust import (SurveySample, fit_mle, hessian, log_pseudo_likelihood,
                       normalize_weights, score)
from svyadjust.errors import EmptyInput, InvalidWeight, ShapeError

from conftest import make_srs_sample


def unit_sample(y, x, w=1.0):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    return SurveySample(y=np.atleast_1d(y).astype(float), X=x,
                        weight=np.full(n, w),
                        stratum_id=np.zeros(n, dtype=int),
                        psu_id=np.arange(n))


class TestNormalizeWeights:
    def test_proportional_rescale(self):
        np.testing.assert_allclose(normalize_weights([1, 2, 3], 3),
                                   [0.5, 1.0, 1.5])

    def test_equal_weights_become_ones(self):
        np.testing.assert_allclose(normalize_weights([7.3] * 5), np.ones(5))

    def test_hand_computed_multiplier(self):
        # sum 0.5, n=2 -> multiplier 4
        np.testing.assert_allclose(normalize_weights([0.1, 0.4], 2),
                                   [0.4, 1.6])

    def test_sums_to_n(self):
        rng = np.random.default_rng(1)
        raw = rng.exponential(size=500) + 0.01
        w = normalize_weights(raw)
        assert abs(w.sum() - 500) <= 1e-10 * 500

    @given(st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=50, deadline=None)
    def test_scale_invariance(self, c):
        raw = np.array([0.2, 1.0, 3.5, 10.0])
        np.testing.assert_allclose(normalize_weights(c * raw),
                                   normalize_weights(raw), rtol=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidWeight):
            normalize_weights([1.0, 0.0])
        with pytest.raises(InvalidWeight):
            normalize_weights([1.0, -2.0])

    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            normalize_weights([])


class TestLogPseudoLikelihood:
    def test_theta_zero_gives_n_log_two(self):
        s = make_srs_sample(50, seed=3)
        w = normalize_weights(np.random.default_rng(4).uniform(1, 5, 50))
        ll = log_pseudo_likelihood(np.zeros(2), s, w)
        assert ll == pytest.approx(-50 * np.log(2), rel=1e-12)

    def test_single_unit(self):
        s = unit_sample([1], [[1.0]])
        assert log_pseudo_likelihood(np.zeros(1), s, np.ones(1)) \
            == pytest.approx(np.log(0.5), rel=1e-12)

    def test_two_unit_hand_value(self):
        s = unit_sample([1, 0], [[1.0], [1.0]])
        ll = log_pseudo_likelihood(np.array([2.0]), s, np.ones(2))
        assert ll == pytest.approx(-2.2538560220859454, rel=1e-10)

    def test_no_overflow_at_extreme_linear_predictor(self):
        s = unit_sample([1, 0], [[1.0], [1.0]])
        ll = log_pseudo_likelihood(np.array([800.0]), s, np.ones(2))
        assert np.isfinite(ll)
        assert ll == pytest.approx(-800.0, rel=1e-10)

    def test_equal_weights_match_iid_likelihood(self):
        s = make_srs_sample(100, seed=9)
        theta = np.array([0.4, -1.1])
        p = 1.0 / (1.0 + np.exp(-(s.X @ theta)))
        iid = np.sum(s.y * np.log(p) + (1 - s.y) * np.log1p(-p))
        assert log_pseudo_likelihood(theta, s, np.ones(100)) \
            == pytest.approx(iid, rel=1e-12)

    def test_dimension_mismatch(self):
        s = make_srs_sample(10)
        with pytest.raises(ShapeError):
            log_pseudo_likelihood(np.zeros(3), s, np.ones(10))
        with pytest.raises(ShapeError):
            log_pseudo_likelihood(np.zeros(2), s, np.ones(9))


def fd_gradient(f, theta, h=1e-5):
    g = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


class TestScore:
    def test_balanced_residuals_cancel(self):
        s = unit_sample([1, 0], [[1.0], [1.0]])
        np.testing.assert_allclose(score(np.zeros(1), s, np.ones(2)), [0.0],
                                   atol=1e-15)

    def test_single_unit_residual_times_x(self):
        s = unit_sample([1], [[1.0, 2.0]])
        np.testing.assert_allclose(score(np.zeros(2), s, np.ones(1)),
                                   [0.5, 1.0])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        s = make_srs_sample(10, seed=seed + 100)
        w = normalize_weights(rng.uniform(0.5, 3.0, 10))
        theta = rng.normal(scale=1.5, size=2)
        g = score(theta, s, w)
        g_fd = fd_gradient(lambda t: log_pseudo_likelihood(t, s, w), theta)
        np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-9)


class TestHessian:
    def test_quarter_at_zero(self):
        s = unit_sample([1], [[1.0]])
        np.testing.assert_allclose(hessian(np.zeros(1), s, np.ones(1)),
                                   [[-0.25]])

    def test_rank_one_outer_product(self):
        s = unit_sample([1], [[1.0, 2.0]])
        np.testing.assert_allclose(hessian(np.zeros(2), s, np.ones(1)),
                                   -0.25 * np.array([[1, 2], [2, 4]]))

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_differences_of_score(self, seed):
        rng = np.random.default_rng(seed)
        s = make_srs_sample(15, seed=seed + 200)
        w = normalize_weights(rng.uniform(0.5, 3.0, 15))
        theta = rng.normal(scale=1.0, size=2)
        H = hessian(theta, s, w)
        h = 1e-5
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            col = (score(theta + e, s, w) - score(theta - e, s, w)) / (2 * h)
            np.testing.assert_allclose(H[:, j], col, rtol=1e-5, atol=1e-8)

    def test_symmetric_and_nsd(self):
        rng = np.random.default_rng(7)
        s = make_srs_sample(50, seed=77)
        w = normalize_weights(rng.uniform(0.2, 4.0, 50))
        H = hessian(rng.normal(size=2), s, w)
        assert np.array_equal(H, H.T)
        assert np.linalg.eigvalsh(H).max() <= 1e-10


class TestSurveySample:
    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            SurveySample(y=np.array([]), X=np.empty((0, 1)),
                         weight=np.array([]), stratum_id=np.array([]),
                         psu_id=np.array([]))

    def test_rejects_nonbinary_outcome(self):
        with pytest.raises(ShapeError):
            unit_sample([2], [[1.0]])

    def test_rejects_zero_weight(self):
        with pytest.raises(InvalidWeight):
            unit_sample([1], [[1.0]], w=0.0)


class TestFitMle:
    def test_recovers_coefficients_at_large_n(self):
        s = make_srs_sample(50000, seed=5)
        theta = fit_mle(s)
        np.testing.assert_allclose(theta, [0.3, 0.8], atol=0.05)

    def test_score_is_zero_at_optimum(self):
        s = make_srs_sample(500, seed=6)
        theta = fit_mle(s)
        np.testing.assert_allclose(score(theta, s, np.ones(500)),
                                   np.zeros(2), atol=1e-7)

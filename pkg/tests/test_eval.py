import math

import numpy as np
import pytest

from svyadjust import (DrawsMatrix, ScenarioConfig, chi2_quantile,
                       joint_covered, marginal_interval, run_realization,
                       run_scenario)
from svyadjust.errors import ConfigError, ShapeError, SingularCovariance


def draws_of(arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    return DrawsMatrix(draws=arr,
                       param_names=[f"theta_{j}" for j in range(arr.shape[1])])


class TestMarginalInterval:
    def test_grid_quantiles(self):
        # 0..100 inclusive: linear-interpolation quantiles land on 5 and 95
        d = draws_of(np.arange(101.0)[:, None])
        iv = marginal_interval(d, level=0.9)
        np.testing.assert_allclose(iv.lower, [5.0])
        np.testing.assert_allclose(iv.upper, [95.0])
        np.testing.assert_allclose(iv.width, [90.0])

    def test_constant_draws_zero_width(self):
        d = draws_of(np.full((200, 2), 3.7))
        iv = marginal_interval(d)
        np.testing.assert_allclose(iv.width, 0.0)
        assert iv.covered([3.7, 3.7]).all()
        assert not iv.covered([3.7, 3.8])[1]

    def test_standard_normal_quantiles(self):
        rng = np.random.default_rng(0)
        d = draws_of(rng.standard_normal((100000, 1)))
        iv = marginal_interval(d, level=0.9)
        assert abs(iv.lower[0] + 1.6448536269514722) <= 0.02
        assert abs(iv.upper[0] - 1.6448536269514722) <= 0.02

    def test_coverage_indicator(self):
        d = draws_of(np.arange(101.0)[:, None])
        iv = marginal_interval(d, level=0.9)
        assert iv.covered([50.0])[0]
        assert not iv.covered([96.0])[0]

    def test_too_few_draws(self):
        with pytest.raises(ShapeError):
            marginal_interval(draws_of(np.zeros((99, 1))))

    def test_bad_level(self):
        d = draws_of(np.zeros((200, 1)))
        with pytest.raises(ConfigError):
            marginal_interval(d, level=1.0)


class TestChi2Quantile:
    def test_df2_closed_form(self):
        assert chi2_quantile(2, 0.9) == pytest.approx(4.605170185988091,
                                                      abs=1e-12)
        assert chi2_quantile(2, 0.5) == pytest.approx(1.3862943611198906,
                                                      abs=1e-12)

    def test_df1_matches_normal_quantile_squared(self):
        assert chi2_quantile(1, 0.9) == pytest.approx(2.705543454095404,
                                                      abs=1e-8)

    def test_df3_round_trip(self):
        from scipy.special import gammainc
        q = chi2_quantile(3, 0.75)
        assert gammainc(1.5, q / 2.0) == pytest.approx(0.75, abs=1e-9)

    def test_invalid_args(self):
        with pytest.raises(ConfigError):
            chi2_quantile(0, 0.5)
        with pytest.raises(ConfigError):
            chi2_quantile(2, 1.0)


class TestJointCovered:
    def test_center_always_covered(self):
        rng = np.random.default_rng(1)
        d = draws_of(rng.standard_normal((500, 2)))
        assert joint_covered(d, d.mean())

    def test_distant_point_not_covered(self):
        rng = np.random.default_rng(2)
        d = draws_of(rng.standard_normal((500, 2)))
        assert not joint_covered(d, [50.0, 50.0])

    def test_boundary_radius_spherical(self):
        # unit-covariance draws: the 90% boundary sits at radius
        # sqrt(chi2_quantile(2, .9)) from the mean
        rng = np.random.default_rng(3)
        Z = rng.standard_normal((2000, 2))
        Z -= Z.mean(axis=0)
        C = np.linalg.cholesky(np.cov(Z, rowvar=False))
        Z = Z @ np.linalg.inv(C).T
        d = draws_of(Z)
        r = math.sqrt(chi2_quantile(2, 0.9))
        assert joint_covered(d, [0.999 * r, 0.0])
        assert not joint_covered(d, [1.001 * r, 0.0])

    def test_frequency_calibration(self):
        # truth drawn from the same normal as the draws: indicator should
        # hit ~0.90 over many trials (binomial se ~ 0.0095 at 1000 trials)
        rng = np.random.default_rng(4)
        hits = 0
        trials = 1000
        for _ in range(trials):
            d = draws_of(rng.standard_normal((400, 2)))
            hits += joint_covered(d, rng.standard_normal(2))
        assert abs(hits / trials - 0.9) <= 0.03

    def test_singular_covariance(self):
        d = draws_of(np.tile([1.0, 2.0], (300, 1)))
        with pytest.raises(SingularCovariance):
            joint_covered(d, [1.0, 2.0])

    def test_shape_check(self):
        d = draws_of(np.random.default_rng(5).standard_normal((200, 2)))
        with pytest.raises(ShapeError):
            joint_covered(d, [0.0, 0.0, 0.0])


class TestRunScenario:
    def test_small_de1_run(self):
        cfg = ScenarioConfig(scenario="DE1", N=1000, n=100, seed=123,
                             M_realizations=4, R_replicates=30,
                             n_draws=300, n_warmup=200, n_chains=2)
        s = run_scenario(cfg)
        assert s.n_realizations == 4 and s.n_failed == 0
        assert 0.0 <= s.joint_coverage <= 1.0
        assert 0.0 <= s.joint_coverage_adj <= 1.0
        assert np.all(s.width > 0) and np.all(s.width_adj > 0)
        assert np.all(s.deff_theta > 0) and s.deff_y > 0
        row = s.to_row()
        assert row["scenario"] == "DE1" and row["failed"] == 0
        assert "width0_ratio" in row and "deff_y" in row

    def test_realizations_deterministic(self):
        cfg = ScenarioConfig(scenario="DE1", N=1000, n=100, seed=7,
                             M_realizations=2, R_replicates=20,
                             n_draws=200, n_warmup=100, n_chains=2)
        a = run_realization(cfg, 1)
        b = run_realization(cfg, 1)
        np.testing.assert_array_equal(a["truth"], b["truth"])
        np.testing.assert_array_equal(a["width"], b["width"])
        assert a["joint_covered"] == b["joint_covered"]

    def test_coverage_se_formula(self):
        cfg = ScenarioConfig(scenario="DE1", N=1000, n=100, seed=9,
                             M_realizations=4, R_replicates=20,
                             n_draws=200, n_warmup=100, n_chains=2)
        s = run_scenario(cfg)
        p = s.joint_coverage
        assert s.joint_coverage_se == pytest.approx(
            math.sqrt(p * (1 - p) / 4))

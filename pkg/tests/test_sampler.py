import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit

from svyadjust import (DrawsMatrix, PriorSpec, SamplerConfig, SurveySample,
                       diagnostics, fit_mle, log_pseudo_likelihood,
                       sample_pseudo_posterior)
from svyadjust.errors import (ConfigError, EmptyInput, InitFailure,
                              InsufficientChains)

from conftest import make_srs_sample


def small_cfg(seed=0, **kw):
    kw.setdefault("n_draws", 400)
    kw.setdefault("n_warmup", 200)
    kw.setdefault("n_chains", 2)
    return SamplerConfig(seed=seed, **kw)


class TestSamplePseudoPosterior:
    def test_seed_determinism(self, srs_sample):
        w = np.ones(srs_sample.n)
        prior = PriorSpec.default(2)
        a = sample_pseudo_posterior(srs_sample, w, prior, small_cfg(seed=7))
        b = sample_pseudo_posterior(srs_sample, w, prior, small_cfg(seed=7))
        assert np.array_equal(a.draws, b.draws)

    def test_different_seeds_differ(self, srs_sample):
        w = np.ones(srs_sample.n)
        prior = PriorSpec.default(2)
        a = sample_pseudo_posterior(srs_sample, w, prior, small_cfg(seed=1))
        b = sample_pseudo_posterior(srs_sample, w, prior, small_cfg(seed=2))
        assert not np.array_equal(a.draws, b.draws)

    def test_row_count_matches_config(self, srs_sample):
        w = np.ones(srs_sample.n)
        cfg = small_cfg(seed=3, n_draws=500, n_chains=3)
        d = sample_pseudo_posterior(srs_sample, w, PriorSpec.default(2), cfg)
        assert d.draws.shape == (500, 2)
        assert np.all(np.isfinite(d.draws))

    @pytest.mark.parametrize("algorithm",
                             ["hamiltonian", "adaptive_random_walk"])
    def test_posterior_mean_matches_newton_mle(self, algorithm):
        # flat-ish prior, large n: posterior mean ~= MLE within 3 MC SEs
        s = make_srs_sample(1000, seed=10)
        prior = PriorSpec(mean=np.zeros(2), sd=np.full(2, 100.0))
        cfg = SamplerConfig(n_draws=2000, n_warmup=500, n_chains=2, seed=11,
                            algorithm=algorithm)
        d = sample_pseudo_posterior(s, np.ones(1000), prior, cfg)
        mle = fit_mle(s)
        sd = d.draws.std(axis=0, ddof=1)
        mcse = sd / np.sqrt(np.minimum(d.diagnostics["ess"], d.M))
        assert np.all(np.abs(d.mean() - mle) <= 3 * mcse + 0.01 * sd)

    def test_quantiles_match_quadrature_oracle(self):
        # single y=1 observation, N(0,5) prior: 1-d posterior checkable by
        # numerical quadrature of the unnormalized density
        s = SurveySample(y=np.array([1.0]), X=np.array([[1.0]]),
                         weight=np.ones(1), stratum_id=np.zeros(1, dtype=int),
                         psu_id=np.zeros(1, dtype=int))
        prior = PriorSpec(mean=np.zeros(1), sd=np.array([5.0]))

        dens = lambda t: expit(t) * np.exp(-0.5 * (t / 5.0) ** 2)
        Z = quad(dens, -40, 40, limit=200)[0]
        cdf = lambda t: quad(dens, -40, t, limit=200)[0] / Z
        q_true = {p: brentq(lambda t: cdf(t) - p, -40, 40) for p in
                  (0.1, 0.25, 0.5, 0.75, 0.9)}

        cfg = SamplerConfig(n_draws=20000, n_warmup=500, n_chains=2, seed=12)
        d = sample_pseudo_posterior(s, np.ones(1), prior, cfg)
        for p, tq in q_true.items():
            # compare on the probability scale sigma(theta), tolerance 0.02
            got = expit(np.quantile(d.draws[:, 0], p))
            assert abs(got - expit(tq)) <= 0.02

    def test_equal_weight_target_equals_iid_posterior_density(self):
        s = make_srs_sample(50, seed=13)
        w = np.ones(50)
        for theta in (np.zeros(2), np.array([0.5, -1.0]), np.array([2., 2.])):
            p = expit(s.X @ theta)
            iid = float(np.sum(s.y * np.log(p) + (1 - s.y) * np.log1p(-p)))
            assert log_pseudo_likelihood(theta, s, w) \
                == pytest.approx(iid, rel=1e-12)

    def test_nonfinite_logdensity_at_init(self):
        # prior term overflows to -inf at any initial point
        s = make_srs_sample(10, seed=14)
        prior = PriorSpec(mean=np.array([1e300, 0.0]),
                          sd=np.array([1e-8, 5.0]))
        with pytest.raises(InitFailure):
            sample_pseudo_posterior(s, np.ones(10), prior,
                                    small_cfg(seed=14))

    def test_empty_sample_rejected_at_construction(self):
        with pytest.raises(EmptyInput):
            SurveySample(y=np.array([]), X=np.empty((0, 2)),
                         weight=np.array([]), stratum_id=np.array([]),
                         psu_id=np.array([]))

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SamplerConfig(n_draws=50)
        with pytest.raises(ConfigError):
            SamplerConfig(n_chains=1)
        with pytest.raises(ConfigError):
            SamplerConfig(algorithm="nuts")


class TestDiagnostics:
    def test_constant_chains_give_nan_rhat(self):
        c = np.ones((200, 1))
        diag = diagnostics([c, c.copy()])
        assert np.isnan(diag["rhat"][0])

    def test_iid_chains_converge(self):
        rng = np.random.default_rng(20)
        chains = [rng.standard_normal((2000, 2)) for _ in range(2)]
        diag = diagnostics(chains)
        assert np.all(diag["rhat"] < 1.02)
        assert np.all(diag["ess"] > 1000)

    def test_disjoint_chains_flagged(self):
        rng = np.random.default_rng(21)
        a = rng.standard_normal((1000, 1))
        b = rng.standard_normal((1000, 1)) + 10.0
        assert diagnostics([a, b])["rhat"][0] > 2.0

    def test_single_chain_rejected(self):
        with pytest.raises(InsufficientChains):
            diagnostics([np.zeros((100, 1))])

    def test_sampler_attaches_warning_for_bad_chains(self, srs_sample):
        # two chains far apart cannot happen here, but constant chains can:
        # check the status plumbing via the diagnostics dict directly
        w = np.ones(srs_sample.n)
        d = sample_pseudo_posterior(srs_sample, w, PriorSpec.default(2),
                                    small_cfg(seed=22))
        assert d.status in ("ok", "warning")
        assert "rhat" in d.diagnostics and "ess" in d.diagnostics
        assert 0.0 <= d.diagnostics["accept_rate"] <= 1.0

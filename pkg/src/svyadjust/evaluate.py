"""Coverage / width / design-effect evaluation across Monte Carlo
realizations of each sampling design.

For every realization: generate a population, fit the analyst's marginal
model (intercept + x1) on the full population by Newton-Raphson -- this
population fit is the coverage target -- draw a sample, sample the
pseudo-posterior, apply the replicate covariance correction, and record
marginal/joint coverage, interval widths, and design effects for both the
unadjusted and adjusted draws.  Summaries are paired: both variants are
computed from the same realizations.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc

from .adjust import (ReplicateConfig, adjust_draws, deff_mean, deff_params,
                     estimate_HJ)
from .designs import ScenarioConfig, draw_sample, generate_population
from .errors import ConfigError, ShapeError, SingularCovariance, SvyError
from .model import fit_mle, normalize_weights
from .sampler import (DrawsMatrix, PriorSpec, SamplerConfig,
                      sample_pseudo_posterior)

MAX_FAILED_FRACTION = 0.05


@dataclass(frozen=True)
class IntervalReport:
    """Per-parameter equal-tailed credible intervals from sample quantiles."""

    lower: np.ndarray
    upper: np.ndarray
    level: float

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def covered(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.lower <= truth) & (truth <= self.upper)


def marginal_interval(draws: DrawsMatrix, level: float = 0.9) -> IntervalReport:
    """Two-sided interval from the (alpha/2, 1-alpha/2) sample quantiles,
    linear-interpolation quantile definition."""
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must be in (0,1), got {level}")
    if draws.M < 100:
        raise ShapeError(f"need >= 100 draws, got {draws.M}")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws.draws, [alpha, 1.0 - alpha], axis=0)
    return IntervalReport(lower=lo, upper=hi, level=level)


def chi2_quantile(df: int, p: float) -> float:
    """Quantile of the chi-squared distribution.

    df=2 has the closed form -2 log(1-p); other df use a bracketed root
    find on the regularized incomplete gamma (abs tolerance 1e-10).
    """
    if df < 1:
        raise ConfigError(f"df must be >= 1, got {df}")
    if not 0.0 < p < 1.0:
        raise ConfigError(f"p must be in (0,1), got {p}")
    if df == 2:
        return -2.0 * math.log1p(-p)
    hi = df + 20.0 * math.sqrt(2.0 * df) + 100.0
    while gammainc(df / 2.0, hi / 2.0) < p:
        hi *= 2.0
    return brentq(lambda x: gammainc(df / 2.0, x / 2.0) - p,
                  0.0, hi, xtol=1e-10)


def joint_covered(draws: DrawsMatrix, truth, level: float = 0.9) -> bool:
    """True when truth falls inside the Mahalanobis ellipsoid of the draws
    at the chi-squared(d) quantile radius.

    Uses the draws' own sample mean and covariance (adjusted draws are
    assessed with their adjusted covariance, never the unadjusted one).
    """
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (draws.d,):
        raise ShapeError(f"truth has shape {truth.shape}, expected ({draws.d},)")
    center = draws.mean()
    cov = np.cov(draws.draws, rowvar=False)
    cov = np.atleast_2d(cov)
    try:
        delta = np.linalg.solve(cov, center - truth)
    except np.linalg.LinAlgError as e:
        raise SingularCovariance(str(e)) from e
    dist = float((center - truth) @ delta)
    return dist <= chi2_quantile(draws.d, level)


@dataclass
class SimulationSummary:
    """One scenario row: coverage, widths, and design effects, with the
    unadjusted and adjusted variants side by side."""

    scenario: str
    n_realizations: int
    n_failed: int
    marginal_coverage: np.ndarray       # (d,) unadjusted
    marginal_coverage_adj: np.ndarray
    joint_coverage: float
    joint_coverage_adj: float
    width: np.ndarray                   # (d,) mean width, unadjusted
    width_adj: np.ndarray
    width_ratio: np.ndarray             # (d,) mean per-realization adj/unadj
    deff_theta: np.ndarray              # (d,) mean parameter design effects
    deff_y: float
    level: float
    n: int
    R: int
    seed: int

    @property
    def joint_coverage_se(self) -> float:
        return _coverage_se(self.joint_coverage, self.n_realizations)

    @property
    def joint_coverage_adj_se(self) -> float:
        return _coverage_se(self.joint_coverage_adj, self.n_realizations)

    @property
    def marginal_coverage_se(self) -> np.ndarray:
        return np.array([_coverage_se(p, self.n_realizations)
                         for p in np.atleast_1d(self.marginal_coverage)])

    @property
    def marginal_coverage_adj_se(self) -> np.ndarray:
        return np.array([_coverage_se(p, self.n_realizations)
                         for p in np.atleast_1d(self.marginal_coverage_adj)])

    def to_row(self) -> dict:
        row = {"scenario": self.scenario, "n": self.n,
               "realizations": self.n_realizations, "failed": self.n_failed,
               "R": self.R, "seed": self.seed, "level": self.level}
        for j in range(len(self.marginal_coverage)):
            row[f"marg{j}_unadj"] = self.marginal_coverage[j]
            row[f"marg{j}_adj"] = self.marginal_coverage_adj[j]
        row["joint_unadj"] = self.joint_coverage
        row["joint_adj"] = self.joint_coverage_adj
        row["joint_unadj_se"] = self.joint_coverage_se
        row["joint_adj_se"] = self.joint_coverage_adj_se
        for j in range(len(self.width)):
            row[f"width{j}_unadj"] = self.width[j]
            row[f"width{j}_adj"] = self.width_adj[j]
            row[f"width{j}_ratio"] = self.width_ratio[j]
        for j in range(len(self.deff_theta)):
            row[f"deff_theta{j}"] = self.deff_theta[j]
        row["deff_y"] = self.deff_y
        return row


def _coverage_se(p: float, m: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / m)


def run_realization(cfg: ScenarioConfig, index: int, level: float = 0.9,
                    prior: PriorSpec | None = None) -> dict:
    """One simulation realization; deterministic given (cfg.seed, index)."""
    rng = np.random.default_rng([cfg.seed, index])
    pop = generate_population(cfg, rng)
    from .model import SurveySample
    pop_sample = SurveySample(y=pop.y, X=pop.design_matrix(),
                              weight=np.ones(pop.N),
                              stratum_id=np.zeros(pop.N, dtype=int),
                              psu_id=np.arange(pop.N))
    truth = fit_mle(pop_sample)

    sample = draw_sample(cfg.scenario, pop, cfg.n, rng)
    w = normalize_weights(sample.weight)
    if prior is None:
        prior = PriorSpec.default(sample.d)
    scfg = SamplerConfig(n_draws=cfg.n_draws, n_warmup=cfg.n_warmup,
                         n_chains=cfg.n_chains,
                         seed=int(rng.integers(2 ** 62)))
    draws = sample_pseudo_posterior(sample, w, prior, scfg)

    rep_cfg = ReplicateConfig(R=cfg.R_replicates,
                              seed=int(rng.integers(2 ** 62)))
    est = estimate_HJ(sample, draws.mean(), rep_cfg)
    adjusted = adjust_draws(draws, est)

    iv = marginal_interval(draws, level)
    iv_adj = marginal_interval(adjusted, level)
    return {
        "truth": truth,
        "marginal_covered": iv.covered(truth),
        "marginal_covered_adj": iv_adj.covered(truth),
        "joint_covered": joint_covered(draws, truth, level),
        "joint_covered_adj": joint_covered(adjusted, truth, level),
        "width": iv.width,
        "width_adj": iv_adj.width,
        "deff_theta": deff_params(est),
        "deff_y": deff_mean(sample),
        "sampler_status": draws.status,
    }


def run_scenario(cfg: ScenarioConfig, level: float = 0.9,
                 prior: PriorSpec | None = None,
                 progress=None) -> SimulationSummary:
    """Run cfg.M_realizations independent realizations and aggregate.

    Per-realization failures are excluded with a count; more than 5% of
    failures invalidates the run.  Fully deterministic given cfg.seed
    (realization i uses the stream (seed, i) regardless of run order).
    """
    results = []
    n_failed = 0
    for i in range(cfg.M_realizations):
        try:
            results.append(run_realization(cfg, i, level=level, prior=prior))
        except SvyError as e:
            n_failed += 1
            if n_failed > MAX_FAILED_FRACTION * cfg.M_realizations:
                raise SvyError(
                    f"{cfg.scenario}: more than "
                    f"{MAX_FAILED_FRACTION:.0%} of realizations failed "
                    f"(last: realization {i}: {e})") from e
        if progress is not None:
            progress(i + 1, cfg.M_realizations)

    m = len(results)
    stack = lambda key: np.stack([r[key] for r in results])
    return SimulationSummary(
        scenario=cfg.scenario,
        n_realizations=m,
        n_failed=n_failed,
        marginal_coverage=stack("marginal_covered").mean(axis=0),
        marginal_coverage_adj=stack("marginal_covered_adj").mean(axis=0),
        joint_coverage=float(np.mean([r["joint_covered"] for r in results])),
        joint_coverage_adj=float(np.mean([r["joint_covered_adj"]
                                          for r in results])),
        width=stack("width").mean(axis=0),
        width_adj=stack("width_adj").mean(axis=0),
        width_ratio=(stack("width_adj") / stack("width")).mean(axis=0),
        deff_theta=stack("deff_theta").mean(axis=0),
        deff_y=float(np.mean([r["deff_y"] for r in results])),
        level=level,
        n=cfg.n,
        R=cfg.R_replicates,
        seed=cfg.seed,
    )

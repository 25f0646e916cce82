"""MCMC sampler for the survey-weighted pseudo-posterior.

Target density: exp(log_pseudo_likelihood(theta)) * prior(theta), with an
independent Gaussian prior per coefficient.  The default kernel is
Hamiltonian leapfrog with a jittered path length and dual-averaging step
size adaptation during warmup; an adaptive random-walk Metropolis kernel
(targeting 0.234 acceptance) is available as a fallback.  All randomness
flows from the config seed; chains own independent streams derived from
(seed, chain_index), so results are bit-reproducible.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError, InitFailure, InsufficientChains
from .model import SurveySample

DIVERGENCE_THRESHOLD = 1000.0  # energy error treated as a divergent trajectory
MAX_DIVERGENT_FRACTION = 0.05
RHAT_WARN = 1.05


@dataclass(frozen=True)
class PriorSpec:
    """Independent Gaussian prior, one (mean, sd) per coefficient."""

    mean: np.ndarray
    sd: np.ndarray

    kind: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "sd", np.asarray(self.sd, dtype=float))
        if self.kind != "gaussian":
            raise ConfigError(f"unsupported prior kind {self.kind!r}")
        if np.any(self.sd <= 0):
            raise ConfigError("prior sd must be positive componentwise")

    @classmethod
    def default(cls, d: int) -> "PriorSpec":
        # weakly informative: N(0, 5^2) per coefficient
        return cls(mean=np.zeros(d), sd=np.full(d, 5.0))


@dataclass(frozen=True)
class SamplerConfig:
    n_draws: int = 2000
    n_warmup: int = 1000
    n_chains: int = 4
    seed: int = 0
    step_size: float = 0.1
    algorithm: str = "hamiltonian"
    max_leapfrog_steps: int = 16
    target_accept: float = 0.8

    def __post_init__(self):
        if self.n_draws < 100:
            raise ConfigError("n_draws must be >= 100")
        if self.n_warmup < 100:
            raise ConfigError("n_warmup must be >= 100")
        if self.n_chains < 2:
            raise ConfigError("n_chains must be >= 2")
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if self.algorithm not in ("hamiltonian", "adaptive_random_walk"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class DrawsMatrix:
    """M x d matrix of posterior draws (post-warmup, chains concatenated)."""

    draws: np.ndarray
    param_names: list[str]
    diagnostics: dict = field(default_factory=dict)
    status: str = "ok"

    @property
    def M(self) -> int:
        return self.draws.shape[0]

    @property
    def d(self) -> int:
        return self.draws.shape[1]

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)


def _make_log_post(sample: SurveySample, w, prior: PriorSpec):
    X, y = sample.X, sample.y
    w = np.asarray(w, dtype=float)
    pm, psd2 = prior.mean, prior.sd ** 2

    def log_post_and_grad(theta):
        mu = X @ theta
        p = expit(mu)
        # -logaddexp is the stable log-sigmoid
        ll = w @ (y * (-np.logaddexp(0.0, -mu))
                  + (1.0 - y) * (-np.logaddexp(0.0, mu)))
        grad = X.T @ (w * (y - p)) - (theta - pm) / psd2
        lp = ll - 0.5 * np.sum((theta - pm) ** 2 / psd2)
        return lp, grad

    return log_post_and_grad


def _run_hmc_chain(log_post_and_grad, d, cfg: SamplerConfig, n_keep, rng):
    theta = rng.uniform(-0.1, 0.1, size=d)
    lp, grad = log_post_and_grad(theta)
    if not np.isfinite(lp):
        raise InitFailure("log posterior non-finite at initialization")

    eps = cfg.step_size
    # dual averaging (Hoffman & Gelman) toward the target acceptance rate
    mu_da = np.log(10.0 * cfg.step_size)
    log_eps_bar, h_bar = np.log(eps), 0.0
    gamma, t0, kappa = 0.05, 10.0, 0.75

    n_iter = cfg.n_warmup + n_keep
    draws = np.empty((n_keep, d))
    n_accept = 0
    n_divergent = 0

    for it in range(n_iter):
        p0 = rng.standard_normal(d)
        n_steps = int(rng.integers(1, cfg.max_leapfrog_steps + 1))
        h0 = lp - 0.5 * (p0 @ p0)

        q, p = theta, p0
        lp_new, g = lp, grad
        diverged = False
        for _ in range(n_steps):
            p = p + 0.5 * eps * g
            q = q + eps * p
            lp_new, g = log_post_and_grad(q)
            if not np.isfinite(lp_new):
                diverged = True
                break
            p = p + 0.5 * eps * g
        if diverged:
            alpha = 0.0
        else:
            h1 = lp_new - 0.5 * (p @ p)
            delta = h1 - h0
            if delta < -DIVERGENCE_THRESHOLD:
                diverged = True
                alpha = 0.0
            else:
                alpha = min(1.0, np.exp(min(0.0, delta)))

        if rng.uniform() < alpha:
            theta, lp, grad = q, lp_new, g
            if it >= cfg.n_warmup:
                n_accept += 1
        if it >= cfg.n_warmup:
            if diverged:
                n_divergent += 1
            draws[it - cfg.n_warmup] = theta
        else:
            # warmup: adapt the step size, then freeze at its running average
            m = it + 1
            h_bar = (1 - 1 / (m + t0)) * h_bar \
                + (cfg.target_accept - alpha) / (m + t0)
            log_eps = mu_da - np.sqrt(m) / gamma * h_bar
            eta = m ** (-kappa)
            log_eps_bar = eta * log_eps + (1 - eta) * log_eps_bar
            eps = np.exp(log_eps)
            if it == cfg.n_warmup - 1:
                eps = np.exp(log_eps_bar)

    accept_rate = n_accept / n_keep
    return draws, accept_rate, n_divergent / n_keep


def _run_rw_chain(log_post_and_grad, d, cfg: SamplerConfig, n_keep, rng):
    theta = rng.uniform(-0.1, 0.1, size=d)
    lp, _ = log_post_and_grad(theta)
    if not np.isfinite(lp):
        raise InitFailure("log posterior non-finite at initialization")

    scale = cfg.step_size
    n_iter = cfg.n_warmup + n_keep
    draws = np.empty((n_keep, d))
    n_accept = 0
    for it in range(n_iter):
        prop = theta + scale * rng.standard_normal(d)
        lp_prop, _ = log_post_and_grad(prop)
        alpha = min(1.0, np.exp(min(0.0, lp_prop - lp)))
        if rng.uniform() < alpha:
            theta, lp = prop, lp_prop
            if it >= cfg.n_warmup:
                n_accept += 1
        if it >= cfg.n_warmup:
            draws[it - cfg.n_warmup] = theta
        else:
            # Robbins-Monro scale adaptation toward 0.234 acceptance
            scale *= np.exp((alpha - 0.234) / np.sqrt(it + 1))
    return draws, n_accept / n_keep, 0.0


def sample_pseudo_posterior(sample: SurveySample, w, prior: PriorSpec,
                            cfg: SamplerConfig) -> DrawsMatrix:
    """Draw cfg.n_draws samples (total, across chains) from the pseudo-posterior.

    Deterministic given cfg.seed.  Convergence diagnostics are attached to
    the result; if they fail their thresholds the draws are still returned
    with status "warning".
    """
    log_post_and_grad = _make_log_post(sample, w, prior)
    d = sample.d
    per_chain = -(-cfg.n_draws // cfg.n_chains)  # ceil
    runner = _run_hmc_chain if cfg.algorithm == "hamiltonian" else _run_rw_chain

    chains = []
    accept_rates = []
    divergent = []
    for c in range(cfg.n_chains):
        rng = np.random.default_rng([cfg.seed, c])
        draws_c, acc, div = runner(log_post_and_grad, d, cfg, per_chain, rng)
        chains.append(draws_c)
        accept_rates.append(acc)
        divergent.append(div)

    diag = diagnostics(chains)
    diag["accept_rate"] = float(np.mean(accept_rates))
    diag["divergent_fraction"] = float(np.mean(divergent))

    status = "ok"
    warnings = []
    if diag["divergent_fraction"] > MAX_DIVERGENT_FRACTION:
        status = "warning"
        warnings.append(f"divergent fraction {diag['divergent_fraction']:.3f}")
    rhat = np.asarray(diag["rhat"])
    if np.any(np.isnan(rhat)) or np.any(rhat > RHAT_WARN):
        status = "warning"
        warnings.append(f"rhat {np.round(rhat, 4).tolist()}")
    diag["warnings"] = warnings

    all_draws = np.concatenate(chains, axis=0)[:cfg.n_draws]
    names = [f"theta_{j}" for j in range(d)]
    return DrawsMatrix(draws=all_draws, param_names=names,
                       diagnostics=diag, status=status)


def diagnostics(draws_per_chain) -> dict:
    """Split R-hat and effective sample size per parameter, plus acceptance.

    Degenerate (zero-variance) chains yield NaN R-hat rather than an error.
    The acceptance rate is estimated as the fraction of iterations where the
    chain moved.
    """
    chains = [np.atleast_2d(np.asarray(c, dtype=float)) for c in draws_per_chain]
    if len(chains) < 2:
        raise InsufficientChains("diagnostics require >= 2 chains")
    m = min(c.shape[0] for c in chains)
    if any(c.shape[0] != m for c in chains):
        chains = [c[:m] for c in chains]
    d = chains[0].shape[1]

    # split each chain in half
    half = m // 2
    seqs = []
    for c in chains:
        seqs.append(c[:half])
        seqs.append(c[half:2 * half])
    seqs = np.stack(seqs)  # (2C, half, d)

    chain_means = seqs.mean(axis=1)
    chain_vars = seqs.var(axis=1, ddof=1)
    W = chain_vars.mean(axis=0)
    B = half * chain_means.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_plus = (half - 1) / half * W + B / half
        rhat = np.sqrt(var_plus / W)
    rhat = np.where(W > 0, rhat, np.nan)

    ess = np.array([_ess_param(seqs[:, :, j]) for j in range(d)])

    moved = [np.any(np.diff(c, axis=0) != 0, axis=1).mean() for c in chains]
    return {"rhat": rhat, "ess": ess, "accept_rate": float(np.mean(moved))}


def _ess_param(seqs) -> float:
    """Effective sample size via FFT autocorrelation with Geyer truncation."""
    n_chain, m = seqs.shape
    total = n_chain * m
    W = seqs.var(axis=1, ddof=1).mean()
    var_plus = (m - 1) / m * W + seqs.mean(axis=1).var(ddof=1)
    if not var_plus > 0:
        return float("nan")

    acov = np.zeros(m)
    for c in range(n_chain):
        x = seqs[c] - seqs[c].mean()
        nfft = int(2 ** np.ceil(np.log2(2 * m)))
        f = np.fft.rfft(x, nfft)
        ac = np.fft.irfft(f * np.conjugate(f), nfft)[:m].real / m
        acov += ac
    acov /= n_chain

    rho = 1.0 - (W - acov) / var_plus
    # Geyer initial monotone positive sequence on pair sums
    tau = 1.0
    prev_pair = float("inf")
    t = 1
    while t + 1 < m:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        pair = min(pair, prev_pair)
        tau += 2.0 * pair
        prev_pair = pair
        t += 2
    return float(min(total, total / tau))

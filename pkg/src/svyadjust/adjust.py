"""Replicate-based covariance correction for pseudo-posterior draws.

The asymptotic covariance of the pseudo-posterior is H^{-1}, but the
correct (design-aware) covariance of the point estimator is the sandwich
H^{-1} J H^{-1}, where J is the variance of the weighted score under the
joint population/design distribution.  The correction:

  1. resamples half the PSUs within each stratum (SRSWOR), doubling the
     retained weights and renormalizing to the original sample size;
  2. estimates H as the replicate average of negated weighted Hessians and
     J as the replicate covariance of weighted score totals, both evaluated
     at the posterior mean;
  3. projects each centered draw by R2^{-1} R1, where R1'R1 = H^{-1}JH^{-1}
     and R2'R2 = H^{-1} are upper Cholesky factors.

When J = H (e.g. simple random sampling of independent units, where
Bartlett's second identity holds) the projection is the identity map.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (NonPDHessian, NonPDMatrix, ReplicateFailure, ShapeError,
                     SingletonStratum)
from .model import SurveySample, hessian, score
from .sampler import DrawsMatrix


def cholesky(M) -> np.ndarray:
    """Upper-triangular R with R'R = M and positive diagonal.

    Raises NonPDMatrix (with the failing pivot index) when M is not
    positive definite.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-8, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ShapeError("matrix is not symmetric")
    d = M.shape[0]
    R = np.zeros((d, d))
    for j in range(d):
        s = M[j, j] - R[:j, j] @ R[:j, j]
        if s <= 0:
            raise NonPDMatrix(j)
        R[j, j] = np.sqrt(s)
        if j + 1 < d:
            R[j, j + 1:] = (M[j, j + 1:] - R[:j, j] @ R[:j, j + 1:]) / R[j, j]
    return R


@dataclass(frozen=True)
class ReplicateConfig:
    """Half-sample PSU replication settings.  Default R = 100 replicates."""

    R: int = 100
    seed: int = 0

    #: fraction of PSUs kept per stratum; fixed at one-half
    fraction: float = 0.5

    def __post_init__(self):
        if self.R < 2:
            raise ShapeError("need R >= 2 replicates for a covariance")
        if self.fraction != 0.5:
            raise ShapeError("only half-sampling is supported")


@dataclass
class SandwichEstimates:
    """Curvature/score-variance estimates and their Cholesky factors.

    H_hat and J_hat are totals (order n), matching the scale of the
    log pseudo-likelihood, so H_hat^{-1} matches the pseudo-posterior
    covariance directly.
    """

    H_hat: np.ndarray
    J_hat: np.ndarray

    def __post_init__(self):
        self.H_hat = np.asarray(self.H_hat, dtype=float)
        self.J_hat = np.asarray(self.J_hat, dtype=float)
        try:
            R_H = cholesky(self.H_hat)
        except NonPDMatrix as e:
            raise NonPDHessian(f"H_hat is not positive definite (pivot "
                               f"{e.pivot_index})") from e
        d = self.H_hat.shape[0]
        eye = np.eye(d)
        Rinv = solve_triangular(R_H, eye)
        self.H_inv = Rinv @ Rinv.T
        self.sandwich = self.H_inv @ self.J_hat @ self.H_inv
        self.sandwich = 0.5 * (self.sandwich + self.sandwich.T)
        self._R1 = None
        self._R2 = None

    @property
    def d(self) -> int:
        return self.H_hat.shape[0]

    @property
    def R1(self) -> np.ndarray:
        """Upper factor of the sandwich: R1'R1 = H^{-1} J H^{-1}."""
        if self._R1 is None:
            self._R1 = cholesky(self.sandwich)
        return self._R1

    @property
    def R2(self) -> np.ndarray:
        """Upper factor of the pseudo-posterior covariance: R2'R2 = H^{-1}."""
        if self._R2 is None:
            self._R2 = cholesky(self.H_inv)
        return self._R2

    @property
    def projection(self) -> np.ndarray:
        """A = R2^{-1} R1, applied to centered row-vector draws."""
        return solve_triangular(self.R2, self.R1)


def resample_replicate(sample: SurveySample, rng) -> SurveySample:
    """One half-sample PSU replicate.

    Per stratum k with J_k PSUs: keep floor(J_k/2) PSUs (at least one) by
    SRSWOR, take all their units, and multiply retained raw weights by
    J_k / floor(J_k/2) (exactly 2 when J_k is even).  The combined weights
    are then renormalized to sum to the ORIGINAL sample size n.
    """
    keep = np.zeros(sample.n, dtype=bool)
    factor = np.zeros(sample.n)
    for k in np.unique(sample.stratum_id):
        in_k = sample.stratum_id == k
        psus = np.unique(sample.psu_id[in_k])
        J_k = psus.size
        if J_k < 2:
            raise SingletonStratum(k)
        m = J_k // 2
        chosen = rng.choice(psus, size=m, replace=False)
        sel = in_k & np.isin(sample.psu_id, chosen)
        keep |= sel
        factor[sel] = J_k / m

    w_hat = sample.weight[keep] * factor[keep]
    w_tilde = w_hat * (sample.n / w_hat.sum())
    return SurveySample(y=sample.y[keep], X=sample.X[keep],
                        weight=w_tilde,
                        stratum_id=sample.stratum_id[keep],
                        psu_id=sample.psu_id[keep])


def estimate_HJ(sample: SurveySample, theta_bar, cfg: ReplicateConfig,
                h_source: str = "replicate") -> SandwichEstimates:
    """Estimate H and J at the posterior mean via half-sample replication.

    H_hat is the replicate average of -sum_l w_l * hessian contributions
    (h_source="replicate", the default) or the plug-in value on the original
    sample (h_source="plugin"); both are consistent.  J_hat is the sample
    covariance of the replicate weighted score totals.  Deterministic given
    cfg.seed: replicate r uses the stream (seed, r).
    """
    theta_bar = np.asarray(theta_bar, dtype=float)
    if theta_bar.shape != (sample.d,):
        raise ShapeError(f"theta_bar has shape {theta_bar.shape}, "
                         f"expected ({sample.d},)")
    if h_source not in ("replicate", "plugin"):
        raise ShapeError(f"unknown h_source {h_source!r}")

    d = sample.d
    h_sum = np.zeros((d, d))
    j_all = np.empty((cfg.R, d))
    for r in range(cfg.R):
        rng = np.random.default_rng([cfg.seed, r])
        rep = resample_replicate(sample, rng)
        h_r = -hessian(theta_bar, rep, rep.weight)
        j_r = score(theta_bar, rep, rep.weight)
        if not (np.all(np.isfinite(h_r)) and np.all(np.isfinite(j_r))):
            raise ReplicateFailure(r)
        h_sum += h_r
        j_all[r] = j_r

    if h_source == "replicate":
        H_hat = h_sum / cfg.R
    else:
        from .model import normalize_weights
        H_hat = -hessian(theta_bar, sample,
                         normalize_weights(sample.weight))
    j_bar = j_all.mean(axis=0)
    dev = j_all - j_bar
    J_hat = dev.T @ dev / (cfg.R - 1)
    return SandwichEstimates(H_hat=H_hat, J_hat=0.5 * (J_hat + J_hat.T))


def adjust_draws(draws: DrawsMatrix, est: SandwichEstimates) -> DrawsMatrix:
    """Project centered draws by A = R2^{-1} R1 and re-add the mean.

    Row-vector convention: theta_a = (theta - theta_bar) A + theta_bar, so
    the sample covariance maps as A' Sigma A and the sample mean is
    preserved exactly.
    """
    if draws.d != est.d:
        raise ShapeError(f"draws have d={draws.d} but estimates have d={est.d}")
    theta_bar = draws.mean()
    A = est.projection
    adjusted = (draws.draws - theta_bar) @ A + theta_bar
    return DrawsMatrix(draws=adjusted, param_names=list(draws.param_names),
                       diagnostics=dict(draws.diagnostics), status=draws.status)


def deff_params(est: SandwichEstimates) -> np.ndarray:
    """Marginal design effect per parameter: diag(H^-1 J H^-1) / diag(H^-1)."""
    return np.diag(est.sandwich) / np.diag(est.H_inv)


def deff_mean(sample: SurveySample) -> float:
    """Design effect of the weighted (Hajek) mean of y.

    Numerator: stratified between-PSU with-replacement linearization of the
    Hajek mean's variance.  Denominator: the SRS variance estimate s^2_y/n
    with s^2_y the weighted estimate of the population variance.
    """
    w, y, n = sample.weight, sample.y, sample.n
    sw = w.sum()
    ybar = (w @ y) / sw
    u = w * (y - ybar) / sw

    var_design = 0.0
    for k in np.unique(sample.stratum_id):
        in_k = sample.stratum_id == k
        psus, inverse = np.unique(sample.psu_id[in_k], return_inverse=True)
        J_k = psus.size
        if J_k < 2:
            raise SingletonStratum(k)
        z = np.bincount(inverse, weights=u[in_k], minlength=J_k)
        var_design += J_k / (J_k - 1) * np.sum((z - z.mean()) ** 2)

    s2 = (w @ (y - ybar) ** 2) / sw * n / (n - 1)
    return float(var_design / (s2 / n))

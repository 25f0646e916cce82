"""Weighted logistic pseudo-likelihood with analytic score and Hessian.

The log pseudo-likelihood of a binary outcome under survey weighting is

    l(theta) = sum_i w_i [ y_i log p_i + (1 - y_i) log(1 - p_i) ],
    p_i = sigma(x_i . theta),

where the weights are normalized to sum to the sample size.  With all
weights equal to one this is the ordinary i.i.d. logistic log-likelihood.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import EmptyInput, InvalidWeight, ShapeError


@dataclass(frozen=True)
class SurveySample:
    """Observed microdata: outcome, design matrix, raw weights, design labels.

    X carries an explicit constant column for the intercept.  Weights are
    raw (proportional to inverse inclusion probabilities); normalize with
    :func:`normalize_weights` before fitting.  psu_id is unique within
    stratum_id.
    """

    y: np.ndarray
    X: np.ndarray
    weight: np.ndarray
    stratum_id: np.ndarray
    psu_id: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        weight = np.asarray(self.weight, dtype=float)
        stratum = np.asarray(self.stratum_id)
        psu = np.asarray(self.psu_id)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "stratum_id", stratum)
        object.__setattr__(self, "psu_id", psu)
        if y.size == 0:
            raise EmptyInput("sample has no rows")
        n = y.shape[0]
        if X.shape[0] != n or weight.shape[0] != n \
                or stratum.shape[0] != n or psu.shape[0] != n:
            raise ShapeError(
                f"inconsistent row counts: y={n}, X={X.shape[0]}, "
                f"weight={weight.shape[0]}, stratum={stratum.shape[0]}, "
                f"psu={psu.shape[0]}")
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise ShapeError("y must be binary (0/1)")
        if not np.all(np.isfinite(X)):
            raise ShapeError("X contains non-finite entries")
        bad = ~(np.isfinite(weight) & (weight > 0))
        if np.any(bad):
            raise InvalidWeight(
                f"nonpositive or non-finite weight at row(s) "
                f"{np.flatnonzero(bad)[:10].tolist()}")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def normalize_weights(raw, n=None):
    """Rescale positive raw weights so they sum to the sample size.

    Scale-invariant: multiplying every raw weight by a constant leaves the
    result unchanged.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise EmptyInput("empty weight vector")
    if not np.all(np.isfinite(raw) & (raw > 0)):
        raise InvalidWeight("weights must be strictly positive and finite")
    if n is None:
        n = raw.size
    elif n != raw.size:
        raise ShapeError(f"n={n} does not match len(raw)={raw.size}")
    return raw * (n / raw.sum())


def _log_sigmoid(mu):
    # -log(1 + exp(-mu)) without overflow for large |mu|
    return -np.logaddexp(0.0, -mu)


def _check_dims(theta, sample, w):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != sample.d:
        raise ShapeError(f"theta has shape {theta.shape}, expected ({sample.d},)")
    w = np.asarray(w, dtype=float)
    if w.shape != (sample.n,):
        raise ShapeError(f"weights have shape {w.shape}, expected ({sample.n},)")
    return theta, w


def log_pseudo_likelihood(theta, sample: SurveySample, w) -> float:
    """Weighted logistic log-likelihood sum_i w_i log p(y_i | x_i, theta)."""
    theta, w = _check_dims(theta, sample, w)
    mu = sample.X @ theta
    return float(w @ (sample.y * _log_sigmoid(mu)
                      + (1.0 - sample.y) * _log_sigmoid(-mu)))


def score(theta, sample: SurveySample, w) -> np.ndarray:
    """Gradient of the log pseudo-likelihood: sum_i w_i (y_i - p_i) x_i."""
    theta, w = _check_dims(theta, sample, w)
    p = expit(sample.X @ theta)
    return sample.X.T @ (w * (sample.y - p))


def hessian(theta, sample: SurveySample, w) -> np.ndarray:
    """Hessian of the log pseudo-likelihood: -sum_i w_i p_i (1-p_i) x_i x_i'.

    Symmetric by construction and negative semidefinite.
    """
    theta, w = _check_dims(theta, sample, w)
    p = expit(sample.X @ theta)
    v = w * p * (1.0 - p)
    H = -(sample.X.T * v) @ sample.X
    return 0.5 * (H + H.T)


def fit_mle(sample: SurveySample, w=None, tol=1e-10, max_iter=100) -> np.ndarray:
    """Newton-Raphson maximizer of the (weighted) logistic log-likelihood.

    Used as the direct-optimizer oracle for the MCMC sampler and to fit the
    population-level model that defines the coverage target in simulations.
    """
    if w is None:
        w = np.ones(sample.n)
    theta = np.zeros(sample.d)
    ll = log_pseudo_likelihood(theta, sample, w)
    for _ in range(max_iter):
        g = score(theta, sample, w)
        H = hessian(theta, sample, w)
        step = np.linalg.solve(H - 1e-12 * np.eye(sample.d), g)
        # step-halving keeps the concave objective increasing
        t = 1.0
        for _ in range(50):
            cand = theta - t * step
            ll_new = log_pseudo_likelihood(cand, sample, w)
            if ll_new >= ll - 1e-14:
                break
            t *= 0.5
        theta, ll_prev, ll = cand, ll, ll_new
        if np.max(np.abs(g)) < tol or abs(ll - ll_prev) < tol * (1 + abs(ll)):
            break
    return theta

import numpy as np
import pytest

from svyadjust import SurveySample


def make_srs_sample(n, d=2, seed=0, theta=None):
    """Equal-weight sample of independent units (singleton PSUs)."""
    rng = np.random.default_rng(seed)
    if theta is None:
        theta = np.array([0.3] + [0.8] * (d - 1))
    X = np.column_stack([np.ones(n), rng.standard_normal((n, d - 1))])
    p = 1.0 / (1.0 + np.exp(-(X @ theta)))
    y = (rng.uniform(size=n) < p).astype(float)
    return SurveySample(y=y, X=X, weight=np.ones(n),
                        stratum_id=np.zeros(n, dtype=int),
                        psu_id=np.arange(n))


def make_clustered_sample(n_clusters, cluster_size=5, seed=0):
    """DE5-style sample: every row within a cluster fully duplicated."""
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(n_clusters)
    p = 1.0 / (1.0 + np.exp(-x1))
    yc = (rng.uniform(size=n_clusters) < p).astype(float)
    rep = np.repeat(np.arange(n_clusters), cluster_size)
    X = np.column_stack([np.ones(rep.size), x1[rep]])
    return SurveySample(y=yc[rep], X=X, weight=np.ones(rep.size),
                        stratum_id=np.zeros(rep.size, dtype=int),
                        psu_id=rep)


@pytest.fixture
def srs_sample():
    return make_srs_sample(200, seed=42)

"""Synthetic populations and the six sampling designs used in the
simulation study: DE1, DE5 (equal-probability cluster designs), PPS1,
SPPS1 (one-stage unequal-probability designs), PPS3, SPPS3 (three-stage
designs with PSU-level dependence).

Population models (binary outcome, logistic link):

  DE family:   mu = 0.0  + 1.0*x1
  PPS family:  mu = -1.88 + 1.0*x1 + 0.5*x2
  PPS3 family: mu = -1.88 + 1.0*x1 + 0.25*x2 + 0.25*z2[psu]

x1 ~ N(0,1); x2 and z2 ~ Exponential(mean 5).  The size measure used for
selection is x2 - min(x2) + 1, so all sizes are >= 1.  The analyst's model
is always the two-parameter marginal fit on (1, x1); x2 and z2 are design
or nuisance variables only.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import CertaintyUnit, ConfigError
from .model import SurveySample

SCENARIOS = ("DE1", "DE5", "PPS1", "SPPS1", "PPS3", "SPPS3")

CLUSTER_SIZE = 5          # DE designs: units per cluster
N_STRATA = 10             # SPPS designs: equal-count strata
HH_PER_PSU = 10           # PPS3 structure
PERSONS_PER_HH = 3


@dataclass(frozen=True)
class Population:
    """A finite population with optional design structure."""

    y: np.ndarray
    x1: np.ndarray
    mu: np.ndarray
    x2: np.ndarray | None = None
    z2: np.ndarray | None = None        # PSU-level effects (PPS3 family)
    psu_id: np.ndarray | None = None
    hh_id: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.y.shape[0]

    @property
    def size_measure(self) -> np.ndarray:
        if self.x2 is None:
            raise ConfigError("population has no size variable x2")
        return self.x2 - self.x2.min() + 1.0

    def design_matrix(self) -> np.ndarray:
        """Analyst's design matrix: intercept plus x1."""
        return np.column_stack([np.ones(self.N), self.x1])


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    N: int = 5000
    n: int = 200
    seed: int = 0
    M_realizations: int = 100
    R_replicates: int = 100
    # sampler settings carried along so the harness is one config object
    n_draws: int = 1000
    n_warmup: int = 500
    n_chains: int = 2

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"valid names: {', '.join(SCENARIOS)}")
        _check_divisibility(self.scenario, self.N, self.n)


def default_population_size(scenario: str) -> int:
    # study-scale populations: 5000 for DE and one-stage PPS, 6000 three-stage
    return 6000 if scenario in ("PPS3", "SPPS3") else 5000


def _check_divisibility(scenario, N, n):
    if scenario in ("DE1", "DE5"):
        if N % CLUSTER_SIZE or n % CLUSTER_SIZE:
            raise ConfigError(f"{scenario}: N and n must be divisible by "
                              f"{CLUSTER_SIZE} (got N={N}, n={n})")
    elif scenario == "SPPS1":
        if N % N_STRATA or n % N_STRATA:
            raise ConfigError(f"SPPS1: N and n must be divisible by "
                              f"{N_STRATA} (got N={N}, n={n})")
    elif scenario in ("PPS3", "SPPS3"):
        per_psu = HH_PER_PSU * PERSONS_PER_HH
        if N % per_psu:
            raise ConfigError(f"{scenario}: N must be divisible by {per_psu}")
        if n % (HH_PER_PSU // 2):
            raise ConfigError(f"{scenario}: n must be divisible by "
                              f"{HH_PER_PSU // 2}")
        if scenario == "SPPS3":
            n_psu_pop = N // per_psu
            n_psu_sample = n // (HH_PER_PSU // 2)
            if n_psu_pop % N_STRATA or n_psu_sample % N_STRATA:
                raise ConfigError(
                    "SPPS3: PSU counts must be divisible by "
                    f"{N_STRATA} (population {n_psu_pop}, sample {n_psu_sample})")


def generate_population(cfg: ScenarioConfig, rng) -> Population:
    N = cfg.N
    if cfg.scenario == "DE1":
        x1 = rng.standard_normal(N)
        mu = 0.0 + 1.0 * x1
        y = (rng.uniform(size=N) < expit(mu)).astype(float)
        psu = np.arange(N) // CLUSTER_SIZE
        return Population(y=y, x1=x1, mu=mu, psu_id=psu)

    if cfg.scenario == "DE5":
        # complete within-cluster dependence: y and x1 replicated in clusters
        K = N // CLUSTER_SIZE
        x1c = rng.standard_normal(K)
        muc = 0.0 + 1.0 * x1c
        yc = (rng.uniform(size=K) < expit(muc)).astype(float)
        rep = np.repeat(np.arange(K), CLUSTER_SIZE)
        return Population(y=yc[rep], x1=x1c[rep], mu=muc[rep], psu_id=rep)

    if cfg.scenario in ("PPS1", "SPPS1"):
        x1 = rng.standard_normal(N)
        x2 = rng.exponential(scale=5.0, size=N)
        mu = -1.88 + 1.0 * x1 + 0.5 * x2
        y = (rng.uniform(size=N) < expit(mu)).astype(float)
        return Population(y=y, x1=x1, x2=x2, mu=mu)

    # PPS3 / SPPS3: PSUs of 10 households x 3 persons
    per_psu = HH_PER_PSU * PERSONS_PER_HH
    J = N // per_psu
    x1 = rng.standard_normal(N)
    x2 = rng.exponential(scale=5.0, size=N)
    z2 = rng.exponential(scale=5.0, size=J)
    psu = np.arange(N) // per_psu
    hh = np.arange(N) // PERSONS_PER_HH
    mu = -1.88 + 1.0 * x1 + 0.25 * x2 + 0.25 * z2[psu]
    y = (rng.uniform(size=N) < expit(mu)).astype(float)
    return Population(y=y, x1=x1, x2=x2, z2=z2, mu=mu, psu_id=psu, hh_id=hh)


def systematic_pps(sizes, n, rng) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-size PPS sample via systematic selection on a random frame order.

    Returns (selected indices, inclusion probabilities for all frame units).
    Inclusion probabilities are exactly pi_i = n * s_i / sum(s); any
    pi_i > 1 raises CertaintyUnit.
    """
    sizes = np.asarray(sizes, dtype=float)
    pi = n * sizes / sizes.sum()
    over = pi > 1.0 + 1e-12
    if np.any(over):
        raise CertaintyUnit(np.flatnonzero(over).tolist())
    perm = rng.permutation(sizes.size)
    cum = np.cumsum(pi[perm])
    points = rng.uniform() + np.arange(n)
    picked = np.searchsorted(cum, points, side="left")
    return np.sort(perm[picked]), pi


def draw_DE(pop: Population, n: int, rng) -> SurveySample:
    """One-stage cluster sample: n/5 clusters by SRSWOR, all members kept."""
    if n % CLUSTER_SIZE or pop.N % CLUSTER_SIZE:
        raise ConfigError("DE designs need N and n divisible by 5")
    K = pop.N // CLUSTER_SIZE
    chosen = rng.choice(K, size=n // CLUSTER_SIZE, replace=False)
    idx = np.flatnonzero(np.isin(pop.psu_id, chosen))
    weight = np.full(idx.size, pop.N / n)  # 1/pi with pi = n/N per unit
    return SurveySample(y=pop.y[idx], X=pop.design_matrix()[idx],
                        weight=weight,
                        stratum_id=np.zeros(idx.size, dtype=int),
                        psu_id=pop.psu_id[idx])


def draw_PPS1(pop: Population, n: int, rng) -> SurveySample:
    """One-stage PPS sample with pi_i proportional to the size measure."""
    idx, pi = systematic_pps(pop.size_measure, n, rng)
    return SurveySample(y=pop.y[idx], X=pop.design_matrix()[idx],
                        weight=1.0 / pi[idx],
                        stratum_id=np.zeros(idx.size, dtype=int),
                        psu_id=idx)


def draw_SPPS1(pop: Population, n: int, rng) -> SurveySample:
    """Stratified PPS: sort by size into 10 equal strata, n/10 units each."""
    if n % N_STRATA or pop.N % N_STRATA:
        raise ConfigError("SPPS1 needs N and n divisible by 10")
    sizes = pop.size_measure
    order = np.argsort(sizes, kind="stable")
    per_stratum_N = pop.N // N_STRATA
    per_stratum_n = n // N_STRATA

    rows, weights, strata = [], [], []
    for k in range(N_STRATA):
        frame = order[k * per_stratum_N:(k + 1) * per_stratum_N]
        try:
            sel, pi = systematic_pps(sizes[frame], per_stratum_n, rng)
        except CertaintyUnit as e:
            raise CertaintyUnit(frame[e.unit_ids].tolist()) from e
        rows.append(frame[sel])
        weights.append(1.0 / pi[sel])
        strata.append(np.full(per_stratum_n, k))
    idx = np.concatenate(rows)
    return SurveySample(y=pop.y[idx], X=pop.design_matrix()[idx],
                        weight=np.concatenate(weights),
                        stratum_id=np.concatenate(strata),
                        psu_id=idx)


def _three_stage_within_psu(pop: Population, psu, pi1, rng):
    """Stages 2-3 of the PPS3 family for one selected PSU.

    Stage 2: households rank-sorted by aggregate size, every other one from
    a random start (probability exactly 1/2 each).  Stage 3: one of the
    three persons per household, PPS by individual size.
    Returns (row indices, raw weights).
    """
    sizes = pop.size_measure
    members = np.flatnonzero(pop.psu_id == psu)
    hhs = np.unique(pop.hh_id[members])
    totals = np.array([sizes[pop.hh_id == h].sum() for h in hhs])
    # ties in household totals broken by fresh random keys
    order = np.lexsort((rng.uniform(size=hhs.size), totals))
    start = int(rng.integers(2))
    selected_hhs = hhs[order[start::2]]

    rows = np.empty(selected_hhs.size, dtype=int)
    w = np.empty(selected_hhs.size)
    for i, h in enumerate(selected_hhs):
        persons = np.flatnonzero(pop.hh_id == h)
        s = sizes[persons]
        p3 = s / s.sum()
        j = rng.choice(persons.size, p=p3)
        rows[i] = persons[j]
        w[i] = 1.0 / (pi1 * 0.5 * p3[j])
    return rows, w


def _psu_aggregate_sizes(pop: Population):
    sizes = pop.size_measure
    psus = np.unique(pop.psu_id)
    agg = np.bincount(pop.psu_id, weights=sizes)[psus]
    return psus, agg


def draw_PPS3(pop: Population, n: int, rng) -> SurveySample:
    """Three-stage design: PSUs by aggregate-size PPS, then 5 of 10
    households systematically along the size-sorted list, then 1 of 3
    persons by individual-size PPS."""
    if pop.hh_id is None:
        raise ConfigError("population lacks the PSU/household structure")
    n_psu = n // (HH_PER_PSU // 2)
    if n_psu * (HH_PER_PSU // 2) != n:
        raise ConfigError("PPS3 needs n divisible by 5")
    psus, agg = _psu_aggregate_sizes(pop)
    sel, pi1 = systematic_pps(agg, n_psu, rng)

    rows, weights = [], []
    for s in sel:
        r, w = _three_stage_within_psu(pop, psus[s], pi1[s], rng)
        rows.append(r)
        weights.append(w)
    idx = np.concatenate(rows)
    return SurveySample(y=pop.y[idx], X=pop.design_matrix()[idx],
                        weight=np.concatenate(weights),
                        stratum_id=np.zeros(idx.size, dtype=int),
                        psu_id=pop.psu_id[idx])


def draw_SPPS3(pop: Population, n: int, rng) -> SurveySample:
    """PPS3 with a first-stage stratification: PSUs sorted by aggregate
    size into 10 equal strata, PPS within each stratum."""
    if pop.hh_id is None:
        raise ConfigError("population lacks the PSU/household structure")
    n_psu = n // (HH_PER_PSU // 2)
    psus, agg = _psu_aggregate_sizes(pop)
    if psus.size % N_STRATA or n_psu % N_STRATA:
        raise ConfigError("SPPS3 needs PSU counts divisible by 10")
    per_stratum_J = psus.size // N_STRATA
    per_stratum_m = n_psu // N_STRATA
    order = np.argsort(agg, kind="stable")

    rows, weights, strata = [], [], []
    for k in range(N_STRATA):
        frame = order[k * per_stratum_J:(k + 1) * per_stratum_J]
        sel, pi1 = systematic_pps(agg[frame], per_stratum_m, rng)
        for s in sel:
            r, w = _three_stage_within_psu(pop, psus[frame[s]], pi1[s], rng)
            rows.append(r)
            weights.append(w)
            strata.append(np.full(r.size, k))
    idx = np.concatenate(rows)
    return SurveySample(y=pop.y[idx], X=pop.design_matrix()[idx],
                        weight=np.concatenate(weights),
                        stratum_id=np.concatenate(strata),
                        psu_id=pop.psu_id[idx])


_DRAWERS = {"DE1": draw_DE, "DE5": draw_DE, "PPS1": draw_PPS1,
            "SPPS1": draw_SPPS1, "PPS3": draw_PPS3, "SPPS3": draw_SPPS3}


def draw_sample(scenario: str, pop: Population, n: int, rng) -> SurveySample:
    if scenario not in _DRAWERS:
        raise ConfigError(f"unknown scenario {scenario!r}; "
                          f"valid names: {', '.join(SCENARIOS)}")
    return _DRAWERS[scenario](pop, n, rng)

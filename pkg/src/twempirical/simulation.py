"""Data generators and study runners for the simulation experiments.

Two studies are provided:

* ``run_approx_study``: largest roots of independent singular Wishart pairs
  give an empirical benchmark CDF; each fitting method is applied to a
  K-subsample and scored by its KS distance to the benchmark.
* ``run_pvalue_study``: for simulated datasets, Tracy-Widom p-values are
  paired with plain permutation p-values.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import DegenerateNullError, FitError, ValidationError
from .estimator import parallel_map, rng_for, run_estimator
from .fitting import FIT_METHODS, RootSample, fit
from .linalg import DEFAULT_RANK_TOL, DataMatrix, DoubleWishartPair, largest_root
from .problems import CcaSpec, CovEqualSpec, PcevSpec
from .shrinkage import build_shrunk_pair

SCENARIOS = ("approx_cdf", "approx_cdf_shrunk", "covequal", "cca", "pcev")
PVALUE_SCENARIOS = ("covequal", "cca", "pcev")
PCEV_SIGNAL_COLUMNS = 50
CCA_SIGNAL_PAIRS = 2

MIN_APPROX_REPS = 100

STREAM_BENCH = 2
STREAM_SUBSAMPLE = 3
STREAM_DATA = 4
STREAM_SEED = 5


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one simulation scenario.

    ``n`` is the degrees of freedom of B for the ``approx_cdf`` scenarios and
    the sample size otherwise (defaults 4 and 100).  For CCA, ``p`` is the
    width of the high-dimensional side and ``q`` that of the projector side.
    """

    scenario: str = "approx_cdf"
    p: int = 200
    q: int = 20
    n: int | None = None
    m: int = 96
    rho: float = 0.0
    r2: float = 0.0
    K: int = 100
    reps: int = 1000
    n_perm: int = 500
    seed: int = 0
    fit_method: str = "mm"
    threads: int = 1
    rank_tolerance: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValidationError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.n is None:
            object.__setattr__(self, "n", 4 if self.is_approx else 100)
        for name in ("p", "q", "n", "m", "K", "reps", "n_perm"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError(f"rho must lie in [0, 1), got {self.rho}")
        if not 0.0 <= self.r2 < 1.0:
            raise ValidationError(f"r2 must lie in [0, 1), got {self.r2}")
        if self.fit_method not in FIT_METHODS:
            raise ValidationError(f"unknown fit method {self.fit_method!r}")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")

    @property
    def is_approx(self) -> bool:
        return self.scenario.startswith("approx")

    def to_dict(self) -> dict:
        return asdict(self)


def _scale_root(p, Sigma):
    if Sigma is None:
        return None
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    if Sigma.shape != (p, p):
        raise ValidationError(f"Sigma must be {p}x{p}")
    if not np.allclose(Sigma, Sigma.T):
        raise ValidationError("Sigma must be symmetric")
    w, u = np.linalg.eigh(Sigma)
    if w[0] < -1e-10 * max(w[-1], 1.0):
        raise ValidationError("Sigma is not positive semi-definite")
    return np.sqrt(np.clip(w, 0.0, None))[:, None] * u.T


def wishart_factor(p: int, df: int, Sigma=None, rng=None) -> np.ndarray:
    """A df x p matrix Z with rows iid N_p(0, Sigma), so that Z^T Z ~ W_p(Sigma, df)."""
    if df < 1 or p < 1:
        raise ValidationError("p and df must be positive")
    rng = np.random.default_rng(rng)
    root = _scale_root(p, Sigma)
    z = rng.standard_normal((df, p))
    return z if root is None else z @ root


def gen_wishart(p: int, df: int, Sigma=None, rng=None) -> np.ndarray:
    """A draw from W_p(Sigma, df) as ``sum_i Z_i^T Z_i``."""
    z = wishart_factor(p, df, Sigma, rng)
    return z.T @ z


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _ar1_sample(n, p, rho, rng):
    e = rng.standard_normal((n, p))
    if rho == 0:
        return e
    y = np.empty_like(e)
    y[:, 0] = e[:, 0]
    c = np.sqrt(1.0 - rho**2)
    for j in range(1, p):
        y[:, j] = rho * y[:, j - 1] + c * e[:, j]
    return y


def gen_scenario_data(config: ScenarioConfig, rng):
    """One simulated dataset: a problem spec, or a pair for the approx scenarios."""
    rng = np.random.default_rng(rng)
    if config.is_approx:
        za = wishart_factor(config.p, config.m, rng=rng)
        zb = wishart_factor(config.p, config.n, rng=rng)
        pair = DoubleWishartPair.from_factors(za, zb, rank_tolerance=config.rank_tolerance,
                                              label=config.scenario, df_a=config.m, df_b=config.n)
        if config.scenario == "approx_cdf_shrunk":
            pair = build_shrunk_pair(pair, za)
        return pair
    n, p = config.n, config.p
    if config.scenario == "covequal":
        x = rng.standard_normal((n, p))
        y = _ar1_sample(n, p, config.rho, rng)
        return CovEqualSpec(DataMatrix(x), DataMatrix(y))
    if config.scenario == "cca":
        y = rng.standard_normal((n, config.q))
        x = rng.standard_normal((n, p))
        k = min(CCA_SIGNAL_PAIRS, p, config.q)
        x[:, :k] = config.rho * y[:, :k] + np.sqrt(1.0 - config.rho**2) * x[:, :k]
        return CcaSpec(DataMatrix(x), DataMatrix(y))
    if n % 2:
        raise ValidationError("the PCEV scenario needs an even sample size")
    x = np.repeat([0.0, 1.0], n // 2)[:, None]
    beta = np.sqrt(config.r2 / (1.0 - config.r2))
    y = rng.standard_normal((n, p))
    y[:, :min(PCEV_SIGNAL_COLUMNS, p)] += beta * x
    return PcevSpec(DataMatrix(y), DataMatrix(x, ("X",)))


def ks_distance(sample, cdf) -> float:
    """Sup distance between the empirical CDF of ``sample`` and a continuous ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


@dataclass(frozen=True, eq=False)
class ApproxStudy:
    config: ScenarioConfig
    benchmark: np.ndarray
    subsample: np.ndarray
    fits: dict
    ks: dict
    excluded: int
    notes: tuple = ()

    def table(self) -> dict:
        grid = self.benchmark
        out = {"grid": grid, "empirical": np.arange(1, len(grid) + 1) / len(grid)}
        for method in FIT_METHODS:
            out[method] = self.fits[method].cdf(grid)
        return out

    def write_csv(self, fh):
        _write_columns(fh, self.table())


def benchmark_roots(config: ScenarioConfig) -> list:
    def one(r):
        return largest_root(gen_scenario_data(config, rng_for(config.seed, STREAM_BENCH, r)))

    return parallel_map(one, range(config.reps), config.threads)


def run_approx_study(config: ScenarioConfig, roots: list | None = None) -> ApproxStudy:
    """Fit all four methods to K of ``reps`` simulated roots and score them by KS distance."""
    if not config.is_approx:
        raise ValidationError(f"scenario {config.scenario!r} is not an approximation study")
    if config.reps < MIN_APPROX_REPS:
        raise ValidationError(f"reps must be at least {MIN_APPROX_REPS} for a benchmark CDF")
    if config.K > config.reps:
        raise ValidationError("K cannot exceed reps")
    if roots is None:
        roots = benchmark_roots(config)
    sample = RootSample.from_roots(roots)
    bench = np.asarray(sample.logit_roots)
    k = min(config.K, len(bench))
    pick = rng_for(config.seed, STREAM_SUBSAMPLE, 0).choice(len(bench), size=k, replace=False)
    sub = RootSample(bench[np.sort(pick)])
    fits, notes = {}, []
    for method in FIT_METHODS:
        try:
            fits[method] = fit(sub, method)
        except FitError as err:
            fits[method] = err.fallback
            notes.append(str(err))
    ks = {method: ks_distance(bench, f.cdf) for method, f in fits.items()}
    return ApproxStudy(config, bench, np.asarray(sub.logit_roots), fits, ks, sample.excluded_count, tuple(notes))


@dataclass(frozen=True, eq=False)
class PValueStudy:
    config: ScenarioConfig
    lambda_obs: np.ndarray
    p_value_tw: np.ndarray
    p_value_perm: np.ndarray

    def table(self) -> dict:
        return {"sim": np.arange(len(self.p_value_tw)), "lambda_obs": self.lambda_obs,
                "p_value_tw": self.p_value_tw, "p_value_perm": self.p_value_perm}

    def write_csv(self, fh):
        _write_columns(fh, self.table())


def sim_seed(config: ScenarioConfig, sim: int) -> int:
    return int(np.random.SeedSequence(config.seed, spawn_key=(STREAM_SEED, sim)).generate_state(1)[0])


def run_pvalue_study(config: ScenarioConfig) -> PValueStudy:
    """Paired Tracy-Widom and permutation p-values over ``reps`` simulated datasets."""
    if config.scenario not in PVALUE_SCENARIOS:
        raise ValidationError(f"scenario {config.scenario!r} is not a p-value study")

    def one(sim):
        spec = gen_scenario_data(config, rng_for(config.seed, STREAM_DATA, sim))
        try:
            res = run_estimator(spec, config.K, config.fit_method, sim_seed(config, sim),
                                n_perm=config.n_perm, rank_tolerance=config.rank_tolerance)
        except DegenerateNullError:
            return np.nan, np.nan, np.nan
        return res.lambda_obs, res.p_value_tw, res.p_value_perm

    rows = np.array(parallel_map(one, range(config.reps), config.threads), dtype=float).reshape(-1, 3)
    return PValueStudy(config, rows[:, 0], rows[:, 1], rows[:, 2])


def _write_columns(fh, columns: dict):
    writer = csv.writer(fh, lineterminator="\n")
    names = list(columns)
    writer.writerow(names)
    for row in zip(*(columns[c] for c in names)):
        writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def with_overrides(config: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(config, **kw)

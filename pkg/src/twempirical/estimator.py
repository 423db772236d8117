"""Tracy-Widom empirical estimator of the largest-root null distribution.

Permutation replicate ``k`` draws its randomness from
``SeedSequence(seed, spawn_key=(stream, k))``, so results do not depend on the
order or the number of threads used to evaluate replicates.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DegenerateNullError, FitError, ValidationError
from .fitting import MIN_FIT_SIZE, RootSample, fit
from .linalg import DEFAULT_RANK_TOL, LargestRoot, largest_root
from .problems import CcaSpec, build_pair, permute
from .shrinkage import build_shrunk_pair
from .tracywidom import TWLocationScale

DEFAULT_K = 100
MAX_CLIPPED_FRACTION = 0.2
STREAM_FIT = 0
STREAM_REFERENCE = 1
_P_MIN = np.finfo(float).tiny
_P_MAX = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    lambda_obs: float
    logit_obs: float
    p_value_tw: float
    fit: TWLocationScale
    K: int
    seed: int
    problem_label: str
    shrinkage_used: bool = False
    excluded_roots: int = 0
    p_value_perm: float | None = None
    n_perm_reference: int | None = None
    restrict: str = "A"
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["notes"] = list(self.notes)
        return out


def rng_for(seed: int, stream: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, k)))


def parallel_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]`` on a thread pool with BLAS pinned to one thread."""
    items = list(items)
    with threadpool_limits(limits=1):
        if threads <= 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))


def observed_root(spec, shrinkage=False, rank_tolerance=DEFAULT_RANK_TOL, restrict="A") -> LargestRoot:
    """Largest root of the double Wishart pair built from ``spec``."""
    if shrinkage and isinstance(spec, CcaSpec):
        raise ValidationError("shrinkage is not supported for CCA")
    pair = build_pair(spec, rank_tolerance)
    if shrinkage:
        pair = build_shrunk_pair(pair)
    return largest_root(pair, restrict)


def permutation_roots(spec, count, seed, stream=STREAM_FIT, threads=1, shrinkage=False,
                      rank_tolerance=DEFAULT_RANK_TOL, restrict="A") -> list[LargestRoot]:
    def one(k):
        return observed_root(permute(spec, rng_for(seed, stream, k)), shrinkage, rank_tolerance, restrict)

    return parallel_map(one, range(count), threads)


def _p_value(fit_: TWLocationScale, logit_obs: float) -> float:
    return float(np.clip(fit_.sf(logit_obs), _P_MIN, _P_MAX))


def _perm_p(lam_obs: float, lams) -> float:
    lams = np.asarray(lams)
    return float((1 + np.sum(lams >= lam_obs - 1e-12)) / (len(lams) + 1))


def run_estimator(spec, K: int = DEFAULT_K, fit_method: str = "mm", seed: int = 0, shrinkage: bool = False,
                  *, n_perm: int | None = None, threads: int = 1, rank_tolerance: float = DEFAULT_RANK_TOL,
                  restrict: str = "A") -> TestResult:
    """Fit ``sigma * TW(1) + mu`` to K permutation roots and return the p-value.

    Clipped permutation roots (at 0 or 1) are dropped from the fit and
    counted in ``excluded_roots``.  With ``n_perm`` a plain permutation
    p-value from an independent stream is reported alongside.
    """
    if K < MIN_FIT_SIZE:
        raise ValidationError(f"K must be at least {MIN_FIT_SIZE}, got {K}")
    kwargs = dict(shrinkage=shrinkage, rank_tolerance=rank_tolerance, restrict=restrict)
    obs = observed_root(spec, **kwargs)
    roots = permutation_roots(spec, K, seed, STREAM_FIT, threads, **kwargs)
    sample = RootSample.from_roots(roots)
    if sample.excluded_count > MAX_CLIPPED_FRACTION * K:
        raise DegenerateNullError(
            f"{sample.excluded_count} of {K} permutation roots hit 0 or 1; "
            "inspect the rank of the data or the rank tolerance")
    notes = []
    try:
        fitted = fit(sample, fit_method)
    except FitError as err:
        fitted = err.fallback
        notes.append(f"{err}; using the method-of-moments fit")

    p_perm = None
    if n_perm is not None:
        p_perm = permutation_pvalue(spec, n_perm, seed, threads=threads, observed=obs, **kwargs)

    label = build_label(spec)
    return TestResult(
        lambda_obs=obs.lam, logit_obs=obs.logit, p_value_tw=_p_value(fitted, obs.logit), fit=fitted,
        K=K, seed=int(seed), problem_label=label, shrinkage_used=bool(shrinkage),
        excluded_roots=sample.excluded_count, p_value_perm=p_perm, n_perm_reference=n_perm,
        restrict=restrict, notes=tuple(notes))


def permutation_pvalue(spec, n_perm: int, seed: int = 0, *, threads: int = 1, observed: LargestRoot | None = None,
                       shrinkage=False, rank_tolerance=DEFAULT_RANK_TOL, restrict="A") -> float:
    """Add-one permutation p-value ``(1 + #{lam_k >= lam_obs}) / (n_perm + 1)``."""
    if n_perm < 1:
        raise ValidationError("n_perm must be at least 1")
    kwargs = dict(shrinkage=shrinkage, rank_tolerance=rank_tolerance, restrict=restrict)
    if observed is None:
        observed = observed_root(spec, **kwargs)
    roots = permutation_roots(spec, n_perm, seed, STREAM_REFERENCE, threads, **kwargs)
    return _perm_p(observed.lam, [r.lam for r in roots])


def build_label(spec) -> str:
    return type(spec).__name__.removesuffix("Spec").lower()

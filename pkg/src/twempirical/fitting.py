"""Fit ``sigma * TW(1) + mu`` to a sample of logit-scale largest roots."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import FitError, ValidationError
from .tracywidom import TW1_MEAN, TW1_VARIANCE, TWLocationScale, tw_cdf, tw_logpdf

MIN_FIT_SIZE = 10
Z_CLAMP = 1e-12
NM_OPTIONS = {"xatol": 1e-6, "fatol": 1e-6, "maxiter": 500}
FIT_METHODS = ("mm", "mle", "ad", "adr")


@dataclass(frozen=True, eq=False)
class RootSample:
    """Finite logit roots, kept sorted ascending."""

    logit_roots: np.ndarray
    excluded_count: int = 0

    def __post_init__(self):
        x = np.sort(np.asarray(self.logit_roots, dtype=float).ravel())
        if not np.isfinite(x).all():
            raise ValidationError("logit roots must be finite")
        if len(x) < MIN_FIT_SIZE:
            warnings.warn(f"only {len(x)} roots; fits need at least {MIN_FIT_SIZE}", stacklevel=3)
        x.setflags(write=False)
        object.__setattr__(self, "logit_roots", x)

    @property
    def K(self) -> int:
        return len(self.logit_roots)

    @classmethod
    def from_roots(cls, roots) -> "RootSample":
        """Build from :class:`~twempirical.linalg.LargestRoot` values, dropping clipped ones."""
        kept = [r.logit for r in roots if not r.clipped]
        return cls(np.array(kept), excluded_count=len(roots) - len(kept))


def _as_sample(sample) -> RootSample:
    return sample if isinstance(sample, RootSample) else RootSample(sample)


def fit_mm(sample) -> TWLocationScale:
    """Method of moments: match the sample mean and unbiased variance."""
    x = _as_sample(sample).logit_roots
    if len(x) < 2:
        raise ValidationError("method of moments needs at least 2 roots")
    var = x.var(ddof=1)
    if not var > 0:
        raise ValidationError("sample has zero variance")
    sigma = np.sqrt(var / TW1_VARIANCE)
    mu = x.mean() - sigma * TW1_MEAN
    return TWLocationScale(float(mu), float(sigma), "mm", len(x), 0.0)


def anderson_darling(z) -> float:
    """Anderson-Darling statistic of sorted CDF values ``z``."""
    z = np.clip(np.asarray(z, dtype=float), Z_CLAMP, 1.0 - Z_CLAMP)
    k = len(z)
    i = np.arange(1, k + 1)
    return float(-k - np.sum((2 * i - 1) * (np.log(z) + np.log1p(-z[::-1]))) / k)


def anderson_darling_right(z) -> float:
    """Right-tail weighted Anderson-Darling statistic (Luceno 2006)."""
    z = np.clip(np.asarray(z, dtype=float), Z_CLAMP, 1.0 - Z_CLAMP)
    k = len(z)
    i = np.arange(1, k + 1)
    return float(k / 2.0 - 2.0 * z.sum() - np.sum((2 * i - 1) * np.log1p(-z[::-1])) / k)


def _optimize(x, method, objective, start):
    # Search over (a, b) with mu = mu0 + s0 a and sigma = s0 exp(b); the
    # standardized data u are invariant to shifting and scaling x.
    u = (x - start.mu) / start.sigma

    def f(theta):
        a, b = theta
        return objective((u - a) * np.exp(-b), b)

    res = minimize(f, np.zeros(2), method="Nelder-Mead",
                   options={**NM_OPTIONS, "initial_simplex": [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]]})
    if not res.success or not np.isfinite(res.fun):
        raise FitError(f"{method} fit did not converge: {res.message}", fallback=start)
    a, b = res.x
    return float(start.mu + start.sigma * a), float(start.sigma * np.exp(b)), res


def fit_mle(sample) -> TWLocationScale:
    """Maximum likelihood by Nelder-Mead from the method-of-moments start."""
    s = _as_sample(sample)
    _need(s)
    start = fit_mm(s)
    k = s.K
    mu, sigma, res = _optimize(s.logit_roots, "mle", lambda z, b: -np.sum(tw_logpdf(z)) + k * b, start)
    loglik = float(np.sum(tw_logpdf((s.logit_roots - mu) / sigma)) - k * np.log(sigma))
    return TWLocationScale(mu, sigma, "mle", k, loglik)


def fit_ad(sample) -> TWLocationScale:
    """Minimum Anderson-Darling distance estimate."""
    return _fit_gof(sample, "ad", anderson_darling)


def fit_adr(sample) -> TWLocationScale:
    """Minimum right-tail Anderson-Darling distance estimate."""
    return _fit_gof(sample, "adr", anderson_darling_right)


def _fit_gof(sample, method, statistic):
    s = _as_sample(sample)
    _need(s)
    start = fit_mm(s)
    mu, sigma, res = _optimize(s.logit_roots, method, lambda z, b: statistic(tw_cdf(z)), start)
    return TWLocationScale(mu, sigma, method, s.K, float(res.fun))


def _need(s: RootSample):
    if s.K < MIN_FIT_SIZE:
        raise ValidationError(f"need at least {MIN_FIT_SIZE} roots, got {s.K}")


FITTERS = {"mm": fit_mm, "mle": fit_mle, "ad": fit_ad, "adr": fit_adr}


def fit(sample, method: str = "mm") -> TWLocationScale:
    try:
        fitter = FITTERS[method.lower()]
    except KeyError:
        raise ValidationError(f"unknown fit method {method!r}; expected one of {FIT_METHODS}") from None
    return fitter(sample)

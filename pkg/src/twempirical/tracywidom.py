"""Tracy-Widom distribution of order 1 from an embedded CDF table.

The table (``data/tw1_cdf.csv``) holds F1 on a 0.005 grid over [-10, 8]; it
was produced offline by ``scripts/make_tw_table.py``.  Inside the grid the
CDF is a monotone (PCHIP) cubic interpolant and the density is its
derivative.  Outside the grid the leading-order tail forms

    F1(s)     ~ exp(-|s|^3 / 24)                          (s -> -inf)
    1 - F1(s) ~ exp(-2/3 s^{3/2}) / (4 sqrt(pi) s^{3/4})  (s -> +inf)

are used, scaled to agree with the table at its end points.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ValidationError

TABLE_PATH = Path(__file__).parent / "data" / "tw1_cdf.csv"

# Bornemann (2010), Table 10.
TW1_MEAN = -1.2065335745820
TW1_VARIANCE = 1.6077810345810


@dataclass(frozen=True, eq=False)
class TWTable:
    grid: np.ndarray
    cdf_values: np.ndarray
    provenance: str


def load_table(path=TABLE_PATH) -> TWTable:
    provenance = ""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                provenance = line.lstrip("# ")
                continue
            if line.startswith("s,"):
                continue
            s, f = line.split(",")
            rows.append((float(s), float(f)))
    data = np.array(rows)
    table = TWTable(data[:, 0], data[:, 1], provenance)
    if not (np.all(np.diff(table.grid) > 0) and np.all(np.diff(table.cdf_values) > 0)):
        raise ValueError(f"{path}: table must be strictly increasing")
    return table


TABLE = load_table()
_LO, _HI = TABLE.grid[0], TABLE.grid[-1]
_F_LO = TABLE.cdf_values[0]
_S_HI = 1.0 - TABLE.cdf_values[-1]
_CDF = PchipInterpolator(TABLE.grid, TABLE.cdf_values, extrapolate=False)
_PDF = _CDF.derivative()


def _log_right_shape(s):
    return -2.0 / 3.0 * s**1.5 - 0.75 * np.log(s)


def _checked(s):
    s = np.asarray(s, dtype=float)
    if np.isnan(s).any():
        raise ValidationError("Tracy-Widom argument is NaN")
    return s


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def _left_log_cdf(s):
    return np.log(_F_LO) - (np.abs(s) ** 3 - abs(_LO) ** 3) / 24.0


def _right_log_sf(s):
    return np.log(_S_HI) + _log_right_shape(s) - _log_right_shape(_HI)


def tw_cdf(s):
    """CDF of TW(1)."""
    s = _checked(s)
    x = np.atleast_1d(s)
    out = np.empty_like(x)
    lo, hi = x < _LO, x > _HI
    mid = ~(lo | hi)
    out[mid] = _CDF(x[mid])
    out[lo] = np.exp(_left_log_cdf(x[lo]))
    out[hi] = -np.expm1(_right_log_sf(x[hi]))
    return _out(out if s.ndim else out[0], s)


def tw_sf(s):
    """Upper tail probability ``1 - F1(s)``, accurate beyond the table."""
    s = _checked(s)
    x = np.atleast_1d(s)
    out = np.empty_like(x)
    lo, hi = x < _LO, x > _HI
    mid = ~(lo | hi)
    out[mid] = 1.0 - _CDF(x[mid])
    out[lo] = -np.expm1(_left_log_cdf(x[lo]))
    out[hi] = np.exp(_right_log_sf(x[hi]))
    return _out(out if s.ndim else out[0], s)


def tw_logpdf(s):
    s = _checked(s)
    x = np.atleast_1d(s)
    out = np.empty_like(x)
    lo, hi = x < _LO, x > _HI
    mid = ~(lo | hi)
    out[mid] = np.log(np.maximum(_PDF(x[mid]), 1e-300))
    xl = x[lo]
    out[lo] = _left_log_cdf(xl) + np.log(xl**2 / 8.0)
    xh = x[hi]
    out[hi] = _right_log_sf(xh) + np.log(np.sqrt(xh) + 0.75 / xh)
    return _out(out if s.ndim else out[0], s)


def tw_pdf(s):
    """Density of TW(1): derivative of the interpolated CDF."""
    return np.exp(tw_logpdf(s))


def _quantile_one(p):
    if p < _F_LO:
        return -np.cbrt(abs(_LO) ** 3 - 24.0 * (np.log(p) - np.log(_F_LO)))
    if p > TABLE.cdf_values[-1]:
        target = np.log1p(-p)
        hi = _HI + 1.0
        while _right_log_sf(hi) > target:
            hi *= 2.0
        return brentq(lambda t: _right_log_sf(t) - target, _HI, hi, xtol=1e-14, rtol=1e-15)
    i = int(np.searchsorted(TABLE.cdf_values, p))
    if TABLE.cdf_values[i] == p:
        return float(TABLE.grid[i])
    a, b = TABLE.grid[i - 1], TABLE.grid[i]
    return brentq(lambda t: float(_CDF(t)) - p, a, b, xtol=1e-14, rtol=1e-15)


def tw_quantile(prob):
    """Inverse CDF of TW(1) by bracketed root finding on the interpolant."""
    prob = np.asarray(prob, dtype=float)
    if np.isnan(prob).any() or np.any((prob <= 0) | (prob >= 1)):
        raise ValidationError("probability must lie strictly between 0 and 1")
    out = np.array([_quantile_one(p) for p in np.atleast_1d(prob)])
    return _out(out if prob.ndim else out[0], prob)


def tw_moments() -> tuple[float, float]:
    """Mean and variance of TW(1)."""
    return TW1_MEAN, TW1_VARIANCE


@dataclass(frozen=True)
class TWLocationScale:
    """The law of ``sigma * TW(1) + mu`` together with how it was fitted."""

    mu: float
    sigma: float
    fit_method: str = "mm"
    sample_size: int = 0
    objective_value: float = 0.0
    converged: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")

    def standardize(self, x):
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def cdf(self, x):
        return tw_cdf(self.standardize(x))

    def sf(self, x):
        return tw_sf(self.standardize(x))

    def pdf(self, x):
        return tw_pdf(self.standardize(x)) / self.sigma

    def logpdf(self, x):
        return tw_logpdf(self.standardize(x)) - np.log(self.sigma)

    def quantile(self, prob):
        return self.mu + self.sigma * tw_quantile(prob)

    def mean(self) -> float:
        return self.mu + self.sigma * TW1_MEAN

    def variance(self) -> float:
        return self.sigma**2 * TW1_VARIANCE

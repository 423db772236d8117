"""Double Wishart pairs and permutation schemes for the four test families.

Every constructor returns a :class:`DoubleWishartPair` in factored form,
``A = Fa^T Fa`` and ``B = Fb^T Fb``, so the largest root can be found from
n x n Gram matrices even when p is in the thousands.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import singledispatch

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .linalg import DEFAULT_RANK_TOL, DataMatrix, DoubleWishartPair, as_data, leading_direction

_QR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ManovaSpec:
    """One-way MANOVA: responses ``Y`` and a group label per row."""

    Y: DataMatrix
    groups: np.ndarray

    def __post_init__(self):
        Y = as_data(self.Y)
        groups = np.asarray(self.groups).ravel()
        if len(groups) != Y.n:
            raise ValidationError(f"{len(groups)} group labels for {Y.n} rows")
        labels, counts = np.unique(groups, return_counts=True)
        if len(labels) < 2:
            raise ValidationError("MANOVA needs at least 2 groups")
        small = labels[counts < 2]
        if len(small):
            raise ValidationError(f"groups with fewer than 2 members: {list(small)}")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "groups", groups)


@dataclass(frozen=True, eq=False)
class CovEqualSpec:
    """Equality of the covariance matrices of two samples."""

    X: DataMatrix
    Y: DataMatrix

    def __post_init__(self):
        X, Y = as_data(self.X), as_data(self.Y)
        if X.p != Y.p:
            raise ValidationError(f"X has {X.p} columns but Y has {Y.p}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)


@dataclass(frozen=True, eq=False)
class CcaSpec:
    """Canonical correlation between ``X`` (any width) and ``Y``.

    The side with fewer columns than rows forms the projector; ``Y`` is
    preferred when both qualify.
    """

    X: DataMatrix
    Y: DataMatrix

    def __post_init__(self):
        X, Y = as_data(self.X), as_data(self.Y)
        if X.n != Y.n:
            raise ValidationError(f"X has {X.n} rows but Y has {Y.n}")
        if Y.p >= Y.n and X.p >= X.n:
            raise ValidationError(
                f"neither side has fewer columns than rows ({X.p} and {Y.p} columns, {X.n} rows)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)


@dataclass(frozen=True, eq=False)
class PcevSpec:
    """PCEV: responses ``Y``, covariates of interest ``X``, optional confounders."""

    Y: DataMatrix
    X: DataMatrix
    confounders: DataMatrix | None = None

    def __post_init__(self):
        Y, X = as_data(self.Y), as_data(self.X)
        C = None if self.confounders is None else as_data(self.confounders)
        c = 0 if C is None else C.p
        if X.n != Y.n or (C is not None and C.n != Y.n):
            raise ValidationError("Y, X and confounders must have the same number of rows")
        if X.p + c + 1 >= Y.n:
            raise ValidationError(f"need q + c + 1 < n, got q={X.p}, c={c}, n={Y.n}")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "confounders", C)


def _orthonormal_basis(m: np.ndarray, labels) -> np.ndarray:
    """Q from a thin QR of ``m``; raises naming columns that are linearly dependent."""
    q, r = np.linalg.qr(m)
    diag = np.abs(np.diag(r))
    bad = diag <= _QR_TOL * max(diag.max(initial=0.0), np.linalg.norm(m, axis=0).max(initial=0.0))
    if bad.any():
        names = [labels[j] for j in np.flatnonzero(bad)]
        raise ValidationError(f"rank-deficient columns: {names}")
    return q


@singledispatch
def build_pair(spec, rank_tolerance: float = DEFAULT_RANK_TOL) -> DoubleWishartPair:
    raise TypeError(f"no double Wishart construction for {type(spec).__name__}")


@build_pair.register
def build_manova(spec: ManovaSpec, rank_tolerance: float = DEFAULT_RANK_TOL) -> DoubleWishartPair:
    """A = within-group, B = between-group sums of squares."""
    Y = spec.Y.values
    _, codes, counts = np.unique(spec.groups, return_inverse=True, return_counts=True)
    onehot = np.zeros((len(codes), len(counts)))
    onehot[np.arange(len(codes)), codes] = 1.0
    means = onehot.T @ Y / counts[:, None]
    grand = Y.mean(axis=0)
    fa = Y - means[codes]
    fb = np.sqrt(counts)[:, None] * (means - grand)
    return DoubleWishartPair.from_factors(fa, fb, rank_tolerance=rank_tolerance, label="manova",
                                          df_a=len(codes) - len(counts), df_b=len(counts) - 1)


@build_pair.register
def build_covequal(spec: CovEqualSpec, rank_tolerance: float = DEFAULT_RANK_TOL) -> DoubleWishartPair:
    """A = n1 S1, B = n2 S2 with S_i the ML covariance and n_i = rows - 1."""
    n1, n2 = spec.X.n - 1, spec.Y.n - 1
    fa = np.sqrt(n1 / spec.X.n) * spec.X.centered()
    fb = np.sqrt(n2 / spec.Y.n) * spec.Y.centered()
    return DoubleWishartPair.from_factors(fa, fb, rank_tolerance=rank_tolerance, label="covequal",
                                          df_a=n1, df_b=n2)


def cca_sides(spec: CcaSpec) -> tuple[DataMatrix, DataMatrix]:
    """(analysed side, projector side) after auto-orientation."""
    if spec.Y.p < spec.Y.n:
        return spec.X, spec.Y
    return spec.Y, spec.X


@build_pair.register
def build_cca(spec: CcaSpec, rank_tolerance: float = DEFAULT_RANK_TOL) -> DoubleWishartPair:
    """A = X^T P_perp X, B = X^T P X with P the projector onto the centered ``Y``."""
    side, proj = cca_sides(spec)
    xc = side.centered()
    q = _orthonormal_basis(proj.centered(), proj.column_labels)
    fb = q.T @ xc
    fa = xc - q @ fb
    n = xc.shape[0]
    return DoubleWishartPair.from_factors(fa, fb, rank_tolerance=rank_tolerance, label="cca",
                                          df_a=n - 1 - proj.p, df_b=proj.p)


def _pcev_bases(spec: PcevSpec):
    n = spec.Y.n
    cols = [np.ones((n, 1))]
    labels = ["(intercept)"]
    if spec.confounders is not None:
        cols.append(spec.confounders.values)
        labels += list(spec.confounders.column_labels)
    cols.append(spec.X.values)
    labels += list(spec.X.column_labels)
    q = _orthonormal_basis(np.hstack(cols), labels)
    k0 = q.shape[1] - spec.X.p
    return q, k0


@build_pair.register
def build_pcev(spec: PcevSpec, rank_tolerance: float = DEFAULT_RANK_TOL) -> DoubleWishartPair:
    """A = residual sum of squares, B = sum of squares attributable to ``X``.

    With H the hat matrix of [1 | confounders | X] and H0 that of
    [1 | confounders]: ``B = Y^T (H - H0) Y`` and ``A = Y^T (I - H) Y``.
    """
    Y = spec.Y.values
    q, k0 = _pcev_bases(spec)
    coef = q.T @ Y
    fa = Y - q @ coef
    fb = coef[k0:]
    n = spec.Y.n
    return DoubleWishartPair.from_factors(fa, fb, rank_tolerance=rank_tolerance, label="pcev",
                                          df_a=n - q.shape[1], df_b=spec.X.p)


@singledispatch
def apply_permutation(spec, order):
    raise TypeError(f"no permutation scheme for {type(spec).__name__}")


@apply_permutation.register
def _(spec: ManovaSpec, order):
    return ManovaSpec(spec.Y, spec.groups[order])


@apply_permutation.register
def _(spec: CovEqualSpec, order):
    pooled = np.vstack([spec.X.centered(), spec.Y.centered()])[order]
    n1 = spec.X.n
    return CovEqualSpec(DataMatrix(pooled[:n1], spec.X.column_labels),
                        DataMatrix(pooled[n1:], spec.Y.column_labels))


@apply_permutation.register
def _(spec: CcaSpec, order):
    return CcaSpec(spec.X.take_rows(order), spec.Y)


@apply_permutation.register
def _(spec: PcevSpec, order):
    return PcevSpec(spec.Y.take_rows(order), spec.X, spec.confounders)


def permutation_size(spec) -> int:
    if isinstance(spec, CovEqualSpec):
        return spec.X.n + spec.Y.n
    if isinstance(spec, ManovaSpec):
        return spec.Y.n
    if isinstance(spec, CcaSpec):
        return spec.X.n
    return spec.Y.n


def permute(spec, rng: np.random.Generator):
    """A random relabelling of ``spec`` that is exchangeable under the null.

    MANOVA permutes group labels; covariance equality pools the centered rows
    of both samples and reassigns them; CCA permutes the rows of ``X``; PCEV
    permutes the rows of ``Y`` keeping ``X`` and confounders fixed.
    """
    return apply_permutation(spec, rng.permutation(permutation_size(spec)))


@dataclass(frozen=True, eq=False)
class PcevComponent:
    lam: float
    weights: np.ndarray
    scores: np.ndarray
    vif: np.ndarray
    zero_variance: np.ndarray


def pcev_component_and_vif(spec: PcevSpec, pair: DoubleWishartPair | None = None) -> PcevComponent:
    """Leading PCEV direction, its scores, and variable importance factors.

    The VIF of a response is its Pearson correlation with the component
    scores.  Responses with zero variance get VIF 0 and are flagged.
    """
    if pair is None:
        pair = build_pcev(spec)
    lam, w = leading_direction(pair)
    w = w if w[np.argmax(np.abs(w))] > 0 else -w
    q, k0 = _pcev_bases(spec)
    Y = spec.Y.values
    q0 = q[:, :k0]
    y_adj = Y - q0 @ (q0.T @ Y)
    scores = y_adj @ w
    sd = np.sqrt(np.sum(y_adj**2, axis=0))
    s_norm = np.sqrt(np.sum(scores**2))
    zero = sd <= 1e-12 * max(sd.max(), 1.0)
    vif = np.zeros(spec.Y.p)
    if s_norm > 0:
        ok = ~zero
        vif[ok] = (y_adj[:, ok].T @ scores) / (sd[ok] * s_norm)
    if zero.any():
        names = [spec.Y.column_labels[j] for j in np.flatnonzero(zero)]
        warnings.warn(f"zero-variance responses get VIF 0: {names}", stacklevel=2)
    return PcevComponent(lam, w, scores, np.clip(vif, -1.0, 1.0), zero)

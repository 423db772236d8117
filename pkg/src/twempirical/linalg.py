"""Dense symmetric linear algebra and the largest-root solver.

The double Wishart problem asks for the roots of ``det(B - lam (A + B)) = 0``.
When ``A`` is singular (p larger than its degrees of freedom) the problem is
solved on a restricted subspace spanned by the non-null eigenvectors of ``A``
(the default) or of ``A + B``.  Matrices may be held densely or as factors
``A = Fa^T Fa + c I`` so that p can be far larger than the sample size.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateProblemError, ValidationError

DEFAULT_RANK_TOL = 1e-9
ROOT_EPS = 1e-12
SYMMETRY_TOL = 1e-10
RESTRICTIONS = ("A", "A+B")


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An n x p matrix of observations (rows) with column labels."""

    values: np.ndarray
    column_labels: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValidationError(f"data must be 2-D, got {values.ndim} dimensions")
        n, p = values.shape
        if n < 2 or p < 1:
            raise ValidationError(f"need at least 2 rows and 1 column, got {n}x{p}")
        bad = ~np.isfinite(values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(f"non-finite value at row {i + 1}, column {j + 1}")
        labels = tuple(str(c) for c in self.column_labels)
        if not labels:
            labels = tuple(f"V{j + 1}" for j in range(p))
        if len(labels) != p:
            raise ValidationError(f"{len(labels)} column labels for {p} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def centered(self) -> np.ndarray:
        return self.values - self.values.mean(axis=0)

    def take_rows(self, index) -> "DataMatrix":
        return DataMatrix(self.values[index], self.column_labels)


def as_data(x, labels: Sequence[str] = ()) -> DataMatrix:
    return x if isinstance(x, DataMatrix) else DataMatrix(x, tuple(labels))


def symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.T) > SYMMETRY_TOL * scale:
        raise ValidationError("matrix is not symmetric")
    return (m + m.T) / 2.0


class TruncatedEVD(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    rank: int


def truncated_evd(m, rank_tolerance: float = DEFAULT_RANK_TOL, scale_floor: float = 0.0) -> TruncatedEVD:
    """Eigenpairs of a symmetric matrix with eigenvalue above the rank cutoff.

    The cutoff is ``rank_tolerance * max(largest eigenvalue, scale_floor)``.
    Eigenvalues are returned in descending order with orthonormal
    eigenvectors as columns.
    """
    if not 0.0 < rank_tolerance < 1.0:
        raise ValidationError(f"rank_tolerance must lie in (0, 1), got {rank_tolerance}")
    w, u = np.linalg.eigh(symmetrize(m))
    w, u = w[::-1], u[:, ::-1]
    top = max(w[0], scale_floor)
    if not top > 0:
        raise DegenerateProblemError("matrix has rank zero")
    keep = w > rank_tolerance * top
    r = int(keep.sum())
    if r == 0:
        raise DegenerateProblemError("all eigenvalues fall below the rank cutoff")
    return TruncatedEVD(w[:r], u[:, :r], r)


@dataclass(frozen=True, eq=False)
class DoubleWishartPair:
    """The matrices (A, B) of a double Wishart problem.

    Each of A and B is stored either densely or through a factor ``F`` with
    ``A = F^T F`` (plus ``a_ridge * I`` for A).  Use :meth:`from_matrices` or
    :meth:`from_factors` rather than the raw constructor.
    """

    p: int
    a_dense: np.ndarray | None = None
    b_dense: np.ndarray | None = None
    a_factor: np.ndarray | None = None
    b_factor: np.ndarray | None = None
    a_ridge: float = 0.0
    rank_tolerance: float = DEFAULT_RANK_TOL
    label: str = ""
    df_a: int | None = None
    df_b: int | None = None
    extras: dict = field(default_factory=dict)

    @classmethod
    def from_matrices(cls, A, B, rank_tolerance=DEFAULT_RANK_TOL, label="", df_a=None, df_b=None, check=True):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape != B.shape:
            raise ValidationError(f"A is {A.shape} but B is {B.shape}")
        A, B = symmetrize(A), symmetrize(B)
        if check:
            top = max(np.linalg.eigvalsh(A + B)[-1], 0.0)
            for name, m in (("A", A), ("B", B)):
                if np.linalg.eigvalsh(m)[0] < -rank_tolerance * top:
                    raise ValidationError(f"{name} is not positive semi-definite")
        return cls(A.shape[0], a_dense=A, b_dense=B, rank_tolerance=rank_tolerance,
                   label=label, df_a=df_a, df_b=df_b)

    @classmethod
    def from_factors(cls, a_factor, b_factor, a_ridge=0.0, rank_tolerance=DEFAULT_RANK_TOL,
                     label="", df_a=None, df_b=None, extras=None):
        fa = np.atleast_2d(np.asarray(a_factor, dtype=float))
        fb = np.atleast_2d(np.asarray(b_factor, dtype=float))
        if fa.shape[1] != fb.shape[1]:
            raise ValidationError(f"factors have {fa.shape[1]} and {fb.shape[1]} columns")
        if a_ridge < 0:
            raise ValidationError("a_ridge must be nonnegative")
        return cls(fa.shape[1], a_factor=fa, b_factor=fb, a_ridge=float(a_ridge),
                   rank_tolerance=rank_tolerance, label=label, df_a=df_a, df_b=df_b,
                   extras=dict(extras or {}))

    @cached_property
    def A(self) -> np.ndarray:
        if self.a_dense is not None:
            return self.a_dense
        a = self.a_factor.T @ self.a_factor
        if self.a_ridge:
            a[np.diag_indices_from(a)] += self.a_ridge
        return a

    @cached_property
    def B(self) -> np.ndarray:
        if self.b_dense is not None:
            return self.b_dense
        return self.b_factor.T @ self.b_factor

    def trace_b(self) -> float:
        if self.b_factor is not None:
            return float(np.sum(self.b_factor**2))
        return float(np.trace(self.b_dense))

    def trace_a(self) -> float:
        if self.a_factor is not None:
            return float(np.sum(self.a_factor**2) + self.a_ridge * self.p)
        return float(np.trace(self.a_dense))


@dataclass(frozen=True)
class LargestRoot:
    lam: float
    logit: float
    effective_rank: int
    clipped: bool


class _Reduced(NamedTuple):
    """Restricted symmetric problem ``M = G^T G`` (or ``M`` given directly).

    ``lift`` maps an eigenvector of M back to a direction in R^p.
    """

    rank: int
    G: np.ndarray | None
    M: np.ndarray | None
    lift: Callable[[np.ndarray], np.ndarray]
    a_null: bool = False


def _desc_eigh(m):
    w, v = np.linalg.eigh(m)
    return w[::-1], v[:, ::-1]


def _reduce_dense_basis(pair: DoubleWishartPair, T: np.ndarray) -> _Reduced:
    if pair.b_factor is not None:
        return _Reduced(T.shape[1], pair.b_factor @ T, None, lambda v: T @ v)
    return _Reduced(T.shape[1], None, T.T @ pair.B @ T, lambda v: T @ v)


def _reduce_ridge(pair: DoubleWishartPair) -> _Reduced:
    # A = Fa^T Fa + c I is full rank; work with G = Fb A^{-1/2}.
    fa, c = pair.a_factor, pair.a_ridge
    if fa.shape[0] <= pair.p:
        w, v = _desc_eigh(fa @ fa.T)
        keep = w > ROOT_EPS * max(w[0], c)
        w, v = w[keep], v[:, keep]
        ua = (fa.T @ v) / np.sqrt(w)
    else:
        w, ua = _desc_eigh(fa.T @ fa)
    d = 1.0 / np.sqrt(c + w) - 1.0 / np.sqrt(c)

    def inv_sqrt(x):
        return x / np.sqrt(c) + ua @ ((ua.T @ x).T * d).T

    fb = pair.b_factor if pair.b_factor is not None else _dense_factor(pair.B)
    G = inv_sqrt(fb.T).T
    return _Reduced(pair.p, G, None, inv_sqrt)


def _dense_factor(m):
    w, u = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)).T


def _reduce(pair: DoubleWishartPair, restrict: str) -> _Reduced:
    if restrict not in RESTRICTIONS:
        raise ValidationError(f"restrict must be one of {RESTRICTIONS}, got {restrict!r}")
    tol = pair.rank_tolerance
    if restrict == "A":
        if pair.a_factor is not None and pair.a_ridge > 0:
            return _reduce_ridge(pair)
        trace_b = pair.trace_b()
        fa = pair.a_factor
        gram = fa @ fa.T if fa is not None and fa.shape[0] <= pair.p else pair.A
        if not trace_b > 0 and not pair.trace_a() > 0:
            raise DegenerateProblemError("A + B has rank zero")
        try:
            w, v, r = truncated_evd(gram, tol, scale_floor=trace_b)
        except DegenerateProblemError:
            # A vanishes while B does not: every root equals one.
            return _Reduced(0, None, None, None, a_null=True)
        if gram is pair.A:
            return _reduce_dense_basis(pair, v / np.sqrt(w))
        fb = pair.b_factor if pair.b_factor is not None else _dense_factor(pair.B)
        G = (fb @ fa.T) @ v / w
        return _Reduced(r, G, None, lambda x: fa.T @ (v @ (x / w)))

    if pair.a_factor is not None and pair.b_factor is not None and pair.a_ridge == 0:
        f = np.vstack([pair.a_factor, pair.b_factor])
        if f.shape[0] <= pair.p:
            w, v, r = truncated_evd(f @ f.T, tol)
            G = (pair.b_factor @ f.T) @ v / w
            return _Reduced(r, G, None, lambda x: f.T @ (v @ (x / w)))
    w, u, r = truncated_evd(pair.A + pair.B, tol)
    return _reduce_dense_basis(pair, u / np.sqrt(w))


def _spectrum(red: _Reduced) -> np.ndarray:
    if red.M is not None:
        vals = np.linalg.eigvalsh(symmetrize(red.M))[::-1]
    else:
        G = red.G
        small = G @ G.T if G.shape[0] < G.shape[1] else G.T @ G
        vals = np.linalg.eigvalsh(small)[::-1]
    out = np.zeros(red.rank)
    k = min(len(vals), red.rank)
    out[:k] = vals[:k]
    return np.clip(out, 0.0, None)


def _to_lambda(vals: np.ndarray, restrict: str) -> np.ndarray:
    if restrict == "A":
        vals = vals / (1.0 + vals)
    return np.clip(vals, 0.0, 1.0)


def all_roots(pair: DoubleWishartPair, restrict: str = "A") -> np.ndarray:
    """All roots of the restricted problem in descending order, each in [0, 1]."""
    red = _reduce(pair, restrict)
    if red.a_null:
        return np.ones(1)
    return _to_lambda(_spectrum(red), restrict)


def largest_root(pair: DoubleWishartPair, restrict: str = "A") -> LargestRoot:
    """Largest root of ``det(B - lam (A + B)) = 0`` on the restricted subspace.

    With ``restrict="A"`` the problem is projected onto the range of A and the
    top eigenvalue ``theta`` of ``A^{-1/2} B A^{-1/2}`` there gives
    ``lam = theta / (1 + theta)``.  Roots within ``ROOT_EPS`` of 0 or 1 are
    clipped and flagged so that the logit stays finite.
    """
    red = _reduce(pair, restrict)
    if red.a_null:
        return _clip(1.0, np.inf, 0)
    top = _spectrum(red)[0]
    if restrict == "A":
        lam = top / (1.0 + top)
        logit = np.log(top) if top > 0 else -np.inf
    else:
        lam = min(max(top, 0.0), 1.0)
        logit = np.log(lam) - np.log1p(-lam) if 0 < lam < 1 else np.nan
    return _clip(lam, logit, red.rank)


def _clip(lam, logit, rank) -> LargestRoot:
    if lam < ROOT_EPS or lam > 1.0 - ROOT_EPS or not np.isfinite(logit):
        lam = min(max(lam, ROOT_EPS), 1.0 - ROOT_EPS)
        return LargestRoot(float(lam), float(np.log(lam) - np.log1p(-lam)), int(rank), True)
    return LargestRoot(float(lam), float(logit), int(rank), False)


def leading_direction(pair: DoubleWishartPair, restrict: str = "A") -> tuple[float, np.ndarray]:
    """The largest root and a unit vector ``w`` in R^p attaining it.

    ``w`` maximizes ``w^T B w / w^T (A + B) w`` over the restricted subspace.
    """
    red = _reduce(pair, restrict)
    if red.a_null:
        raise DegenerateProblemError("A vanishes; the leading direction is not identified")
    if red.M is not None:
        vals, vecs = _desc_eigh(symmetrize(red.M))
        top, v = vals[0], vecs[:, 0]
    else:
        _, s, vt = np.linalg.svd(red.G, full_matrices=False)
        top, v = s[0] ** 2, vt[0]
    w = red.lift(v)
    w = w / np.linalg.norm(w)
    lam = top / (1.0 + top) if restrict == "A" else top
    return float(np.clip(lam, 0.0, 1.0)), w

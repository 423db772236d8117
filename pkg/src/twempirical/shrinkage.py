"""Ledoit-Wolf linear shrinkage and the shrunk double Wishart pair.

All scalar estimates use the normalized Frobenius inner product
``<A, B> = tr(A B^T) / p``.  They are computed from the n x n Gram matrix of
the centered data, so the p x p shrunk covariance is only formed on request.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .linalg import DataMatrix, DoubleWishartPair, as_data


@dataclass(frozen=True, eq=False)
class ShrinkageEstimate:
    """``S* = (b2/d2) m I + (a2/d2) S``, the Ledoit-Wolf (2004) estimator.

    ``S`` is the centered sample covariance with divisor n.  ``degenerate``
    is set when ``d2 == 0`` (the sample covariance is exactly spherical).
    """

    centered: np.ndarray
    m_hat: float
    d2_hat: float
    b2_bar: float
    b2_hat: float
    a2_hat: float
    intensity: float
    degenerate: bool = False
    divisor: str = "n"

    @property
    def n(self) -> int:
        return self.centered.shape[0]

    @property
    def p(self) -> int:
        return self.centered.shape[1]

    @property
    def ridge(self) -> float:
        """Coefficient of the identity in S*."""
        return self.intensity * self.m_hat

    @property
    def weight(self) -> float:
        """Coefficient of S in S*."""
        return 1.0 - self.intensity

    @cached_property
    def S(self) -> np.ndarray:
        return self.centered.T @ self.centered / self.n

    @cached_property
    def S_star(self) -> np.ndarray:
        out = self.weight * self.S
        out[np.diag_indices_from(out)] += self.ridge
        return out


def _combine(centered, m_hat, d2_hat, b2_bar) -> ShrinkageEstimate:
    if d2_hat <= 0:
        return ShrinkageEstimate(centered, m_hat, 0.0, b2_bar, 0.0, 0.0, 1.0, degenerate=True)
    b2_hat = min(b2_bar, d2_hat)
    a2_hat = d2_hat - b2_hat
    return ShrinkageEstimate(centered, m_hat, d2_hat, b2_bar, b2_hat, a2_hat, b2_hat / d2_hat)


def ledoit_wolf(data) -> ShrinkageEstimate:
    """Ledoit-Wolf shrinkage of the sample covariance of ``data`` (rows = observations)."""
    x = as_data(data).centered()
    n, p = x.shape
    gram = x @ x.T
    sq_norms = np.diag(gram)
    s_fro2 = np.sum(gram**2) / n**2
    m_hat = sq_norms.sum() / (n * p)
    d2_hat = max(s_fro2 / p - m_hat**2, 0.0)
    # ||x x^T - S||^2 = ||x||^4 - 2 x^T S x + ||S||^2, with x_k^T S x_k = sum_j (x_k.x_j)^2 / n
    xsx = np.sum(gram**2, axis=1) / n
    b2_bar = np.sum(sq_norms**2 - 2.0 * xsx + s_fro2) / (n**2 * p)
    return _combine(x, m_hat, d2_hat, max(b2_bar, 0.0))


def shrink_with(data, b2_bar: float) -> ShrinkageEstimate:
    """Shrinkage of ``data`` with an externally supplied sampling-error estimate ``b2_bar``."""
    x = as_data(data).centered()
    n, p = x.shape
    gram = x @ x.T
    m_hat = np.trace(gram) / (n * p)
    d2_hat = max(np.sum(gram**2) / (n**2 * p) - m_hat**2, 0.0)
    return _combine(x, m_hat, d2_hat, b2_bar)


def build_shrunk_pair(pair: DoubleWishartPair, data_for_A=None, estimate: ShrinkageEstimate | None = None
                      ) -> DoubleWishartPair:
    """Replace A by ``A* = n S*`` where S* shrinks the covariance of ``data_for_A``.

    ``data_for_A`` defaults to the pair's own A factor.  The result keeps A*
    in factored form ``A* = (1 - t) Xc^T Xc + n t m I``.
    """
    if estimate is None:
        if data_for_A is None:
            if pair.a_factor is None or pair.a_ridge:
                raise ValidationError("pair has no A factor; pass data_for_A")
            data_for_A = pair.a_factor
        data = as_data(data_for_A) if not isinstance(data_for_A, DataMatrix) else data_for_A
        if data.p != pair.p:
            raise ValidationError(f"data_for_A has {data.p} columns but the pair has dimension {pair.p}")
        estimate = ledoit_wolf(data)
    elif estimate.p != pair.p:
        raise ValidationError(f"estimate has dimension {estimate.p} but the pair has {pair.p}")
    fa = np.sqrt(estimate.weight) * estimate.centered
    ridge = estimate.n * estimate.ridge
    extras = {**pair.extras, "shrinkage_intensity": estimate.intensity}
    if pair.b_factor is not None:
        return DoubleWishartPair.from_factors(fa, pair.b_factor, a_ridge=ridge,
                                              rank_tolerance=pair.rank_tolerance, label=pair.label,
                                              df_a=pair.df_a, df_b=pair.df_b, extras=extras)
    a_star = fa.T @ fa + ridge * np.eye(pair.p)
    return DoubleWishartPair.from_matrices(a_star, pair.B, rank_tolerance=pair.rank_tolerance,
                                           label=pair.label, df_a=pair.df_a, df_b=pair.df_b)

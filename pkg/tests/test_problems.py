import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from twempirical.errors import ValidationError
from twempirical.linalg import DataMatrix, largest_root
from twempirical.problems import (CcaSpec, CovEqualSpec, ManovaSpec, PcevSpec, apply_permutation, build_cca,
                                  build_covequal, build_manova, build_pair, build_pcev, pcev_component_and_vif,
                                  permutation_size, permute)


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def centered(x):
    return x - x.mean(axis=0)


def roy_oracle(Y, groups):
    """Roy's largest root from explicit W and B matrices."""
    grand = Y.mean(axis=0)
    W = np.zeros((Y.shape[1],) * 2)
    B = np.zeros_like(W)
    for g in np.unique(groups):
        yg = Y[groups == g]
        d = yg - yg.mean(axis=0)
        W += d.T @ d
        m = (yg.mean(axis=0) - grand)[:, None]
        B += len(yg) * m @ m.T
    return np.max(np.linalg.eigvals(np.linalg.solve(W + B, B)).real)


def inv_sqrt(m):
    w, u = np.linalg.eigh(m)
    return (u / np.sqrt(w)) @ u.T


def first_canonical_corr(X, Y):
    x, y = centered(X), centered(Y)
    sxx, syy, sxy = x.T @ x, y.T @ y, x.T @ y
    m = inv_sqrt(sxx) @ sxy @ np.linalg.solve(syy, sxy.T) @ inv_sqrt(sxx)
    return np.sqrt(np.max(np.linalg.eigvalsh(m)))


def r2_of(w, Y, X):
    """Proportion of the variance of Y w explained by X (with an intercept)."""
    s = Y @ w
    d = np.column_stack([np.ones(len(s)), X])
    fitted = d @ np.linalg.lstsq(d, s, rcond=None)[0]
    tot = np.sum((s - s.mean()) ** 2)
    return np.sum((fitted - s.mean()) ** 2) / tot


# -- MANOVA -----------------------------------------------------------------------

def manova_data(seed, n=30, p=4, k=3):
    rng = np.random.default_rng(seed)
    groups = np.arange(n) % k
    return rng.standard_normal((n, p)) + 0.3 * groups[:, None], groups


def test_manova_total_sum_of_squares():
    Y, g = manova_data(0)
    pair = build_manova(ManovaSpec(DataMatrix(Y), g))
    assert rel_fro(pair.A + pair.B, centered(Y).T @ centered(Y)) <= 1e-8


def test_manova_equal_means_null():
    Y = np.array([[1.0, 2.0], [3.0, 0.0], [1.0, 0.0], [3.0, 2.0]])
    root = largest_root(build_manova(ManovaSpec(DataMatrix(Y), ["a", "a", "b", "b"])))
    assert root.lam == pytest.approx(0.0, abs=1e-10)


def test_manova_scalar_anova():
    rng = np.random.default_rng(1)
    y = rng.standard_normal(20)
    g = np.repeat([0, 1], 10)
    y[g == 1] += 1.0
    between = sum(10 * (y[g == k].mean() - y.mean()) ** 2 for k in (0, 1))
    total = np.sum((y - y.mean()) ** 2)
    root = largest_root(build_manova(ManovaSpec(DataMatrix(y[:, None]), g)))
    assert root.lam == pytest.approx(between / total, rel=1e-10)


def test_manova_roy_oracle():
    Y, g = manova_data(2)
    root = largest_root(build_manova(ManovaSpec(DataMatrix(Y), g)))
    assert root.lam == pytest.approx(roy_oracle(Y, g), rel=1e-8)


def test_manova_validation():
    Y = np.random.default_rng(0).standard_normal((5, 2))
    with pytest.raises(ValidationError, match="fewer than 2"):
        ManovaSpec(DataMatrix(Y), [0, 0, 1, 1, 2])
    with pytest.raises(ValidationError, match="at least 2 groups"):
        ManovaSpec(DataMatrix(Y), [0] * 5)
    with pytest.raises(ValidationError, match="labels"):
        ManovaSpec(DataMatrix(Y), [0, 1])


# -- covariance equality -------------------------------------------------------------

def test_covequal_scalar_formula():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((12, 1)), 2.0 * rng.standard_normal((15, 1))
    n1, n2 = 11, 14
    s1, s2 = np.var(x, ddof=0), np.var(y, ddof=0)
    root = largest_root(build_covequal(CovEqualSpec(DataMatrix(x), DataMatrix(y))))
    assert root.lam == pytest.approx(n2 * s2 / (n1 * s1 + n2 * s2), rel=1e-10)


def test_covequal_same_data():
    from twempirical.linalg import all_roots
    x = np.random.default_rng(4).standard_normal((20, 3))
    roots = all_roots(build_covequal(CovEqualSpec(DataMatrix(x), DataMatrix(x))))
    assert_allclose(roots, 0.5, atol=1e-12)


def test_covequal_scaling_convention():
    rng = np.random.default_rng(5)
    x, y = rng.standard_normal((10, 3)), rng.standard_normal((8, 3))
    pair = build_covequal(CovEqualSpec(DataMatrix(x), DataMatrix(y)))
    assert_allclose(pair.A, 9 * np.cov(x.T, bias=True), rtol=1e-12)
    assert_allclose(pair.B, 7 * np.cov(y.T, bias=True), rtol=1e-12)
    assert (pair.df_a, pair.df_b) == (9, 7)


def test_covequal_singular_rank_bound():
    rng = np.random.default_rng(6)
    spec = CovEqualSpec(DataMatrix(rng.standard_normal((49, 300))), DataMatrix(rng.standard_normal((49, 300))))
    root = largest_root(build_covequal(spec))
    assert 0 < root.lam < 1 and not root.clipped
    assert root.effective_rank <= 96


def test_covequal_column_mismatch():
    with pytest.raises(ValidationError):
        CovEqualSpec(DataMatrix(np.ones((3, 2)) + np.eye(3, 2)), DataMatrix(np.eye(3)))


# -- CCA ------------------------------------------------------------------------------

def test_cca_sum_identity():
    rng = np.random.default_rng(7)
    X, Y = rng.standard_normal((30, 40)), rng.standard_normal((30, 5))
    pair = build_cca(CcaSpec(DataMatrix(X), DataMatrix(Y)))
    assert rel_fro(pair.A + pair.B, centered(X).T @ centered(X)) <= 1e-8


def test_cca_orthogonal_is_zero():
    rng = np.random.default_rng(8)
    Y = centered(rng.standard_normal((20, 3)))
    q, _ = np.linalg.qr(np.column_stack([np.ones(20), Y]))
    X = rng.standard_normal((20, 4))
    X = X - q @ (q.T @ X)
    root = largest_root(build_cca(CcaSpec(DataMatrix(X), DataMatrix(Y))))
    assert root.lam == pytest.approx(0.0, abs=1e-10)


def test_cca_perfect_correlation_clips():
    Y = np.random.default_rng(9).standard_normal((20, 3))
    root = largest_root(build_cca(CcaSpec(DataMatrix(Y[:, :1]), DataMatrix(Y))))
    assert root.clipped
    assert root.lam == pytest.approx(1.0, abs=1e-10)


def test_cca_reference_small_matrix():
    rng = np.random.default_rng(10)
    Y = rng.standard_normal((50, 3))
    X = rng.standard_normal((50, 5))
    X[:, 0] += Y[:, 0]
    root = largest_root(build_cca(CcaSpec(DataMatrix(X), DataMatrix(Y))))
    assert np.sqrt(root.lam) == pytest.approx(first_canonical_corr(X, Y), rel=1e-8)


def test_cca_auto_orientation():
    rng = np.random.default_rng(11)
    wide, narrow = rng.standard_normal((10, 30)), rng.standard_normal((10, 2))
    a = largest_root(build_cca(CcaSpec(DataMatrix(wide), DataMatrix(narrow))))
    b = largest_root(build_cca(CcaSpec(DataMatrix(narrow), DataMatrix(wide))))
    assert a.lam == pytest.approx(b.lam, rel=1e-12)


def test_cca_rank_deficient_projector_named():
    rng = np.random.default_rng(12)
    y = rng.standard_normal((20, 2))
    Y = DataMatrix(np.column_stack([y, y[:, 0] + y[:, 1]]), ("a", "b", "c"))
    with pytest.raises(ValidationError, match="'c'"):
        build_cca(CcaSpec(DataMatrix(rng.standard_normal((20, 30))), Y))


def test_cca_validation():
    with pytest.raises(ValidationError, match="rows"):
        CcaSpec(DataMatrix(np.eye(4)), DataMatrix(np.eye(5)[:, :2]))
    with pytest.raises(ValidationError, match="neither side"):
        CcaSpec(DataMatrix(np.eye(4)), DataMatrix(np.eye(4)))


# -- PCEV -------------------------------------------------------------------------------

def test_pcev_scalar_regression():
    rng = np.random.default_rng(13)
    x = rng.standard_normal((40, 2))
    c = rng.standard_normal((40, 1))
    y = x @ [0.5, -0.2] + c[:, 0] + rng.standard_normal(40)
    def rss(design):
        d = np.column_stack([np.ones(40), design])
        r = y - d @ np.linalg.lstsq(d, y, rcond=None)[0]
        return r @ r
    partial_r2 = (rss(c) - rss(np.hstack([c, x]))) / rss(c)
    root = largest_root(build_pcev(PcevSpec(DataMatrix(y[:, None]), DataMatrix(x), DataMatrix(c))))
    assert root.lam == pytest.approx(partial_r2, rel=1e-10)


def test_pcev_rank_bookkeeping():
    rng = np.random.default_rng(14)
    spec = PcevSpec(DataMatrix(rng.standard_normal((30, 50))), DataMatrix(rng.standard_normal((30, 2))),
                    DataMatrix(rng.standard_normal((30, 1))))
    root = largest_root(build_pcev(spec))
    assert root.lam < 1
    assert root.effective_rank == min(50, 30 - 2 - 1 - 1)


def test_pcev_monte_carlo_maximum():
    rng = np.random.default_rng(15)
    X = rng.standard_normal((40, 1))
    Y = rng.standard_normal((40, 3)) + X @ [[0.6, -0.3, 0.1]]
    lam = largest_root(build_pcev(PcevSpec(DataMatrix(Y), DataMatrix(X)))).lam
    w = rng.standard_normal((1_000_000, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    yc, xc = centered(Y), centered(X)[:, 0]
    # R^2(w) = (w' Syx)^2 / (w' Syy w Sxx) in closed form for a single covariate
    syx = yc.T @ xc
    syy = yc.T @ yc
    num = (w @ syx) ** 2 / (xc @ xc)
    den = np.einsum("ij,jk,ik->i", w, syy, w)
    best = np.max(num / den)
    assert best <= lam + 1e-12
    assert lam == pytest.approx(best, abs=1e-3)


def test_pcev_matches_cca_single_covariate():
    rng = np.random.default_rng(16)
    X = rng.standard_normal((25, 1))
    Y = rng.standard_normal((25, 4)) + X
    a = largest_root(build_pcev(PcevSpec(DataMatrix(Y), DataMatrix(X)))).lam
    b = largest_root(build_cca(CcaSpec(DataMatrix(Y), DataMatrix(X)))).lam
    assert a == pytest.approx(b, rel=1e-8)
    assert a == pytest.approx(first_canonical_corr(Y, X) ** 2, rel=1e-8)


def test_pcev_validation():
    rng = np.random.default_rng(17)
    with pytest.raises(ValidationError, match="q \\+ c \\+ 1 < n"):
        PcevSpec(DataMatrix(rng.standard_normal((4, 2))), DataMatrix(rng.standard_normal((4, 3))))
    x = rng.standard_normal((10, 1))
    with pytest.raises(ValidationError, match="rank-deficient"):
        build_pcev(PcevSpec(DataMatrix(rng.standard_normal((10, 2))), DataMatrix(np.hstack([x, 2 * x]))))


# -- VIF ----------------------------------------------------------------------------------

def test_vif_single_response():
    rng = np.random.default_rng(18)
    comp = pcev_component_and_vif(PcevSpec(DataMatrix(rng.standard_normal((20, 1))),
                                           DataMatrix(rng.standard_normal((20, 1)))))
    assert_allclose(comp.weights, [1.0])
    assert_allclose(comp.vif, [1.0])


def test_vif_plug_in_r2():
    rng = np.random.default_rng(19)
    X = rng.standard_normal((30, 1))
    Y = rng.standard_normal((30, 3)) + X @ [[1.0, 0.0, -0.5]]
    spec = PcevSpec(DataMatrix(Y), DataMatrix(X))
    comp = pcev_component_and_vif(spec)
    assert np.linalg.norm(comp.weights) == pytest.approx(1.0)
    assert r2_of(comp.weights, Y, X) == pytest.approx(comp.lam, abs=1e-8)
    assert np.all(np.abs(comp.vif) <= 1)
    for j in range(3):
        assert comp.vif[j] == pytest.approx(np.corrcoef(Y[:, j], comp.scores)[0, 1], abs=1e-10)


def test_vif_scores_column():
    rng = np.random.default_rng(20)
    X = rng.standard_normal((30, 1))
    Y = rng.standard_normal((30, 3)) + X
    comp = pcev_component_and_vif(PcevSpec(DataMatrix(Y), DataMatrix(X)))
    augmented = PcevSpec(DataMatrix(np.column_stack([Y, comp.scores])), DataMatrix(X))
    vif = pcev_component_and_vif(augmented).vif
    # the appended column is a linear combination of the others, so its correlation with the scores is exact
    assert abs(vif[-1]) == pytest.approx(1.0, abs=1e-10)


def test_vif_zero_variance_flagged():
    rng = np.random.default_rng(21)
    Y = np.column_stack([rng.standard_normal((20, 2)), np.full(20, 3.0)])
    with pytest.warns(UserWarning, match="zero-variance"):
        comp = pcev_component_and_vif(PcevSpec(DataMatrix(Y), DataMatrix(rng.standard_normal((20, 1)))))
    assert comp.vif[2] == 0 and comp.zero_variance.tolist() == [False, False, True]


# -- invariances -----------------------------------------------------------------------------

def all_specs(seed):
    rng = np.random.default_rng(seed)
    n = 24
    Y, X, C = rng.standard_normal((n, 6)), rng.standard_normal((n, 2)), rng.standard_normal((n, 1))
    return [ManovaSpec(DataMatrix(Y), np.arange(n) % 3),
            CovEqualSpec(DataMatrix(Y), DataMatrix(rng.standard_normal((n + 3, 6)))),
            CcaSpec(DataMatrix(Y), DataMatrix(X)),
            PcevSpec(DataMatrix(Y), DataMatrix(X), DataMatrix(C))]


def shift_columns(spec, shift):
    from dataclasses import fields, replace
    out = {}
    for f in fields(spec):
        v = getattr(spec, f.name)
        if isinstance(v, DataMatrix):
            out[f.name] = DataMatrix(v.values + shift[: v.p] if f.name != "confounders" else v.values)
    return replace(spec, **out)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), shift=st.lists(st.floats(-1e3, 1e3), min_size=6, max_size=6))
def test_column_centering_invariance(seed, shift):
    shift = np.array(shift)
    for spec in all_specs(seed):
        base = largest_root(build_pair(spec)).lam
        moved = largest_root(build_pair(shift_columns(spec, shift))).lam
        assert moved == pytest.approx(base, abs=1e-8)


def test_identity_permutation():
    for spec in all_specs(0):
        same = apply_permutation(spec, np.arange(permutation_size(spec)))
        assert largest_root(build_pair(same)).lam == largest_root(build_pair(spec)).lam


def test_permutation_determinism():
    for spec in all_specs(1):
        a = build_pair(permute(spec, np.random.default_rng(5)))
        b = build_pair(permute(spec, np.random.default_rng(5)))
        c = build_pair(permute(spec, np.random.default_rng(6)))
        assert_array_equal(a.A, b.A)
        assert_array_equal(a.B, b.B)
        assert not np.array_equal(a.B, c.B)


def test_covequal_permutation_preserves_pooled_rows():
    spec = all_specs(2)[1]
    out = permute(spec, np.random.default_rng(0))
    assert (out.X.n, out.Y.n) == (spec.X.n, spec.Y.n)
    before = np.vstack([spec.X.centered(), spec.Y.centered()])
    after = np.vstack([out.X.values, out.Y.values])
    key = lambda m: m[np.lexsort(m.T[::-1])]
    assert_array_equal(key(before), key(after))


def test_manova_permutes_labels_only():
    spec = all_specs(3)[0]
    out = permute(spec, np.random.default_rng(1))
    assert out.Y is spec.Y
    assert sorted(out.groups) == sorted(spec.groups)


def test_permutation_exchangeability():
    from twempirical.estimator import rng_for
    rng = np.random.default_rng(22)
    X = DataMatrix(rng.standard_normal((40, 60)))
    Y = DataMatrix(rng.standard_normal((40, 3)))
    spec = CcaSpec(X, Y)
    lams = [largest_root(build_pair(permute(spec, rng_for(9, 0, k)))).lam for k in range(400)]
    assert stats.ks_2samp(lams[:200], lams[200:]).pvalue > 0.001

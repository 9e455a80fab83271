import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import hadamard
from scipy.stats import ortho_group

from lsrdl.sparse import (OMP, Lasso, LassoOptions, code_batch, lasso, lasso_batch,
                          objective_f, omp, omp_batch, soft_threshold)

from conftest import unit_columns


def incoherent_dictionary(rng):
    """Randomly rotated identity/Hadamard pair: 8 x 16 with coherence 1/sqrt(8)."""
    U = ortho_group.rvs(8, random_state=rng)
    return U @ np.hstack([np.eye(8), hadamard(8) / np.sqrt(8)])


def exhaustive_support(y, D, s):
    best = None
    for J in itertools.combinations(range(D.shape[1]), s):
        sub = D[:, J]
        c = np.linalg.lstsq(sub, y, rcond=None)[0]
        r = np.linalg.norm(y - sub @ c)
        if best is None or r < best[0]:
            best = (r, set(J))
    return best


def coordinate_descent(y, D, lam, tol=1e-10):
    """Cyclic coordinate descent for the lasso, run until no coordinate moves by tol."""
    x = np.zeros(D.shape[1])
    r = y.copy()
    sq = np.sum(D * D, axis=0)
    while True:
        moved = 0.0
        for j in range(len(x)):
            old = x[j]
            x[j] = soft_threshold(D[:, j] @ r + sq[j] * old, lam) / sq[j]
            if x[j] != old:
                r -= D[:, j] * (x[j] - old)
                moved = max(moved, abs(x[j] - old))
        if moved < tol:
            return x


TIGHT = LassoOptions(0.1, max_iters=5000, tol=1e-12)


class TestOmp:
    def test_single_atom(self, rng):
        D = unit_columns(rng, 6, 8)
        x = omp(2 * D[:, 3], D, 1)
        assert np.flatnonzero(x).tolist() == [3]
        assert x[3] == pytest.approx(2.0, abs=1e-12)

    def test_zero_signal(self, rng):
        assert not np.any(omp(np.zeros(6), unit_columns(rng, 6, 8), 3))

    def test_planted_matches_exhaustive(self, rng):
        for _ in range(20):
            D = incoherent_dictionary(rng)
            J = rng.choice(16, 2, replace=False)
            x0 = np.zeros(16)
            x0[J] = rng.standard_normal(2)
            y = D @ x0
            _, S = exhaustive_support(y, D, 2)
            assert set(np.flatnonzero(omp(y, D, 2))) == S == set(J)

    def test_residual_monotone_and_orthogonal(self, rng):
        D = unit_columns(rng, 10, 25)
        y = rng.standard_normal(10)
        prev = np.linalg.norm(y)
        for s in range(1, 7):
            x = omp(y, D, s)
            r = y - D @ x
            assert np.linalg.norm(r) < prev
            prev = np.linalg.norm(r)
            assert np.max(np.abs(D[:, np.flatnonzero(x)].T @ r)) < 1e-8

    def test_tie_breaks_to_lowest_index(self):
        D = np.eye(3)
        x = omp(np.array([1.0, 1.0, 0.5]), D, 1)
        assert np.flatnonzero(x).tolist() == [0]

    def test_duplicate_atom_is_rejected(self, rng):
        D = unit_columns(rng, 5, 6)
        D[:, 1] = D[:, 0]
        y = D[:, 0] + 0.5 * D[:, 4]
        x = omp(y, D, 2)
        assert np.linalg.norm(y - D @ x) < 1e-10

    def test_errors(self, rng):
        D = unit_columns(rng, 4, 6)
        with pytest.raises(ValueError):
            omp(np.ones(4), 2 * D, 1)
        with pytest.raises(ValueError):
            omp(np.ones(4), D, 5)


class TestLasso:
    def test_orthonormal_is_soft_threshold(self, rng):
        Q = ortho_group.rvs(6, random_state=rng)
        y = rng.standard_normal(6)
        np.testing.assert_allclose(lasso(y, Q, LassoOptions(0.3, max_iters=5000, tol=1e-14)), soft_threshold(Q.T @ y, 0.3),
                                   atol=1e-10)

    def test_large_lambda_gives_zero(self, rng):
        D = unit_columns(rng, 6, 10)
        y = rng.standard_normal(6)
        lam = np.max(np.abs(D.T @ y)) * 1.0001
        assert not np.any(lasso(y, D, LassoOptions(lam)))

    def test_coordinate_descent_oracle(self, rng):
        for _ in range(10):
            D = unit_columns(rng, 10, 20)
            y = rng.standard_normal(10)
            xf, xc = lasso(y, D, TIGHT), coordinate_descent(y, D, 0.1)
            assert objective_f(y, D, xf, 0.1) <= objective_f(y, D, xc, 0.1) + 1e-6

    def test_subgradient_optimality(self, rng):
        D = unit_columns(rng, 10, 20)
        y = rng.standard_normal(10)
        x = lasso(y, D, TIGHT)
        g = D.T @ (D @ x - y)
        on = x != 0
        assert np.all(np.abs(g[on] + 0.1 * np.sign(x[on])) <= 1e-5)
        assert np.all(np.abs(g[~on]) <= 0.1 + 1e-5)

    def test_fista_beats_short_ista(self, rng):
        D = unit_columns(rng, 10, 20)
        y = rng.standard_normal(10)
        ista = lasso(y, D, LassoOptions(0.1, max_iters=50, tol=0.0, accelerated=False))
        fista = lasso(y, D, TIGHT)
        assert objective_f(y, D, fista, 0.1) <= objective_f(y, D, ista, 0.1) + 1e-9

    def test_no_worse_than_zero(self, rng):
        D = unit_columns(rng, 8, 12)
        Y = rng.standard_normal((8, 5))
        X = lasso_batch(Y, D, LassoOptions(0.2))
        for l in range(5):
            assert objective_f(Y[:, l], D, X[:, l], 0.2) <= 0.5 * Y[:, l] @ Y[:, l]

    def test_invalid_options(self):
        with pytest.raises(ValueError):
            LassoOptions(0.0)
        with pytest.raises(ValueError):
            lasso(np.array([np.nan, 1.0]), np.eye(2), LassoOptions(0.1))


def test_objective_f(rng):
    D = rng.standard_normal((4, 6))
    y, x = rng.standard_normal(4), rng.standard_normal(6)
    assert objective_f(y, D, np.zeros(6), 0.5) == pytest.approx(0.5 * y @ y)
    assert objective_f(D @ x, D, x, 0.0) == pytest.approx(0.0, abs=1e-20)
    r = y - D @ x
    assert objective_f(y, D, x, 0.3) == pytest.approx(0.5 * r @ r + 0.3 * np.abs(x).sum())


@pytest.mark.parametrize("coder", [OMP(3), Lasso(LassoOptions(0.1))])
def test_batch_equals_loop(rng, coder):
    D = unit_columns(rng, 8, 16)
    Y = rng.standard_normal((8, 7))
    Y[:, 5] = Y[:, 2]
    X = code_batch(Y, D, coder)
    assert X.values.shape == (16, 7)
    # matrix products over different batch widths may round differently
    for l in range(7):
        np.testing.assert_allclose(X.values[:, l], code_batch(Y[:, l:l + 1], D, coder).values[:, 0],
                                   rtol=0, atol=1e-12)
    np.testing.assert_allclose(X.values[:, 5], X.values[:, 2], rtol=0, atol=1e-12)
    assert [list(s) for s in X.supports] == [list(np.flatnonzero(c)) for c in X.values.T]


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 10), st.integers(1, 4), st.integers(0, 10**6))
def test_omp_support_size_property(m, s, seed):
    rng = np.random.default_rng(seed)
    D = unit_columns(rng, m, 2 * m)
    Y = rng.standard_normal((m, 3))
    X = omp_batch(Y, D, s)
    assert np.all(np.count_nonzero(X, axis=0) <= s)
    R = Y - D @ X
    assert np.all(np.linalg.norm(R, axis=0) <= np.linalg.norm(Y, axis=0) + 1e-12)

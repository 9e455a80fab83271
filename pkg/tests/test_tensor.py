import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsrdl.tensor import (CpFactors, cpd, khatri_rao, kron, kron_chain, mode_product,
                          nuclear_norm, outer, refold, svt, unfold, vec, vec_inv)


def unfold_oracle(t, n):
    """Kolda-Bader unfolding by explicit index enumeration."""
    dims = t.shape
    rest = [k for k in range(t.ndim) if k != n]
    out = np.zeros((dims[n], t.size // dims[n]))
    for idx in itertools.product(*[range(d) for d in dims]):
        col, stride = 0, 1
        for k in rest:
            col += idx[k] * stride
            stride *= dims[k]
        out[idx[n], col] = t[idx]
    return out


def kron_oracle(a, b):
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    out[i * b.shape[0] + k, j * b.shape[1] + l] = a[i, j] * b[k, l]
    return out


class TestUnfold:
    def test_matrix_mode0_is_identity(self, rng):
        A = rng.standard_normal((2, 2))
        assert np.array_equal(unfold(A, 0), A)

    def test_zeros(self):
        assert np.array_equal(unfold(np.zeros((2, 3, 4)), 1), np.zeros((3, 8)))

    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_matches_index_oracle(self, rng, n):
        t = rng.standard_normal((2, 3, 4))
        assert np.array_equal(unfold(t, n), unfold_oracle(t, n))

    def test_mode_out_of_range(self):
        with pytest.raises(ValueError):
            unfold(np.zeros((2, 2)), 2)

    def test_refold_index_oracle(self, rng):
        M = rng.standard_normal((3, 8))
        t = refold(M, 1, (2, 3, 4))
        assert np.array_equal(unfold_oracle(t, 1), M)

    def test_refold_zero(self):
        assert not np.any(refold(np.zeros((3, 8)), 1, (2, 3, 4)))

    def test_refold_shape_mismatch(self):
        with pytest.raises(ValueError):
            refold(np.zeros((3, 7)), 1, (2, 3, 4))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(1, 6), min_size=1, max_size=5), st.data())
    def test_round_trip_property(self, dims, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        t = rng.standard_normal(dims)
        n = data.draw(st.integers(0, len(dims) - 1))
        M = unfold(t, n)
        assert np.array_equal(refold(M, n, t.shape), t)
        assert np.linalg.norm(M) == pytest.approx(np.linalg.norm(t), rel=1e-14)
        assert np.linalg.norm(vec(M)) == pytest.approx(np.linalg.norm(t), rel=1e-14)


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_scalar(self, rng):
        B = rng.standard_normal((3, 2))
        assert np.array_equal(kron(np.array([[2.0]]), B), 2 * B)

    def test_four_loop_oracle(self, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
        assert np.array_equal(kron(a, b), kron_oracle(a, b))

    def test_chain(self, rng):
        A = rng.standard_normal((2, 3))
        assert np.array_equal(kron_chain([A]), A)
        assert np.array_equal(kron_chain([np.eye(2), np.eye(3)]), np.eye(6))
        B, C = rng.standard_normal((2, 2)), rng.standard_normal((3, 1))
        assert np.array_equal(kron_chain([A, B, C]), kron(kron(A, B), C))

    def test_chain_empty(self):
        with pytest.raises(ValueError):
            kron_chain([])

    def test_mixed_product(self, rng):
        A, B = rng.standard_normal((2, 3)), rng.standard_normal((4, 2))
        C, D = rng.standard_normal((3, 2)), rng.standard_normal((2, 5))
        np.testing.assert_allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-10)


def test_vec():
    assert np.array_equal(vec(np.eye(2)), [1.0, 0.0, 0.0, 1.0])
    A = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(vec_inv(vec(A), 2, 3), A)
    with pytest.raises(ValueError):
        vec_inv(np.ones(5), 2, 3)


def test_mode_product_matches_einsum(rng):
    t = rng.standard_normal((2, 3, 4))
    U = rng.standard_normal((5, 3))
    np.testing.assert_allclose(mode_product(t, U, 1), np.einsum("ijk,lj->ilk", t, U), atol=1e-12)
    # unfolding identity Y_(n) = U X_(n)
    np.testing.assert_allclose(unfold(mode_product(t, U, 1), 1), U @ unfold(t, 1), atol=1e-12)


def test_khatri_rao_columns(rng):
    A, B = rng.standard_normal((3, 2)), rng.standard_normal((4, 2))
    KR = khatri_rao([A, B])
    for k in range(2):
        np.testing.assert_array_equal(KR[:, k], np.kron(A[:, k], B[:, k]))


class TestSvt:
    def test_diagonal(self):
        out = svt(np.diag([3.0, 1.0, 0.5]), 1.0)
        np.testing.assert_allclose(out, np.diag([2.0, 0.0, 0.0]), atol=1e-14)

    def test_zero_threshold(self, rng):
        M = rng.standard_normal((4, 3))
        np.testing.assert_allclose(svt(M, 0.0), M, atol=1e-10)

    def test_svd_oracle(self, rng):
        import scipy.linalg
        M = rng.standard_normal((4, 4))
        U, s, Vt = scipy.linalg.svd(M, lapack_driver="gesvd")
        ref = U @ np.diag(np.maximum(s - 0.7, 0)) @ Vt
        np.testing.assert_allclose(svt(M, 0.7), ref, atol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            svt(np.eye(2), -1.0)
        with pytest.raises(np.linalg.LinAlgError):
            svt(np.array([[np.nan, 0.0], [0.0, 1.0]]), 0.1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.floats(0, 3), st.integers(0, 10**6))
    def test_shrinks_and_nonexpansive(self, m, n, tau, seed):
        rng = np.random.default_rng(seed)
        A, B = rng.standard_normal((m, n)), rng.standard_normal((m, n))
        SA, SB = svt(A, tau), svt(B, tau)
        assert nuclear_norm(SA) <= nuclear_norm(A) + 1e-10
        assert np.linalg.norm(SA - SB) <= np.linalg.norm(A - B) + 1e-10


class TestCpd:
    def test_rank_one_exact(self, rng):
        t = outer([rng.standard_normal(d) for d in (3, 4, 5)])
        cp = cpd(t, 1, seed=0)
        assert np.linalg.norm(cp.full() - t) < 1e-8

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_matrix_matches_eckart_young(self, rng, r):
        M = rng.standard_normal((6, 5))
        s = np.linalg.svd(M, compute_uv=False)
        best = np.sqrt(np.sum(s[r:] ** 2)) / np.linalg.norm(M)
        assert cpd(M, r, seed=1, restarts=5).fit_error == pytest.approx(best, abs=1e-6)

    @pytest.mark.parametrize("r", [2, 3])
    def test_recovers_exact_low_rank(self, rng, r):
        dims = (4, 5, 6)
        fs = [rng.standard_normal((d, r)) for d in dims]
        fs = [f / np.linalg.norm(f, axis=0) for f in fs]
        t = CpFactors(fs, np.arange(1.0, r + 1) * 2).full()
        cp = cpd(t, r, restarts=10, seed=3)
        assert cp.fit_error < 1e-6

    def test_unit_columns_and_determinism(self, rng):
        t = rng.standard_normal((3, 4, 2))
        a, b = cpd(t, 2, seed=7), cpd(t, 2, seed=7)
        assert np.array_equal(a.weights, b.weights)
        for f in a.factors:
            np.testing.assert_allclose(np.linalg.norm(f, axis=0), 1.0, atol=1e-12)

    def test_zero_tensor(self):
        cp = cpd(np.zeros((2, 3)), 2, seed=0)
        assert cp.fit_error == 0.0 and not np.any(cp.weights)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            cpd(np.full((2, 2), np.inf), 1)

    def test_warm_start_is_used(self, rng):
        fs = [rng.standard_normal((d, 2)) for d in (3, 4, 5)]
        t = CpFactors(fs, np.ones(2)).full()
        cold = cpd(t, 2, restarts=1, seed=0)
        warm = cpd(t, 2, restarts=0, init=cold)
        assert warm.fit_error <= cold.fit_error + 1e-12


import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsrdl.rearrange import (assemble_from_cp, build_map, cp_to_terms, rank_one_tensor,
                             rearrange, rearrange_inv, terms_to_cp, tile_indices)
from lsrdl.tensor import CpFactors, cpd, kron_chain, outer, unfold, vec

dims_strategy = st.integers(1, 4).flatmap(
    lambda N: st.tuples(st.lists(st.integers(1, 4), min_size=N, max_size=N),
                        st.lists(st.integers(1, 4), min_size=N, max_size=N)))


def literal_one_based(i, j, m_dims, p_dims):
    """Tile indices from the 1-based floor formulas, evaluated as written.

    ``i, j`` are 1-based; returns the 1-based linear index into the
    column-major vectorization of the rearranged tensor.
    """
    N = len(m_dims)
    m = lambda a, b: int(np.prod(m_dims[a - 1:b]))  # prod_{t=a}^{b} m_t
    p = lambda a, b: int(np.prod(p_dims[a - 1:b]))
    T = {}
    ii, jj = i, j
    for n in range(1, N):
        Sj = (jj - 1) // p(n + 1, N)
        Si = (ii - 1) // m(n + 1, N)
        T[N - n] = Sj * m_dims[n - 1] + Si + 1
        ii = ii - Si * m(n + 1, N)
        jj = jj - Sj * p(n + 1, N)
    T[0] = (jj - 1) * m_dims[N - 1] + ii
    sizes = [m_dims[N - 1 - k] * p_dims[N - 1 - k] for k in range(N)]
    lin, stride = 1, 1
    for k in range(N):
        lin += (T[k] - 1) * stride
        stride *= sizes[k]
    return lin


def tile_search_oracle(m_dims, p_dims):
    """Locate every entry by testing which tile of each order contains it."""
    m, p = int(np.prod(m_dims)), int(np.prod(p_dims))
    N = len(m_dims)
    sizes = [m_dims[N - 1 - k] * p_dims[N - 1 - k] for k in range(N)]
    out = np.empty(m * p, dtype=int)
    for j in range(p):
        for i in range(m):
            r0, c0, pos = 0, 0, []
            for n in range(N):
                th, tw = int(np.prod(m_dims[n + 1:])), int(np.prod(p_dims[n + 1:]))
                found = None
                for a in range(m_dims[n]):
                    for b in range(p_dims[n]):
                        top, left = r0 + a * th, c0 + b * tw
                        if top <= i < top + th and left <= j < left + tw:
                            found = (a, b, top, left)
                a, b, r0, c0 = found
                pos.append(b * m_dims[n] + a)  # column-major cell index in factor n
            T = pos[::-1]
            out[j * m + i] = np.ravel_multi_index(T, sizes, order="F")
    return out


def test_identity_for_one_factor():
    rmap = build_map((3,), (4,))
    assert np.array_equal(rmap.forward, np.arange(12))


def test_first_element_maps_to_first():
    rmap = build_map((2, 2), (2, 2))
    assert rmap.forward[0] == 0
    assert tile_indices(0, 0, (2, 2), (2, 2)) == (0, 0)


def test_exhaustive_tile_search_n3():
    rmap = build_map((2, 2, 2), (2, 2, 2))
    assert np.array_equal(rmap.forward, tile_search_oracle((2, 2, 2), (2, 2, 2)))


@pytest.mark.parametrize("m_dims,p_dims", [((2, 3), (3, 2)), ((2, 5, 3), (4, 10, 5)),
                                           ((2, 1, 3, 2), (1, 3, 2, 2))])
def test_one_based_formulas(m_dims, p_dims):
    rmap = build_map(m_dims, p_dims)
    m = rmap.m
    for l in range(rmap.m * rmap.p):
        i, j = l % m + 1, l // m + 1
        assert rmap.forward[l] == literal_one_based(i, j, m_dims, p_dims) - 1


def test_tile_indices_agree_with_map(rng):
    m_dims, p_dims = (2, 3, 2), (3, 2, 2)
    rmap = build_map(m_dims, p_dims)
    sizes = rmap.tensor_dims
    for l in rng.choice(rmap.m * rmap.p, 30, replace=False):
        T = tile_indices(l % rmap.m, l // rmap.m, m_dims, p_dims)
        assert np.ravel_multi_index(T, sizes, order="F") == rmap.forward[l]


def test_identity_kron():
    rmap = build_map((2, 2), (2, 2))
    v = np.array([1.0, 0, 0, 1])
    assert np.array_equal(rearrange(np.eye(4), rmap), np.multiply.outer(v, v))


def test_two_factor_outer_oracle(rng):
    A1, A2 = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
    rmap = build_map((2, 3), (3, 2))
    expected = np.multiply.outer(vec(A1), vec(A2)).T  # vec(A2) o vec(A1)
    assert np.array_equal(rearrange(np.kron(A1, A2), rmap), expected)
    assert np.array_equal(rearrange_inv(expected, rmap), np.kron(A1, A2))


@settings(max_examples=60, deadline=None)
@given(dims_strategy, st.integers(0, 2**32 - 1))
def test_lemma_identity_and_inverse(dims, seed):
    m_dims, p_dims = dims
    rng = np.random.default_rng(seed)
    fs = [rng.standard_normal((a, b)) for a, b in zip(m_dims, p_dims)]
    rmap = build_map(m_dims, p_dims)
    assert np.array_equal(np.sort(rmap.forward), np.arange(rmap.m * rmap.p))
    assert np.array_equal(rmap.inverse[rmap.forward], np.arange(rmap.m * rmap.p))
    D = kron_chain(fs)
    T = rearrange(D, rmap)
    assert np.array_equal(T, rank_one_tensor(fs))
    # the same values as the outer product in any multiplication order
    np.testing.assert_allclose(T, outer([vec(f) for f in fs[::-1]]), rtol=1e-14, atol=1e-300)
    assert np.array_equal(rearrange_inv(T, rmap), D)


@settings(max_examples=40, deadline=None)
@given(dims_strategy, st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_linear_isometry(dims, a, b, seed):
    m_dims, p_dims = dims
    rmap = build_map(m_dims, p_dims)
    rng = np.random.default_rng(seed)
    D1, D2 = rng.standard_normal((2, rmap.m, rmap.p))
    T1 = rearrange(D1, rmap)
    # same multiset of entries, so the Frobenius norm is preserved
    assert np.array_equal(np.sort(T1.ravel()), np.sort(D1.ravel()))
    assert np.linalg.norm(T1) == pytest.approx(np.linalg.norm(D1), rel=1e-14)
    # a permutation commutes with entrywise arithmetic, so this is exact
    assert np.array_equal(rearrange(a * D1 + b * D2, rmap),
                          a * rearrange(D1, rmap) + b * rearrange(D2, rmap))


def test_shape_errors():
    rmap = build_map((2, 2), (2, 2))
    with pytest.raises(ValueError):
        rearrange(np.zeros((4, 3)), rmap)
    with pytest.raises(ValueError):
        rearrange_inv(np.zeros((4, 3)), rmap)
    with pytest.raises(ValueError):
        build_map((2, 2), (2,))


def test_zero_tensor_inverse():
    rmap = build_map((2, 3), (2, 2))
    assert not np.any(rearrange_inv(np.zeros(rmap.tensor_dims), rmap))


def test_sum_of_two_terms_is_rank_two(rng):
    m_dims, p_dims = (2, 2, 3), (2, 3, 2)
    terms = [[rng.standard_normal((a, b)) for a, b in zip(m_dims, p_dims)] for _ in range(2)]
    D = sum(kron_chain(t) for t in terms)
    cp = cpd(rearrange(D, build_map(m_dims, p_dims)), 2, restarts=10, seed=0)
    assert cp.fit_error < 1e-8


@pytest.mark.parametrize("k", [1, 2, 3])
def test_separation_rank_equals_unfolding_rank(rng, k):
    m_dims, p_dims = (3, 3), (3, 3)
    D = sum(kron_chain([rng.standard_normal((3, 3)) for _ in range(2)]) for _ in range(k))
    sv = np.linalg.svd(unfold(rearrange(D, build_map(m_dims, p_dims)), 0), compute_uv=False)
    assert np.sum(sv > 1e-8 * sv[0]) == k


class TestAssembleFromCp:
    def test_rank_one(self, rng):
        D1, D2 = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
        rmap = build_map((2, 3), (3, 2))
        cp = terms_to_cp([[D1, D2]])
        np.testing.assert_allclose(assemble_from_cp(cp, rmap), np.kron(D1, D2), atol=1e-14)

    def test_matches_rearranged_reconstruction(self, rng):
        rmap = build_map((2, 3, 2), (2, 2, 3))
        fs = [rng.standard_normal((d, 2)) for d in rmap.tensor_dims]
        cp = CpFactors(fs, np.array([1.5, -0.5]))
        np.testing.assert_allclose(assemble_from_cp(cp, rmap), rearrange_inv(cp.full(), rmap),
                                   atol=1e-12)

    def test_zero_weights(self, rng):
        rmap = build_map((2, 2), (2, 2))
        cp = CpFactors([rng.standard_normal((4, 2)) for _ in range(2)], np.zeros(2))
        assert not np.any(assemble_from_cp(cp, rmap))

    def test_shape_mismatch(self, rng):
        rmap = build_map((2, 2), (2, 2))
        with pytest.raises(ValueError):
            cp_to_terms(CpFactors([np.ones((3, 1)), np.ones((4, 1))], np.ones(1)), rmap)


def test_checksum_is_order_sensitive():
    a, b = build_map((2, 3), (3, 2)), build_map((3, 2), (2, 3))
    assert a.checksum() == build_map((2, 3), (3, 2)).checksum()
    assert a.checksum() != b.checksum()

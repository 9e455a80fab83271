"""Kronecker-to-tensor rearrangement.

A matrix ``A = A_1 kron A_2 kron ... kron A_N`` (``A_n`` of shape
``m_n x p_n``) is a permutation of the rank-one tensor
``vec(A_N) o ... o vec(A_1)`` of shape ``(m_N p_N, ..., m_1 p_1)``. The
permutation only depends on the factor shapes, so it is computed once as an
index array (:class:`RearrangementMap`) and applied by gather/scatter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import CpFactors, kron_chain, vec, vec_inv


def tile_indices(i: int, j: int, m_dims, p_dims) -> tuple:
    """Tile indices ``(T_0, ..., T_{N-1})`` of entry ``(i, j)`` (0-based).

    The entry is located by walking from the coarsest tile down: at level
    ``n`` the tile grid has ``m_n x p_n`` cells, each one a scaled copy of
    ``A_{n+1} kron ... kron A_N``. ``T_{N-1-n}`` is the column-major position
    of that cell inside ``A_n``.
    """
    N = len(m_dims)
    T = [0] * N
    for n in range(N):
        tile_rows = int(np.prod(m_dims[n + 1:], dtype=np.int64))
        tile_cols = int(np.prod(p_dims[n + 1:], dtype=np.int64))
        si, i = divmod(i, tile_rows)
        sj, j = divmod(j, tile_cols)
        T[N - 1 - n] = sj * m_dims[n] + si
    return tuple(T)


@dataclass(frozen=True)
class RearrangementMap:
    """Index map realizing ``vec(D_pi) = Pi vec(D)``.

    ``forward[l]`` is the position in ``vec(D_pi)`` of entry ``l`` of
    ``vec(D)``.
    """

    m_dims: tuple
    p_dims: tuple
    forward: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.m_dims)

    @property
    def m(self) -> int:
        return int(np.prod(self.m_dims))

    @property
    def p(self) -> int:
        return int(np.prod(self.p_dims))

    @property
    def tensor_dims(self) -> tuple:
        return tuple(mn * pn for mn, pn in zip(self.m_dims[::-1], self.p_dims[::-1]))

    def checksum(self) -> int:
        """Order-sensitive checksum of the forward map."""
        w = np.arange(1, self.forward.size + 1, dtype=np.uint64)
        return int(np.sum(self.forward.astype(np.uint64) * w) % np.uint64(2**61 - 1))


def build_map(m_dims, p_dims) -> RearrangementMap:
    """Build the rearrangement permutation for the given factor shapes."""
    m_dims = tuple(int(d) for d in m_dims)
    p_dims = tuple(int(d) for d in p_dims)
    if len(m_dims) != len(p_dims) or not m_dims:
        raise ValueError("m_dims and p_dims must be nonempty and of equal length")
    if min(m_dims + p_dims) < 1:
        raise ValueError("all dimensions must be positive")
    m = int(np.prod(m_dims, dtype=np.int64))
    p = int(np.prod(p_dims, dtype=np.int64))
    if m * p >= np.iinfo(np.int64).max // 2:
        raise OverflowError("rearrangement size overflows int64 indices")
    N = len(m_dims)

    # Same tile walk as tile_indices, vectorized over every entry l of vec(D).
    ell = np.arange(m * p, dtype=np.int64)
    i, j = ell % m, ell // m
    tensor_dims = [m_dims[n] * p_dims[n] for n in range(N)][::-1]
    strides = np.concatenate(([1], np.cumprod(tensor_dims)[:-1])).astype(np.int64)
    dest = np.zeros_like(ell)
    for n in range(N):
        tile_rows = int(np.prod(m_dims[n + 1:], dtype=np.int64))
        tile_cols = int(np.prod(p_dims[n + 1:], dtype=np.int64))
        si, i = np.divmod(i, tile_rows)
        sj, j = np.divmod(j, tile_cols)
        dest += (sj * m_dims[n] + si) * strides[N - 1 - n]
    inverse = np.empty_like(dest)
    inverse[dest] = ell
    return RearrangementMap(m_dims, p_dims, dest, inverse)


def rank_one_tensor(factors) -> np.ndarray:
    """``vec(A_N) o ... o vec(A_1)`` for factors ``[A_1, ..., A_N]``.

    The products are formed in the same order as :func:`kron_chain`
    (``A_1`` first), so every entry is bitwise equal to the matching entry
    of the Kronecker product.
    """
    vecs = [vec(np.asarray(f)) for f in factors]
    t = vecs[0]
    for v in vecs[1:]:
        t = np.multiply.outer(t, v)
    return np.transpose(t)


def rearrange(d: np.ndarray, rmap: RearrangementMap) -> np.ndarray:
    """Rearrange an ``m x p`` matrix into its tensor of shape ``rmap.tensor_dims``."""
    d = np.asarray(d)
    if d.shape != (rmap.m, rmap.p):
        raise ValueError(f"matrix shape {d.shape} does not match ({rmap.m}, {rmap.p})")
    out = np.empty(d.size, dtype=d.dtype)
    out[rmap.forward] = vec(d)
    return out.reshape(rmap.tensor_dims, order="F")


def rearrange_inv(t: np.ndarray, rmap: RearrangementMap) -> np.ndarray:
    """Inverse of :func:`rearrange`."""
    t = np.asarray(t)
    if t.shape != rmap.tensor_dims:
        raise ValueError(f"tensor shape {t.shape} does not match {rmap.tensor_dims}")
    return vec_inv(vec(t)[rmap.forward], rmap.m, rmap.p)


def cp_to_terms(cp: CpFactors, rmap: RearrangementMap) -> list:
    """Split a CP model of a rearranged tensor into Kronecker factor grids.

    Returns a list of ``r`` lists, term ``k`` holding ``[D^k_1, ..., D^k_N]``
    with the CP weight folded into ``D^k_1``.
    """
    N = rmap.N
    if len(cp.factors) != N:
        raise ValueError("CP order does not match the rearrangement")
    for mode, f in enumerate(cp.factors):
        n = N - 1 - mode
        if f.shape[0] != rmap.m_dims[n] * rmap.p_dims[n]:
            raise ValueError(f"CP factor {mode} has {f.shape[0]} rows, expected "
                             f"{rmap.m_dims[n] * rmap.p_dims[n]}")
    terms = []
    for k in range(cp.rank):
        term = []
        for n in range(N):
            col = cp.factors[N - 1 - n][:, k]
            term.append(vec_inv(col, rmap.m_dims[n], rmap.p_dims[n]))
        term[0] = term[0] * cp.weights[k]
        terms.append(term)
    return terms


def assemble_from_cp(cp: CpFactors, rmap: RearrangementMap) -> np.ndarray:
    """Matrix ``sum_k kron_n D^k_n`` represented by a CP model of its rearrangement."""
    terms = cp_to_terms(cp, rmap)
    out = np.zeros((rmap.m, rmap.p))
    for term in terms:
        out += kron_chain(term)
    return out


def terms_to_cp(factors) -> CpFactors:
    """CP model of the rearrangement of ``sum_k kron_n factors[k][n]``."""
    N = len(factors[0])
    cols = [[vec(term[N - 1 - mode]) for term in factors] for mode in range(N)]
    mats = [np.column_stack(c) for c in cols]
    weights = np.ones(len(factors))
    for i, M in enumerate(mats):
        norms = np.linalg.norm(M, axis=0)
        weights = weights * norms
        mats[i] = M / np.where(norms > 0, norms, 1.0)
    return CpFactors(mats, weights)

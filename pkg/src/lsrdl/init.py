"""Sample layout conventions and dictionary initialization from data.

A sample vector ``y`` of length ``prod(m_dims)`` corresponds to the tensor
``y.reshape(m_dims)`` (row-major), for which
``(D_1 kron ... kron D_N) x`` equals the Tucker product
``X x_1 D_1 x_2 ... x_N D_N``. Equivalently, ``y`` is the column-major
vectorization of the tensor with modes listed in reverse.
"""

from __future__ import annotations

import numpy as np

from .dictionary import LsrDictionary
from .tensor import unfold


def as_tensor(y: np.ndarray, dims) -> np.ndarray:
    """View a sample vector as a tensor with mode ``n`` of size ``dims[n]``."""
    return np.asarray(y).reshape(tuple(dims))


def data_unfolding(Y: np.ndarray, m_dims, n: int) -> np.ndarray:
    """Mode-`n` unfolding of all samples side by side: ``m_n x (m / m_n * L)``."""
    L = Y.shape[1]
    T = np.asarray(Y).T.reshape((L,) + tuple(m_dims))
    return unfold(T, n + 1)


def init_from_data(Y, m_dims, p_dims, r: int, rng) -> LsrDictionary:
    """Factors built from random columns of the data unfoldings.

    Factor ``D^k_n`` takes ``p_n`` distinct random columns of the mode-``n``
    unfolding of the training tensors, normalized. Zero columns are replaced
    by Gaussian ones.
    """
    rng = np.random.default_rng(rng)
    factors = []
    for _ in range(r):
        term = []
        for n, (mn, pn) in enumerate(zip(m_dims, p_dims)):
            U = data_unfolding(Y, m_dims, n)
            cols = rng.choice(U.shape[1], size=pn, replace=U.shape[1] < pn)
            F = U[:, cols].astype(float)
            norms = np.linalg.norm(F, axis=0)
            dead = norms < 1e-12
            if np.any(dead):
                F[:, dead] = rng.standard_normal((mn, int(dead.sum())))
                norms = np.linalg.norm(F, axis=0)
            term.append(F / norms)
        factors.append(term)
    return LsrDictionary.from_factors(factors, m_dims, p_dims)


def init_from_samples(Y, m_dims, p_dims, r: int, rng) -> LsrDictionary:
    """Factors split off a matrix of random training samples.

    ``p`` distinct random columns of `Y` (normalized) form an unstructured
    dictionary; its rearrangement is approximated by a rank-`r` CPD and
    the CP terms become the Kronecker factors. For ``r = 1`` this is the
    nearest Kronecker product to the sample matrix.
    """
    from .rearrange import build_map, cp_to_terms, rearrange
    from .tensor import cpd

    rng = np.random.default_rng(rng)
    rmap = build_map(m_dims, p_dims)
    L = Y.shape[1]
    cols = rng.choice(L, size=rmap.p, replace=L < rmap.p)
    D = np.asarray(Y[:, cols], dtype=float)
    norms = np.linalg.norm(D, axis=0)
    dead = norms < 1e-12
    if np.any(dead):
        D[:, dead] = rng.standard_normal((rmap.m, int(dead.sum())))
        norms = np.linalg.norm(D, axis=0)
    cp = cpd(rearrange(D / norms, rmap), r, seed=rng)
    return LsrDictionary.from_factors(cp_to_terms(cp, rmap), m_dims, p_dims)


def random_dictionary(m_dims, p_dims, r: int, rng) -> LsrDictionary:
    """Gaussian factors with unit-norm columns."""
    rng = np.random.default_rng(rng)
    factors = []
    for _ in range(r):
        term = []
        for mn, pn in zip(m_dims, p_dims):
            F = rng.standard_normal((mn, pn))
            term.append(F / np.linalg.norm(F, axis=0))
        factors.append(term)
    return LsrDictionary.from_factors(factors, m_dims, p_dims)


def repr_error(Y, D, X) -> float:
    """Normalized representation error ``||Y - D X||_F / ||Y||_F``."""
    ny = np.linalg.norm(Y)
    err = np.linalg.norm(Y - D @ X)
    return float(err / ny) if ny > 0 else float(err)

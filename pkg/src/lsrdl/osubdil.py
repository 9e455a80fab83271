"""Online LSR dictionary learning.

Each new sample is coded with the current dictionary, then every factor
``D^k_n`` gets one cyclic sweep of block coordinate descent on the
surrogate ``Tr(D^T D A) - 2 Tr(D^T B)``, where the accumulators ``A^k_n``
and ``B^k_n`` collect sufficient statistics of all samples seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import LsrDictionary
from .init import as_tensor, init_from_data
from .runlog import RunLog
from .sparse import OMP, Lasso, LassoOptions, code_batch
from .tensor import mode_product, unfold


@dataclass
class OnlineState:
    factors: list
    A: list
    B: list
    t: int
    dictionary: LsrDictionary

    @property
    def m_dims(self):
        return self.dictionary.m_dims

    @property
    def p_dims(self):
        return self.dictionary.p_dims


def init_state(D: LsrDictionary) -> OnlineState:
    """Start from a factored dictionary with zero accumulators."""
    if not D.factors:
        raise ValueError("online learning needs a factored dictionary")
    factors = [[f.copy() for f in term] for term in D.factors]
    A = [[np.zeros((f.shape[1], f.shape[1])) for f in term] for term in factors]
    B = [[np.zeros_like(f) for f in term] for term in factors]
    return OnlineState(factors, A, B, 0, D)


def bcd_column_sweep(D: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """One cyclic pass ``d_j <- d_j + (b_j - D a_j) / A_jj`` over the columns.

    Columns with ``A_jj == 0`` (atoms never used) are left unchanged.
    """
    D = D.copy()
    for j in range(D.shape[1]):
        ajj = A[j, j]
        if ajj <= 0:
            continue
        D[:, j] += (B[:, j] - D @ A[:, j]) / ajj
    return D


def surrogate(D, A, B) -> float:
    """``Tr(D^T D A) - 2 Tr(D^T B)``."""
    return float(np.sum((D.T @ D) * A) - 2.0 * np.sum(D * B))


def _partial_product(X, term, n):
    """``X`` multiplied along every mode except `n` by the factors of `term`."""
    Z = X
    for i, F in enumerate(term):
        if i != n:
            Z = mode_product(Z, F, i)
    return Z


def osubdil_update(state: OnlineState, y: np.ndarray, x: np.ndarray,
                   record: list | None = None) -> OnlineState:
    """Dictionary update for one sample `y` with code `x` (raw factor scale).

    The ``(k, n)`` loop runs in order; each pass forms the residual of the
    other terms with the current factors, accumulates ``A^k_n`` and
    ``B^k_n``, and sweeps the columns of ``D^k_n`` once. When `record` is a
    list, ``(k, n, before, after)`` surrogate values are appended to it.
    """
    m_dims, p_dims = state.m_dims, state.p_dims
    factors = [[f.copy() for f in term] for term in state.factors]
    A = [[a.copy() for a in row] for row in state.A]
    B = [[b.copy() for b in row] for row in state.B]
    if not np.any(x):
        return OnlineState(factors, A, B, state.t + 1, state.dictionary)
    Y = as_tensor(y, m_dims)
    X = as_tensor(x, p_dims)
    r, N = len(factors), len(m_dims)
    for k in range(r):
        for n in range(N):
            Z = [unfold(_partial_product(X, factors[i], n), n) for i in range(r)]
            Yhat = unfold(Y, n) - sum(factors[i][n] @ Z[i] for i in range(r) if i != k)
            A[k][n] += Z[k] @ Z[k].T
            B[k][n] += Yhat @ Z[k].T
            before = surrogate(factors[k][n], A[k][n], B[k][n]) if record is not None else None
            factors[k][n] = bcd_column_sweep(factors[k][n], A[k][n], B[k][n])
            if record is not None:
                record.append((k, n, before, surrogate(factors[k][n], A[k][n], B[k][n])))
    D = LsrDictionary.from_factors(factors, m_dims, p_dims)
    return OnlineState(factors, A, B, state.t + 1, D)


@dataclass
class OsubdilConfig:
    s: int | None = 5
    lam: float | None = None
    batch: int = 1
    lasso_iters: int = 200
    lasso_tol: float = 1e-6

    def coder(self):
        if (self.s is None) == (self.lam is None):
            raise ValueError("set exactly one of s (OMP) or lam (lasso)")
        if self.s is not None:
            return OMP(self.s)
        return Lasso(LassoOptions(self.lam, self.lasso_iters, self.lasso_tol))


def osubdil_step(state: OnlineState, Y: np.ndarray, coder, codes=None) -> tuple:
    """Code a sample (or mini-batch, one column each) and update the dictionary.

    The codes are computed with the normalized dictionary and rescaled by
    the column norms so they apply to the raw factors. Mini-batch columns
    are folded in one after another with the codes frozen at the start of
    the batch.

    Returns
    -------
    state : OnlineState
    errors : ndarray
        Per-sample relative reconstruction error before the update.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    D = state.dictionary
    X = code_batch(Y, D.assembled, coder).values if codes is None else np.asarray(codes)
    if X.ndim == 1:
        X = X[:, None]
    errs = np.linalg.norm(Y - D.assembled @ X, axis=0)
    norms = np.linalg.norm(Y, axis=0)
    errs = np.where(norms > 0, errs / np.where(norms > 0, norms, 1.0), errs)
    Xraw = X / D.col_scales[:, None]
    for col in range(Y.shape[1]):
        state = osubdil_update(state, Y[:, col], Xraw[:, col])
    return state, errs


def osubdil_train(stream, m_dims, p_dims, r: int, config: OsubdilConfig, init=None,
                  seed=0, warmup=None):
    """Fold :func:`osubdil_step` over a stream of sample vectors.

    Parameters
    ----------
    stream : iterable of ndarray or ndarray
        Sample vectors, or an ``m x T`` matrix consumed column by column.
    init : LsrDictionary, optional
        Starting dictionary. Otherwise built from random data-unfolding
        columns of `warmup` (an ``m x L0`` matrix) or, failing that,
        Gaussian factors.

    Returns
    -------
    LsrDictionary, RunLog
        One log row per sample with its error and the running mean.
    """
    if isinstance(stream, np.ndarray) and stream.ndim == 2:
        stream = stream.T
    rng = np.random.default_rng([seed, 1])
    if init is None:
        if warmup is not None:
            init = init_from_data(warmup, m_dims, p_dims, r, rng)
        else:
            from .init import random_dictionary
            init = random_dictionary(m_dims, p_dims, r, rng)
    state = init_state(init)
    coder = config.coder()
    log = RunLog(["sample_error", "running_mean"], meta={"algo": "osubdil"})
    total, count, it = 0.0, 0, 0
    batch = []

    def flush(batch, state, total, count, it):
        state, errs = osubdil_step(state, np.column_stack(batch), coder)
        for e in errs:
            it += 1
            count += 1
            total += e
            log.append(it, sample_error=float(e), running_mean=total / count)
        return state, total, count, it

    for y in stream:
        batch.append(np.asarray(y, dtype=float).ravel())
        if len(batch) == config.batch:
            state, total, count, it = flush(batch, state, total, count, it)
            batch = []
    if batch:
        state, total, count, it = flush(batch, state, total, count, it)
    return state.dictionary, log

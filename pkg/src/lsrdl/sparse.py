"""Sparse coding: orthogonal matching pursuit and lasso (ISTA/FISTA)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass
class SparseCodeMatrix:
    """Coefficient matrix of shape ``(p, L)`` plus its column supports."""

    values: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def L(self) -> int:
        return self.values.shape[1]

    @property
    def supports(self) -> list:
        return [np.flatnonzero(col) for col in self.values.T]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass
class LassoOptions:
    lam: float = 0.1
    max_iters: int = 200
    tol: float = 1e-6
    accelerated: bool = True
    power_iters: int = 50

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lasso weight must be positive")


@dataclass
class OMP:
    s: int


@dataclass
class Lasso:
    opts: LassoOptions


def objective_f(y, D, x, lam) -> float:
    """``0.5 ||y - D x||^2 + lam ||x||_1``; summed over columns for 2-D input."""
    r = np.asarray(y) - D @ x
    return float(0.5 * np.sum(r * r) + lam * np.sum(np.abs(x)))


def _check_unit_columns(D, atol=1e-8):
    norms = np.linalg.norm(D, axis=0)
    if np.any(np.abs(norms - 1.0) > atol):
        raise ValueError("OMP requires a dictionary with unit-norm columns")


def omp_batch(Y: np.ndarray, D: np.ndarray, s: int, check: bool = True) -> np.ndarray:
    """Orthogonal matching pursuit applied independently to each column of `Y`.

    Each step adds the atom with the largest absolute correlation with the
    current residual (lowest index on ties) and refits all coefficients on
    the support by least squares. An atom that would make the support
    numerically rank deficient is rejected and the next best is tried.
    Columns stop early once their residual norm drops below ``1e-10``.

    Returns
    -------
    ndarray
        Code matrix of shape ``(D.shape[1], Y.shape[1])``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, p = D.shape
    if not 0 <= s <= min(m, p):
        raise ValueError(f"sparsity {s} out of range for a {m}x{p} dictionary")
    if check:
        _check_unit_columns(D)
    L = Y.shape[1]
    X = np.zeros((p, L))
    if s == 0 or L == 0:
        return X
    support = np.zeros((L, s), dtype=np.int64)
    R = Y.copy()
    active = np.linalg.norm(Y, axis=0) >= 1e-10
    for k in range(s):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        corr = np.abs(D.T @ R[:, idx])
        if k > 0:
            # selected atoms are orthogonal to the residual; exclude them exactly
            np.put_along_axis(corr.T, support[idx, :k], -1.0, axis=1)
        support[idx, k] = np.argmax(corr, axis=0)
        sub = D[:, support[idx, :k + 1]].transpose(1, 0, 2)  # (n, m, k+1)
        q, r = np.linalg.qr(sub)
        diag = np.abs(np.diagonal(r, axis1=1, axis2=2))
        bad = diag.min(axis=1) <= 1e-10 * diag.max(axis=1)
        for b in np.flatnonzero(bad):
            support[idx[b], k], q[b], r[b] = _replace_atom(D, R[:, idx[b]], support[idx[b], :k],
                                                           corr[:, b])
        coef = np.linalg.solve(r, np.einsum("nmk,mn->nk", q, Y[:, idx])[..., None])[..., 0]
        Xi = np.zeros((idx.size, p))
        np.put_along_axis(Xi, support[idx, :k + 1], coef, axis=1)
        X[:, idx] = Xi.T
        R[:, idx] = Y[:, idx] - D @ X[:, idx]
        active[idx] = np.linalg.norm(R[:, idx], axis=0) >= 1e-10
    return X


def _replace_atom(D, r, chosen, corr):
    order = np.argsort(-corr, kind="stable")
    for j in order:
        if j in chosen or corr[j] <= 0:
            continue
        sub = D[:, list(chosen) + [j]]
        q, rr, _ = scipy.linalg.qr(sub, mode="economic", pivoting=True)
        d = np.abs(np.diag(rr))
        if d.min() > 1e-10 * d.max():
            q, rr = np.linalg.qr(sub)
            return j, q, rr
    raise np.linalg.LinAlgError("no atom keeps the OMP support full rank")


def omp(y: np.ndarray, D: np.ndarray, s: int) -> np.ndarray:
    """Single-vector OMP; see :func:`omp_batch`."""
    return omp_batch(np.asarray(y, dtype=float).reshape(-1, 1), D, s)[:, 0]


def spectral_norm_estimate(D: np.ndarray, iters: int = 50) -> float:
    """Power-iteration estimate of ``||D||_2``."""
    v = np.ones(D.shape[1]) / np.sqrt(D.shape[1])
    sigma = 0.0
    for _ in range(iters):
        w = D.T @ (D @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        sigma = np.sqrt(nw)
    return float(sigma)


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def lasso_batch(Y: np.ndarray, D: np.ndarray, opts: LassoOptions) -> np.ndarray:
    """Solve the lasso for every column of `Y` with ISTA or FISTA.

    The step size is ``1 / ||D||_2^2`` from a power-iteration estimate.
    Each column stops at the first iterate whose objective changes by less
    than ``opts.tol`` relative to the previous one; finished columns are
    frozen, so the result for a column does not depend on its batch.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(D))):
        raise ValueError("lasso inputs contain non-finite values")
    p, L = D.shape[1], Y.shape[1]
    lam = opts.lam
    # small margin so an underestimated norm cannot make the step too long
    lip = (1.01 * spectral_norm_estimate(D, opts.power_iters)) ** 2
    X = np.zeros((p, L))
    if lip == 0 or L == 0:
        return X
    step = 1.0 / lip
    DtY = D.T @ Y
    G = D.T @ D
    yy = 0.5 * np.sum(Y * Y, axis=0)

    def obj(Xc, cols):
        # 0.5||y||^2 - <Dx, y> + 0.5 x'Gx + lam|x|_1
        return (yy[cols] - np.sum(Xc * DtY[:, cols], axis=0)
                + 0.5 * np.sum(Xc * (G @ Xc), axis=0) + lam * np.sum(np.abs(Xc), axis=0))

    Z = X.copy()
    t = np.ones(L)
    active = np.arange(L)
    prev = yy.copy()
    for _ in range(opts.max_iters):
        Za = Z[:, active]
        grad = G @ Za - DtY[:, active]
        Xn = soft_threshold(Za - step * grad, step * lam)
        if opts.accelerated:
            tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t[active] ** 2))
            Z[:, active] = Xn + ((t[active] - 1.0) / tn) * (Xn - X[:, active])
            t[active] = tn
        else:
            Z[:, active] = Xn
        X[:, active] = Xn
        f = obj(Xn, active)
        done = np.abs(prev[active] - f) < opts.tol * np.maximum(np.abs(prev[active]), 1e-300)
        prev[active] = f
        active = active[~done]
        if active.size == 0:
            break
    return X


def lasso(y: np.ndarray, D: np.ndarray, opts: LassoOptions) -> np.ndarray:
    """Single-vector lasso; see :func:`lasso_batch`."""
    return lasso_batch(np.asarray(y, dtype=float).reshape(-1, 1), D, opts)[:, 0]


def code_batch(Y: np.ndarray, D: np.ndarray, coder) -> SparseCodeMatrix:
    """Code every column of `Y` with an :class:`OMP` or :class:`Lasso` coder."""
    if isinstance(coder, OMP):
        X = omp_batch(Y, D, coder.s)
    elif isinstance(coder, Lasso):
        X = lasso_batch(Y, D, coder.opts)
    else:
        raise TypeError(f"unknown coder {coder!r}")
    return SparseCodeMatrix(X)

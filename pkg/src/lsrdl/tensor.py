"""Dense tensor arithmetic.

Tensors are plain :class:`numpy.ndarray` objects. Wherever a tensor is
flattened, the column-major (first index fastest) convention is used, so
``vec(t) == t.ravel(order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a matrix or tensor."""
    return np.asarray(a).ravel(order="F")


def vec_inv(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for an ``rows x cols`` matrix."""
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape vector of length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def unfold(t: np.ndarray, n: int) -> np.ndarray:
    """Mode-`n` unfolding (matricization) of `t`.

    Columns follow the Kolda--Bader ordering: the remaining modes cycle
    with lower modes fastest.

    Parameters
    ----------
    t : ndarray
        Tensor with ``N = t.ndim`` modes.
    n : int
        Mode index, ``0 <= n < N``.

    Returns
    -------
    ndarray
        Matrix of shape ``(t.shape[n], t.size // t.shape[n])``.
    """
    t = np.asarray(t)
    if not 0 <= n < t.ndim:
        raise ValueError(f"mode {n} out of range for a {t.ndim}-way tensor")
    return np.reshape(np.moveaxis(t, n, 0), (t.shape[n], -1), order="F")


def refold(m: np.ndarray, n: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    dims = tuple(int(d) for d in dims)
    m = np.asarray(m)
    if not 0 <= n < len(dims):
        raise ValueError(f"mode {n} out of range for a {len(dims)}-way tensor")
    rest = dims[:n] + dims[n + 1:]
    expected = (dims[n], int(np.prod(rest, dtype=np.int64)))
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} does not match unfolding shape {expected}")
    return np.moveaxis(np.reshape(m, (dims[n],) + rest, order="F"), 0, n)


def mode_product(t: np.ndarray, m: np.ndarray, n: int) -> np.ndarray:
    """Mode-`n` product ``t x_n m``."""
    dims = list(t.shape)
    dims[n] = m.shape[0]
    return refold(m @ unfold(t, n), n, dims)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` equals ``a[i, j] * b``."""
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def kron_chain(ms) -> np.ndarray:
    """Left-fold of :func:`kron` over a nonempty sequence of matrices."""
    ms = list(ms)
    if not ms:
        raise ValueError("kron_chain needs at least one matrix")
    return reduce(kron, ms[1:], np.atleast_2d(ms[0]))


def outer(vectors) -> np.ndarray:
    """Outer product ``v_1 o v_2 o ... o v_N`` as an N-way array."""
    vectors = [np.asarray(v).ravel() for v in vectors]
    return reduce(np.multiply.outer, vectors)


def khatri_rao(ms) -> np.ndarray:
    """Column-wise Kronecker product of matrices sharing a column count."""
    ms = list(ms)
    r = ms[0].shape[1]
    out = ms[0]
    for m in ms[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, r)
    return out


def nuclear_norm(m: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def svt(m: np.ndarray, tau: float) -> np.ndarray:
    """Singular value soft-thresholding, the proximal map of ``tau * ||.||_*``.

    Returns ``U max(S - tau, 0) V^T`` from a thin SVD of `m`.
    """
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise np.linalg.LinAlgError("svt input contains non-finite values")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep]


@dataclass
class CpFactors:
    """Rank-`r` CP model ``sum_k weights[k] * f_1[:, k] o ... o f_N[:, k]``.

    Factor columns have unit norm; the weights carry the scale.
    """

    factors: list
    weights: np.ndarray
    fit_error: float = float("nan")
    iters: int = 0

    @property
    def rank(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def full(self) -> np.ndarray:
        """Reconstruct the dense tensor."""
        dims = self.dims
        kr = khatri_rao(self.factors[::-1])
        # khatri_rao of reversed factors gives the column-major vec of each term
        return np.reshape(kr @ self.weights, dims, order="F")


def _normalize_columns(f):
    norms = np.linalg.norm(f, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return f / safe, norms


def _cp_als_single(t, r, factors, max_iters, tol):
    """Plain CP-ALS from given starting factors; returns (CpFactors, error)."""
    N = t.ndim
    norm_t = np.linalg.norm(t)
    unfoldings = [unfold(t, n) for n in range(N)]
    factors = [f.copy() for f in factors]
    weights = np.ones(r)
    grams = [f.T @ f for f in factors]
    prev_err = np.inf
    best = None
    it = 0
    for it in range(1, max_iters + 1):
        for n in range(N):
            others = [factors[i] for i in range(N) if i != n]
            # column ordering of unfold(t, n) has lower modes fastest
            kr = khatri_rao(others[::-1]) if others else np.ones((1, r))
            mttkrp = unfoldings[n] @ kr
            v = np.ones((r, r))
            for i in range(N):
                if i != n:
                    v *= grams[i]
            v += 1e-12 * np.eye(r)
            f = np.linalg.solve(v, mttkrp.T).T
            f, weights = _normalize_columns(f)
            factors[n] = f
            grams[n] = f.T @ f
        # ||t - model||^2 from inner products, reusing the last MTTKRP
        ip = float(np.sum(weights * np.sum(factors[-1] * mttkrp, axis=0)))
        gram_all = np.ones((r, r))
        for g in grams:
            gram_all *= g
        sq = norm_t ** 2 - 2.0 * ip + float(weights @ gram_all @ weights)
        if sq < 1e-10 * norm_t ** 2 or not np.isfinite(sq):
            # the expansion cancels badly for small residuals
            sq = np.linalg.norm(t - CpFactors(factors, weights).full()) ** 2
        err = np.sqrt(max(sq, 0.0))
        rel = err / norm_t if norm_t > 0 else err
        if best is None or rel < best[1]:
            best = (CpFactors([f.copy() for f in factors], weights.copy()), rel)
        if not np.isfinite(rel):
            break
        if rel < 1e-15 or (np.isfinite(prev_err) and abs(prev_err - rel) < tol * prev_err):
            break
        prev_err = rel
    cp, rel = best
    cp.fit_error = float(rel)
    cp.iters = it
    return cp, rel


def cpd(
    t: np.ndarray,
    r: int,
    max_iters: int = 500,
    tol: float = 1e-8,
    restarts: int = 5,
    seed=None,
    init: CpFactors | None = None,
) -> CpFactors:
    """Rank-`r` CP decomposition by alternating least squares.

    Each restart begins from standard-normal factors; the restart with the
    smallest relative reconstruction error is returned. When `init` is
    given it is used as an additional (first) starting point. Degenerate
    fits are not an error; the best iterate seen is returned.

    Parameters
    ----------
    t : ndarray
        Tensor to decompose.
    r : int
        Number of rank-one terms.
    max_iters, tol : int, float
        ALS stops when the relative fit changes by less than `tol`.
    restarts : int
        Number of random starting points.
    seed : int or Generator, optional
        Seed for the random starts.
    init : CpFactors, optional
        Warm start.

    Returns
    -------
    CpFactors
        ``fit_error`` holds ``||t - full|| / ||t||`` (absolute when ``t == 0``).
    """
    if r < 1:
        raise ValueError("rank must be at least 1")
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("cpd input contains non-finite values")
    rng = np.random.default_rng(seed)
    if not np.any(t):
        factors = [_normalize_columns(rng.standard_normal((d, r)))[0] for d in t.shape]
        return CpFactors(factors, np.zeros(r), fit_error=0.0, iters=0)
    starts = []
    if init is not None:
        # the first ALS sweep overwrites mode 0, so weights need not be carried
        starts.append([f.copy() for f in init.factors])
    for _ in range(restarts):
        starts.append([rng.standard_normal((d, r)) for d in t.shape])
    best = None
    for start in starts:
        cp, rel = _cp_als_single(t, r, start, max_iters, tol)
        if best is None or rel < best.fit_error:
            best = cp
        if rel < 1e-14:
            break
    return best

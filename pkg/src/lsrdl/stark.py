"""Regularized LSR dictionary learning with an ADMM dictionary update.

The dictionary update minimizes

    0.5 ||Y - D X||_F^2 + lambda1 * sum_n ||unfold(D_pi, n)||_*

over ``D`` (``D_pi`` its rearrangement), split with auxiliary tensors
``W_n = D_pi`` and duals ``A_n``. Columns are normalized once after the
ADMM loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .dictionary import LsrDictionary
from .init import init_from_data, repr_error
from .rearrange import RearrangementMap, build_map, rearrange, rearrange_inv
from .runlog import RunLog
from .sparse import Lasso, LassoOptions, code_batch, objective_f
from .tensor import nuclear_norm, refold, svt, unfold


def sum_trace_norm(t: np.ndarray) -> float:
    """Sum of the nuclear norms of all mode unfoldings of `t`."""
    t = np.asarray(t)
    return float(sum(nuclear_norm(unfold(t, n)) for n in range(t.ndim)))


@dataclass
class AdmmState:
    Dpi: np.ndarray
    W: list
    A: list
    gamma: float
    lambda1: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.lambda1 >= 0):
            raise ValueError("need gamma > 0 and lambda1 >= 0")

    def copy(self) -> "AdmmState":
        return AdmmState(self.Dpi.copy(), [w.copy() for w in self.W],
                         [a.copy() for a in self.A], self.gamma, self.lambda1)


def init_admm_state(D: np.ndarray, rmap: RearrangementMap, gamma: float,
                    lambda1: float) -> AdmmState:
    """``W_n`` start at the rearranged dictionary, duals at zero."""
    Dpi = rearrange(D, rmap)
    N = Dpi.ndim
    return AdmmState(Dpi, [Dpi.copy() for _ in range(N)],
                     [np.zeros_like(Dpi) for _ in range(N)], gamma, lambda1)


def augmented_lagrangian(Y, X, state: AdmmState, rmap: RearrangementMap) -> float:
    D = rearrange_inv(state.Dpi, rmap)
    val = 0.5 * np.sum((Y - D @ X) ** 2)
    for n, (W, A) in enumerate(zip(state.W, state.A)):
        diff = state.Dpi - W
        val += (state.lambda1 * nuclear_norm(unfold(W, n)) - np.sum(A * diff)
                + 0.5 * state.gamma * np.sum(diff * diff))
    return float(val)


class _DStepSolver:
    """Solves ``D (X X^T + gamma N I) = Y X^T + rearrange_inv(sum_n A_n + gamma W_n)``."""

    def __init__(self, Y, X, gamma, N):
        p = X.shape[0]
        self.YXt = Y @ X.T
        self.chol = scipy.linalg.cho_factor(X @ X.T + gamma * N * np.eye(p))

    def __call__(self, state: AdmmState, rmap: RearrangementMap) -> np.ndarray:
        rhs_t = sum(A + state.gamma * W for A, W in zip(state.A, state.W))
        rhs = self.YXt + rearrange_inv(rhs_t, rmap)
        D = scipy.linalg.cho_solve(self.chol, rhs.T).T
        return rearrange(D, rmap)


def d_step(Y, X, state: AdmmState, rmap: RearrangementMap) -> np.ndarray:
    """Exact minimizer of the augmented Lagrangian over ``D_pi``, solved in matrix space."""
    return _DStepSolver(Y, X, state.gamma, state.Dpi.ndim)(state, rmap)


def w_step(state: AdmmState) -> list:
    """``W_n = refold(svt(unfold(D_pi - A_n / gamma, n), lambda1 / gamma))``."""
    g = state.gamma
    out = []
    for n, A in enumerate(state.A):
        M = unfold(state.Dpi - A / g, n)
        out.append(refold(svt(M, state.lambda1 / g), n, state.Dpi.shape))
    return out


def primal_residual(state: AdmmState) -> float:
    return float(max(np.linalg.norm(state.Dpi - W) for W in state.W))


@dataclass
class AdmmTrace:
    residuals: list = field(default_factory=list)
    lagrangian_increase: float = -np.inf  # worst block-step increase seen
    iters: int = 0


def admm_dict_update(Y, X, state: AdmmState, rmap: RearrangementMap, iters: int = 500,
                     tol: float = 1e-4, monitor: bool = False):
    """Run ADMM for the dictionary update.

    Parameters
    ----------
    Y, X : ndarray
        Data ``m x L`` and codes ``p x L``.
    state : AdmmState
        Starting point; not modified.
    iters, tol : int, float
        Stop after `iters` iterations or when ``max_n ||D_pi - W_n||_F < tol``.
    monitor : bool
        Evaluate the augmented Lagrangian around every block step and record
        the largest increase in the returned trace.

    Returns
    -------
    state : AdmmState
    trace : AdmmTrace
    """
    X = np.asarray(X, dtype=float)
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
        raise ValueError("non-finite data or codes")
    state = state.copy()
    solve = _DStepSolver(Y, X, state.gamma, state.Dpi.ndim)
    trace = AdmmTrace()
    for it in range(1, iters + 1):
        if monitor:
            before = augmented_lagrangian(Y, X, state, rmap)
        state.Dpi = solve(state, rmap)
        if monitor:
            mid = augmented_lagrangian(Y, X, state, rmap)
        state.W = w_step(state)
        if monitor:
            after = augmented_lagrangian(Y, X, state, rmap)
            trace.lagrangian_increase = max(trace.lagrangian_increase, mid - before, after - mid)
        for n in range(len(state.A)):
            state.A[n] = state.A[n] - state.gamma * (state.Dpi - state.W[n])
        if not np.all(np.isfinite(state.Dpi)):
            raise FloatingPointError("ADMM diverged")
        res = primal_residual(state)
        trace.residuals.append(res)
        trace.iters = it
        if res < tol:
            break
    return state, trace


@dataclass
class StarkConfig:
    lam: float = 0.1
    lambda1: float = 1.0
    gamma: float = 1.0
    outer_iters: int = 20
    admm_iters: int = 500
    admm_tol: float = 1e-4
    lasso_iters: int = 200
    lasso_tol: float = 1e-6

    def lasso(self) -> Lasso:
        return Lasso(LassoOptions(self.lam, self.lasso_iters, self.lasso_tol))


def f_reg(Y, D, X, lam, lambda1, rmap) -> tuple:
    """Return ``(F_reg, F_data, g1)`` with ``F_reg = (sum_l f_l + lambda1 g1) / L``."""
    L = Y.shape[1]
    data = objective_f(Y, D, X, lam) / L
    g1 = sum_trace_norm(rearrange(D, rmap))
    return data + lambda1 * g1 / L, data, g1


STARK_COLUMNS = ["F_reg", "F_data", "g1", "primal_residual", "repr_error", "admm_iters",
                 "lagrangian_increase"]


def stark_train(Y, m_dims, p_dims, config: StarkConfig, init=None, seed=0,
                monitor: bool = False):
    """Alternate lasso coding and the ADMM dictionary update.

    Parameters
    ----------
    Y : ndarray
        ``m x L`` training samples.
    m_dims, p_dims : sequence of int
        Kronecker factor shapes.
    config : StarkConfig
    init : LsrDictionary, optional
        Starting dictionary; by default built from random data-unfolding columns.
    seed : int
    monitor : bool
        Track augmented-Lagrangian block decreases (slow).

    Returns
    -------
    LsrDictionary
        Normalized dictionary (``factors`` is empty: this learner does not
        produce subdictionaries).
    RunLog
        One row per outer iteration (row 0 is the initialization).
    """
    rmap = build_map(m_dims, p_dims)
    if init is None:
        init = init_from_data(Y, m_dims, p_dims, 1, np.random.default_rng([seed, 1]))
    D = init.assembled
    coder = config.lasso()
    log = RunLog(STARK_COLUMNS, meta={"algo": "stark", "config": vars(config)})
    X = code_batch(Y, D, coder).values
    F, Fd, g1 = f_reg(Y, D, X, config.lam, config.lambda1, rmap)
    log.append(0, F_reg=F, F_data=Fd, g1=g1, repr_error=repr_error(Y, D, X))
    if config.outer_iters == 0:
        return init, log
    state = init_admm_state(D, rmap, config.gamma, config.lambda1)
    for t in range(1, config.outer_iters + 1):
        state, trace = admm_dict_update(Y, X, state, rmap, config.admm_iters, config.admm_tol,
                                        monitor=monitor)
        raw = rearrange_inv(state.Dpi, rmap)
        result = LsrDictionary.from_matrix(raw, m_dims, p_dims)
        D = result.assembled
        X = code_batch(Y, D, coder).values
        F, Fd, g1 = f_reg(Y, D, X, config.lam, config.lambda1, rmap)
        log.append(t, F_reg=F, F_data=Fd, g1=g1, primal_residual=trace.residuals[-1],
                   repr_error=repr_error(Y, D, X), admm_iters=trace.iters,
                   lagrangian_increase=trace.lagrangian_increase)
    return result, log


def select_lambda1(Y, m_dims, p_dims, config: StarkConfig, grid=(0.01, 0.1, 1.0, 10.0),
                   holdout: float = 0.2, seed=0):
    """Pick ``lambda1`` from `grid` by held-out representation error.

    Returns ``(best_lambda1, {lambda1: error})``.
    """
    rng = np.random.default_rng([seed, 7])
    L = Y.shape[1]
    perm = rng.permutation(L)
    n_test = max(1, int(round(holdout * L)))
    test, train = Y[:, perm[:n_test]], Y[:, perm[n_test:]]
    scores = {}
    for lam1 in grid:
        D, _ = stark_train(train, m_dims, p_dims, replace(config, lambda1=lam1), seed=seed)
        Xt = code_batch(test, D.assembled, config.lasso()).values
        scores[lam1] = repr_error(test, D.assembled, Xt)
    best = min(scores, key=scores.get)
    return best, scores

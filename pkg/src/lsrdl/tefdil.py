"""Factorization-based LSR dictionary learning.

Each dictionary update takes the unconstrained least-squares dictionary for
the current codes, rearranges it into a tensor, and keeps a rank-`r` CP
approximation of that tensor, i.e. a sum of `r` Kronecker products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dictionary import LsrDictionary
from .init import init_from_samples, repr_error
from .rearrange import RearrangementMap, build_map, cp_to_terms, rearrange, terms_to_cp
from .runlog import RunLog
from .sparse import OMP, Lasso, LassoOptions, code_batch
from .tensor import cpd


def default_delta(X: np.ndarray) -> float:
    """Ridge ``1e-6 * tr(X X^T) / p`` (at least the smallest positive double)."""
    return max(1e-6 * float(np.sum(X * X)) / X.shape[0], np.finfo(float).tiny)


def least_squares_dictionary(Y, X, delta: float) -> np.ndarray:
    """``Y X^T (X X^T + delta I)^-1``."""
    X = np.asarray(X, dtype=float)
    G = X @ X.T + delta * np.eye(X.shape[0])
    try:
        chol = scipy.linalg.cho_factor(G)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("X X^T + delta I is singular; use delta > 0") from exc
    return scipy.linalg.cho_solve(chol, (Y @ X.T).T).T


def t_plus(Y, X, rmap: RearrangementMap, delta: float = 0.0) -> np.ndarray:
    """Rearranged least-squares dictionary for codes `X`."""
    return rearrange(least_squares_dictionary(Y, X, delta), rmap)


@dataclass
class TefdilConfig:
    r: int = 1
    s: int | None = 5
    lam: float | None = None
    outer_iters: int = 50
    cpd_iters: int = 500
    cpd_tol: float = 1e-8
    cpd_restarts: int = 2
    delta: float | None = None
    lasso_iters: int = 200
    lasso_tol: float = 1e-6

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("separation rank must be at least 1")
        if (self.s is None) == (self.lam is None):
            raise ValueError("set exactly one of s (OMP) or lam (lasso)")

    def coder(self):
        if self.s is not None:
            return OMP(self.s)
        return Lasso(LassoOptions(self.lam, self.lasso_iters, self.lasso_tol))


def tefdil_dict_update(Y, X, config: TefdilConfig, rmap: RearrangementMap, warm=None,
                       seed=None):
    """One dictionary update: least squares, rank-`r` CPD, reassembly.

    Returns
    -------
    LsrDictionary
        Normalized dictionary with the raw Kronecker factors from the CPD.
    CpFactors
        The CP model (usable as the next warm start).
    """
    X = np.asarray(X, dtype=float)
    delta = default_delta(X) if config.delta is None else config.delta
    T = t_plus(Y, X, rmap, delta)
    cp = cpd(T, config.r, max_iters=config.cpd_iters, tol=config.cpd_tol,
             restarts=config.cpd_restarts, seed=seed, init=warm)
    factors = cp_to_terms(cp, rmap)
    return LsrDictionary.from_factors(factors, rmap.m_dims, rmap.p_dims), cp


TEFDIL_COLUMNS = ["repr_error", "raw_repr_error", "heldout_error", "cpd_fit"]


def tefdil_train(Y, m_dims, p_dims, config: TefdilConfig, init: LsrDictionary | None = None,
                 seed=0, Y_test=None):
    """Alternate sparse coding and :func:`tefdil_dict_update`.

    The normalized dictionary is used for coding. Each logged row holds the
    normalized representation error ``||Y - D X|| / ||Y||`` for the codes
    computed with the dictionary of that row, plus the held-out error on
    `Y_test` when given. Row 0 is the initialization, which by default is
    :func:`~lsrdl.init.init_from_samples`.

    Returns
    -------
    LsrDictionary, RunLog
    """
    rmap = build_map(m_dims, p_dims)
    if init is None:
        init = init_from_samples(Y, m_dims, p_dims, config.r, np.random.default_rng([seed, 1]))
    coder = config.coder()
    log = RunLog(TEFDIL_COLUMNS, meta={"algo": "tefdil", "config": vars(config)})
    D = init
    warm = terms_to_cp(D.factors) if D.factors and D.r == config.r else None
    raw_err = float("nan")
    for t in range(config.outer_iters + 1):
        X = code_batch(Y, D.assembled, coder).values
        held = float("nan")
        if Y_test is not None:
            Xt = code_batch(Y_test, D.assembled, coder).values
            held = repr_error(Y_test, D.assembled, Xt)
        log.append(t, repr_error=repr_error(Y, D.assembled, X), raw_repr_error=raw_err,
                   heldout_error=held,
                   cpd_fit=warm.fit_error if warm is not None and t > 0 else float("nan"))
        if t == config.outer_iters:
            break
        D, warm = tefdil_dict_update(Y, X, config, rmap, warm=warm,
                                     seed=np.random.default_rng([seed, 2, t]))
        # error of the unnormalized update against the codes it was fitted to
        raw_err = repr_error(Y, D.raw, X)
    return D, log

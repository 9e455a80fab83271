"""Synthetic LSR data and the sample-complexity benchmark."""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dictionary import LsrDictionary
from .init import init_from_data, repr_error
from .runlog import RunLog
from .sparse import OMP, code_batch
from .stark import StarkConfig, stark_train
from .tefdil import TefdilConfig, least_squares_dictionary, tefdil_train

# fixed offsets deriving per-component random streams from one seed
STREAM_DICT, STREAM_SAMPLES, STREAM_TEST, STREAM_INIT = 11, 12, 13, 14


@dataclass
class SynthSpec:
    m_dims: tuple = (2, 5, 3)
    p_dims: tuple = (4, 10, 5)
    r_true: int = 1
    s: int = 5
    L: int = 1000
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.m_dims = tuple(int(v) for v in self.m_dims)
        self.p_dims = tuple(int(v) for v in self.p_dims)
        if self.s > int(np.prod(self.p_dims)):
            raise ValueError("sparsity exceeds the number of atoms")
        if self.noise_sigma < 0:
            raise ValueError("noise level must be nonnegative")


def gen_dictionary(spec: SynthSpec) -> LsrDictionary:
    """Gaussian subdictionaries with unit-norm columns, summed over `r_true` terms."""
    rng = np.random.default_rng([spec.seed, STREAM_DICT])
    factors = []
    for _ in range(spec.r_true):
        term = []
        for mn, pn in zip(spec.m_dims, spec.p_dims):
            F = rng.standard_normal((mn, pn))
            term.append(F / np.linalg.norm(F, axis=0))
        factors.append(term)
    return LsrDictionary.from_factors(factors, spec.m_dims, spec.p_dims)


def gen_samples(D: np.ndarray, spec: SynthSpec, L: int | None = None, stream=STREAM_SAMPLES):
    """Draw ``y = D x + sigma * noise`` with `s` Gaussian coefficients on a random support.

    Returns
    -------
    Y : ndarray, shape (m, L)
    X : ndarray, shape (p, L)
        The generating codes.
    """
    L = spec.L if L is None else L
    rng = np.random.default_rng([spec.seed, stream])
    m, p = D.shape
    X = np.zeros((p, L))
    for l in range(L):
        support = rng.choice(p, size=spec.s, replace=False)
        X[support, l] = rng.standard_normal(spec.s)
    Y = D @ X
    if spec.noise_sigma > 0:
        Y = Y + spec.noise_sigma * rng.standard_normal((m, L))
    return Y, X


def unstructured_baseline_update(Y, X, delta: float) -> np.ndarray:
    """Least-squares (MOD-style) dictionary ``Y X^T (X X^T + delta I)^-1``, column-normalized.

    Columns that come out exactly zero are left at zero.
    """
    D = least_squares_dictionary(Y, X, delta)
    norms = np.linalg.norm(D, axis=0)
    return D / np.where(norms > 0, norms, 1.0)


def baseline_train(Y, m_dims, p_dims, s: int, outer_iters: int = 50, init=None, seed=0,
                   Y_test=None, delta=None):
    """Unstructured alternation of OMP and :func:`unstructured_baseline_update`.

    Atoms left unused by the coder are redrawn from random training columns.
    """
    rng = np.random.default_rng([seed, 3])
    if init is None:
        init = init_from_data(Y, m_dims, p_dims, 1, np.random.default_rng([seed, 1]))
    D = init.assembled
    coder = OMP(s)
    log = RunLog(["repr_error", "heldout_error"], meta={"algo": "baseline"})
    for t in range(outer_iters + 1):
        X = code_batch(Y, D, coder).values
        held = float("nan")
        if Y_test is not None:
            held = repr_error(Y_test, D, code_batch(Y_test, D, coder).values)
        log.append(t, repr_error=repr_error(Y, D, X), heldout_error=held)
        if t == outer_iters:
            break
        dlt = 1e-6 * max(float(np.sum(X * X)) / X.shape[0], 1e-12) if delta is None else delta
        D = unstructured_baseline_update(Y, X, dlt)
        dead = np.linalg.norm(D, axis=0) < 1e-12
        if np.any(dead):
            cols = rng.choice(Y.shape[1], size=int(dead.sum()))
            repl = Y[:, cols] + 1e-3 * rng.standard_normal((Y.shape[0], int(dead.sum())))
            D[:, dead] = repl / np.linalg.norm(repl, axis=0)
    return LsrDictionary.from_matrix(D, m_dims, p_dims), log


SWEEP_FIELDS = ["algo", "L", "seed", "final_error", "heldout_error", "iters", "wall_ms"]


def run_cell(spec: SynthSpec, algo: str, L: int, seed: int, iters: int = 30,
             n_test: int = 500, rank: int | None = None) -> dict:
    """Train one algorithm on one synthetic draw and score it.

    ``final_error`` is the training representation error of the last
    iterate; ``heldout_error`` codes `n_test` fresh samples from the same
    generator with the learned dictionary.
    """
    cell = replace(spec, L=L, seed=seed)
    D0 = gen_dictionary(cell)
    Y, _ = gen_samples(D0.assembled, cell)
    Y_test, _ = gen_samples(D0.assembled, cell, L=n_test, stream=STREAM_TEST)
    t0 = time.perf_counter()
    if algo == "tefdil":
        cfg = TefdilConfig(r=rank or spec.r_true, s=spec.s, outer_iters=iters)
        D, log = tefdil_train(Y, spec.m_dims, spec.p_dims, cfg, seed=seed)
    elif algo == "baseline":
        D, log = baseline_train(Y, spec.m_dims, spec.p_dims, spec.s, outer_iters=iters,
                                seed=seed)
    elif algo == "stark":
        D, log = stark_train(Y, spec.m_dims, spec.p_dims, StarkConfig(outer_iters=iters),
                             seed=seed)
    else:
        raise ValueError(f"unknown algorithm {algo!r}")
    wall = 1000 * (time.perf_counter() - t0)
    coder = OMP(spec.s)
    held = repr_error(Y_test, D.assembled, code_batch(Y_test, D.assembled, coder).values)
    return {"algo": algo, "L": L, "seed": seed, "final_error": log.last("repr_error"),
            "heldout_error": held, "iters": iters, "wall_ms": round(wall, 1)}


def _cell(args):
    return run_cell(*args)


def run_sample_complexity_sweep(spec: SynthSpec, L_grid=(50, 100, 200, 500, 1000, 2000),
                                algos=("tefdil",), seeds=(0, 1, 2, 3, 4), iters: int = 30,
                                n_test: int = 500, out_csv=None, workers: int | None = None,
                                rank: int | None = None):
    """Representation error against training-set size.

    Cells ``(algo, L, seed)`` are independent; up to `workers` processes
    (default ``LSRDL_THREADS`` or 1) evaluate them. Rows come back in grid
    order regardless of scheduling.
    """
    jobs = [(spec, algo, L, seed, iters, n_test, rank) for algo in algos for L in L_grid
            for seed in seeds]
    workers = workers or int(os.environ.get("LSRDL_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cell, jobs))
    else:
        rows = [_cell(job) for job in jobs]
    if out_csv is not None:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    return rows


def summarize_sweep(rows, key: str = "heldout_error") -> dict:
    """Mean, min and max of `key` per ``(algo, L)``."""
    out = {}
    for row in rows:
        out.setdefault((row["algo"], row["L"]), []).append(row[key])
    return {k: (float(np.mean(v)), float(np.min(v)), float(np.max(v))) for k, v in out.items()}

"""Low-separation-rank dictionaries and diagnostics on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .rearrange import build_map, rearrange
from .tensor import cpd, kron_chain, unfold


class DegenerateDictionaryError(ValueError):
    """Raised when an assembled dictionary has a zero column."""


def assemble(factors) -> tuple:
    """Sum the Kronecker terms of a factor grid and normalize the columns.

    Parameters
    ----------
    factors : list of list of ndarray
        ``factors[k][n]`` is the ``m_n x p_n`` factor of term ``k``.

    Returns
    -------
    assembled : ndarray
        Column-normalized ``sum_k kron_n factors[k][n]``.
    col_scales : ndarray
        Column norms of the raw sum.
    """
    raw = sum(kron_chain(term) for term in factors)
    scales = np.linalg.norm(raw, axis=0)
    if np.any(scales == 0) or not np.all(np.isfinite(scales)):
        raise DegenerateDictionaryError("assembled dictionary has a zero or non-finite column")
    return raw / scales, scales


@dataclass
class LsrDictionary:
    """Dictionary ``D = sum_k D^k_1 kron ... kron D^k_N`` with unit-norm columns.

    ``factors`` holds the raw Kronecker factors; ``assembled`` is their sum
    divided column-wise by ``col_scales``. A dictionary without factors
    (e.g. from the regularized learner) keeps ``factors`` empty.
    """

    m_dims: tuple
    p_dims: tuple
    factors: list
    assembled: np.ndarray = field(repr=False)
    col_scales: np.ndarray = field(repr=False)

    @classmethod
    def from_factors(cls, factors, m_dims=None, p_dims=None) -> "LsrDictionary":
        factors = [[np.asarray(f, dtype=float) for f in term] for term in factors]
        m_dims = tuple(f.shape[0] for f in factors[0]) if m_dims is None else tuple(m_dims)
        p_dims = tuple(f.shape[1] for f in factors[0]) if p_dims is None else tuple(p_dims)
        for term in factors:
            if tuple(f.shape for f in term) != tuple(zip(m_dims, p_dims)):
                raise ValueError("factor shapes are inconsistent with m_dims/p_dims")
        assembled, scales = assemble(factors)
        return cls(m_dims, p_dims, factors, assembled, scales)

    @classmethod
    def from_matrix(cls, D, m_dims, p_dims) -> "LsrDictionary":
        """Wrap an unstructured matrix (normalizing its columns)."""
        D = np.asarray(D, dtype=float)
        scales = np.linalg.norm(D, axis=0)
        if np.any(scales == 0):
            raise DegenerateDictionaryError("dictionary has a zero column")
        return cls(tuple(m_dims), tuple(p_dims), [], D / scales, scales)

    @property
    def r(self) -> int:
        return len(self.factors)

    @property
    def N(self) -> int:
        return len(self.m_dims)

    @property
    def raw(self) -> np.ndarray:
        """The unnormalized Kronecker sum."""
        return self.assembled * self.col_scales

    @property
    def shape(self) -> tuple:
        return self.assembled.shape


def matched_columns(D1, D2, exhaustive: bool = False):
    """Permutation and signs aligning the columns of `D2` to those of `D1`.

    Returns ``(perm, signs)`` such that ``D2[:, perm] * signs`` is the best
    match, maximizing ``sum_j |<d1_j, d2_perm[j]>|``.
    """
    C = D1.T @ D2
    p = C.shape[0]
    if exhaustive:
        best, best_perm = -np.inf, None
        for perm in itertools.permutations(range(p)):
            v = np.abs(C[np.arange(p), perm]).sum()
            if v > best:
                best, best_perm = v, np.array(perm)
        perm = best_perm
    else:
        _, perm = linear_sum_assignment(-np.abs(C))
    signs = np.sign(C[np.arange(p), perm])
    signs[signs == 0] = 1.0
    return perm, signs


def dict_distance(D1, D2) -> tuple:
    """Frobenius distance up to column permutation and sign.

    Returns
    -------
    matched : float
        ``min_{P, S} ||D1 - D2 P S||_F`` over permutations ``P`` and sign
        flips ``S``, found exactly with an assignment solver.
    raw : float
        Plain ``||D1 - D2||_F``.
    """
    D1, D2 = np.asarray(D1), np.asarray(D2)
    if D1.shape != D2.shape:
        raise ValueError(f"shape mismatch {D1.shape} vs {D2.shape}")
    perm, signs = matched_columns(D1, D2)
    matched = np.linalg.norm(D1 - D2[:, perm] * signs)
    return float(matched), float(np.linalg.norm(D1 - D2))


@dataclass
class SeparationRankResult:
    r_est: int
    fit_errors: dict
    unfolding_rank: int | None = None
    zero: bool = False


def separation_rank_bound(D, m_dims, p_dims, r_max: int, seed=0, restarts: int = 5,
                          tol: float = 1e-6) -> SeparationRankResult:
    """Upper-bound the separation rank of `D` by CP fits of its rearrangement.

    Returns the smallest ``r <= r_max`` whose relative CP fit error is below
    `tol` (or ``r_max``). For two factors the exact rank of the mode-0
    unfolding is also reported (singular values above ``1e-8 * sigma_1``).
    """
    rmap = build_map(m_dims, p_dims)
    T = rearrange(np.asarray(D, dtype=float), rmap)
    if not np.any(T):
        return SeparationRankResult(1, {1: 0.0}, 0 if rmap.N == 2 else None, zero=True)
    unfolding_rank = None
    if rmap.N == 2:
        sv = np.linalg.svd(unfold(T, 0), compute_uv=False)
        unfolding_rank = int(np.sum(sv > 1e-8 * sv[0]))
    errors = {}
    r_est = r_max
    for r in range(1, r_max + 1):
        errors[r] = cpd(T, r, restarts=restarts, seed=seed).fit_error
        if errors[r] < tol:
            r_est = r
            break
    return SeparationRankResult(r_est, errors, unfolding_rank)


def coherence(D, s: int, exhaustive: bool | None = None) -> float:
    """Cumulative coherence ``mu_s = max_{|J|<=s, j not in J} ||D_J^T d_j||_1``.

    For each atom the worst support collects its `s` largest absolute
    correlations with the other atoms. Enumeration over supports is used
    when ``p <= 12`` unless `exhaustive` says otherwise.
    """
    D = np.asarray(D, dtype=float)
    p = D.shape[1]
    if np.any(np.abs(np.linalg.norm(D, axis=0) - 1) > 1e-8):
        raise ValueError("coherence needs unit-norm columns")
    if not 0 <= s < p:
        raise ValueError(f"s must satisfy 0 <= s < p, got s={s}, p={p}")
    if s == 0:
        return 0.0
    C = np.abs(D.T @ D)
    np.fill_diagonal(C, 0.0)
    if exhaustive is None:
        exhaustive = p <= 12
    if exhaustive:
        best = 0.0
        for j in range(p):
            others = [i for i in range(p) if i != j]
            for J in itertools.combinations(others, s):
                best = max(best, C[list(J), j].sum())
        return float(best)
    top = -np.sort(-C, axis=0)[:s]
    return float(top.sum(axis=0).max())


def rip_constant(D, s: int, p_max: int = 16) -> float:
    """Restricted isometry constant ``delta_s`` by enumerating all supports."""
    D = np.asarray(D, dtype=float)
    p = D.shape[1]
    if p > p_max:
        raise ValueError(f"exhaustive RIP limited to p <= {p_max}, got p={p}")
    delta = 0.0
    for k in range(1, s + 1):
        for J in itertools.combinations(range(p), k):
            sv = np.linalg.svd(D[:, list(J)], compute_uv=False)
            smin = sv[-1] if len(sv) == k else 0.0
            delta = max(delta, 1 - smin ** 2, sv[0] ** 2 - 1)
    return float(delta)


def param_count(m_dims, p_dims, r: int) -> tuple:
    """Number of stored parameters: ``(r * sum_n m_n p_n, prod(m) * prod(p))``."""
    structured = r * sum(int(a) * int(b) for a, b in zip(m_dims, p_dims))
    unstructured = int(np.prod(m_dims)) * int(np.prod(p_dims))
    return structured, unstructured


def _kron_sum(grid):
    return sum(kron_chain(term) for term in grid)


def tuple_distance(grid_a, grid_b) -> float:
    return float(np.sqrt(sum(np.sum((a - b) ** 2) for ta, tb in zip(grid_a, grid_b)
                             for a, b in zip(ta, tb))))


def lemma8_sides(grid_a, grid_b, alpha: float) -> tuple:
    """Both sides of the perturbation bound for sums of Kronecker products.

    Returns ``(lhs, rhs)`` where ``lhs = ||sum kron A - sum kron B||_F`` and
    ``rhs = alpha^(N-1) sqrt(N r) ||(A) - (B)||_F``.
    """
    r, N = len(grid_a), len(grid_a[0])
    for term in list(grid_a) + list(grid_b):
        for f in term:
            if abs(np.linalg.norm(f) - alpha) > 1e-10:
                raise ValueError("every factor must have Frobenius norm alpha")
    lhs = np.linalg.norm(_kron_sum(grid_a) - _kron_sum(grid_b))
    rhs = alpha ** (N - 1) * np.sqrt(N * r) * tuple_distance(grid_a, grid_b)
    return float(lhs), float(rhs)


def lemma8_check(grid_a, grid_b, alpha: float, eps: float) -> bool:
    """Check the Kronecker-sum perturbation bound for tuples within `eps`."""
    if tuple_distance(grid_a, grid_b) > eps:
        raise ValueError("tuples are farther apart than eps")
    lhs, _ = lemma8_sides(grid_a, grid_b, alpha)
    N, r = len(grid_a[0]), len(grid_a)
    return bool(lhs <= alpha ** (N - 1) * np.sqrt(N * r) * eps * (1 + 1e-12))


@dataclass
class DiagnosticsReport:
    coherence: dict
    rip: dict
    separation_rank: SeparationRankResult | None
    params_structured: int
    params_unstructured: int


def diagnostics(D: LsrDictionary, s_values=(1, 2), r_max: int = 3, rip_p_max: int = 16):
    """Collect coherence, RIP (small dictionaries only), rank and size figures."""
    A = D.assembled
    p = A.shape[1]
    mu = {s: coherence(A, s) for s in s_values if s < p}
    rip = {s: rip_constant(A, s) for s in s_values} if p <= rip_p_max else {}
    sep = separation_rank_bound(D.raw, D.m_dims, D.p_dims, r_max)
    structured, unstructured = param_count(D.m_dims, D.p_dims, max(D.r, 1))
    return DiagnosticsReport(mu, rip, sep, structured, unstructured)

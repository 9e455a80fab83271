"""
Kronecker products become rank-one tensors
==========================================

A matrix that is a Kronecker product of small factors looks dense and
unstructured. Rearranging its entries into a tensor exposes the structure:
the result is a single outer product of the vectorized factors. Sums of
Kronecker products turn into low-rank tensors, which is what makes
separation rank computable through a CP decomposition.
"""

# %%
# Build a Kronecker product of three random factors.
import numpy as np

from lsrdl import build_map, cpd, kron_chain, rearrange, rearrange_inv
from lsrdl.dictionary import separation_rank_bound
from lsrdl.rearrange import rank_one_tensor

rng = np.random.default_rng(0)
m_dims, p_dims = (2, 3, 2), (3, 2, 2)
factors = [rng.standard_normal((m, p)) for m, p in zip(m_dims, p_dims)]
D = kron_chain(factors)
print("Kronecker product shape:", D.shape)

# %%
# The rearrangement is a fixed permutation of entries, computed once per
# pair of shapes. Its tensor has one mode per factor, in reverse order.
rmap = build_map(m_dims, p_dims)
T = rearrange(D, rmap)
print("rearranged tensor shape:", T.shape)
print("equals vec(D_3) o vec(D_2) o vec(D_1) exactly:", np.array_equal(T, rank_one_tensor(factors)))
print("inverse restores D exactly:", np.array_equal(rearrange_inv(T, rmap), D))

# %%
# Being a permutation, the map preserves the Frobenius norm and is linear,
# so a sum of two Kronecker products maps to a rank-two tensor.
second = [rng.standard_normal((m, p)) for m, p in zip(m_dims, p_dims)]
D2 = D + kron_chain(second)
for r in (1, 2):
    print(f"CP rank {r} relative fit error: {cpd(rearrange(D2, rmap), r, restarts=5, seed=0).fit_error:.2e}")

# %%
# ``separation_rank_bound`` wraps this: the smallest CP rank that fits the
# rearranged matrix to 1e-6 bounds the separation rank from above.
print("estimated separation rank:", separation_rank_bound(D2, m_dims, p_dims, r_max=3).r_est)

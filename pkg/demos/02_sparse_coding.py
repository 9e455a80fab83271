"""
Sparse coding with OMP and FISTA
================================

Every learner alternates between coding the data with the current
dictionary and updating the dictionary. Two coders are available:
orthogonal matching pursuit with a fixed number of atoms, and the lasso
solved by accelerated proximal gradient (FISTA).
"""

# %%
import numpy as np

from lsrdl import OMP, Lasso, LassoOptions, code_batch
from lsrdl.sparse import objective_f

rng = np.random.default_rng(1)
D = rng.standard_normal((20, 40))
D /= np.linalg.norm(D, axis=0)

# %%
# Plant three atoms per signal and let OMP find them.
X0 = np.zeros((40, 5))
for col in range(5):
    X0[rng.choice(40, 3, replace=False), col] = rng.standard_normal(3)
Y = D @ X0
X = code_batch(Y, D, OMP(3))
for col in range(5):
    print("planted", sorted(int(j) for j in np.flatnonzero(X0[:, col])),
          "found", sorted(int(j) for j in X.supports[col]))

# %%
# The lasso trades sparsity for fit through lambda. Larger penalties give
# sparser codes and larger residuals.
for lam in (0.01, 0.1, 0.5):
    Xl = code_batch(Y, D, Lasso(LassoOptions(lam, max_iters=2000, tol=1e-10))).values
    nnz = np.count_nonzero(Xl, axis=0).mean()
    resid = np.linalg.norm(Y - D @ Xl) / np.linalg.norm(Y)
    print(f"lambda={lam:<5} mean nonzeros {nnz:5.1f}  relative residual {resid:.3f}")

# %%
# Acceleration matters: with the same number of iterations FISTA reaches a
# lower objective than plain ISTA.
y = Y[:, 0]
for accel in (False, True):
    x = code_batch(y[:, None], D, Lasso(LassoOptions(0.1, max_iters=50, tol=0.0,
                                                     accelerated=accel))).values[:, 0]
    print("FISTA" if accel else "ISTA ", "objective after 50 steps:", round(objective_f(y, D, x, 0.1), 6))

"""
Online learning from a stream with OSubDil
==========================================

OSubDil processes one sample at a time. It keeps two small accumulators
per factor and refines each factor's columns by a single pass of block
coordinate descent, so memory does not grow with the stream.
"""

# %%
import numpy as np

from lsrdl import OsubdilConfig, SynthSpec, gen_dictionary, gen_samples, osubdil_train

spec = SynthSpec(L=2000, seed=3)
Y, _ = gen_samples(gen_dictionary(spec).assembled, spec)

# %%
# The first 200 samples seed the factors, then the whole stream is consumed.
D, log = osubdil_train(Y, spec.m_dims, spec.p_dims, 1, OsubdilConfig(s=5), seed=0, warmup=Y[:, :200])
err = np.array(log.column("sample_error"))
for start in range(0, 2000, 400):
    print(f"samples {start:4d}-{start + 399:4d}: mean error before update {err[start:start + 400].mean():.3f}")

# %%
# Mini-batches fold several samples per step with their codes frozen.
_, log_b = osubdil_train(Y, spec.m_dims, spec.p_dims, 1, OsubdilConfig(s=5, batch=20), seed=0,
                         warmup=Y[:, :200])
print("running mean error, batch 1 vs batch 20:",
      round(log.last("running_mean"), 3), round(log_b.last("running_mean"), 3))

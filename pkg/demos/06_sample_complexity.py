"""
Error against training-set size
===============================

A structured dictionary has far fewer parameters than an unstructured one
of the same size, so it should need fewer samples. This sweep trains
TeFDiL and an unstructured least-squares baseline on growing training sets
and scores both on fresh samples. It uses 2 seeds and a reduced grid to
stay quick; the CLI ``sweep`` command runs the full grid.
"""

# %%
from lsrdl import SynthSpec, run_sample_complexity_sweep
from lsrdl.synth import summarize_sweep

rows = run_sample_complexity_sweep(SynthSpec(), L_grid=(50, 100, 500, 2000), algos=("tefdil", "baseline"),
                                   seeds=(0, 1), iters=30, n_test=300)

# %%
# Training error of the baseline is zero while it has more atoms than
# samples, so compare held-out error.
summary = summarize_sweep(rows, "heldout_error")
for (algo, L), (mean, lo, hi) in sorted(summary.items()):
    print(f"{algo:8s} L={L:5d} held-out error {mean:.3f}  (range {lo:.3f} to {hi:.3f})")

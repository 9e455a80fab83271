"""Low-separation-rank (LSR) dictionary learning for tensor data.

A dictionary of separation rank ``r`` is a sum of ``r`` Kronecker products
of small factor matrices. The package provides the Kronecker-to-tensor
rearrangement, three learners (:func:`stark_train`, :func:`tefdil_train`,
:func:`osubdil_train`), sparse coders, a synthetic benchmark and a
patch-based denoising pipeline.
"""

from .dictionary import (DegenerateDictionaryError, LsrDictionary, coherence, dict_distance,
                         diagnostics, param_count, rip_constant, separation_rank_bound)
from .denoise import DenoiseConfig, PatchConfig, denoise_pipeline, psnr
from .osubdil import OsubdilConfig, osubdil_step, osubdil_train
from .rearrange import RearrangementMap, build_map, rearrange, rearrange_inv
from .runlog import RunLog
from .sparse import OMP, Lasso, LassoOptions, code_batch, lasso, omp
from .stark import StarkConfig, stark_train
from .synth import SynthSpec, gen_dictionary, gen_samples, run_sample_complexity_sweep
from .tefdil import TefdilConfig, tefdil_train
from .tensor import CpFactors, cpd, kron_chain, mode_product, svt, unfold, refold

__version__ = "0.1.0"

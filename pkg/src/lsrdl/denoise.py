"""Patch-based image denoising with a learned LSR dictionary.

Overlapping ``8 x 8`` patches of an RGB image are treated as ``3 x 8 x 8``
tensors, a dictionary is trained on the noisy patches themselves, each
patch is re-coded with OMP, and the overlapping estimates are averaged.

Images are ``H x W x C`` arrays on a 0..255 scale. Internally the pipeline
works on a 0..1 scale so the default lasso penalty is independent of the
bit depth.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dictionary import LsrDictionary, param_count
from .sparse import OMP, code_batch


@dataclass
class PatchConfig:
    patch_h: int = 8
    patch_w: int = 8
    stride: int = 4
    channels: int = 3
    mean_subtract: bool = True

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if min(self.patch_h, self.patch_w, self.channels) < 1:
            raise ValueError("patch dimensions must be positive")

    @property
    def m_dims(self) -> tuple:
        return (self.channels, self.patch_h, self.patch_w)


def _starts(size: int, patch: int, stride: int) -> list:
    """Window offsets along one axis; the last window is flush with the border."""
    if patch > size:
        raise ValueError(f"patch size {patch} exceeds image size {size}")
    starts = list(range(0, size - patch + 1, stride))
    if starts[-1] != size - patch:
        starts.append(size - patch)
    return starts


def extract_patches(img: np.ndarray, cfg: PatchConfig):
    """Vectorize every patch of a sliding window.

    Each column is a ``(C, patch_h, patch_w)`` patch flattened row-major,
    so entry ``c * patch_h * patch_w + i * patch_w + j`` is channel ``c``,
    row ``i``, column ``j``. With `mean_subtract` the per-patch mean is
    removed.

    Returns
    -------
    P : ndarray, shape (C * patch_h * patch_w, n_patches)
    positions : ndarray, shape (n_patches, 2)
        Top-left corner of every patch.
    means : ndarray, shape (n_patches,)
        Removed means (zeros when `mean_subtract` is off).
    """
    img = np.asarray(img, dtype=float)
    if img.ndim == 2:
        img = img[:, :, None]
    H, W, C = img.shape
    if C != cfg.channels:
        raise ValueError(f"image has {C} channels, config expects {cfg.channels}")
    rows = _starts(H, cfg.patch_h, cfg.stride)
    cols = _starts(W, cfg.patch_w, cfg.stride)
    chw = np.moveaxis(img, 2, 0)
    positions = np.array([(r, c) for r in rows for c in cols], dtype=int)
    P = np.empty((C * cfg.patch_h * cfg.patch_w, len(positions)))
    for k, (r, c) in enumerate(positions):
        P[:, k] = chw[:, r:r + cfg.patch_h, c:c + cfg.patch_w].ravel()
    means = P.mean(axis=0) if cfg.mean_subtract else np.zeros(P.shape[1])
    return P - means, positions, means


def aggregate_patches(P, positions, cfg: PatchConfig, H: int, W: int, C: int,
                      means=None) -> np.ndarray:
    """Average overlapping patch estimates back into an ``H x W x C`` image."""
    P = np.asarray(P, dtype=float)
    if means is not None:
        P = P + np.asarray(means)[None, :]
    acc = np.zeros((C, H, W))
    cnt = np.zeros((H, W))
    shape = (C, cfg.patch_h, cfg.patch_w)
    for k, (r, c) in enumerate(positions):
        acc[:, r:r + cfg.patch_h, c:c + cfg.patch_w] += P[:, k].reshape(shape)
        cnt[r:r + cfg.patch_h, c:c + cfg.patch_w] += 1
    if np.any(cnt == 0):
        raise ValueError("some pixels are not covered by any patch")
    return np.moveaxis(acc / cnt, 0, 2)


def psnr(ref, test, max_val: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {test.shape}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(max_val ** 2 / mse)


def add_noise(img, sigma: float, seed=0) -> np.ndarray:
    """Add white Gaussian noise of standard deviation `sigma` (no clipping)."""
    rng = np.random.default_rng(seed)
    return np.asarray(img, dtype=float) + sigma * rng.standard_normal(np.shape(img))


@dataclass
class DenoiseConfig:
    algo: str = "tefdil"
    rank: int = 4
    p_dims: tuple = (3, 16, 16)
    lam: float = 0.1
    outer_iters: int = 10
    s: int | None = None  # OMP sparsity for reconstruction; default ceil(p / 20)
    seed: int = 0
    patch: PatchConfig = field(default_factory=PatchConfig)

    @property
    def sparsity(self) -> int:
        return self.s if self.s is not None else math.ceil(int(np.prod(self.p_dims)) / 20)


@dataclass
class DenoiseReport:
    psnr_noisy: float
    psnr_denoised: float
    params_structured: int
    params_unstructured: int
    n_patches: int
    config: dict
    identical: bool = False  # noisy input equals the reference

    def to_dict(self) -> dict:
        return asdict(self)


def train_patch_dictionary(P, m_dims, cfg: DenoiseConfig) -> LsrDictionary:
    """Train the configured learner on patch columns `P` (0..1 scale)."""
    from .osubdil import OsubdilConfig, osubdil_train
    from .stark import StarkConfig, stark_train
    from .synth import baseline_train
    from .tefdil import TefdilConfig, tefdil_train

    if cfg.algo == "tefdil":
        tc = TefdilConfig(r=cfg.rank, s=None, lam=cfg.lam, outer_iters=cfg.outer_iters)
        D, _ = tefdil_train(P, m_dims, cfg.p_dims, tc, seed=cfg.seed)
    elif cfg.algo == "stark":
        D, _ = stark_train(P, m_dims, cfg.p_dims,
                           StarkConfig(lam=cfg.lam, outer_iters=cfg.outer_iters), seed=cfg.seed)
    elif cfg.algo == "osubdil":
        D, _ = osubdil_train(P, m_dims, cfg.p_dims, cfg.rank, OsubdilConfig(s=None, lam=cfg.lam),
                             seed=cfg.seed, warmup=P)
    elif cfg.algo == "baseline":
        D, _ = baseline_train(P, m_dims, cfg.p_dims, cfg.sparsity, outer_iters=cfg.outer_iters,
                              seed=cfg.seed)
    else:
        raise ValueError(f"unknown algorithm {cfg.algo!r}")
    return D


def denoise_pipeline(noisy, cfg: DenoiseConfig, reference=None, dictionary=None):
    """Denoise an RGB image with a dictionary learned from its own patches.

    Parameters
    ----------
    noisy : ndarray, shape (H, W, C)
        Noisy image on a 0..255 scale.
    cfg : DenoiseConfig
    reference : ndarray, optional
        Clean image; when given the report carries PSNR values against it
        (otherwise both are ``nan``).
    dictionary : LsrDictionary, optional
        Skip training and use this dictionary.

    Returns
    -------
    DenoiseReport, ndarray
        The denoised image is clipped to ``[0, 255]``.
    """
    noisy = np.asarray(noisy, dtype=float)
    if noisy.ndim == 2:
        noisy = noisy[:, :, None]
    if not np.all(np.isfinite(noisy)):
        raise ValueError("image contains non-finite values")
    H, W, C = noisy.shape
    pc = cfg.patch
    m_dims = pc.m_dims
    P, pos, means = extract_patches(noisy / 255.0, pc)
    D = dictionary if dictionary is not None else train_patch_dictionary(P, m_dims, cfg)
    X = code_batch(P, D.assembled, OMP(cfg.sparsity)).values
    out = aggregate_patches(D.assembled @ X, pos, pc, H, W, C, means) * 255.0
    out = np.clip(out, 0.0, 255.0)
    if reference is not None:
        p_noisy, p_out = psnr(reference, noisy), psnr(reference, out)
    else:
        p_noisy = p_out = float("nan")
    structured, unstructured = param_count(m_dims, cfg.p_dims, cfg.rank)
    if cfg.algo not in ("tefdil", "osubdil"):
        structured = unstructured
    echo = asdict(cfg)
    echo["sparsity"] = cfg.sparsity
    report = DenoiseReport(p_noisy, p_out, structured, unstructured, P.shape[1], echo,
                           identical=math.isinf(p_noisy))
    return report, out

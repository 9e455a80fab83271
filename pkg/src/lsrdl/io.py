"""Binary tensor files, CSV matrices, dictionary files and PNG images.

Tensor file layout (all integers little-endian)::

    b"LSRT" | u32 N | N x u64 dims | prod(dims) x f64, column-major

Matrices are stored as 2-way tensors. A dictionary file starts with::

    b"LSRD" | u32 N | u32 r | N x u64 m_dims | N x u64 p_dims

followed by ``r * N`` tensor blocks holding the factors (term by term),
then the column scales as a 1-way tensor. A dictionary without factors
(``r = 0``) stores its assembled matrix as one extra block before the
scales.
"""

from __future__ import annotations

import struct

import numpy as np

from .dictionary import LsrDictionary

TENSOR_MAGIC = b"LSRT"
DICT_MAGIC = b"LSRD"
CSV_MAX_ENTRIES = 10 ** 6


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _write_tensor(fh, t: np.ndarray) -> None:
    t = np.asarray(t, dtype="<f8")
    fh.write(TENSOR_MAGIC)
    fh.write(struct.pack("<I", t.ndim))
    fh.write(struct.pack(f"<{t.ndim}Q", *t.shape))
    fh.write(t.ravel(order="F").tobytes())


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError("unexpected end of file")
    return buf


def _read_tensor(fh) -> np.ndarray:
    if _read_exact(fh, 4) != TENSOR_MAGIC:
        raise FormatError("bad tensor magic")
    (N,) = struct.unpack("<I", _read_exact(fh, 4))
    dims = struct.unpack(f"<{N}Q", _read_exact(fh, 8 * N))
    count = int(np.prod(dims, dtype=np.int64))
    data = np.frombuffer(_read_exact(fh, 8 * count), dtype="<f8")
    return data.reshape(dims, order="F").astype(float)


def save_tensor(path, t: np.ndarray) -> None:
    with open(path, "wb") as fh:
        _write_tensor(fh, t)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        t = _read_tensor(fh)
        if fh.read(1):
            raise FormatError("trailing bytes after tensor")
    return t


def save_csv(path, M: np.ndarray) -> None:
    """Write a matrix as CSV with round-trip precision."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError("CSV export needs a matrix")
    if M.size > CSV_MAX_ENTRIES:
        raise ValueError(f"CSV export is limited to {CSV_MAX_ENTRIES} entries")
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def load_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    if M.size > CSV_MAX_ENTRIES:
        raise ValueError(f"CSV import is limited to {CSV_MAX_ENTRIES} entries")
    return M


def load_matrix(path) -> np.ndarray:
    """Load a matrix from a tensor file or, for ``.csv`` paths, a CSV file."""
    if str(path).lower().endswith(".csv"):
        return load_csv(path)
    M = load_tensor(path)
    if M.ndim != 2:
        raise FormatError(f"expected a matrix, found a {M.ndim}-way tensor")
    return M


def save_dictionary(path, D: LsrDictionary) -> None:
    N, r = D.N, D.r
    with open(path, "wb") as fh:
        fh.write(DICT_MAGIC)
        fh.write(struct.pack("<II", N, r))
        fh.write(struct.pack(f"<{2 * N}Q", *D.m_dims, *D.p_dims))
        for term in D.factors:
            for F in term:
                _write_tensor(fh, F)
        if r == 0:
            _write_tensor(fh, D.assembled)
        _write_tensor(fh, D.col_scales)


def load_dictionary(path) -> LsrDictionary:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != DICT_MAGIC:
            raise FormatError("bad dictionary magic")
        N, r = struct.unpack("<II", _read_exact(fh, 8))
        dims = struct.unpack(f"<{2 * N}Q", _read_exact(fh, 16 * N))
        m_dims, p_dims = tuple(int(d) for d in dims[:N]), tuple(int(d) for d in dims[N:])
        factors = [[_read_tensor(fh) for _ in range(N)] for _ in range(r)]
        assembled = _read_tensor(fh) if r == 0 else None
        scales = _read_tensor(fh)
        if fh.read(1):
            raise FormatError("trailing bytes after dictionary")
    if r == 0:
        return LsrDictionary(m_dims, p_dims, [], assembled, scales)
    D = LsrDictionary.from_factors(factors, m_dims, p_dims)
    if not np.array_equal(D.col_scales, scales):
        raise FormatError("stored column scales do not match the factors")
    return D


def load_image(path) -> np.ndarray:
    """Read an image as an ``H x W x 3`` float array on a 0..255 scale."""
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=float)


def save_image(path, img: np.ndarray) -> None:
    """Write an 8-bit RGB PNG (values rounded and clipped to 0..255)."""
    from PIL import Image

    arr = np.clip(np.rint(np.asarray(img, dtype=float)), 0, 255).astype(np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr).save(path)

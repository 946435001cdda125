"""Complex array substrate: DFTs, circular shifts, fftshift and CSV I/O.

Transforms act along the last axis, so a 2-D array is transformed row by
row. The forward DFT is unnormalized with an ``exp(-2j*pi*k*n/N)`` kernel;
the inverse carries the ``1/N``.

Two interchangeable backends compute the same transform:

* ``"numpy"`` (default) delegates to ``numpy.fft`` (pocketfft).
* ``"radix2"`` is self-contained: an iterative radix-2 decimation-in-time
  transform for power-of-two lengths and a direct O(N^2) DFT otherwise
  (logging a warning the first time a length is seen).

Select with :func:`set_backend`. The backend is process-global.
"""

import functools
import json
import logging
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@functools.lru_cache(maxsize=None)
def _bitrev(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@functools.lru_cache(maxsize=None)
def _twiddles(n):
    # one table per stage half-size h: exp(-j*pi*i/h), i < h
    tables = []
    h = 1
    while h < n:
        t = np.exp(-1j * np.pi * np.arange(h) / h)
        t.setflags(write=False)
        tables.append(t)
        h *= 2
    return tuple(tables)


@functools.lru_cache(maxsize=None)
def _dft_matrix(n):
    logger.warning("length %d is not a power of two; using O(N^2) direct DFT", n)
    k = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, k) / n)
    w.setflags(write=False)
    return w


def _radix2(x):
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bitrev(n)]
    h = 1
    for tw in _twiddles(n):
        y = y.reshape(lead + (n // (2 * h), 2, h))
        a = y[..., 0, :]
        b = y[..., 1, :] * tw
        out = np.empty_like(y)
        np.add(a, b, out=out[..., 0, :])
        np.subtract(a, b, out=out[..., 1, :])
        y = out
        h *= 2
    return y.reshape(lead + (n,))


def _as_complex(x, name):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise InvalidArgumentError(f"{name}: input must be a non-empty array")
    return x


def fft_radix2(x):
    """Self-contained forward DFT (radix-2, or direct DFT for other lengths)."""
    x = _as_complex(x, "fft")
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    if _is_pow2(n):
        return _radix2(x)
    return x @ _dft_matrix(n).T


def _fft_numpy(x):
    return np.fft.fft(_as_complex(x, "fft"), axis=-1)


_BACKENDS = {"numpy": _fft_numpy, "radix2": fft_radix2}
_backend = "numpy"


def set_backend(name):
    """Choose the forward transform used by :func:`fft` and :func:`ifft`."""
    global _backend
    if name not in _BACKENDS:
        raise InvalidArgumentError(f"unknown FFT backend {name!r}; choose from {sorted(_BACKENDS)}")
    _backend = name


def get_backend():
    return _backend


def fft(x):
    """Unnormalized forward DFT along the last axis."""
    return _BACKENDS[_backend](x)


def ifft(X):
    """Inverse DFT along the last axis, ``ifft(fft(x)) == x``."""
    X = _as_complex(X, "ifft")
    n = X.shape[-1]
    # conj trick keeps one forward kernel
    return np.conj(fft(np.conj(X))) / n


def circshift(x, k):
    """Circular shift: ``y[n] = x[(n - k) mod N]``; ``k`` wraps."""
    x = np.asarray(x)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise InvalidArgumentError("circshift: input must be a non-empty array")
    return np.roll(x, int(k) % x.shape[-1], axis=-1)


def _check_square(chi, name):
    chi = np.asarray(chi)
    if chi.ndim != 2 or chi.shape[0] != chi.shape[1]:
        raise InvalidArgumentError(f"{name}: expected a square matrix, got shape {chi.shape}")
    return chi


def fftshift2(chi):
    """Rotate both axes by ``N // 2`` so the (0, 0) cell moves to (N//2, N//2)."""
    chi = _check_square(chi, "fftshift2")
    h = chi.shape[0] // 2
    return np.roll(chi, (h, h), axis=(0, 1))


def ifftshift2(chi):
    """Inverse of :func:`fftshift2` (differs from it only for odd N)."""
    chi = _check_square(chi, "ifftshift2")
    h = chi.shape[0] // 2
    return np.roll(chi, (-h, -h), axis=(0, 1))


def centered_axis(n):
    """Integer axis of a shifted surface: ``-(n//2) .. ceil(n/2) - 1``."""
    return np.arange(n) - n // 2


# ---------------------------------------------------------------- file I/O


def read_waveform_csv(path):
    """Read a ``re,im`` CSV (header optional) into a complex vector."""
    path = Path(path)
    rows = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read waveform file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if lineno == 1 and line.replace(" ", "").lower() == "re,im":
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InvalidArgumentError(f"{path}:{lineno}: expected two columns 're,im'")
        try:
            rows.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InvalidArgumentError(f"{path}: no samples")
    x = np.array(rows, dtype=np.complex128)
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{path}: non-finite sample")
    return x


def write_waveform_csv(path, samples, header=True):
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    path = Path(path)
    lines = ["re,im"] if header else []
    lines += [f"{FLOAT_FMT % z.real},{FLOAT_FMT % z.imag}" for z in samples]
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write waveform file {path}: {exc}") from exc
    return path


def write_matrix_csv(path, matrix, layout="raw"):
    """Write a real matrix as CSV rows plus a ``<path>.json`` metadata sidecar."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise InvalidArgumentError("write_matrix_csv: expected a 2-D array")
    if layout not in ("raw", "shifted"):
        raise InvalidArgumentError(f"unknown layout {layout!r}")
    path = Path(path)
    try:
        np.savetxt(path, matrix, delimiter=",", fmt=FLOAT_FMT)
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps({"n": int(matrix.shape[0]), "layout": layout}))
    except OSError as exc:
        raise OSError(f"cannot write matrix file {path}: {exc}") from exc
    return path


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`; returns ``(matrix, metadata)``."""
    path = Path(path)
    matrix = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    sidecar = path.with_name(path.name + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {"n": matrix.shape[0], "layout": "raw"}
    return matrix, meta

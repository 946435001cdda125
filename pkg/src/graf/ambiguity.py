"""Discrete periodic ambiguity function.

``chi[k, m] = |sum_n s[n] conj(s[(n - k) mod N]) exp(-2j pi m n / N)|**2``

Rows index delay ``k`` and columns index Doppler ``m``. The Doppler kernel is
the forward-DFT one, so the Doppler axis is the mirror image (``m -> -m``) of
a definition written with ``exp(+2j pi m n / N)``; magnitudes are otherwise
identical.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .complex_core import centered_axis, fftshift2
from .errors import InvalidArgumentError

ORACLE_MAX_N = 512

BARKER13 = np.array([1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1], dtype=np.complex128)


@dataclass(frozen=True)
class Waveform:
    """A complex baseband sequence, optionally defined by its phases."""

    samples: np.ndarray
    phases: np.ndarray | None = field(default=None)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidArgumentError("waveform must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("waveform samples must be finite")
        object.__setattr__(self, "samples", samples)
        if self.phases is not None:
            object.__setattr__(self, "phases", np.asarray(self.phases, dtype=np.float64))

    @classmethod
    def from_phases(cls, phases):
        phases = np.asarray(phases, dtype=np.float64)
        return cls(np.exp(1j * phases), phases)

    @property
    def parameterization(self):
        return "free_complex" if self.phases is None else "phase_only"

    def __len__(self):
        return self.samples.size


@dataclass
class AmbiguitySurface:
    """An ``N x N`` ambiguity surface.

    ``chi`` is a :class:`~graf.autodiff.Var`, so surfaces built on a tape keep
    their gradient path. ``layout`` is ``"raw"`` (origin at ``[0, 0]``) or
    ``"shifted"`` (origin at ``[N//2, N//2]``).
    """

    chi: ad.Var
    layout: str = "raw"
    normalized: bool = False

    def __post_init__(self):
        self.chi = ad.as_var(self.chi)
        if self.layout not in ("raw", "shifted"):
            raise InvalidArgumentError(f"unknown layout {self.layout!r}")

    @property
    def values(self):
        return self.chi.value

    @property
    def n(self):
        return self.chi.value.shape[0]

    @property
    def origin(self):
        c = self.n // 2 if self.layout == "shifted" else 0
        return (c, c)

    @property
    def delay_axis(self):
        return centered_axis(self.n) if self.layout == "shifted" else np.arange(self.n)

    doppler_axis = delay_axis


def _signal_var(s):
    if isinstance(s, Waveform):
        s = s.samples
    s = ad.as_var(s)
    if s.value.ndim != 1:
        raise InvalidArgumentError("signal must be a 1-D sequence")
    return s


def ambiguity(s, shifted=False, normalize=False):
    """Ambiguity surface via shift matrix, conjugate product, row DFTs, ``|.|**2``.

    ``s`` may be a :class:`Waveform`, an array, or a tape variable; every
    step is a tape op so gradients flow back to ``s``. ``normalize`` divides
    by the surface maximum.
    """
    s = _signal_var(s)
    if s.value.size < 2:
        raise InvalidArgumentError("ambiguity needs N >= 2")
    S = ad.op_shift_matrix(s)
    R = ad.op_conj_product(s, S)
    X = ad.op_fft_rows(R)
    chi = ad.op_abs2(X)
    if shifted:
        chi = ad.op_fftshift2(chi)
    if normalize:
        peak, _ = ad.op_max_with_argmax(chi)
        chi = ad.op_div_scalar(chi, peak)
    return AmbiguitySurface(chi, "shifted" if shifted else "raw", normalize)


def ambiguity_oracle(s, shifted=False):
    """Brute-force evaluation of the defining double sum, cell by cell.

    No tape and no FFT; intended as an independent reference for small N.
    """
    if isinstance(s, Waveform):
        s = s.samples
    s = np.asarray(s, dtype=np.complex128)
    n = s.size
    if s.ndim != 1 or n < 2:
        raise InvalidArgumentError("ambiguity_oracle needs a 1-D signal with N >= 2")
    if n > ORACLE_MAX_N:
        raise InvalidArgumentError(
            f"ambiguity_oracle is O(N^3); N={n} exceeds {ORACLE_MAX_N}. Use ambiguity() instead."
        )
    t = np.arange(n)
    chi = np.empty((n, n))
    for k in range(n):
        lagged = np.array([s[i] * np.conj(s[(i - k) % n]) for i in range(n)])
        for m in range(n):
            kernel = np.exp(-2j * np.pi * m * t / n)
            acc = np.dot(lagged, kernel)
            chi[k, m] = acc.real**2 + acc.imag**2
    if shifted:
        chi = fftshift2(chi)
    return AmbiguitySurface(chi, "shifted" if shifted else "raw", False)


def zero_doppler_cut(surface):
    """The zero-Doppler column, ordered along ``surface.delay_axis``."""
    col = surface.origin[1]
    return ad.op_take(surface.chi, (slice(None), col))

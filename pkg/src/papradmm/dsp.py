"""Complex-baseband OFDM primitives.

Conventions used throughout the package:

* A frequency-domain symbol ``c`` has ``N`` carriers occupying DFT bins
  ``0..N-1``.  Spectral centering for plots is a display-time ``fftshift``,
  never a property of the data model.
* Its time-domain counterpart ``x`` has ``L*N`` samples, where ``L`` is the
  integer over-sampling factor.  The pair is related by an ``L*N``-point
  IFFT of the zero-padded carrier vector and, in the other direction, by an
  ``L*N``-point FFT truncated to the first ``N`` bins.
* All array functions are vectorized over leading axes, so a batch of
  symbols is an array of shape ``(K, N)`` or ``(K, L*N)``.
"""

import numpy as np
from dataclasses import dataclass


class DegenerateSymbolError(ValueError):
    """An operation received an (effectively) all-zero symbol it cannot process."""


def _as_complex(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128)


def ifft_oversampled(c, oversample: int) -> np.ndarray:
    """Oversampled OFDM modulator.

    Parameters
    ----------
    c : array_like, shape (..., N)
        Frequency-domain carrier values.
    oversample : int
        Over-sampling factor L >= 1.

    Returns
    -------
    x : np.ndarray, shape (..., L*N)
        ``L*N``-point inverse DFT of ``c`` zero-padded to length ``L*N``,
        i.e. ``x[n] = (1/(L*N)) * sum_k c[k] exp(2j*pi*n*k/(L*N))``.
    """
    c = _as_complex(c)
    oversample = int(oversample)
    if oversample < 1:
        raise ValueError(f"oversample must be a positive integer, got {oversample}")
    return np.fft.ifft(c, n=oversample * c.shape[-1], axis=-1)


def fft_oversampled(x, oversample: int) -> np.ndarray:
    """Inverse of :func:`ifft_oversampled`.

    Runs the full ``L*N``-point forward DFT of ``x`` and keeps only the
    first ``N`` bins.  ``fft_oversampled(ifft_oversampled(c, L), L) == c``.
    """
    x = _as_complex(x)
    oversample = int(oversample)
    if oversample < 1:
        raise ValueError(f"oversample must be a positive integer, got {oversample}")
    if x.shape[-1] % oversample:
        raise ValueError(
            f"input length {x.shape[-1]} is not a multiple of oversample={oversample}"
        )
    n_carriers = x.shape[-1] // oversample
    return np.fft.fft(x, axis=-1)[..., :n_carriers]


def papr(x) -> np.ndarray:
    """Peak-to-average power ratio, linear scale.

    ``papr(x) = max_i |x_i|^2 / mean_i |x_i|^2``; always >= 1, with
    equality exactly for constant-modulus inputs.
    """
    power = np.abs(_as_complex(x)) ** 2
    mean = power.mean(axis=-1)
    if np.any(mean == 0.0):
        raise DegenerateSymbolError("zero-energy symbol has undefined PAPR")
    return power.max(axis=-1) / mean


def papr_db(x) -> np.ndarray:
    """Peak-to-average power ratio in dB."""
    return 10.0 * np.log10(papr(x))


@dataclass(frozen=True)
class CarrierPlan:
    """Partition of the N carriers into data and free (reserved) sets.

    The two index sets must be disjoint and cover ``0..n_carriers-1``, so the
    corresponding diagonal selection masks sum to the identity.
    """

    n_carriers: int
    data_idx: np.ndarray
    free_idx: np.ndarray

    def __post_init__(self):
        data = np.asarray(np.sort(np.atleast_1d(self.data_idx)), dtype=np.intp)
        free = np.asarray(np.sort(np.atleast_1d(self.free_idx)), dtype=np.intp)
        object.__setattr__(self, "data_idx", data)
        object.__setattr__(self, "free_idx", free)
        n = int(self.n_carriers)
        if n < 2:
            raise ValueError("need at least 2 carriers")
        combined = np.concatenate([data, free])
        if combined.size != n or np.any(np.sort(combined) != np.arange(n)):
            raise ValueError("data_idx and free_idx must disjointly cover 0..N-1")
        data_mask = np.zeros(n, dtype=bool)
        data_mask[data] = True
        object.__setattr__(self, "data_mask", data_mask)
        object.__setattr__(self, "free_mask", ~data_mask)

    @property
    def n_data(self) -> int:
        return int(self.data_idx.size)

    @property
    def n_free(self) -> int:
        return int(self.free_idx.size)

    @classmethod
    def default(cls, n_carriers: int = 64, n_free: int = 12) -> "CarrierPlan":
        """Wi-Fi-like plan: free carriers at DC and the top of the band.

        For the stock 64-carrier / 12-free configuration this reserves bin 0
        plus the 11 highest bins, mirroring 802.11a null locations.  Any other
        placement can be built directly through the constructor.
        """
        if not 0 < n_free < n_carriers:
            raise ValueError("n_free must be in 1..n_carriers-1")
        free = np.r_[0, np.arange(n_carriers - (n_free - 1), n_carriers)]
        data = np.setdiff1d(np.arange(n_carriers), free)
        return cls(n_carriers=n_carriers, data_idx=data, free_idx=free)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    out = g.copy()
    s = g >> 1
    while np.any(s):
        out ^= s
        s >>= 1
    return out


def _gray_pam_levels(n_bits: int) -> np.ndarray:
    """PAM levels indexed by Gray-coded bit label, unit spacing 2."""
    m = 1 << n_bits
    labels = np.arange(m)
    order = _gray_to_binary(labels)
    return (2 * order - (m - 1)).astype(float)


@dataclass(frozen=True)
class Constellation:
    """Gray-mapped constellation with unit average energy.

    ``points[b]`` is the complex point whose bit label is the integer ``b``
    read MSB-first; neighbouring points differ in exactly one label bit.
    """

    kind: str
    bits_per_symbol: int
    points: np.ndarray

    def __post_init__(self):
        pts = _as_complex(self.points)
        object.__setattr__(self, "points", pts)
        if pts.size != 1 << self.bits_per_symbol:
            raise ValueError("points size must be 2**bits_per_symbol")
        energy = np.mean(np.abs(pts) ** 2)
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation average energy is {energy}, expected 1")

    @classmethod
    def qpsk(cls) -> "Constellation":
        labels = np.arange(4)
        i = 1 - 2 * (labels >> 1)  # bit 0 -> +1 rail, so 00 -> (1+1j)/sqrt(2)
        q = 1 - 2 * (labels & 1)
        return cls("qpsk", 2, (i + 1j * q) / np.sqrt(2.0))

    @classmethod
    def qam16(cls) -> "Constellation":
        levels = _gray_pam_levels(2)  # Gray-ordered [-3,-1,+3,+1] style
        i = levels[np.arange(16) >> 2]
        q = levels[np.arange(16) & 3]
        return cls("16qam", 4, (i + 1j * q) / np.sqrt(10.0))

    @classmethod
    def from_name(cls, name: str) -> "Constellation":
        key = name.lower().replace("-", "")
        if key == "qpsk":
            return cls.qpsk()
        if key in ("16qam", "qam16"):
            return cls.qam16()
        raise ValueError(f"unknown constellation {name!r}")


def map_bits(bits, const: Constellation, plan: CarrierPlan) -> np.ndarray:
    """Map hard bits onto the data carriers; free carriers are exactly zero.

    ``bits`` has shape ``(..., n_data * bits_per_symbol)`` with entries in
    {0, 1}, consumed MSB-first per carrier in ascending data-carrier order.
    """
    bits = np.asarray(bits)
    k = const.bits_per_symbol
    expected = plan.n_data * k
    if bits.shape[-1] != expected:
        raise ValueError(f"expected {expected} bits per symbol, got {bits.shape[-1]}")
    groups = bits.reshape(bits.shape[:-1] + (plan.n_data, k))
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = (groups * weights).sum(axis=-1)
    c = np.zeros(bits.shape[:-1] + (plan.n_carriers,), dtype=np.complex128)
    c[..., plan.data_idx] = const.points[labels]
    return c


def demap_bits(c, const: Constellation, plan: CarrierPlan) -> np.ndarray:
    """Minimum-distance hard decision on the data carriers."""
    c = _as_complex(c)
    data = c[..., plan.data_idx]
    d2 = np.abs(data[..., None] - const.points) ** 2
    labels = d2.argmin(axis=-1)
    k = const.bits_per_symbol
    shifts = np.arange(k - 1, -1, -1)
    bits = (labels[..., None] >> shifts) & 1
    return bits.reshape(c.shape[:-1] + (plan.n_data * k,)).astype(np.int8)

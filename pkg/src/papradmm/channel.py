"""Transmitter back end and channel models: SSPA, AWGN, multipath, equalizer."""

import numpy as np
from dataclasses import dataclass
from scipy import signal

from . import dsp


@dataclass(frozen=True)
class SspaParams:
    """Memoryless solid-state amplifier with smoothness ``p`` and back-off.

    The saturation amplitude is referenced to the mean power of the batch
    being amplified: ``a_sat^2 = mean|x|^2 * 10**(input_backoff_db/10)``.
    """

    smoothing_p: float = 3.0
    input_backoff_db: float = 4.1

    def __post_init__(self):
        if self.smoothing_p <= 0:
            raise ValueError("smoothing_p must be > 0")


def saturation_amplitude(x, input_backoff_db: float) -> float:
    """Saturation amplitude placing the batch mean power IBO dB below it."""
    mean_power = float(np.mean(np.abs(x) ** 2))
    if mean_power == 0.0:
        raise dsp.DegenerateSymbolError("cannot back off from a silent batch")
    return float(np.sqrt(mean_power * 10.0 ** (input_backoff_db / 10.0)))


def sspa(x, params: SspaParams = SspaParams(), a_sat: float | None = None) -> np.ndarray:
    """Amplitude compression ``A -> A / (1 + (A/a_sat)^(2p))^(1/(2p))``, phase kept."""
    x = dsp._as_complex(x)
    if a_sat is None:
        a_sat = saturation_amplitude(x, params.input_backoff_db)
    p2 = 2.0 * params.smoothing_p
    gain = (1.0 + (np.abs(x) / a_sat) ** p2) ** (-1.0 / p2)
    return x * gain


def noise_variance_per_sample(ebn0_db: float, eb: float, n_samples: int) -> float:
    """Per-sample complex noise variance hitting the target Eb/N0.

    The forward DFT of length ``n_samples`` multiplies per-sample noise
    variance by ``n_samples``, so a per-carrier noise variance of ``N0``
    requires ``N0 / n_samples`` per time sample.
    """
    if eb <= 0:
        raise ValueError("eb must be positive")
    n0 = eb / (10.0 ** (ebn0_db / 10.0))
    return n0 / n_samples


def awgn(x, noise_var: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of the given per-sample variance."""
    x = dsp._as_complex(x)
    scale = np.sqrt(noise_var / 2.0)
    noise = rng.normal(scale=scale, size=x.shape) + 1j * rng.normal(
        scale=scale, size=x.shape
    )
    return x + noise


@dataclass(frozen=True)
class MultipathProfile:
    """Static tap-delay line; delays in ns on the oversampled grid.

    The default is a four-path profile with a unit direct path.  Delays are
    rounded to samples at ``sample_rate``; the model is interpreted at a
    20 MHz native bandwidth, so the usual over-sampling factor of 4 puts the
    default taps at sample offsets (0, 15, 24, 32).
    """

    delays_ns: tuple = (0.0, 190.0, 300.0, 400.0)
    gains: tuple = (1.0, 0.2, 0.07, 0.05)

    def __post_init__(self):
        if len(self.delays_ns) != len(self.gains):
            raise ValueError("delays and gains must pair up")
        if self.delays_ns[0] != 0.0 or self.gains[0] != 1.0:
            raise ValueError("first tap must be the unit direct path (0, 1)")
        if any(g < 0 for g in self.gains):
            raise ValueError("tap gains must be non-negative")

    def impulse_response(self, sample_rate: float) -> np.ndarray:
        offsets = [round(d * 1e-9 * sample_rate) for d in self.delays_ns]
        h = np.zeros(max(offsets) + 1)
        for off, g in zip(offsets, self.gains):
            h[off] += g
        return h


def multipath_apply(x, h: np.ndarray, cp_len: int, rng=None, noise_var: float = 0.0):
    """Send symbols through the FIR channel with a cyclic prefix.

    Per symbol: prepend the last ``cp_len`` samples, convolve with ``h``,
    add noise if requested, and strip the prefix again, which renders the
    channel circular.  Returns the received symbol batch.
    """
    x = np.atleast_2d(dsp._as_complex(x))
    if cp_len < len(h) - 1:
        raise ValueError(
            f"cyclic prefix ({cp_len}) shorter than channel memory ({len(h) - 1})"
        )
    n = x.shape[-1]
    with_cp = np.concatenate([x[..., n - cp_len:], x], axis=-1)
    full = signal.lfilter(h, [1.0], with_cp, axis=-1)
    if noise_var > 0.0:
        full = awgn(full, noise_var, rng)
    return full[..., cp_len : cp_len + n]


def channel_frequency_response(h: np.ndarray, n_samples: int, n_carriers: int) -> np.ndarray:
    """Exact DFT of the channel on the first ``n_carriers`` bins."""
    return np.fft.fft(h, n=n_samples)[:n_carriers]


def equalize_zero_forcing(c_hat, response: np.ndarray) -> np.ndarray:
    """One-tap per-carrier division by the known channel response."""
    return c_hat / response

"""Repeated clipping-and-filtering baseline.

Each pass soft-clips the oversampled time signal to an amplitude referenced
to its current mean power, then filters by keeping only the in-band data
carriers (free carriers are zeroed too -- this is a pure spectral filter, the
free carriers are not used for peak cancellation here).
"""

import numpy as np
from dataclasses import dataclass

from . import dsp
from .params import db_to_linear


@dataclass(frozen=True)
class RcfParams:
    target_papr_db: float = 4.0
    iterations: int = 10

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.target_papr_db <= 0.0:
            raise ValueError("target PAPR must be > 0 dB")


def clip(x, amplitude) -> np.ndarray:
    """Polar soft clip: magnitudes capped at ``amplitude``, phase preserved."""
    x = dsp._as_complex(x)
    amplitude = np.asarray(amplitude, dtype=float)
    mag = np.abs(x)
    scale = np.minimum(1.0, amplitude[..., None] / np.where(mag > 0, mag, 1.0))
    return x * scale


def rcf(c_o, plan: dsp.CarrierPlan, params: RcfParams, oversample: int) -> np.ndarray:
    """Run clip-and-filter passes; returns the filtered time-domain batch."""
    c_o = dsp._as_complex(c_o)
    single = c_o.ndim == 1
    c = np.atleast_2d(c_o).copy()
    target = db_to_linear(params.target_papr_db)
    for _ in range(params.iterations):
        x = dsp.ifft_oversampled(c, oversample)
        mean_power = np.mean(np.abs(x) ** 2, axis=-1)
        x = clip(x, np.sqrt(target * mean_power))
        c = dsp.fft_oversampled(x, oversample)
        c[..., plan.free_idx] = 0.0
    out = dsp.ifft_oversampled(c, oversample)
    return out[0] if single else out

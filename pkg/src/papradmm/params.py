"""Shared engine parameters and dB helpers."""

import numpy as np
from dataclasses import dataclass, field

from .subproblems import BisectionConfig


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    return float(10.0 * np.log10(value))


@dataclass(frozen=True)
class AdmmParams:
    """Targets and penalties shared by the two engines.

    ``alpha`` is the *linear* PAPR ceiling (>= 1); ``beta`` bounds the
    free-carrier power overhead ``||c_F||^2 / ||c_D||^2``.  ``rho_tilde`` is
    only used by the relaxed engine, which requires ``rho > 2*rho_tilde``.
    Iteration stops after ``max_iters`` sweeps or when the per-symbol change
    residual drops below ``eps``, whichever comes first.
    """

    alpha: float
    beta: float
    rho: float
    rho_tilde: float | None = None
    max_iters: int = 5
    eps: float = 1e-8
    bisection: BisectionConfig = field(default_factory=BisectionConfig)

    def __post_init__(self):
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1 (linear), got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")

    @classmethod
    def from_db(cls, alpha_db: float, **kwargs) -> "AdmmParams":
        return cls(alpha=db_to_linear(alpha_db), **kwargs)

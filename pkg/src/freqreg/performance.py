"""Performance index of a regulation response.

The settlement index is linear in the relative absolute tracking error. An
ex-post composite in the style of PJM (precision, correlation, delay) is
provided as a diagnostic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateSeries, LengthMismatch, ZeroInstructionEnergy

PJM_DELTA = 2.0 / 3.0


@dataclass(frozen=True)
class PerformanceConfig:
    delta: float = PJM_DELTA
    mode: str = "linear"
    rho_min: float = 0.7

    def __post_init__(self):
        if self.mode not in ("linear", "pjm_approx"):
            raise ConfigError(f"unknown performance mode {self.mode!r}")
        if self.mode == "pjm_approx":
            object.__setattr__(self, "delta", PJM_DELTA)
        if not 0 <= self.delta <= 1:
            raise ConfigError("delta must be in [0, 1]")
        if not 0 <= self.rho_min <= 1:
            raise ConfigError("rho_min must be in [0, 1]")


def _pair(instruction, response):
    cr = np.asarray(instruction, dtype=float)
    b = np.asarray(response, dtype=float)
    if cr.shape != b.shape:
        raise LengthMismatch(f"instruction {cr.shape} vs response {b.shape}")
    return cr, b


def linear_index(mismatch: float, instructed: float, delta: float) -> float:
    """``1 - delta * mismatch / instructed`` clipped to [0, 1]; 1 if nothing instructed."""
    if instructed <= 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - delta * mismatch / instructed))


def performance_index(instruction, response, config: PerformanceConfig | float = PJM_DELTA) -> float:
    """Linear performance score of ``response`` against ``instruction`` (both MW)."""
    delta = config.delta if isinstance(config, PerformanceConfig) else float(config)
    cr, b = _pair(instruction, response)
    instructed = float(np.abs(cr).sum())
    if instructed == 0:
        warnings.warn("zero instructed energy; index set to 1", ZeroInstructionEnergy,
                      stacklevel=2)
        return 1.0
    return linear_index(float(np.abs(cr - b).sum()), instructed, delta)


def pjm_index_expost(instruction, response) -> float:
    """Equal-weight mean of precision, correlation and delay scores.

    A battery responds without lag so the delay score is 1. The correlation
    score is the zero-lag Pearson coefficient clipped to [0, 1]; when either
    series is constant it is replaced by the precision score.
    """
    cr, b = _pair(instruction, response)
    instructed = float(np.abs(cr).sum())
    if instructed == 0:
        warnings.warn("zero instructed energy; index set to 1", ZeroInstructionEnergy,
                      stacklevel=2)
        return 1.0
    precision = max(0.0, 1.0 - float(np.abs(cr - b).sum()) / instructed)
    if np.ptp(cr) == 0 or np.ptp(b) == 0:
        warnings.warn("constant series; correlation replaced by precision",
                      DegenerateSeries, stacklevel=2)
        correlation = precision
    else:
        correlation = min(1.0, max(0.0, float(np.corrcoef(cr, b)[0, 1])))
    delay = 1.0
    return (precision + correlation + delay) / 3.0

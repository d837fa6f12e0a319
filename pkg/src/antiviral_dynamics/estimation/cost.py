"""Viral-load observations and the RMSLE fitting cost."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PREDICTION_FLOOR = 1e-12


@dataclass(frozen=True)
class ViralObservation:
    """One measurement in days post infection.

    A censored observation only says the load was below ``v`` (the
    detection limit of the assay).
    """

    t: float
    v: float
    censored: bool = False

    def __post_init__(self):
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ValueError(f"observation time must be >= 0, got {self.t!r}")
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ValueError(f"viral load must be positive, got {self.v!r}")


def rmsle(predicted, observed) -> float:
    """Root mean squared log10 error.

    Censored points cost nothing while the prediction stays at or below the
    limit and are scored against the limit otherwise.
    """
    predicted = np.asarray(predicted, dtype=float)
    if len(predicted) == 0 or len(observed) == 0:
        raise ValueError("rmsle needs at least one point")
    if len(predicted) != len(observed):
        raise ValueError(f"length mismatch: {len(predicted)} predictions, {len(observed)} observations")
    logp = np.log10(np.maximum(predicted, PREDICTION_FLOOR))
    logo = np.log10([o.v for o in observed])
    censored = np.array([o.censored for o in observed])
    resid = logp - logo
    resid[censored & (resid <= 0)] = 0.0
    return float(np.sqrt(np.mean(resid ** 2)))

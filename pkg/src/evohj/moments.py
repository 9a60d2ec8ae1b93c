"""Moment containers and trapezoid-rule moments of sampled densities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OBSERVABLES = ("N", "mean", "variance", "skewness")


@dataclass(frozen=True)
class MomentSet:
    """Mass, mean, variance and skewness of one habitat (optionally one peak)."""

    epsilon: float
    habitat: int
    N: float
    mean: float
    variance: float
    skewness: float
    peak: Optional[int] = None

    def get(self, observable: str) -> float:
        if observable not in OBSERVABLES:
            raise KeyError(observable)
        return getattr(self, observable)


def density_moments(z: np.ndarray, n: np.ndarray):
    """``(N, mean, variance, skewness)`` of a density sampled on ``z``."""
    mass = np.trapezoid(n, z)
    if not mass > 0:
        raise ValueError("density has no positive mass")
    mean = np.trapezoid(z * n, z) / mass
    dz = z - mean
    var = np.trapezoid(dz**2 * n, z) / mass
    third = np.trapezoid(dz**3 * n, z) / mass
    return float(mass), float(mean), float(var), float(third / var**1.5)

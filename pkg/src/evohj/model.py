"""Growth rates and effective fitness of the two-habitat model.

Habitat ``i`` has growth rate ``R_i(z, N) = r_i - g_i (z - theta_i)**2 - kappa_i N``
with optima ``theta_1 = -theta`` and ``theta_2 = theta``. Migration moves
individuals from habitat ``i`` at rate ``m_i``. The effective fitness of a
trait is the largest eigenvalue of

    [[R_1 - m_1,  m_2      ],
     [m_1,        R_2 - m_2]]

which is available in closed form because the matrix is 2x2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple, Union

import numpy as np

from . import _series
from .exceptions import InvalidParameters


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the two-habitat mutation-selection-migration model.

    Validation runs on construction, so downstream code can rely on
    ``m1, m2 > 0`` (two-way migration) and ``max(r1 - m1, r2 - m2) > 0``
    (the metapopulation persists).
    """

    r1: float
    r2: float
    g1: float
    g2: float
    theta: float
    kappa1: float
    kappa2: float
    m1: float
    m2: float
    epsilon: float = 0.05

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(float(value)):
                raise InvalidParameters(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        for name in ("g1", "g2", "kappa1", "kappa2", "epsilon"):
            if getattr(self, name) <= 0:
                raise InvalidParameters(f"{name} must be positive, got {getattr(self, name)}")
        if self.m1 <= 0 or self.m2 <= 0:
            raise InvalidParameters(
                "migration rates must be positive in both directions "
                f"(assumption m1 > 0, m2 > 0); got m1={self.m1}, m2={self.m2}"
            )
        if max(self.r1 - self.m1, self.r2 - self.m2) <= 0:
            raise InvalidParameters(
                "persistence assumption max(r1 - m1, r2 - m2) > 0 is violated; "
                f"got r1-m1={self.r1 - self.m1}, r2-m2={self.r2 - self.m2}"
            )

    def optimum(self, i: int) -> float:
        _check_habitat(i)
        return -self.theta if i == 1 else self.theta

    def swapped(self) -> "ModelParams":
        """Exchange habitat labels; combined with ``z -> -z`` this is a symmetry."""
        return replace(
            self,
            r1=self.r2, r2=self.r1,
            g1=self.g2, g2=self.g1,
            kappa1=self.kappa2, kappa2=self.kappa1,
            m1=self.m2, m2=self.m1,
        )

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return replace(self, epsilon=epsilon)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def bracket_halfwidth(self) -> float:
        """Half-width of the interval outside of which no trait can have W >= 0."""
        delta = self.theta + math.sqrt(max(self.r1, self.r2, 0.0) / min(self.g1, self.g2))
        return self.theta + delta


class PopulationSizes(NamedTuple):
    N1: float
    N2: float


SizesLike = Union[PopulationSizes, tuple]


def _check_habitat(i):
    if i not in (1, 2):
        raise ValueError(f"habitat index must be 1 or 2, got {i!r}")


def growth_rate(i: int, z, N, p: ModelParams):
    """``R_i(z, N)``; vectorised over ``z``."""
    _check_habitat(i)
    if i == 1:
        return p.r1 - p.g1 * (np.asarray(z) + p.theta) ** 2 - p.kappa1 * N
    return p.r2 - p.g2 * (np.asarray(z) - p.theta) ** 2 - p.kappa2 * N


def _diagonal(z, N: SizesLike, p: ModelParams):
    N1, N2 = N
    a = growth_rate(1, z, N1, p) - p.m1
    d = growth_rate(2, z, N2, p) - p.m2
    return a, d


def effective_fitness(z, N: SizesLike, p: ModelParams):
    """Largest eigenvalue ``W(z; N1, N2)`` of the connectivity matrix."""
    a, d = _diagonal(z, N, p)
    half_gap = 0.5 * (a - d)
    return 0.5 * (a + d) + np.sqrt(half_gap * half_gap + p.m1 * p.m2)


def fitness_eigenvector(z, N: SizesLike, p: ModelParams):
    """Perron eigenvector ``(alpha1, alpha2)`` normalised to sum to one.

    The ratio ``alpha2/alpha1`` equals both ``(W - a)/m2`` and ``m1/(W - d)``;
    whichever form avoids cancellation is used.
    """
    a, d = _diagonal(z, N, p)
    h = 0.5 * (a - d)
    root = np.sqrt(h * h + p.m1 * p.m2)
    ratio = np.where(h >= 0, p.m1 / (h + root), (root - h) / p.m2)
    alpha1 = 1.0 / (1.0 + ratio)
    return alpha1, ratio * alpha1


def fitness_gradient(z, N: SizesLike, p: ModelParams):
    """``dW/dz`` at fixed population sizes; vectorised over ``z``."""
    z = np.asarray(z, dtype=float)
    a, d = _diagonal(z, N, p)
    da = -2.0 * p.g1 * (z + p.theta)
    dd = -2.0 * p.g2 * (z - p.theta)
    h = 0.5 * (a - d)
    root = np.sqrt(h * h + p.m1 * p.m2)
    return 0.5 * (da + dd) + h * 0.5 * (da - dd) / root


def diagonal_jets(z0: float, N: SizesLike, p: ModelParams, order: int = 6):
    """Taylor coefficients in ``t = z - z0`` of ``R_1 - m_1`` and ``R_2 - m_2``."""
    a0, d0 = _diagonal(z0, N, p)
    a = _series.as_series([a0, -2.0 * p.g1 * (z0 + p.theta), -p.g1], order)
    d = _series.as_series([d0, -2.0 * p.g2 * (z0 - p.theta), -p.g2], order)
    return a, d


def fitness_jet(z0: float, N: SizesLike, p: ModelParams, order: int = 6) -> np.ndarray:
    """Taylor coefficients of ``t -> W(z0 + t; N)`` up to ``t**order``.

    Exact up to rounding: the diagonal entries are quadratics and the
    discriminant stays above ``m1*m2 > 0``.
    """
    a, d = diagonal_jets(z0, N, p, order)
    h = 0.5 * (a - d)
    disc = _series.mul(h, h)
    disc[0] += p.m1 * p.m2
    return 0.5 * (a + d) + _series.sqrt(disc)


def fitness_derivatives(z0: float, N: SizesLike, p: ModelParams, order: int = 4) -> np.ndarray:
    """``[W, W', W'', ...]`` at ``z0`` up to the given derivative order."""
    jet = fitness_jet(z0, N, p, order)
    return jet * np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


def fitness_matrix(z: float, N: SizesLike, p: ModelParams) -> np.ndarray:
    a, d = _diagonal(z, N, p)
    return np.array([[a, p.m2], [p.m1, d]], dtype=float)

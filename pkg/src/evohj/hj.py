"""Hamilton-Jacobi profile ``u`` and its fourth-order jets at the ESS points.

Around each support point ``z*`` of the ESS,

    u(z) = -| int_{z*}^{z} sqrt(-W(x; N1*, N2*)) dx |

and with two support points ``u`` is the larger of the two branches.
Every function here accepts either an :class:`EssResult` with its
:class:`ModelParams`, or a bare support plus a fitness callable (and
optionally a jet callable), so synthetic landscapes can be used in tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import _series
from .adaptive import TOL_ESS, EssResult
from .exceptions import DegenerateEss, QuadratureFailure
from .model import ModelParams, effective_fitness, fitness_jet

QUAD_TOL = 1e-12
QUAD_LIMIT = 200
JET_ORDER = 6


@dataclass(frozen=True)
class TaylorData:
    """``u(z*+t) = -(A/2) t^2 + B t^3 + C t^4 + ...``; ``jet`` holds all coefficients."""

    zstar: float
    A: float
    B: float
    C: float
    jet: np.ndarray


def _support(ess) -> tuple:
    if isinstance(ess, EssResult):
        return tuple(ess.support)
    return tuple(float(z) for z in np.atleast_1d(ess))


def _fitness_callable(ess, p: Optional[ModelParams], fitness: Optional[Callable]):
    if fitness is not None:
        return fitness
    if p is None or not isinstance(ess, EssResult):
        raise TypeError("need either an EssResult with ModelParams or an explicit fitness callable")
    sizes = ess.sizes
    return lambda x: effective_fitness(x, sizes, p)


def _branch(z: float, zstar: float, W: Callable, support: Sequence[float], tol: float) -> float:
    if z == zstar:
        return 0.0
    lo, hi = sorted((zstar, z))
    breaks = [s for s in support if lo < s < hi]

    def integrand(x):
        return np.sqrt(max(-float(W(x)), 0.0))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, lo, hi, points=breaks or None, epsabs=tol,
                                      epsrel=0.0, limit=QUAD_LIMIT)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quadrature of sqrt(-W) on [{lo:g}, {hi:g}] failed: {exc}") from exc
    return -abs(val)


def u_eval(z, ess, p: Optional[ModelParams] = None, fitness: Optional[Callable] = None,
           tol: float = QUAD_TOL):
    """Evaluate ``u`` at a scalar or array of traits."""
    support = _support(ess)
    W = _fitness_callable(ess, p, fitness)
    zs = np.asarray(z, dtype=float)
    flat = np.array([max(_branch(float(x), s, W, support, tol) for s in support) for x in zs.ravel()])
    return flat.reshape(zs.shape) if zs.ndim else float(flat[0])


def taylor_from_fitness_jet(zstar: float, wjet: np.ndarray, tol: float = 1e-12) -> TaylorData:
    """Jet of ``u`` from the Taylor coefficients of ``W`` at a zero/critical point.

    With ``-W(z*+t) = t^2 q(t)``, ``q(0) = a2 > 0``, the profile is
    ``u(t) = -int_0^t s sqrt(q(s)) ds`` on both sides of ``z*``.
    """
    wjet = np.asarray(wjet, dtype=float)
    q = -wjet[2:]
    if not q[0] > tol:
        raise DegenerateEss(f"second derivative of W vanishes at z*={zstar:g} (a2={q[0]:.3g})")
    s = _series.sqrt(q)
    u = -_series.integrate(np.concatenate([[0.0], s]))[: wjet.size]
    return TaylorData(zstar=float(zstar), A=float(-2.0 * u[2]), B=float(u[3]), C=float(u[4]), jet=u)


def taylor_u(ess, p: Optional[ModelParams] = None, jet: Optional[Callable] = None,
             order: int = JET_ORDER) -> list:
    """Fourth-order data ``(z*, A, B, C)`` at every ESS point.

    ``jet(z0, order)`` may supply Taylor coefficients of a synthetic
    fitness; otherwise the exact model jet is used.
    """
    support = _support(ess)
    if jet is None:
        if p is None or not isinstance(ess, EssResult):
            raise TypeError("need ModelParams with an EssResult or an explicit jet callable")
        sizes = ess.sizes
        jet = lambda z0, k: fitness_jet(z0, sizes, p, k)  # noqa: E731
    return [taylor_from_fitness_jet(zs, jet(zs, order)) for zs in support]


@dataclass(frozen=True)
class HjProfile:
    ess: object
    taylor: tuple
    fitness: Callable
    tol: float = QUAD_TOL

    def __call__(self, z):
        return u_eval(z, self.ess, fitness=self.fitness, tol=self.tol)

    def residual(self, z, step: float = 1e-4):
        """Centered-difference ``u'^2 + W``; vanishes away from kinks."""
        z = np.asarray(z, dtype=float)
        du = (self(z + step) - self(z - step)) / (2.0 * step)
        return du**2 + self.fitness(z)


def hj_profile(ess: EssResult, p: ModelParams, tol: float = QUAD_TOL) -> HjProfile:
    W = _fitness_callable(ess, p, None)
    return HjProfile(ess=ess, taylor=tuple(taylor_u(ess, p)), fitness=W, tol=tol)

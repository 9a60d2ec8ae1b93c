"""First and second order correctors of ``u_eps = u + eps v_i + eps^2 w_i`` at the ESS points.

Writing ``n_i = exp(u_eps_i/eps)/sqrt(2 pi eps)`` in the steady system gives,
order by order in ``eps``:

* order 0: ``m_2 exp(v_2 - v_1) = W - R_1 + m_1`` (the gap ``v_2 - v_1``);
* order 1, for ``{i, j} = {1, 2}``:
  ``-u'' = 2 u' v_i' - kappa_i K_i + m_j exp(v_j - v_i) (w_j - w_i)``.

Expanding both order-1 equations to second order in ``t = z - z*`` yields six
linear equations per ESS point in ``D_1, E_1`` (jet of ``v_1``), the jet
``dw0, dw1, dw2`` of ``w_2 - w_1`` and the shared mass corrections
``K_1, K_2``. Laplace's method on the WKB ansatz closes the system: the mass
of habitat ``i`` near ``z*`` is

    alpha_i (1 + eps (3C/A^2 + E_i/A + F_i + 15B^2/(2A^3) + 3 B D_i/A^2 + D_i^2/(2A)))

where ``alpha_i = exp(v_i(z*))/sqrt(A)``. The last three terms come from the
square of the ``sqrt(eps)`` part of the exponent and cannot be dropped.
With one ESS point the difference of the two mass identities is the
seventh (linear) equation; with two points the twelve local equations fix
``K_1, K_2`` and the mass identities fix the point values ``F``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _series
from .adaptive import EssResult
from .exceptions import DomainError, SingularSystem
from .hj import HjProfile, TaylorData
from .model import ModelParams, diagonal_jets, effective_fitness, fitness_jet, growth_rate

ORDER = 4
COND_MAX = 1e12


@dataclass(frozen=True)
class PointCorrectors:
    """Corrector jets at one ESS point; array entries are indexed by habitat (0 -> habitat 1).

    ``K_star`` is the order-``eps`` correction of the mass carried by this point.
    """

    zstar: float
    A: float
    B: float
    C: float
    weights: np.ndarray
    v_star: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    K_star: np.ndarray
    gap_jet: np.ndarray
    dw_jet: np.ndarray


@dataclass(frozen=True)
class CorrectorData:
    points: tuple
    K_star: np.ndarray   # total order-eps mass correction per habitat

    @property
    def is_dimorphic(self) -> bool:
        return len(self.points) == 2


def corrector_gap(z, ess: EssResult, p: ModelParams):
    """``v_2(z) - v_1(z) = log((W - R_1 + m_1)/m_2)`` at the ESS sizes."""
    N = ess.sizes
    arg = (effective_fitness(z, N, p) - growth_rate(1, z, N.N1, p) + p.m1) / p.m2
    if np.any(np.asarray(arg) <= 0):
        raise DomainError("log argument of the corrector gap is not positive")
    return np.log(arg)


def gap_jet(zstar: float, ess: EssResult, p: ModelParams, order: int = ORDER) -> np.ndarray:
    """Taylor coefficients of the gap ``v_2 - v_1`` at ``zstar``."""
    a, _ = diagonal_jets(zstar, ess.sizes, p, order)
    return _series.log((fitness_jet(zstar, ess.sizes, p, order) - a) / p.m2)


def _mass_quadratic(A, B, D):
    return 15.0 * B**2 / (2.0 * A**3) + 3.0 * B * D / A**2 + D**2 / (2.0 * A)


def _local_residual(x, K, u, wa, wd, G, p):
    """Orders 0..2 of both order-1 equations at one point; ``x = (D1, E1, dw0, dw1, dw2)``."""
    D1, E1, dw0, dw1, dw2 = x
    du = _series.derivative(u)
    d2u = _series.derivative(du)
    v1p = _series.as_series([D1, 2.0 * E1], ORDER)
    v2p = v1p + _series.derivative(G)
    dw = _series.as_series([dw0, dw1, dw2], ORDER)
    pp = wa  # m2 exp(v2 - v1) = W - (R1 - m1)
    qq = wd  # m1 exp(v1 - v2) = W - (R2 - m2)
    e1 = -d2u - 2.0 * _series.mul(du, v1p) - _series.mul(pp, dw)
    e2 = -d2u - 2.0 * _series.mul(du, v2p) + _series.mul(qq, dw)
    e1[0] += p.kappa1 * K[0]
    e2[0] += p.kappa2 * K[1]
    return np.concatenate([e1[:3], e2[:3]])


def _point_inputs(zstar, taylor: TaylorData, ess, p):
    W = fitness_jet(zstar, ess.sizes, p, ORDER)
    a, d = diagonal_jets(zstar, ess.sizes, p, ORDER)
    u = _series.as_series(taylor.jet, ORDER)
    return u, W - a, W - d, _series.log((W - a) / p.m2)


def _linear_parts(fun, n):
    base = fun(np.zeros(n))
    cols = [fun(np.eye(n)[k]) - base for k in range(n)]
    return np.column_stack(cols), base


def _solve(M, rhs):
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > COND_MAX:
        raise SingularSystem(f"corrector system is singular (cond={np.linalg.cond(M):.3g})")
    return np.linalg.solve(M, rhs)


def corrector_coefficients(ess: EssResult, hj, p: ModelParams) -> CorrectorData:
    """Corrector jets ``(v_i(z*), D_i, E_i, F_i)`` and mass corrections ``K_i``.

    Raises:
        SingularSystem: the matching conditions do not determine the unknowns.
    """
    taylors = hj.taylor if isinstance(hj, HjProfile) else tuple(hj)
    support = ess.support
    if len(taylors) != len(support):
        raise ValueError("one Taylor record per ESS point is required")
    inputs = [_point_inputs(z, t, ess, p) for z, t in zip(support, taylors)]
    weights = ess.weights
    npt = len(support)

    # unknowns: per point (D1, E1, dw0, dw1, dw2), then (K1, K2)
    nloc = 5
    size = nloc * npt + 2

    def residual(x):
        K = x[-2:]
        rows = [_local_residual(x[nloc * k: nloc * (k + 1)], K, *inputs[k], p) for k in range(npt)]
        if npt == 1:
            D1, E1, dw0 = x[0], x[1], x[2]
            t = taylors[0]
            G = inputs[0][3]
            N1, N2 = weights[0, 0], weights[1, 0]
            # difference of the two mass identities (linear in D1)
            quad_diff = _mass_quadratic(t.A, t.B, D1 + G[1]) - _mass_quadratic(t.A, t.B, D1)
            rows.append([K[1] / N2 - K[0] / N1 - (G[2] / t.A + dw0 + quad_diff)])
        return np.concatenate(rows)

    M, base = _linear_parts(residual, size)
    x = _solve(M, -base)
    if np.max(np.abs(residual(x))) > 1e-8 * max(1.0, np.abs(x).max()):
        raise SingularSystem("corrector system is not affine in its unknowns")
    K = x[-2:]

    # point values F_1 at each point from the mass identities
    pre = []
    for k, t in enumerate(taylors):
        D1, E1, dw0 = x[nloc * k: nloc * k + 3]
        G = inputs[k][3]
        D = np.array([D1, D1 + G[1]])
        E = np.array([E1, E1 + G[2]])
        base_i = 3.0 * t.C / t.A**2 + E / t.A + _mass_quadratic(t.A, t.B, D) + np.array([0.0, dw0])
        pre.append((D, E, base_i, dw0))
    # K_i = sum_k alpha_ik (base_ik + F1_k)
    Fmat = np.array(weights, dtype=float)
    rhs = K - np.array([sum(weights[i, k] * pre[k][2][i] for k in range(npt)) for i in range(2)])
    if npt == 1:
        F1 = np.array([rhs[0] / weights[0, 0]])
    else:
        F1 = _solve(Fmat, rhs)

    points = []
    for k, t in enumerate(taylors):
        D, E, base_i, dw0 = pre[k]
        F = np.array([F1[k], F1[k] + dw0])
        alpha = weights[:, k]
        points.append(PointCorrectors(
            zstar=t.zstar, A=t.A, B=t.B, C=t.C,
            weights=alpha.copy(),
            v_star=np.log(alpha * np.sqrt(t.A)),
            D=D, E=E, F=F,
            K_star=alpha * (base_i - np.array([0.0, dw0]) + F),
            gap_jet=inputs[k][3].copy(),
            dw_jet=x[nloc * k + 2: nloc * k + 5].copy(),
        ))
    return CorrectorData(points=tuple(points), K_star=K)

"""Finite-difference reference solver for the steady two-habitat system.

The steady state of

    dn_i/dt = eps^2 n_i'' + R_i(z, N_i) n_i + m_j n_j - m_i n_i,   N_i = int n_i

is reached by semi-implicit time marching on a uniform grid with reflecting
boundaries, then polished by Newton's method on the bordered system
``(n_1, n_2, N_1, N_2)``. Unknowns are interleaved, ``x[2k + i - 1] = n_i(z_k)``,
so the implicit operator is banded with two sub- and super-diagonals.

Masses use the trapezoid rule; combined with the reflecting second-difference
stencil this makes the discrete flux balance exact up to the residual.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from .adaptive import EssResult, find_ess
from .exceptions import (
    BimodalSplitFailure,
    BoundaryMassWarning,
    Extinction,
    NonConvergence,
)
from .model import ModelParams, fitness_jet, growth_rate
from .moments import MomentSet, density_moments

logger = logging.getLogger(__name__)

TOL_SOLVER = 1e-10
MAX_STEPS = 10_000_000
MIN_POINTS = 128
POINTS_PER_WIDTH = 40


@dataclass(frozen=True)
class Grid:
    zmin: float
    zmax: float
    n_points: int

    def __post_init__(self):
        if self.n_points < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points, got {self.n_points}")
        if not self.zmax > self.zmin:
            raise ValueError("grid needs zmax > zmin")

    @property
    def h(self) -> float:
        return (self.zmax - self.zmin) / (self.n_points - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.zmin, self.zmax, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.zmin, self.zmax, factor * (self.n_points - 1) + 1)


def default_grid(p: ModelParams, eps: Optional[float] = None, n_points: Optional[int] = None,
                 points_per_width: int = POINTS_PER_WIDTH) -> Grid:
    """Symmetric domain wide enough for the ESS bracket, resolving ``sqrt(eps)``."""
    eps = p.epsilon if eps is None else eps
    scale = math.sqrt(max(p.r1, p.r2, 0.0) / min(p.g1, p.g2)) or 1.0
    L = max(p.theta + 3.0 * scale, p.bracket_halfwidth + scale)
    if n_points is None:
        n_points = max(MIN_POINTS, int(math.ceil(2 * L * points_per_width / math.sqrt(eps))) + 1)
    return Grid(-L, L, n_points)


@dataclass(frozen=True)
class DiscreteSolution:
    grid: Grid
    epsilon: float
    n1: np.ndarray
    n2: np.ndarray
    N1: float
    N2: float
    residual_norm: float
    iterations: int
    newton_iterations: int = 0
    params: Optional[ModelParams] = field(default=None, repr=False)

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    def density(self, i: int) -> np.ndarray:
        return self.n1 if i == 1 else self.n2

    def flux_balance(self) -> tuple:
        """Integrated steady equations; both entries vanish for an exact steady state."""
        p, z, w = self.params, self.z, self.grid.weights
        b1 = w @ (self.n1 * growth_rate(1, z, self.N1, p) + p.m2 * self.n2 - p.m1 * self.n1)
        b2 = w @ (self.n2 * growth_rate(2, z, self.N2, p) + p.m1 * self.n1 - p.m2 * self.n2)
        return float(b1), float(b2)


def _rates(p, z, N):
    return growth_rate(1, z, N[0], p), growth_rate(2, z, N[1], p)


def _second_difference(n, h):
    out = np.empty_like(n)
    out[1:-1] = n[:-2] - 2.0 * n[1:-1] + n[2:]
    out[0] = 2.0 * (n[1] - n[0])
    out[-1] = 2.0 * (n[-2] - n[-1])
    return out / (h * h)


def steady_residual(n1, n2, N, p: ModelParams, grid: Grid, eps: float):
    z, h = grid.z, grid.h
    R1, R2 = _rates(p, z, N)
    F1 = eps**2 * _second_difference(n1, h) + R1 * n1 + p.m2 * n2 - p.m1 * n1
    F2 = eps**2 * _second_difference(n2, h) + R2 * n2 + p.m1 * n1 - p.m2 * n2
    return F1, F2


def _implicit_bands(diag1, diag2, p, M, c):
    """Banded storage for ``diag - c*D - migration coupling`` (interleaved)."""
    size = 2 * M
    ab = np.zeros((5, size))
    main = np.empty(size)
    main[0::2] = diag1 + 2.0 * c + p.m1
    main[1::2] = diag2 + 2.0 * c + p.m2
    ab[2] = main
    # same-habitat neighbours at offset +-2
    up2 = np.full(size - 2, -c)
    up2[0:2] = -2.0 * c          # row 0 / row 1 (reflecting left boundary)
    lo2 = np.full(size - 2, -c)
    lo2[-2:] = -2.0 * c          # last two rows (reflecting right boundary)
    ab[0, 2:] = up2
    ab[4, :-2] = lo2
    # migration: row 2k (habitat 1) gains m2 n2_k; row 2k+1 gains m1 n1_k
    up1 = np.zeros(size - 1)
    up1[0::2] = -p.m2
    lo1 = np.zeros(size - 1)
    lo1[0::2] = -p.m1
    ab[1, 1:] = up1
    ab[3, :-1] = lo1
    return ab


def _march(n1, n2, p, grid, eps, tol, max_steps, check_every=20):
    """Semi-implicit steps until the relative residual drops below ``tol``."""
    z, h, w = grid.z, grid.h, grid.weights
    M = grid.n_points
    c = eps**2 / (h * h)
    x = np.empty(2 * M)
    steps = 0
    res = np.inf
    while steps < max_steps:
        N = (w @ n1, w @ n2)
        if max(N) < 1e-12:
            raise Extinction(f"population went extinct (N1={N[0]:.3g}, N2={N[1]:.3g})")
        R1, R2 = _rates(p, z, N)
        pos1, pos2 = np.maximum(R1, 0.0), np.maximum(R2, 0.0)
        rate = max(pos1.max(), pos2.max()) + p.m1 + p.m2 + p.kappa1 * N[0] + p.kappa2 * N[1]
        dt = 0.5 / rate
        ab = _implicit_bands(1.0 / dt + np.maximum(-R1, 0.0), 1.0 / dt + np.maximum(-R2, 0.0), p, M, c)
        x[0::2] = n1 * (1.0 / dt + pos1)
        x[1::2] = n2 * (1.0 / dt + pos2)
        x = solve_banded((2, 2), ab, x, overwrite_b=False, check_finite=False)
        n1, n2 = x[0::2].copy(), x[1::2].copy()
        steps += 1
        if steps % check_every == 0:
            F1, F2 = steady_residual(n1, n2, (w @ n1, w @ n2), p, grid, eps)
            scale = max(n1.max(), n2.max())
            res = max(np.abs(F1).max(), np.abs(F2).max()) / scale
            if res <= tol:
                break
    return n1, n2, steps, res


def _newton(n1, n2, p, grid, eps, tol, max_iter=30):
    z, h, w = grid.z, grid.h, grid.weights
    M = grid.n_points
    c = eps**2 / (h * h)
    size = 2 * M
    # constant part of the Jacobian: diffusion + migration
    rows, cols, vals = [], [], []
    idx = np.arange(M)
    for i in (0, 1):
        r = 2 * idx + i
        rows += [r, r[1:], r[:-1]]
        cols += [r, r[1:] - 2, r[:-1] + 2]
        left = np.full(M - 1, c)
        right = np.full(M - 1, c)
        right[0] = 2.0 * c
        left[-1] = 2.0 * c
        vals += [np.full(M, -2.0 * c), left, right]
    rows += [2 * idx, 2 * idx + 1]
    cols += [2 * idx + 1, 2 * idx]
    vals += [np.full(M, p.m2), np.full(M, p.m1)]
    base = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size + 2, size + 2)
    )
    N = np.array([w @ n1, w @ n2])
    x = np.empty(size)
    x[0::2], x[1::2] = n1, n2
    kappa = (p.kappa1, p.kappa2)
    res = np.inf
    for it in range(1, max_iter + 1):
        n1, n2 = x[0::2], x[1::2]
        R1, R2 = _rates(p, z, N)
        F1, F2 = steady_residual(n1, n2, N, p, grid, eps)
        F = np.empty(size + 2)
        F[0:size:2], F[1:size:2] = F1, F2
        F[size] = N[0] - w @ n1
        F[size + 1] = N[1] - w @ n2
        diag = np.empty(size)
        diag[0::2], diag[1::2] = R1 - p.m1, R2 - p.m2
        border_r = np.concatenate([2 * idx, 2 * idx + 1, np.full(M, size), np.full(M, size + 1), [size, size + 1]])
        border_c = np.concatenate([np.full(M, size), np.full(M, size + 1), 2 * idx, 2 * idx + 1, [size, size + 1]])
        border_v = np.concatenate([-kappa[0] * n1, -kappa[1] * n2, -w, -w, [1.0, 1.0]])
        J = base + sparse.diags(np.concatenate([diag, [0.0, 0.0]])) + sparse.csr_matrix(
            (border_v, (border_r, border_c)), shape=(size + 2, size + 2)
        )
        delta = spsolve(J.tocsc(), -F)
        if not np.all(np.isfinite(delta)):
            raise NonConvergence("Newton step produced non-finite values")
        x = x + delta[:size]
        N = N + delta[size:]
        # tails far below the peak may pick up rounding-level negatives
        floor = 1e-13 * np.abs(x).max()
        if np.any(x < -floor):
            raise NonConvergence("Newton iterate lost positivity")
        x = np.maximum(x, 0.0)
        n1, n2 = x[0::2], x[1::2]
        N = np.array([w @ n1, w @ n2])
        F1, F2 = steady_residual(n1, n2, N, p, grid, eps)
        res = max(np.abs(F1).max(), np.abs(F2).max())
        if res <= tol:
            return n1.copy(), n2.copy(), it, res
    raise NonConvergence(f"Newton polish stalled at residual {res:.3g}")


def initial_profile(p: ModelParams, grid: Grid, eps: float, ess: Optional[EssResult] = None):
    """Gaussian bumps at the ESS points carrying the limiting masses."""
    z = grid.z
    if ess is None:
        n = np.full(grid.n_points, 1.0)
        return n.copy(), n.copy()
    n1 = np.zeros_like(z)
    n2 = np.zeros_like(z)
    for j, zs in enumerate(ess.support):
        a2 = -fitness_jet(zs, ess.sizes, p, 2)[2]
        A = math.sqrt(a2) if a2 > 0 else 1.0
        var = eps / A
        bump = np.exp(-0.5 * (z - zs) ** 2 / var) / math.sqrt(2 * math.pi * var)
        n1 += ess.weights[0, j] * bump
        n2 += ess.weights[1, j] * bump
    return n1, n2


def solve_steady(
    p: ModelParams,
    grid: Optional[Grid] = None,
    eps: Optional[float] = None,
    ess: Optional[EssResult] = None,
    tol_solver: float = TOL_SOLVER,
    max_steps: int = MAX_STEPS,
    newton_switch: float = 1e-4,
    initial=None,
) -> DiscreteSolution:
    """Steady state of the two-habitat system at mutation scale ``eps``.

    Raises:
        NonConvergence: step budget exhausted before the residual target.
        Extinction: total masses collapsed.
    """
    eps = p.epsilon if eps is None else float(eps)
    if grid is None:
        grid = default_grid(p, eps)
    if initial is not None:
        n1, n2 = (np.array(a, dtype=float) for a in initial)
    else:
        if ess is None:
            ess = find_ess(p)
        n1, n2 = initial_profile(p, grid, eps, ess)

    steps_done = 0
    switch = newton_switch
    while True:
        n1, n2, steps, res = _march(n1, n2, p, grid, eps, switch, max_steps - steps_done)
        steps_done += steps
        try:
            n1, n2, newton_its, res = _newton(n1, n2, p, grid, eps, tol_solver)
            break
        except NonConvergence as exc:
            logger.debug("Newton polish failed (%s); marching further", exc)
            if steps_done >= max_steps:
                raise NonConvergence(f"no steady state within {max_steps} steps") from exc
            switch *= 0.01
            if switch < 1e-14:
                raise
    N1, N2 = float(grid.weights @ n1), float(grid.weights @ n2)
    if max(N1, N2) < 1e-12:
        raise Extinction("steady state is extinct")
    peak = max(n1.max(), n2.max())
    edge = max(n1[0], n1[-1], n2[0], n2[-1])
    if edge > 1e-8 * peak:
        warnings.warn(
            f"boundary density {edge:.3g} exceeds 1e-8 of the peak; widen the domain",
            BoundaryMassWarning,
            stacklevel=2,
        )
    return DiscreteSolution(grid=grid, epsilon=eps, n1=n1, n2=n2, N1=N1, N2=N2, residual_norm=res,
                            iterations=steps_done, newton_iterations=newton_its, params=p)


def _split_index(z, n, support):
    za, zb = support
    inside = np.flatnonzero((z > za) & (z < zb))
    if inside.size < 3:
        raise BimodalSplitFailure("no grid points between the two peaks")
    seg = n[inside]
    minima = np.flatnonzero((seg[1:-1] <= seg[:-2]) & (seg[1:-1] <= seg[2:])) + 1
    if minima.size == 0:
        raise BimodalSplitFailure("density has no interior minimum between the peaks")
    mid = 0.5 * (za + zb)
    k = minima[np.argmin(np.abs(z[inside[minima]] - mid))]
    return inside[k]


def measure_moments(sol: DiscreteSolution, split_support=None) -> list:
    """Trapezoid moments per habitat, or per habitat and peak if ``split_support`` is given.

    With a two-point ``split_support`` each density is cut at its interior
    minimum between the two points and each side is measured separately.
    """
    z = sol.z
    if max(sol.N1, sol.N2) <= 0 or not (np.any(sol.n1 > 0) or np.any(sol.n2 > 0)):
        raise Extinction("cannot take moments of an extinct solution")
    out = []
    for i in (1, 2):
        n = sol.density(i)
        if split_support is None or len(split_support) < 2:
            N, mu, var, skew = density_moments(z, n)
            out.append(MomentSet(sol.epsilon, i, N, mu, var, skew))
            continue
        k = _split_index(z, n, split_support)
        for peak, sl in enumerate((slice(0, k + 1), slice(k, None))):
            N, mu, var, skew = density_moments(z[sl], n[sl])
            out.append(MomentSet(sol.epsilon, i, N, mu, var, skew, peak=peak))
    return out

"""Demographic equilibria on finite supports and the evolutionarily stable strategy.

An ESS is a support of one or two traits whose demographic equilibrium
``(N1*, N2*)`` makes the effective fitness vanish on the support and stay
non-positive everywhere else. The search is constructive: monomorphic
candidates (zeros of the selection gradient along the equilibrium branch)
are tried first and verified globally; if none survives, a dimorphic
support is solved for, seeded from the local maxima of the fitness
landscape left by the failed monomorphic candidate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize
from sklearn.utils import check_random_state

from .exceptions import NoEssFound, NonConvergence, NoPositiveEquilibrium
from .model import (
    ModelParams,
    PopulationSizes,
    effective_fitness,
    fitness_eigenvector,
    fitness_gradient,
    growth_rate,
)

logger = logging.getLogger(__name__)

TOL_EQ = 1e-10
TOL_ESS = 1e-8
N_SCAN = 201
N_VERIFY = 2001
MONOMORPHIC = "monomorphic"
DIMORPHIC = "dimorphic"


@dataclass(frozen=True)
class DemographicEquilibrium:
    """Point-mass equilibrium; ``weights[i - 1, j]`` is the mass of habitat ``i`` at ``support[j]``."""

    support: tuple
    weights: np.ndarray
    sizes: PopulationSizes

    @property
    def n_points(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class EssResult:
    equilibrium: DemographicEquilibrium
    morphtype: str
    max_excess: float

    @property
    def support(self) -> tuple:
        return self.equilibrium.support

    @property
    def sizes(self) -> PopulationSizes:
        return self.equilibrium.sizes

    @property
    def weights(self) -> np.ndarray:
        return self.equilibrium.weights


def check_support(support) -> tuple:
    points = tuple(float(z) for z in np.atleast_1d(np.asarray(support, dtype=float)))
    if len(points) not in (1, 2):
        raise ValueError(f"support must hold 1 or 2 traits, got {len(points)}")
    if not all(np.isfinite(points)):
        raise ValueError("support points must be finite")
    if len(points) == 2 and not points[0] < points[1]:
        raise ValueError(f"dimorphic support must be strictly increasing, got {points}")
    return points


def _monomorphic_sizes(z: float, p: ModelParams) -> PopulationSizes:
    # With phi = N2/N1 the two equilibrium equations reduce to a cubic in phi:
    # kappa2 m2 phi^3 + kappa2 c1 phi^2 - kappa1 c2 phi - kappa1 m1 = 0.
    c1 = growth_rate(1, z, 0.0, p) - p.m1
    c2 = growth_rate(2, z, 0.0, p) - p.m2
    coeffs = [p.kappa2 * p.m2, p.kappa2 * c1, -p.kappa1 * c2, -p.kappa1 * p.m1]
    candidates = []
    for root in np.roots(coeffs):
        if abs(root.imag) > 1e-8 * max(1.0, abs(root.real)) or root.real <= 0:
            continue
        phi = root.real
        N1 = (p.m2 * phi + c1) / p.kappa1
        if N1 > 0:
            candidates.append(_polish_monomorphic(z, N1, phi * N1, p))
    if not candidates:
        raise NoPositiveEquilibrium(f"no positive monomorphic equilibrium at z={z:g}")
    return max(candidates, key=lambda s: s.N1 + s.N2)


def _polish_monomorphic(z, N1, N2, p, iters=3):
    c1 = growth_rate(1, z, 0.0, p) - p.m1
    c2 = growth_rate(2, z, 0.0, p) - p.m2
    x = np.array([N1, N2])
    for _ in range(iters):
        a = c1 - p.kappa1 * x[0]
        d = c2 - p.kappa2 * x[1]
        F = np.array([a * x[0] + p.m2 * x[1], p.m1 * x[0] + d * x[1]])
        J = np.array([[a - p.kappa1 * x[0], p.m2], [p.m1, d - p.kappa2 * x[1]]])
        try:
            x = x - np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
    return PopulationSizes(float(x[0]), float(x[1]))


def _weights_for(support, sizes: PopulationSizes, p: ModelParams) -> np.ndarray:
    alpha1, alpha2 = fitness_eigenvector(np.asarray(support), sizes, p)
    if len(support) == 1:
        return np.array([[sizes.N1], [sizes.N2]])
    # columns are eigenvectors scaled so their sums reproduce N1, N2
    ratios = alpha2 / alpha1
    M = np.array([[1.0, 1.0], [ratios[0], ratios[1]]])
    try:
        w1 = np.linalg.solve(M, [sizes.N1, sizes.N2])
    except np.linalg.LinAlgError as exc:
        raise NoPositiveEquilibrium("degenerate dimorphic eigenvectors") from exc
    return np.vstack([w1, ratios * w1])


def _dimorphic_sizes(support, p: ModelParams, guess=None) -> PopulationSizes:
    za, zb = support

    def resid(x):
        N = (x[0], x[1])
        return [effective_fitness(za, N, p), effective_fitness(zb, N, p)]

    guesses = []
    if guess is not None:
        guesses.append(np.asarray(guess, dtype=float))
    for z in (za, zb, 0.5 * (za + zb)):
        try:
            guesses.append(np.array(_monomorphic_sizes(z, p)))
        except NoPositiveEquilibrium:
            pass
    guesses.append(np.array([max(p.r1, 1e-3) / p.kappa1, max(p.r2, 1e-3) / p.kappa2]))
    for x0 in guesses:
        sol = optimize.root(resid, x0, method="hybr", options={"xtol": 1e-14})
        if np.max(np.abs(resid(sol.x))) <= TOL_EQ and np.all(sol.x > 0):
            return PopulationSizes(float(sol.x[0]), float(sol.x[1]))
    raise NonConvergence(f"could not solve the dimorphic equilibrium on support {support}")


def demographic_equilibrium(support, p: ModelParams, guess=None) -> DemographicEquilibrium:
    """Point-mass equilibrium carried by ``support`` (one or two traits).

    Raises:
        NoPositiveEquilibrium: no solution with every weight positive.
        NonConvergence: the dimorphic size equations could not be solved.
    """
    support = check_support(support)
    if len(support) == 1:
        sizes = _monomorphic_sizes(support[0], p)
    else:
        sizes = _dimorphic_sizes(support, p, guess)
    weights = _weights_for(support, sizes, p)
    if not np.all(weights > 0):
        raise NoPositiveEquilibrium(
            f"equilibrium on support {support} has non-positive weights {weights.tolist()}"
        )
    return DemographicEquilibrium(support=support, weights=weights, sizes=sizes)


def selection_gradient(z: float, p: ModelParams) -> float:
    """``dW/dz`` evaluated at the monomorphic equilibrium carried by ``z`` itself."""
    return float(fitness_gradient(z, _monomorphic_sizes(z, p), p))


def verification_grid(p: ModelParams, n: int = N_VERIFY) -> np.ndarray:
    H = p.bracket_halfwidth
    return np.linspace(-H, H, n)


def verify_zero_level_set(
    ess, p: ModelParams, grid: Optional[np.ndarray] = None, exclusion: float = 1e-3
) -> float:
    """Largest effective fitness away from the support.

    ``W`` is evaluated on ``grid`` and every discrete local maximum outside
    the ``exclusion`` neighbourhoods of the support is refined with a
    bounded scalar search. A negative return value means the zero level set
    of ``W`` is exactly the support.
    """
    eq = ess.equilibrium if isinstance(ess, EssResult) else ess
    if grid is None:
        grid = verification_grid(p)
    grid = np.asarray(grid, dtype=float)
    N = eq.sizes
    support = np.asarray(eq.support)

    def far(z):
        return np.min(np.abs(np.atleast_1d(z)[:, None] - support[None, :]), axis=1) > exclusion

    values = effective_fitness(grid, N, p)
    mask = far(grid)
    if not np.any(mask):
        return -np.inf
    best = float(np.max(values[mask]))
    h = grid[1] - grid[0] if grid.size > 1 else 1.0
    interior = np.flatnonzero((values[1:-1] >= values[:-2]) & (values[1:-1] >= values[2:])) + 1
    for k in interior:
        lo, hi = grid[k] - h, grid[k] + h
        res = optimize.minimize_scalar(
            lambda z: -effective_fitness(z, N, p), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        if far(res.x)[0]:
            best = max(best, float(-res.fun))
    return best


def _monomorphic_candidates(p: ModelParams, n_scan: int, rng) -> list:
    H = p.bracket_halfwidth
    zs = np.linspace(-H, H, n_scan)
    if rng is not None:
        zs = zs + rng.uniform(-0.5, 0.5, size=n_scan) * (zs[1] - zs[0])
        zs[0], zs[-1] = -H, H
    grads = np.full(n_scan, np.nan)
    for k, z in enumerate(zs):
        try:
            grads[k] = selection_gradient(z, p)
        except NoPositiveEquilibrium:
            continue
    candidates = []
    for k in range(n_scan - 1):
        g0, g1 = grads[k], grads[k + 1]
        if np.isnan(g0) or np.isnan(g1):
            continue
        if g0 == 0.0:
            candidates.append(zs[k])
        elif g0 * g1 < 0:
            candidates.append(optimize.brentq(lambda z: selection_gradient(z, p), zs[k], zs[k + 1],
                                              xtol=1e-14, rtol=1e-15))
    if n_scan and not np.isnan(grads[-1]) and grads[-1] == 0.0:
        candidates.append(zs[-1])
    return candidates


def _local_maxima(N, p: ModelParams, n: int = N_VERIFY) -> np.ndarray:
    zs = verification_grid(p, n)
    w = effective_fitness(zs, N, p)
    idx = np.flatnonzero((w[1:-1] > w[:-2]) & (w[1:-1] >= w[2:])) + 1
    return zs[idx]


def _solve_dimorphic(seed_support, seed_sizes, p: ModelParams) -> DemographicEquilibrium:
    def resid(x):
        N = (x[2], x[3])
        za, zb = x[0], x[1]
        return [
            effective_fitness(za, N, p),
            effective_fitness(zb, N, p),
            fitness_gradient(za, N, p),
            fitness_gradient(zb, N, p),
        ]

    x0 = np.array([seed_support[0], seed_support[1], seed_sizes[0], seed_sizes[1]])
    sol = optimize.root(resid, x0, method="hybr", options={"xtol": 1e-14})
    if np.max(np.abs(resid(sol.x))) > TOL_EQ:
        sol = optimize.root(resid, sol.x, method="lm", options={"xtol": 1e-15, "ftol": 1e-15})
    za, zb, N1, N2 = sol.x
    if np.max(np.abs(resid(sol.x))) > TOL_EQ or not (N1 > 0 and N2 > 0):
        raise NonConvergence("dimorphic ESS conditions not met")
    if abs(zb - za) < 1e-6:
        raise NonConvergence("dimorphic search collapsed onto a single trait")
    support = check_support(sorted((za, zb)))
    sizes = PopulationSizes(float(N1), float(N2))
    weights = _weights_for(support, sizes, p)
    if not np.all(weights > 0):
        raise NoPositiveEquilibrium(f"dimorphic weights not positive: {weights.tolist()}")
    return DemographicEquilibrium(support=support, weights=weights, sizes=sizes)


def find_ess(
    p: ModelParams,
    n_scan: int = N_SCAN,
    tol_ess: float = TOL_ESS,
    random_state=None,
) -> EssResult:
    """Locate the evolutionarily stable strategy.

    Args:
        p: model parameters.
        n_scan: number of traits in the monomorphic candidate scan.
        tol_ess: slack allowed on global non-positivity of ``W``.
        random_state: if given, the scan grid is jittered inside each cell
            (used to probe that the answer does not depend on the scan).

    Raises:
        NoEssFound: no candidate passes global verification.
    """
    rng = None if random_state is None else check_random_state(random_state)
    candidates = _monomorphic_candidates(p, n_scan, rng)
    failed = []
    for z in candidates:
        eq = demographic_equilibrium([z], p)
        excess = verify_zero_level_set(eq, p)
        logger.debug("monomorphic candidate z=%.6g max_excess=%.3g", z, excess)
        if excess <= tol_ess:
            return EssResult(equilibrium=eq, morphtype=MONOMORPHIC, max_excess=excess)
        failed.append((excess, eq))

    failed.sort(key=lambda item: item[0])
    if not failed:
        # no sign change at all; seed from the best trait on the equilibrium branch
        H = p.bracket_halfwidth
        for z in np.linspace(-H, H, 41):
            try:
                failed.append((np.inf, demographic_equilibrium([z], p)))
            except NoPositiveEquilibrium:
                pass
    for _, eq in failed:
        maxima = _local_maxima(eq.sizes, p)
        if maxima.size < 2:
            continue
        seed = (maxima[0], maxima[-1])
        for guess in (eq.sizes, demographic_equilibrium([seed[0]], p).sizes
                      if _has_equilibrium(seed[0], p) else eq.sizes):
            try:
                dimo = _solve_dimorphic(seed, guess, p)
            except (NonConvergence, NoPositiveEquilibrium):
                continue
            excess = verify_zero_level_set(dimo, p)
            if excess <= tol_ess:
                return EssResult(equilibrium=dimo, morphtype=DIMORPHIC, max_excess=excess)
    raise NoEssFound(
        f"no monomorphic or dimorphic support passed verification ({len(candidates)} candidates)"
    )


def _has_equilibrium(z, p):
    try:
        _monomorphic_sizes(z, p)
    except NoPositiveEquilibrium:
        return False
    return True

"""Closed-form moment predictions and their convergence against the reference solver.

Near an ESS point, ``z - z* = sqrt(eps) y`` turns every moment integral into
a Gaussian integral in ``y``; the fourth-order jet of ``u``, second-order jet
of ``v_i`` and the value ``w_i(z*)`` are enough for:

    N_i  = N_i* + eps K_i            + O(eps^2)
    mu_i = z* + eps (3B/A^2 + D_i/A) + O(eps^2)
    var  = eps / A                   + O(eps^2)
    skew = 6B / A^(3/2) sqrt(eps)    + O(eps^(3/2))
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .adaptive import EssResult, find_ess
from .correctors import CorrectorData, corrector_coefficients
from .exceptions import BimodalSplitFailure, FitFailure
from .hj import hj_profile
from .model import ModelParams
from .moments import OBSERVABLES, MomentSet
from .solver import POINTS_PER_WIDTH, default_grid, measure_moments, solve_steady

logger = logging.getLogger(__name__)

THEORY_ORDER = {"N": 2.0, "mean": 2.0, "variance": 2.0, "skewness": 1.5}
SLOPE_TOL = 0.2
SKEW_B_MIN = 1e-8
NOISE_FLOOR = 1e-14


def predict_moments(eps: float, ess: Optional[EssResult], hj, corr: CorrectorData) -> list:
    """Asymptotic moments at ``eps``; one :class:`MomentSet` per habitat (and per peak if dimorphic)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    dimorphic = corr.is_dimorphic
    out = []
    for i in (0, 1):
        for k, pt in enumerate(corr.points):
            A, B = pt.A, pt.B
            out.append(MomentSet(
                epsilon=float(eps),
                habitat=i + 1,
                N=float(pt.weights[i] + eps * pt.K_star[i]),
                mean=float(pt.zstar + eps * (3.0 * B / A**2 + pt.D[i] / A)),
                variance=float(eps / A),
                skewness=float(6.0 * B / A**1.5 * math.sqrt(eps)),
                peak=k if dimorphic else None,
            ))
    return out


def mixture_moments(parts: Sequence[MomentSet]) -> MomentSet:
    """Whole-habitat moments of a sum of peaks described by their own moments."""
    N = sum(m.N for m in parts)
    mean = sum(m.N * m.mean for m in parts) / N
    var = sum(m.N * (m.variance + (m.mean - mean) ** 2) for m in parts) / N
    third = sum(
        m.N * (m.skewness * m.variance**1.5 + 3.0 * m.variance * (m.mean - mean) + (m.mean - mean) ** 3)
        for m in parts
    ) / N
    first = parts[0]
    # a negative predicted mass can make the mixture variance non-positive
    skew = third / var**1.5 if var > 0 else float("nan")
    return MomentSet(first.epsilon, first.habitat, N, mean, var, skew)


def habitat_totals(moments: Sequence[MomentSet]) -> list:
    out = []
    for i in (1, 2):
        parts = [m for m in moments if m.habitat == i]
        out.append(parts[0] if len(parts) == 1 and parts[0].peak is None else mixture_moments(parts))
    return out


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    halfwidth: float
    n_used: int
    status: str = "ok"


def fit_slope(eps, errors, drop_rule: bool = True, max_change: float = SLOPE_TOL) -> SlopeFit:
    """Least-squares slope of ``log|error|`` against ``log eps``.

    The largest ``eps`` is discarded while doing so moves the slope by more
    than ``max_change`` and at least three points remain.

    Raises:
        FitFailure: fewer than three usable points or errors at the noise floor.
    """
    eps = np.asarray(eps, dtype=float)
    err = np.abs(np.asarray(errors, dtype=float))
    order = np.argsort(-eps)
    eps, err = eps[order], err[order]
    if eps.size < 3:
        raise FitFailure("need at least three eps values")
    if not np.all(np.isfinite(err)):
        raise FitFailure("non-finite errors")
    if np.any(err <= NOISE_FLOOR * max(1.0, err.max())):
        raise FitFailure("errors at the numerical noise floor")

    def fit(lo):
        res = stats.linregress(np.log(eps[lo:]), np.log(err[lo:]))
        n = eps.size - lo
        half = stats.t.ppf(0.975, n - 2) * res.stderr if n > 2 else np.inf
        return res.slope, half

    lo = 0
    slope, half = fit(lo)
    while drop_rule and eps.size - lo - 1 >= 3:
        s2, h2 = fit(lo + 1)
        if abs(s2 - slope) <= max_change:
            break
        lo += 1
        slope, half = s2, h2
    return SlopeFit(float(slope), float(half), int(eps.size - lo))


@dataclass
class ConvergenceReport:
    """Predicted vs measured moments over an eps sweep.

    ``rows`` holds ``(eps, habitat, peak, observable, predicted, measured, abs_error)``;
    ``slopes`` maps ``(observable, habitat, peak)`` to a :class:`SlopeFit`.
    ``mode`` is ``"peak"`` when dimorphic densities were split, else ``"habitat"``.
    """

    eps_list: tuple
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    mandated: dict = field(default_factory=dict)
    mode: str = "habitat"

    def errors(self, observable: str, habitat: int, peak=None) -> np.ndarray:
        return np.array([r[6] for r in self.rows if r[3] == observable and r[1] == habitat and r[2] == peak])

    def passes(self, key) -> bool:
        fit = self.slopes.get(key)
        if fit is None or fit.status != "ok":
            return False
        return fit.slope >= THEORY_ORDER[key[0]] - SLOPE_TOL

    @property
    def passed(self) -> bool:
        return all(self.passes(k) for k, required in self.mandated.items() if required)


def convergence_study(
    eps_list: Sequence[float],
    p: ModelParams,
    points_per_width: int = POINTS_PER_WIDTH,
    ess: Optional[EssResult] = None,
    measure: Optional[Callable[[float], list]] = None,
    predict: Optional[Callable[[float], list]] = None,
) -> ConvergenceReport:
    """Solve at each ``eps``, pair measured and predicted moments, fit error slopes.

    ``measure`` and ``predict`` replace the solver and the asymptotic formulas
    (each maps ``eps`` to a list of :class:`MomentSet`).
    """
    eps_sorted = tuple(sorted((float(e) for e in eps_list), reverse=True))
    if len(eps_sorted) < 3:
        raise ValueError("convergence study needs at least three eps values")
    if len(set(eps_sorted)) != len(eps_sorted) or eps_sorted[-1] <= 0:
        raise ValueError("eps values must be positive and distinct")

    corr = None
    if predict is None or measure is None:
        ess = find_ess(p) if ess is None else ess
    if predict is None:
        hj = hj_profile(ess, p)
        corr = corrector_coefficients(ess, hj, p)
        predict = lambda e: predict_moments(e, ess, hj, corr)  # noqa: E731

    predicted = [predict(e) for e in eps_sorted]
    if measure is None:
        sols = [solve_steady(p, grid=default_grid(p, e, points_per_width=points_per_width), eps=e, ess=ess)
                for e in eps_sorted]
        split = ess.support if len(ess.support) == 2 else None
        try:
            measured = [measure_moments(s, split) for s in sols]
        except BimodalSplitFailure:
            logger.info("peaks not separated at every eps; comparing whole-habitat moments")
            measured = [measure_moments(s) for s in sols]
    else:
        measured = [measure(e) for e in eps_sorted]

    by_peak = all(any(m.peak is not None for m in ms) for ms in measured)
    report = ConvergenceReport(eps_list=eps_sorted, mode="peak" if by_peak else "habitat")
    if not by_peak:
        predicted = [habitat_totals(ms) for ms in predicted]
        measured = [habitat_totals(ms) for ms in measured]

    for e, pred, meas in zip(eps_sorted, predicted, measured):
        lookup = {(m.habitat, m.peak): m for m in meas}
        for mp in pred:
            mm = lookup[(mp.habitat, mp.peak)]
            for obs in OBSERVABLES:
                a, b = mp.get(obs), mm.get(obs)
                report.rows.append((e, mp.habitat, mp.peak, obs, a, b, abs(b - a)))

    skew_required = True
    if corr is not None:
        skew_required = any(abs(pt.B) >= SKEW_B_MIN for pt in corr.points)
    keys = sorted({(r[3], r[1], r[2]) for r in report.rows},
                  key=lambda k: (OBSERVABLES.index(k[0]), k[1], -1 if k[2] is None else k[2]))
    for key in keys:
        errs = report.errors(key[0], key[1], key[2])
        try:
            report.slopes[key] = fit_slope(eps_sorted, errs)
        except FitFailure as exc:
            report.slopes[key] = SlopeFit(float("nan"), float("nan"), 0, status=f"fit-failure: {exc}")
        report.mandated[key] = skew_required if key[0] == "skewness" else True
    return report

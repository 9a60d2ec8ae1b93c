"""scikit-learn style front ends.

``EquilibriumExpansion`` fits the ESS, the Hamilton-Jacobi jets and the
correctors for a parameter set; ``predict`` maps mutation scales to
asymptotic moments and ``transform`` maps traits to ``u``.
``SteadyStateSolver`` has the same ``predict`` contract but measures the
moments on finite-difference steady states, so the two compose directly::

    eps = np.array([0.1, 0.05, 0.025])
    pred = EquilibriumExpansion(m1=0.5, m2=0.5).fit().predict(eps)
    meas = SteadyStateSolver(m1=0.5, m2=0.5).fit().predict(eps)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .adaptive import N_SCAN, TOL_ESS, find_ess
from .asymptotics import habitat_totals, predict_moments
from .correctors import corrector_coefficients
from .hj import hj_profile
from .model import ModelParams
from .moments import OBSERVABLES
from .solver import POINTS_PER_WIDTH, TOL_SOLVER, default_grid, measure_moments, solve_steady

PARAM_NAMES = ("r1", "r2", "g1", "g2", "theta", "kappa1", "kappa2", "m1", "m2")
MOMENT_COLUMNS = tuple(f"{obs}{i}" for i in (1, 2) for obs in OBSERVABLES)


def _column(X, name):
    X = check_array(np.asarray(X, dtype=float).reshape(-1, 1) if np.ndim(X) <= 1 else X,
                    ensure_2d=True, dtype=float, input_name=name)
    if X.shape[1] != 1:
        raise ValueError(f"{name} must have a single column, got shape {X.shape}")
    return X[:, 0]


def _rows(moments_per_eps):
    rows = []
    for moments in moments_per_eps:
        totals = habitat_totals(moments)
        rows.append([m.get(obs) for m in totals for obs in OBSERVABLES])
    return np.array(rows, dtype=float)


class _ModelEstimator(BaseEstimator):
    def _params(self):
        return ModelParams(**{k: getattr(self, k) for k in PARAM_NAMES})

    def get_feature_names_out(self, input_features=None):
        return np.array(MOMENT_COLUMNS, dtype=object)


class EquilibriumExpansion(_ModelEstimator):
    """Asymptotic description of the steady population for small mutation scale.

    Parameters mirror :class:`~evohj.model.ModelParams`; defaults are the
    symmetric strong-migration configuration.

    Attributes:
        params_: validated ModelParams.
        ess_: EssResult.
        hj_: HjProfile.
        correctors_: CorrectorData.
    """

    def __init__(self, r1=3.0, r2=3.0, g1=1.0, g2=1.0, theta=0.5, kappa1=1.0, kappa2=1.0,
                 m1=2.0, m2=2.0, n_scan=N_SCAN, tol_ess=TOL_ESS):
        self.r1 = r1
        self.r2 = r2
        self.g1 = g1
        self.g2 = g2
        self.theta = theta
        self.kappa1 = kappa1
        self.kappa2 = kappa2
        self.m1 = m1
        self.m2 = m2
        self.n_scan = n_scan
        self.tol_ess = tol_ess

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        self.ess_ = find_ess(self.params_, n_scan=self.n_scan, tol_ess=self.tol_ess)
        self.hj_ = hj_profile(self.ess_, self.params_)
        self.correctors_ = corrector_coefficients(self.ess_, self.hj_, self.params_)
        self.morphtype_ = self.ess_.morphtype
        return self

    def predict(self, X):
        """Whole-habitat moments, one row per mutation scale in ``X``."""
        check_is_fitted(self, "correctors_")
        eps = _column(X, "eps")
        if np.any(eps <= 0):
            raise ValueError("mutation scales must be positive")
        return _rows(predict_moments(e, self.ess_, self.hj_, self.correctors_) for e in eps)

    def transform(self, X):
        """Hamilton-Jacobi profile ``u`` at the traits in ``X`` (column vector)."""
        check_is_fitted(self, "hj_")
        z = _column(X, "z")
        return np.asarray(self.hj_(z)).reshape(-1, 1)

    def fit_transform(self, X, y=None):
        return self.fit().transform(X)


class SteadyStateSolver(_ModelEstimator):
    """Finite-difference steady states; ``predict`` returns measured moments."""

    def __init__(self, r1=3.0, r2=3.0, g1=1.0, g2=1.0, theta=0.5, kappa1=1.0, kappa2=1.0,
                 m1=2.0, m2=2.0, points_per_width=POINTS_PER_WIDTH, tol_solver=TOL_SOLVER):
        self.r1 = r1
        self.r2 = r2
        self.g1 = g1
        self.g2 = g2
        self.theta = theta
        self.kappa1 = kappa1
        self.kappa2 = kappa2
        self.m1 = m1
        self.m2 = m2
        self.points_per_width = points_per_width
        self.tol_solver = tol_solver

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        self.ess_ = find_ess(self.params_)
        self.solutions_ = {}
        return self

    def solve(self, eps):
        check_is_fitted(self, "ess_")
        eps = float(eps)
        if eps not in self.solutions_:
            grid = default_grid(self.params_, eps, points_per_width=self.points_per_width)
            self.solutions_[eps] = solve_steady(self.params_, grid=grid, eps=eps, ess=self.ess_,
                                                tol_solver=self.tol_solver)
        return self.solutions_[eps]

    def predict(self, X):
        eps = _column(X, "eps")
        return _rows(measure_moments(self.solve(e)) for e in eps)

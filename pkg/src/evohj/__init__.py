"""Evolutionary equilibria of a two-habitat phenotype-structured population.

Adaptive-dynamics ESS, Hamilton-Jacobi profile, small-mutation correctors,
moment predictions and a finite-difference reference solver to check them.
"""

from .adaptive import (
    DemographicEquilibrium,
    EssResult,
    demographic_equilibrium,
    find_ess,
    verify_zero_level_set,
)
from .asymptotics import ConvergenceReport, convergence_study, fit_slope, predict_moments
from .correctors import CorrectorData, corrector_coefficients, corrector_gap
from .estimator import EquilibriumExpansion, SteadyStateSolver
from .hj import HjProfile, hj_profile, taylor_u, u_eval
from .model import (
    ModelParams,
    PopulationSizes,
    effective_fitness,
    fitness_eigenvector,
    growth_rate,
)
from .moments import MomentSet
from .solver import DiscreteSolution, Grid, default_grid, measure_moments, solve_steady

__version__ = "0.1.0"

__all__ = [
    "ConvergenceReport", "CorrectorData", "DemographicEquilibrium", "DiscreteSolution",
    "EquilibriumExpansion", "EssResult", "Grid", "HjProfile", "ModelParams", "MomentSet",
    "PopulationSizes", "SteadyStateSolver", "convergence_study", "corrector_coefficients",
    "corrector_gap", "default_grid", "demographic_equilibrium", "effective_fitness",
    "find_ess", "fitness_eigenvector", "fit_slope", "growth_rate", "hj_profile",
    "measure_moments", "predict_moments", "solve_steady", "taylor_u", "u_eval",
    "verify_zero_level_set",
]

"""Solvers for ``(-Delta)^{alpha/2} u = lambda u^q + u^{2*-1}`` with Dirichlet data on a box."""

from .diagnostics import (BrezisLiebReport, brezis_lieb_defect, brezis_lieb_rate, brezis_lieb_scaling,
                          linf_stability, prolong, refine_problem)
from .monotone import Branch, branch_sweep, make_barriers, make_subsolution, monotone_iterate
from .mountain import (MountainPassConfig, MountainPassResult, MovedFunctional, critical_level,
                       mountain_pass, moved_functional, superlinear_solve)
from .probe import ProbeReport, nonexistence_probe, thread_count
from .problem import (NegativePartWarning, NoSolutionError, Problem, Solution, SolverError, energy,
                      energy_gradient, eigen_identity_gap, jacobian, newton_solve, residual)
from .rayleigh import RayleighResult, rayleigh_minimize, rayleigh_quotient

__all__ = [
    "Problem", "Solution", "SolverError", "NoSolutionError", "NegativePartWarning",
    "energy", "energy_gradient", "residual", "jacobian", "eigen_identity_gap", "newton_solve",
    "make_barriers", "make_subsolution", "monotone_iterate", "Branch", "branch_sweep",
    "rayleigh_quotient", "rayleigh_minimize", "RayleighResult",
    "MovedFunctional", "moved_functional", "MountainPassConfig", "MountainPassResult",
    "mountain_pass", "superlinear_solve", "critical_level",
    "nonexistence_probe", "ProbeReport", "thread_count",
    "linf_stability", "refine_problem", "prolong",
    "brezis_lieb_defect", "brezis_lieb_scaling", "brezis_lieb_rate", "BrezisLiebReport",
]

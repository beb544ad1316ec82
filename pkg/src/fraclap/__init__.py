"""Spectral solvers for the critical fractional problem on boxes.

    (-Delta)^{alpha/2} u = lambda u^q + u^{2*_alpha - 1},   u > 0 in Omega,   u = 0 on the boundary,

with the spectral fractional Laplacian of the Dirichlet Laplacian, its
harmonic extension, explicit whole-space kernels and bubbles, and solvers
for the sublinear, linear and superlinear regimes.
"""

from . import extension, io, kernels, solvers, spectral
from .extension import extend, kappa, neumann_trace
from .kernels import bubble, cutoff_bubble, sharp_sobolev_constant, sobolev_constant
from .solvers import (NoSolutionError, Problem, Solution, SolverError, branch_sweep, monotone_iterate,
                      mountain_pass, nonexistence_probe, rayleigh_minimize, superlinear_solve)
from .spectral import (Domain, SpectralFunction, apply_frac, build_basis, first_eigenpair, norm_hs,
                       solve_shifted)

__version__ = "0.1.0"

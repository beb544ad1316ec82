"""
Superlinear perturbations, 1 < q < 2* - 1
=========================================

For q > 1 the origin is a strict local minimum of the energy, so a mountain
pass gives a positive solution for every lambda > 0.  The level estimate
behind this rests on the L^{q+1} size of concentrating cutoff bubbles.
"""

import numpy as np

from fraclap.kernels import cutoff_norm_scaling
from fraclap.solvers import Problem, superlinear_solve
from fraclap.spectral import Domain, build_basis

p = Problem(build_basis(Domain.box(2, grid=24), 24), alpha=0.8, q=2.0, lam=0.0)
for lam in (0.1, 1.0, 10.0):
    res = superlinear_solve(p.with_lambda(lam))
    print(f"lambda={lam:5}: max u={res.solution.linf:.4f}, residual {res.solution.residual:.1e}, "
          f"level {res.c_est:.5f} (c* {res.c_star:.5f})")

rep = cutoff_norm_scaling(0.8, 2, 1.0, np.geomspace(1e-6, 1e-3, 7), "lq1", q=2.0)
print(f"L^(q+1) exponent {rep.fitted_exponent:.4f}, expected {rep.expected_exponent:.4f}")

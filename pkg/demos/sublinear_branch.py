"""
Minimal branch and a second solution for q < 1
===============================================

Follows the minimal solutions of the sublinear-critical problem in lambda,
brackets the threshold beyond which the monotone iteration blows up, and
then finds a second, higher solution by a mountain pass around the minimal
one.
"""

import numpy as np

from fraclap.solvers import (Problem, branch_sweep, critical_level, make_subsolution, monotone_iterate,
                             mountain_pass, moved_functional)
from fraclap.spectral import Domain, build_basis

# %%
# One dimension, alpha = q = 1/2 on (0, pi) with 32 modes.
p = Problem(build_basis(Domain.box(1, grid=32), 32), alpha=0.5, q=0.5, lam=0.0)
br = branch_sweep(p, np.linspace(0.01, 1.0, 25), tol_lambda=1e-3)
print(f"{len(br.points)} minimal solutions, threshold bracket {br.bracket}, relative width {br.rel_width:.1e}")
for row in list(br.rows())[::4]:
    print(f"  lambda={row['lambda']:.4f}  max u={row['linf']:.5f}  I(u)={row['energy']:.6f}")

# %%
# Two dimensions, alpha = 1: the second solution lives above the minimal one.
# Its energy level relative to the minimal one stays below the compactness
# threshold c* = (alpha / 2N) (kappa S)^{N / alpha}.
p2 = Problem(build_basis(Domain.box(2, grid=24), 24), alpha=1.0, q=0.5, lam=0.35)
u0 = monotone_iterate(p2, make_subsolution(p2))
res = mountain_pass(moved_functional(u0, p2))
print(f"minimal: max {u0.linf:.4f}, residual {u0.residual:.1e}")
print(f"second:  max {res.solution.linf:.4f}, residual {res.solution.residual:.1e}, "
      f"level {res.c_est:.5f} < c* {critical_level(1.0, 2):.5f}")

"""
The linear case q = 1
=====================

Below the first eigenvalue the critical quotient dips under the sharp
constant and its minimizer, rescaled, solves the equation.  Above it, and at
lambda = 0, a multi-start search finds no positive solution that survives
mode doubling.
"""

from fraclap.solvers import Problem, nonexistence_probe, rayleigh_minimize
from fraclap.kernels import sharp_sobolev_constant
from fraclap.spectral import Domain, build_basis


def problem(modes, lam_frac=0.0):
    p = Problem(build_basis(Domain.box(2, grid=modes), modes), alpha=1.0, q=1.0, lam=0.0)
    return p.with_lambda(lam_frac * p.lambda_1)


sharp = sharp_sobolev_constant(1.0, 2)
for frac in (0.2, 0.5, 0.8):
    res = rayleigh_minimize(problem(24, frac))
    print(f"lambda={frac} lambda_1: S_lambda={res.s_lambda:.6f} (kappa S={sharp:.6f}), "
          f"solution residual {res.solution.residual:.1e}")

# %%
# At lambda = 0 the infimum is not attained; the discrete values approach the
# sharp constant from above as the modes double.
for m in (16, 32, 64):
    print(f"M={m}: S_0 = {rayleigh_minimize(problem(m)).s_lambda:.6f}")

# %%
rep = nonexistence_probe(problem(16, 1.1), n_inits=8)
print(f"lambda = 1.1 lambda_1: {rep.n_found} positive solutions among {len(rep.attempts)} starts")
for row in rep.rows():
    print("  ", row["outcome"], f"{row['residual']:.1e}")

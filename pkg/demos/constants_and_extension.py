"""
Constants, bubbles and the harmonic extension
=============================================

Checks the explicit trace constant against the whole-space bubble quotient,
then lifts a random spectral function to the half-cylinder and compares the
extension energy and the Neumann trace with the spectral operator.
"""

import math

import numpy as np

from fraclap.extension import extend, kappa, neumann_trace
from fraclap.kernels import bubble_rayleigh, sharp_sobolev_constant, sobolev_constant
from fraclap.spectral import Domain, SpectralFunction, apply_frac, build_basis, norm_hs

# %%
# The sharp constant kappa_alpha S(alpha, N) is attained by bubbles on the
# whole space, so their Fourier-side quotient must reproduce it.
for alpha, dim in [(1.0, 2), (0.5, 1), (0.8, 2)]:
    k = kappa(alpha).kappa_alpha
    print(f"alpha={alpha}, N={dim}: S={sobolev_constant(alpha, dim):.8f}  kappa={k:.8f}  "
          f"kappa*S={sharp_sobolev_constant(alpha, dim):.8f}  bubble quotient={bubble_rayleigh(alpha, dim):.8f}")
print("S(1,2) - sqrt(pi) =", sobolev_constant(1.0, 2) - math.sqrt(math.pi))

# %%
# Extension of a random 16-mode function on (0, pi): separated modes decouple,
# so the energy is a sum of one-dimensional profile integrals.
basis = build_basis(Domain.box(1, grid=16), 16)
u = SpectralFunction(basis, np.random.default_rng(0).standard_normal(basis.size))
for alpha in (0.3, 1.0, 1.5):
    w = extend(u, alpha)
    hs = norm_hs(u, alpha) ** 2
    trace = neumann_trace(w).coeffs
    print(f"alpha={alpha}: extension energy {w.energy():.10f} vs ||u||^2 {hs:.10f}; "
          f"Neumann trace error {np.abs(trace - apply_frac(u, alpha).coeffs).max():.1e}")

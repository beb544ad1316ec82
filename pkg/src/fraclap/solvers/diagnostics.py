"""Resolution checks and the Brezis-Lieb splitting of concentrating sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.stats

from ..kernels import cutoff_bubble
from ..spectral import build_basis
from .problem import Problem, Solution, SolverError, newton_solve

__all__ = [
    "refine_problem",
    "prolong",
    "linf_stability",
    "brezis_lieb_defect",
    "BrezisLiebReport",
    "brezis_lieb_scaling",
    "brezis_lieb_rate",
]


def refine_problem(p: Problem, factor: int = 2) -> Problem:
    """Same problem with ``factor`` times as many modes per axis."""
    basis = p.basis
    modes = tuple(factor * m for m in basis.modes)
    grid = tuple(max(g, m) for g, m in zip(basis.domain.grid, modes))
    dom = type(basis.domain)(basis.domain.lengths, grid)
    return p.with_basis(build_basis(dom, modes, basis.oversample))


def prolong(a, coarse, fine) -> np.ndarray:
    """Embed coefficients of ``coarse`` into the larger basis ``fine``."""
    index = {tuple(k): j for j, k in enumerate(fine.wavenumbers)}
    out = np.zeros(fine.size)
    for j, k in enumerate(coarse.wavenumbers):
        out[index[tuple(k)]] = a[j]
    return out


def linf_stability(sol: Solution, p: Problem, tol: float = 1e-9):
    """Relative change of ``max u`` when the modes are doubled and Newton re-run.

    Returns ``(relative_change, refined_solution)``; the change is ``inf`` if
    Newton fails on the refined problem.
    """
    fine = refine_problem(p)
    try:
        ref = newton_solve(fine, prolong(sol.coeffs, p.basis, fine.basis), tol=tol, max_iters=60,
                           kind=sol.kind)
    except SolverError:
        return math.inf, None
    return abs(ref.linf - sol.linf) / abs(sol.linf), ref


def _profile(q: float, alpha: float, dim: int):
    """Radial cutoff-bubble shape normalized to unit ``L^q`` norm."""
    eta = cutoff_bubble(1.0, alpha, dim, r=1.0)
    return eta.radial, eta.lp_norm(q) ** (1.0 / q)


def brezis_lieb_defect(u, q: float, eps: float, alpha: float, dim: int, center=None) -> float:
    """``| ||u + eta_eps||_q^q - ||eta_eps||_q^q - ||u||_q^q |`` by quadrature.

    ``eta_eps(x) = eps^{-N/q} psi((x - center) / eps)`` with ``psi`` a cutoff
    bubble of unit ``L^q`` norm supported in the unit ball, so
    ``eta_eps -> 0`` weakly in ``L^q`` as ``eps -> 0``.  The integrand
    vanishes off the support of ``eta_eps``, which reduces the defect to an
    integral over the unit ball in stretched variables.  ``u`` is a callable
    on points of shape ``(N,)``.
    """
    if dim not in (1, 2):
        raise ValueError("quadrature implemented for N = 1, 2")
    radial, norm = _profile(q, alpha, dim)
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    amp = eps ** (-dim / q) / norm

    def integrand(y):
        eta = amp * radial(np.linalg.norm(y))
        uu = u(center + eps * y)
        return abs(uu + eta) ** q - abs(eta) ** q - abs(uu) ** q

    opts = dict(epsabs=1e-13 * amp**q, epsrel=1e-9, limit=200)
    if dim == 1:
        val = sum(scipy.integrate.quad(lambda t, s=s: integrand(np.array([s * t])), 0.0, 1.0,
                                       points=[0.5], **opts)[0] for s in (-1.0, 1.0))
    else:
        def ring(r):
            g = lambda th: integrand(np.array([r * math.cos(th), r * math.sin(th)]))
            return r * scipy.integrate.quad(g, 0.0, 2 * math.pi, **opts)[0]
        val = scipy.integrate.quad(ring, 0.0, 1.0, points=[0.5], **opts)[0]
    return abs(eps**dim * val)


def brezis_lieb_rate(q: float, dim: int) -> float:
    """Decay exponent ``N/q`` of the defect for compactly supported unit-``L^q`` profiles.

    On the support the profile dominates a bounded ``u``, and the leading
    cross term ``q |eta|^{q-1} u`` integrates to order ``eps^{N/q}``.  The
    defect halves with ``eps`` only when ``N = q``.
    """
    return dim / q


@dataclass
class BrezisLiebReport:
    eps: np.ndarray
    defect: np.ndarray
    fitted_rate: float
    expected_rate: float

    @property
    def halving_ratios(self):
        """``defect(eps) / defect(eps / 2)`` for consecutive halvings."""
        return self.defect[:-1] / self.defect[1:]


def brezis_lieb_scaling(u, q: float, alpha: float, dim: int, eps_list, center=None) -> BrezisLiebReport:
    eps = np.asarray(eps_list, dtype=float)
    defect = np.array([brezis_lieb_defect(u, q, e, alpha, dim, center) for e in eps])
    fit = scipy.stats.linregress(np.log(eps), np.log(defect))
    return BrezisLiebReport(eps, defect, float(fit.slope), brezis_lieb_rate(q, dim))

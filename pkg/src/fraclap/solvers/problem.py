"""Discrete energy, gradient, Jacobian and Newton refinement for the critical problem.

The discrete problem is the Galerkin system on the retained sine modes,

    rho_j^{alpha/2} a_j = <f_lambda(u), phi_j>,    f_lambda(u) = lambda u_+^q + u_+^{2*-1},

with the inner product evaluated on the oversampled quadrature grid.  The
gradient below is the exact gradient of the discrete energy, so finite
differences of :func:`energy` reproduce it to round-off.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from ..spectral import SpectralBasis, SpectralFunction, crit_exponent, first_eigenpair

log = logging.getLogger(__name__)

__all__ = [
    "SolverError",
    "NoSolutionError",
    "NegativePartWarning",
    "Problem",
    "Solution",
    "energy",
    "energy_gradient",
    "residual",
    "jacobian",
    "eigen_identity_gap",
    "newton_solve",
    "make_solution",
    "assemble_weighted_mass",
    "truncation_estimate",
    "is_positive",
]


class SolverError(RuntimeError):
    """A solver failed to produce an acceptable critical point."""


class NoSolutionError(SolverError):
    """Evidence that no positive solution exists (blow-up, barrier failure...)."""


class NegativePartWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Problem:
    basis: SpectralBasis
    alpha: float
    q: float
    lam: float

    def __post_init__(self):
        dim = self.basis.dim
        if not 0.0 < self.alpha < min(dim, 2.0):
            raise ValueError(f"alpha must lie in (0, min(N, 2)) = (0, {min(dim, 2)}), got {self.alpha}")
        crit = crit_exponent(dim, self.alpha)
        if not 0.0 < self.q < crit - 1.0:
            raise ValueError(f"q must lie in (0, {crit - 1.0:g}), got {self.q}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def crit_exp(self) -> float:
        return crit_exponent(self.dim, self.alpha)

    @property
    def power(self) -> float:
        """Top power ``2*_alpha - 1``."""
        return self.crit_exp - 1.0

    @property
    def lambda_1(self) -> float:
        return first_eigenpair(self.basis, self.alpha)[0]

    @property
    def symbol(self) -> np.ndarray:
        return self.basis.rho ** (self.alpha / 2.0)

    def with_lambda(self, lam: float) -> "Problem":
        return replace(self, lam=float(lam))

    def with_basis(self, basis: SpectralBasis) -> "Problem":
        return replace(self, basis=basis)

    # pointwise nonlinearity, zero-extended for negative arguments

    def f(self, v):
        vp = np.maximum(v, 0.0)
        return self.lam * vp**self.q + vp**self.power

    def F(self, v):
        vp = np.maximum(v, 0.0)
        return self.lam * vp ** (self.q + 1.0) / (self.q + 1.0) + vp**self.crit_exp / self.crit_exp

    def df(self, v):
        """One-sided derivative; zero where ``v <= 0``."""
        pos = v > 0
        vp = np.where(pos, v, 1.0)
        out = self.lam * self.q * vp ** (self.q - 1.0) + self.power * vp ** (self.power - 1.0)
        return np.where(pos, out, 0.0)


@dataclass
class Solution:
    u: SpectralFunction
    lam: float
    residual: float
    energy: float
    kind: str
    linf: float
    eigen_identity_gap: float
    converged: bool = True
    positive: bool = True
    iterations: int = 0
    history: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def coeffs(self):
        return self.u.coeffs


def _coeffs(u):
    return u.coeffs if isinstance(u, SpectralFunction) else np.asarray(u, dtype=float)


def _warn_negative(vals, tol=1e-8):
    lo = float(vals.min()) if vals.size else 0.0
    scale = max(float(np.abs(vals).max()), 1.0)
    if lo < -tol * scale:
        warnings.warn(f"negative part truncated (min nodal value {lo:.3e})", NegativePartWarning,
                      stacklevel=3)


def energy(u, p: Problem, warn: bool = True) -> float:
    """``I(u) = 1/2 ||u||^2_{H^{alpha/2}} - int F(u)`` with ``F`` zero for ``u < 0``."""
    a = _coeffs(u)
    vals = p.basis.to_fine(a)
    if warn:
        _warn_negative(vals)
    return 0.5 * float(np.sum(p.symbol * a * a)) - p.basis.integrate_fine(p.F(vals))


def energy_gradient(u, p: Problem) -> SpectralFunction:
    """Coefficients ``rho_j^{alpha/2} a_j - <f_lambda(u), phi_j>``."""
    a = _coeffs(u)
    g = p.symbol * a - p.basis.from_fine(p.f(p.basis.to_fine(a)))
    return SpectralFunction(p.basis, g)


def residual(u, p: Problem) -> float:
    """Sup norm on the quadrature grid of the Galerkin residual function."""
    g = energy_gradient(u, p).coeffs
    return float(np.abs(p.basis.to_fine(g)).max())


def assemble_weighted_mass(basis: SpectralBasis, weight: np.ndarray) -> np.ndarray:
    """Dense ``M_jk = <weight phi_j, phi_k>`` on the fine grid, in flat mode order.

    Uses the tensor structure of the sine basis; cost is
    ``O(n m^2 + n m^4)`` in 2D instead of a dense ``(n^2 x m^2)`` product.
    """
    S = basis.axis_samples(basis.fine_grid)
    k = basis.wavenumbers - 1
    if basis.dim == 1:
        s = S[0]
        full = s.T @ (weight[:, None] * s)
        return full[np.ix_(k[:, 0], k[:, 0])]
    s1, s2 = S
    T = np.einsum("ab,ak,al->bkl", weight, s1, s1, optimize=True)
    full = np.einsum("bkl,bm,bn->kmln", T, s2, s2, optimize=True)
    return full[k[:, 0], k[:, 1]][:, k[:, 0], k[:, 1]]


def jacobian(u, p: Problem) -> np.ndarray:
    """Hessian of the discrete energy: ``diag(rho^{alpha/2}) - <f'(u) phi_j, phi_k>``."""
    a = _coeffs(u)
    w = p.df(p.basis.to_fine(a))
    J = -assemble_weighted_mass(p.basis, w)
    J[np.diag_indices_from(J)] += p.symbol
    return J


def eigen_identity_gap(u, p: Problem) -> float:
    """``int f(u) phi_1 - lambda_1 int u phi_1`` by fine-grid quadrature."""
    a = _coeffs(u)
    vals = p.basis.to_fine(a)
    lam1, phi1 = first_eigenpair(p.basis, p.alpha)
    phi = p.basis.to_fine(phi1.coeffs)
    return p.basis.integrate_fine(p.f(vals) * phi) - lam1 * p.basis.integrate_fine(vals * phi)


def truncation_estimate(a, basis: SpectralBasis, fraction: float = 0.25) -> float:
    """Sup-norm bound of the highest ``fraction`` of retained modes."""
    a = np.asarray(a, dtype=float)
    amp = float(np.prod([np.sqrt(2.0 / L) for L in basis.domain.lengths]))
    start = int((1.0 - fraction) * a.size)
    return amp * float(np.abs(a[start:]).sum())


def is_positive(a, basis: SpectralBasis) -> bool:
    """Nontrivial and nonnegative on the fine grid up to the truncation estimate.

    Band-limited approximations of concentrated positive profiles ring
    slightly below zero; undershoots smaller than the mass of the top
    modes are attributed to truncation rather than a sign change.
    """
    vals = basis.to_fine(a)
    scale = float(np.abs(vals).max())
    if not scale > 1e-12:
        return False
    return bool(vals.min() >= -max(1e-8 * scale, truncation_estimate(a, basis)))


def make_solution(a, p: Problem, kind: str, **kw) -> Solution:
    u = SpectralFunction(p.basis, np.array(a, dtype=float))
    vals = p.basis.to_fine(u.coeffs)
    positive = is_positive(u.coeffs, p.basis)
    info = kw.pop("info", {})
    info.setdefault("min_value", float(vals.min()))
    info.setdefault("truncation", truncation_estimate(u.coeffs, p.basis))
    kw["info"] = info
    return Solution(
        u=u,
        lam=p.lam,
        residual=residual(u, p),
        energy=energy(u, p, warn=False),
        kind=kind,
        linf=float(vals.max()),
        eigen_identity_gap=eigen_identity_gap(u, p),
        positive=positive,
        **kw,
    )


def newton_solve(p: Problem, init, tol: float = 1e-10, max_iters: int = 50,
                 kind: str = "other", jac=None, grad=None, min_step: float = 1e-6,
                 require_positive: bool = False) -> Solution:
    """Damped Newton on the Galerkin gradient system.

    ``grad`` and ``jac`` default to :func:`energy_gradient` and :func:`jacobian`;
    they can be replaced to refine critical points of a related functional.
    Step lengths are halved until the l2 norm of the gradient decreases.

    Raises
    ------
    SolverError
        On a singular Jacobian, a failed line search or ``max_iters``.
    """
    grad = grad or (lambda a: energy_gradient(a, p).coeffs)
    jac = jac or (lambda a: jacobian(a, p))
    a = np.array(_coeffs(init), dtype=float)
    g = grad(a)
    res_fun = lambda gg: float(np.abs(p.basis.to_fine(gg)).max())
    res = res_fun(g)
    history = [res]
    it = 0
    while res >= tol:
        if it >= max_iters:
            raise SolverError(f"Newton did not converge in {max_iters} iterations (residual {res:.3e})")
        J = jac(a)
        try:
            step = scipy.linalg.solve(J, -g, assume_a="sym", check_finite=True)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"Jacobian singular (possible fold): {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise SolverError("Jacobian singular (possible fold): non-finite Newton step")
        gnorm = np.linalg.norm(g)
        t = 1.0
        while True:
            trial = a + t * step
            gt = grad(trial)
            if np.all(np.isfinite(gt)) and np.linalg.norm(gt) < (1.0 - 1e-4 * t) * gnorm:
                break
            t *= 0.5
            if t < min_step:
                raise SolverError(f"Newton line search failed (residual {res:.3e})")
        a, g = trial, gt
        res = res_fun(g)
        history.append(res)
        it += 1
    sol = make_solution(a, p, kind, iterations=it, history=history)
    if not sol.positive:
        msg = f"Newton converged to a sign-changing or trivial state (min/max = {sol.linf:.3e})"
        if require_positive:
            raise SolverError(msg)
        log.info(msg)
    return sol

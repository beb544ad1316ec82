"""Constrained minimization of the Brezis-Nirenberg type quotient for ``q = 1``.

    S_lambda = inf_u (||u||^2_{H^{alpha/2}} - lambda ||u||_2^2) / ||u||^2_{2*}

The minimizer, rescaled by ``S_lambda^{1/(2*-2)}``, solves the problem with
``f(u) = lambda u + u^{2*-1}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..kernels import sharp_sobolev_constant
from ..spectral import SpectralFunction, first_eigenpair
from .problem import Problem, Solution, SolverError, newton_solve
from .profiles import centered_bubble

log = logging.getLogger(__name__)

__all__ = ["RayleighResult", "rayleigh_quotient", "rayleigh_minimize"]


def _parts(a, p: Problem):
    basis = p.basis
    vals = basis.to_fine(a)
    num = float(np.sum((p.symbol - p.lam) * a * a))
    mass = basis.integrate_fine(np.abs(vals) ** p.crit_exp)
    return vals, num, mass


def rayleigh_quotient(u, p: Problem) -> float:
    a = u.coeffs if isinstance(u, SpectralFunction) else np.asarray(u, dtype=float)
    _, num, mass = _parts(a, p)
    return num / mass ** (2.0 / p.crit_exp)


@dataclass
class RayleighResult:
    s_lambda: float
    minimizer: SpectralFunction
    solution: Solution | None
    iterations: int
    history: list = field(default_factory=list)
    sharp_constant: float = float("nan")
    stalled: bool = False

    @property
    def below_sharp(self) -> bool:
        return self.s_lambda < self.sharp_constant


def _normalize(a, p):
    _, _, mass = _parts(a, p)
    return a / mass ** (1.0 / p.crit_exp)


def _initial_guess(p: Problem):
    """Lowest-quotient candidate among ``phi_1`` and centered bubbles of several widths."""
    _, phi = first_eigenpair(p.basis, p.alpha)
    cands = [phi.coeffs]
    h = min(L / (m + 1) for L, m in zip(p.basis.domain.lengths, p.basis.modes))
    for eps in np.geomspace(h, 0.5 * min(p.basis.domain.lengths), 8):
        cands.append(centered_bubble(p.basis, eps, p.alpha).coeffs)
    qs = [rayleigh_quotient(c, p) for c in cands]
    return cands[int(np.argmin(qs))]


def rayleigh_minimize(p: Problem, init=None, tol: float = 1e-10, max_iters: int = 5000,
                      refine: bool = True, newton_tol: float = 1e-10) -> RayleighResult:
    """Normalized, preconditioned projected gradient descent on the quotient.

    Descent directions are preconditioned by ``(A - lambda)^{-1}`` with an
    Armijo backtracking step.  After every step a sign change is removed by
    replacing ``u`` with ``|u|`` (re-projected) whenever that still satisfies
    the descent condition, and ``||u||_{2*} = 1`` is restored.  Grid-scale
    minimizers at ``lambda = 0`` keep small Gibbs undershoots, which the
    quotient tolerates since it only sees ``|u|``.  For ``lambda > 0`` the minimizer is rescaled and refined by
    Newton; at ``lambda = 0`` only the infimum is reported because the
    continuous infimum is not attained.

    Requires ``q = 1`` and ``0 <= lambda < lambda_1``.
    """
    if p.q != 1.0:
        raise ValueError("the quotient is defined for q = 1")
    if p.dim < 2 * p.alpha:
        raise ValueError("the quotient is only known to go below kappa S for N >= 2 alpha")
    lam1 = p.lambda_1
    if not 0.0 <= p.lam < lam1:
        raise ValueError(f"need 0 <= lambda < lambda_1 = {lam1:g}")
    basis = p.basis
    shifted = p.symbol - p.lam
    a = _normalize(_initial_guess(p) if init is None else np.array(
        init.coeffs if isinstance(init, SpectralFunction) else init, dtype=float), p)
    vals, num, _ = _parts(a, p)
    Q = num
    history = [Q]
    step = 1.0
    stalled = True
    it = 0
    for it in range(1, max_iters + 1):
        # gradient of Q at a normalized point: 2[(A - lam) a - Q P(|u|^{2*-2} u)]
        nl = basis.from_fine(np.abs(vals) ** (p.crit_exp - 2.0) * vals)
        grad = 2.0 * (shifted * a - Q * nl)
        direction = -grad / (2.0 * shifted)
        slope = float(grad @ direction)
        if -slope < tol**2:
            stalled = False
            break
        t = step
        while True:
            trial = _normalize(a + t * direction, p)
            tv, tnum, _ = _parts(trial, p)
            if tv.min() < 0:
                # prefer |u|, unless re-projecting it costs more than the step gains
                flip = _normalize(basis.from_fine(np.abs(tv)), p)
                fv, fnum, _ = _parts(flip, p)
                if fnum <= tnum or fnum <= Q + 1e-4 * t * slope:
                    trial, tv, tnum = flip, fv, fnum
            if tnum <= Q + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                break
        if t < 1e-12:
            log.info("Rayleigh line search stalled at Q=%.12g (slope %.3e)", Q, slope)
            break
        a, vals = trial, tv
        dq = Q - tnum
        Q = tnum
        history.append(Q)
        step = min(1.0, 2.0 * t) if t == step else t
        if dq < 1e-15 * abs(Q) and t >= 1.0:
            stalled = False
            break
    sharp = sharp_sobolev_constant(p.alpha, p.dim)
    u = SpectralFunction(basis, a)
    solution = None
    if refine and p.lam > 0:
        scale = Q ** (1.0 / (p.crit_exp - 2.0))
        try:
            solution = newton_solve(p, a * scale, tol=newton_tol, kind="rayleigh", require_positive=True)
        except SolverError as exc:
            raise SolverError(f"Newton refinement of the Rayleigh minimizer failed: {exc}") from exc
    return RayleighResult(s_lambda=Q, minimizer=u, solution=solution, iterations=it, history=history,
                          sharp_constant=sharp, stalled=stalled)

"""Sub/super-solution barriers, monotone iteration and the concave-convex branch.

For ``0 < q <= 1`` the nonlinearity is nondecreasing in ``u``, so the map
``u -> A^{-1} f_lambda(u)`` is order preserving and iterating it upward from a
subsolution produces the minimal solution above it.  Blow-up of that
iteration is the numerical signature of nonexistence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from ..spectral import SpectralFunction, first_eigenpair, solve_shifted
from .problem import (NoSolutionError, Problem, Solution, SolverError, jacobian, make_solution,
                      newton_solve)

log = logging.getLogger(__name__)

__all__ = ["make_subsolution", "make_barriers", "monotone_iterate", "Branch", "branch_sweep", "smallest_hessian_eigenvalue"]


def smallest_hessian_eigenvalue(u, p: Problem) -> float:
    J = jacobian(u, p)
    return float(scipy.linalg.eigh(J, eigvals_only=True, subset_by_index=[0, 0])[0])


def make_subsolution(p: Problem, shrink: float = 0.5) -> SpectralFunction:
    """``eps phi_1`` with ``lambda_1 (eps phi_1)^{1-q} <= shrink * lambda`` on the grid."""
    if not 0 < p.q < 1:
        raise ValueError("the eigenfunction subsolution needs 0 < q < 1")
    lam1, phi = first_eigenpair(p.basis, p.alpha)
    pmax = float(p.basis.to_fine(phi.coeffs).max())
    eps = (shrink * p.lam / (lam1 * pmax ** (1.0 - p.q))) ** (1.0 / (1.0 - p.q))
    return phi * eps


def make_barriers(p: Problem, shrink: float = 0.5):
    """Ordered pair ``(sub, super)`` for ``0 < q < 1`` and ``lambda > 0``.

    ``sub = eps phi_1`` with ``lambda_1 (eps phi_1)^{1-q} <= shrink * lambda``
    pointwise.  ``super = M g`` where ``g`` solves ``(-Delta)^{alpha/2} g = 1``
    and ``M`` maximizes ``M - lambda (M max g)^q - (M max g)^{2*-1}``.

    Raises
    ------
    NoSolutionError
        When no constant ``M`` makes ``M g`` a supersolution.  The scalar test
        is only sufficient, so this does not prove nonexistence.
    """
    if p.q >= 1:
        raise ValueError("barriers are only defined for 0 < q < 1")
    if p.lam <= 0:
        z = SpectralFunction.zeros(p.basis)
        return z, z
    basis = p.basis
    sub = make_subsolution(p, shrink)

    one = SpectralFunction(basis, basis.from_fine(np.ones(basis.fine_grid)))
    g = solve_shifted(one, p.alpha)
    gamma = float(basis.to_fine(g.coeffs).max())

    def slack(logm):
        m = np.exp(logm)
        return m - p.lam * (m * gamma) ** p.q - (m * gamma) ** p.power

    # the slack is concave in M; its maximizer solves 1 = lam q gamma^q M^{q-1} + ...
    res = scipy.optimize.minimize_scalar(lambda t: -slack(t), bounds=(-40.0, 20.0), method="bounded",
                                         options={"xatol": 1e-10})
    if -res.fun <= 0:
        raise NoSolutionError(f"no constant supersolution for lambda={p.lam:g}")
    sup = g * float(np.exp(res.x))

    sub_f = basis.to_fine(sub.coeffs)
    sup_f = basis.to_fine(sup.coeffs)
    for _ in range(40):
        if np.all(sub_f <= sup_f + 1e-14):
            break
        sub = sub * 0.5
        sub_f = sub_f * 0.5
    else:
        raise SolverError("could not order sub- and supersolution on the grid")
    return sub, sup


def _picard(p: Problem, a0, shift, tol, max_iters, blowup, direction, polish_tol):
    """Run the order-preserving iteration; returns (coeffs, residual, iterations, history, status)."""
    basis = p.basis
    den = p.symbol + shift
    a = np.array(a0, dtype=float)
    v = basis.to_fine(a)
    fv = p.f(v)
    history = []
    for it in range(1, max_iters + 1):
        a_new = basis.from_fine(fv + shift * v) / den
        v_new = basis.to_fine(a_new)
        if not np.all(np.isfinite(v_new)) or np.abs(v_new).max() > blowup:
            return a_new, np.inf, it, history, "blowup"
        step = v_new - v
        scale = max(float(np.abs(v_new).max()), 1.0)
        fv_new = p.f(v_new)
        # residual of the new iterate: symbol*a_new - P f(v_new) = P(f(v) - f(v_new)) + shift P(v - v_new)
        res = float(np.abs(basis.to_fine(basis.from_fine(fv - fv_new + shift * (v - v_new)))).max())
        history.append(res)
        a, v, fv = a_new, v_new, fv_new
        drift = float(step.min()) if direction > 0 else -float(step.max())
        if drift < -1e-8 * scale and direction > 0:
            return a, res, it, history, "order"
        if res < tol:
            return a, res, it, history, "converged"
        if polish_tol is not None and res < polish_tol:
            return a, res, it, history, "polish"
    return a, history[-1] if history else np.inf, max_iters, history, "maxiter"


def monotone_iterate(p: Problem, sub, sup=None, tol: float = 1e-9, max_iters: int = 20000,
                     shift: float = 0.0, max_shift: float = 1e6, blowup: float = 1e8,
                     polish: bool = True, polish_tol: float = 1e-5) -> Solution:
    """Minimal solution above ``sub`` by the upward monotone iteration.

    Iterates ``(A + c) u_{k+1} = P(f_lambda(u_k) + c u_k)`` from ``sub``.  The
    nonlinearity is nondecreasing, so ``c = 0`` already preserves order; if
    the iterates ever decrease (a truncation effect) ``c`` is raised and the
    run restarted.  Once the residual drops below ``polish_tol``, Newton
    finishes the job and its limit is kept only if it lies above the last
    iterate and is linearly stable, which identifies the minimal solution.

    When ``sup`` is given the downward iteration from it is also run and the
    sup-norm gap between the two limits is stored in ``info["gap"]``.

    Raises
    ------
    NoSolutionError
        On blow-up (sup norm above ``blowup``) or failure to converge.
    """
    if p.q > 1:
        raise ValueError("monotone iteration requires 0 < q <= 1")
    basis = p.basis
    a0 = sub.coeffs if isinstance(sub, SpectralFunction) else np.asarray(sub, dtype=float)
    c = shift
    total = 0
    history = []
    cur_polish = polish_tol if polish else None
    start = a0
    while True:
        a, res, it, hist, status = _picard(p, start, c, tol, max_iters - total, blowup, +1, cur_polish)
        total += it
        history += hist
        if status == "blowup":
            raise NoSolutionError(f"monotone iteration blew up at lambda={p.lam:g} after {total} steps")
        if status == "order":
            c = max(2 * c, p.lambda_1)
            if c > max_shift:
                raise SolverError("monotonicity lost even with the maximal shift")
            log.debug("monotonicity violated, raising shift to %g", c)
            start = a0
            continue
        if status == "converged":
            break
        if status == "polish":
            try:
                sol = newton_solve(p, a, tol=tol, max_iters=30, kind="minimal")
            except SolverError:
                sol = None
            if sol is not None:
                lo = basis.to_fine(a)
                hi = basis.to_fine(sol.coeffs)
                above = np.all(hi >= lo - 1e-8 * max(1.0, float(np.abs(lo).max())))
                if above and sol.positive and smallest_hessian_eigenvalue(sol.coeffs, p) > -1e-10:
                    a = sol.coeffs
                    res = sol.residual
                    break
            # keep iterating, polish again at a tighter level
            cur_polish = res * 1e-2
            start = a
            continue
        raise NoSolutionError(f"monotone iteration did not converge at lambda={p.lam:g} "
                              f"(residual {res:.3e} after {total} steps)")

    info = {"shift": c}
    if sup is not None:
        b0 = sup.coeffs if isinstance(sup, SpectralFunction) else np.asarray(sup, dtype=float)
        ad, rd, _, _, sd = _picard(p, b0, c, tol, max_iters, blowup, -1, None)
        gap = float(np.abs(basis.to_fine(ad - a)).max()) if sd == "converged" else float("nan")
        info["gap"] = gap
    sol = make_solution(a, p, "minimal", iterations=total, history=history, info=info)
    if not sol.positive:
        if np.any(a != 0.0):
            raise SolverError("monotone iteration converged to a nonpositive state")
        log.info("monotone iteration stayed at the trivial solution")
    return sol


@dataclass
class Branch:
    """Minimal-solution branch with a bracket on the existence threshold."""

    points: list
    lambda_lo: float
    lambda_hi: float
    failures: list = field(default_factory=list)

    @property
    def bracket(self):
        return self.lambda_lo, self.lambda_hi

    @property
    def rel_width(self) -> float:
        return (self.lambda_hi - self.lambda_lo) / self.lambda_hi

    @property
    def lambdas(self):
        return np.array([s.lam for s in self.points])

    def rows(self):
        for s in self.points:
            yield {"lambda": s.lam, "linf": s.linf, "energy": s.energy, "residual": s.residual,
                   "eigen_identity_gap": s.eigen_identity_gap, "iterations": s.iterations}


def _attempt(p: Problem, sub_prev, **kw):
    """Minimal solution at ``p.lam`` warm-started from a smaller minimal solution."""
    if sub_prev is None:
        sub = make_subsolution(p)
    else:
        sub = sub_prev
    return monotone_iterate(p, sub, **kw)


def branch_sweep(p: Problem, lambdas, tol_lambda: float = 1e-3, **kw) -> Branch:
    """Follow the minimal branch along ``lambdas`` and bisect the existence threshold.

    Each solve starts from the previous minimal solution, which is a
    subsolution for every larger ``lambda``.  After the first failure the
    interval between the last success and the first failure is bisected
    until its relative width is below ``tol_lambda``.
    """
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    points, failures = [], []
    prev = None
    lo, hi = 0.0, np.inf
    for lam in lambdas:
        try:
            sol = _attempt(p.with_lambda(lam), prev, **kw)
        except SolverError as exc:
            failures.append((float(lam), str(exc)))
            hi = float(lam)
            break
        points.append(sol)
        prev = sol.u
        lo = float(lam)
    if np.isfinite(hi):
        if not points:
            raise SolverError("no point of the grid produced a minimal solution")
        while (hi - lo) / hi > tol_lambda:
            mid = 0.5 * (lo + hi)
            try:
                sol = _attempt(p.with_lambda(mid), prev, **kw)
            except SolverError as exc:
                failures.append((mid, str(exc)))
                hi = mid
                continue
            points.append(sol)
            prev = sol.u
            lo = mid
    points.sort(key=lambda s: s.lam)
    return Branch(points=points, lambda_lo=lo, lambda_hi=hi, failures=failures)

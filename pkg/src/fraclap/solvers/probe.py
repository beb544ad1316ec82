"""Multi-start search for positive solutions, used as numerical nonexistence evidence."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..spectral import first_eigenpair
from .diagnostics import linf_stability
from .problem import Problem, Solution, SolverError, newton_solve
from .mountain import MountainPassConfig, MovedFunctional, _descend
from .profiles import random_positive

log = logging.getLogger(__name__)

__all__ = ["ProbeAttempt", "ProbeReport", "nonexistence_probe", "thread_count"]


def thread_count(default: int = 1) -> int:
    """Worker count from ``FRACLAP_THREADS`` (at least 1)."""
    try:
        return max(1, int(os.environ.get("FRACLAP_THREADS", default)))
    except ValueError:
        return default


@dataclass
class ProbeAttempt:
    index: int
    init_amplitude: float
    outcome: str
    residual: float = float("nan")
    linf: float = float("nan")
    eigen_identity_gap: float = float("nan")
    refined_linf: float = float("nan")
    solution: Solution | None = field(default=None, repr=False)


@dataclass
class ProbeReport:
    lam: float
    lambda_1: float
    attempts: list

    @property
    def n_found(self) -> int:
        return sum(a.outcome == "positive" for a in self.attempts)

    @property
    def n_unresolved(self) -> int:
        return sum(a.outcome == "unresolved" for a in self.attempts)

    @property
    def solutions(self):
        return [a.solution for a in self.attempts if a.outcome == "positive"]

    def rows(self):
        for a in self.attempts:
            yield {"init": a.index, "amplitude": a.init_amplitude, "outcome": a.outcome,
                   "residual": a.residual, "linf": a.linf, "eigen_identity_gap": a.eigen_identity_gap,
                   "refined_linf": a.refined_linf}


def _search(p: Problem, init, tol, floor):
    """Newton from ``init``; if that fails, ray-minimax descent from its direction, then Newton."""
    sol = None
    try:
        sol = newton_solve(p, init, tol=tol, max_iters=60, kind="other")
    except SolverError as exc:
        log.debug("direct Newton failed: %s", exc)
    if sol is not None and sol.positive and sol.linf > floor:
        return sol
    func = MovedFunctional(p, np.zeros(p.basis.size))
    try:
        w, t, _, _ = _descend(func, np.asarray(init, dtype=float), MountainPassConfig(max_iters=100, path_tol=1e-3))
        return newton_solve(p, t * w, tol=tol, max_iters=60, kind="other")
    except SolverError as exc:
        log.debug("minimax fallback failed: %s", exc)
    if sol is None:
        raise SolverError("no convergent start")
    return sol


def _attempt(p: Problem, index, init, amplitude, tol, check_refinement, refine_tol, floor):
    try:
        sol = _search(p, init, tol, floor)
    except SolverError as exc:
        log.debug("probe %d: %s", index, exc)
        return ProbeAttempt(index, amplitude, "diverged")
    att = ProbeAttempt(index, amplitude, "trivial", sol.residual, sol.linf, sol.eigen_identity_gap,
                       solution=sol)
    if sol.linf <= floor and -sol.info.get("min_value", 0.0) <= floor:
        return att
    if not sol.positive:
        att.outcome = "sign-changing"
        return att
    att.outcome = "positive"
    if check_refinement:
        change, ref = linf_stability(sol, p, tol)
        if ref is not None:
            att.refined_linf = ref.linf
        if ref is None or not ref.positive or change > refine_tol:
            att.outcome = "unresolved"
    return att


def nonexistence_probe(p: Problem, n_inits: int = 16, seed: int = 0, tol: float = 1e-9,
                       check_refinement: bool = True, refine_tol: float = 0.1,
                       workers: int | None = None) -> ProbeReport:
    """Launch Newton from ``n_inits`` random positive states plus scaled ``phi_1``.

    When Newton does not reach a positive state, the initial direction is
    improved by a short ray-minimax descent of the energy and Newton is
    restarted from the ray maximizer; this finds mountain-pass type
    solutions that plain Newton misses from random starts.

    A converged, positive, nontrivial limit counts as a solution only if it
    persists when the number of modes per axis is doubled, with sup norm
    changing by less than ``refine_tol``.  Limits that disappear or move
    under refinement are grid-scale artifacts and are reported as
    ``"unresolved"``.  Every attempt records the identity gap
    ``int f(u) phi_1 - lambda_1 int u phi_1``.

    Initial amplitudes are log-uniform around the natural scale
    ``lambda_1^{1/(2*-2)}``; limits with sup norm below ``1e-6`` of that
    scale count as trivial.  Attempts run on ``workers`` threads (default
    from ``FRACLAP_THREADS``); results do not depend on the thread count.
    """
    lam1, phi = first_eigenpair(p.basis, p.alpha)
    rng = np.random.default_rng(seed)
    scale = lam1 ** (1.0 / (p.crit_exp - 2.0))
    amps = scale * np.exp(rng.uniform(np.log(0.1), np.log(10.0), n_inits + 1))
    fields = [random_positive(p.basis, rng, 1.0).coeffs for _ in range(n_inits)]
    inits = [amps[i] * f / np.abs(p.basis.to_fine(f)).max() for i, f in enumerate(fields)]
    pmax = float(np.abs(p.basis.to_fine(phi.coeffs)).max())
    inits.append(amps[-1] * phi.coeffs / pmax)
    floor = 1e-6 * scale
    jobs = [(p, i, init, float(amps[i]), tol, check_refinement, refine_tol, floor)
            for i, init in enumerate(inits)]
    workers = thread_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            attempts = list(pool.map(lambda job: _attempt(*job), jobs))
    else:
        attempts = [_attempt(*job) for job in jobs]
    return ProbeReport(lam=p.lam, lambda_1=lam1, attempts=attempts)

"""Second solutions by a mountain-pass path deformation on the moved functional.

Given a positive solution ``u0``, set ``g(x, s) = f(u0 + s) - f(u0)`` for
``s >= 0`` and ``0`` otherwise, with primitive ``G``.  Nontrivial critical
points ``v`` of ``J(v) = 1/2 ||v||^2 - int G(x, v)`` give a second solution
``u0 + v``.  With ``u0 = 0`` the moved functional is the energy itself, which
is how superlinear problems are handled.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from ..kernels import sharp_sobolev_constant
from ..spectral import SpectralFunction, first_eigenpair
from .problem import Problem, Solution, SolverError, assemble_weighted_mass, make_solution, newton_solve
from .profiles import centered_bubble

log = logging.getLogger(__name__)

__all__ = [
    "MovedFunctional",
    "moved_functional",
    "MountainPassConfig",
    "MountainPassResult",
    "mountain_pass",
    "superlinear_solve",
    "critical_level",
    "path_nodes",
]


def critical_level(alpha: float, dim: int) -> float:
    """Compactness threshold ``(alpha / 2N) (kappa S)^{N/alpha}``."""
    return alpha / (2.0 * dim) * sharp_sobolev_constant(alpha, dim) ** (dim / alpha)


@dataclass(frozen=True, eq=False)
class MovedFunctional:
    problem: Problem
    base: np.ndarray

    def __post_init__(self):
        vals = self.problem.basis.to_fine(self.base)
        object.__setattr__(self, "_u0", vals)
        object.__setattr__(self, "_f0", self.problem.f(vals))
        object.__setattr__(self, "_F0", self.problem.F(vals))

    @property
    def basis(self):
        return self.problem.basis

    def G(self, s):
        pos = s > 0
        val = self.problem.F(self._u0 + s) - self._F0 - self._f0 * s
        return np.where(pos, val, 0.0)

    def g(self, s):
        return np.where(s > 0, self.problem.f(self._u0 + s) - self._f0, 0.0)

    def dg(self, s):
        return np.where(s > 0, self.problem.df(self._u0 + s), 0.0)

    def energy(self, b) -> float:
        b = np.asarray(b, dtype=float)
        s = self.basis.to_fine(b)
        return 0.5 * float(np.sum(self.problem.symbol * b * b)) - self.basis.integrate_fine(self.G(s))

    def gradient(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return self.problem.symbol * b - self.basis.from_fine(self.g(self.basis.to_fine(b)))

    def jacobian(self, b) -> np.ndarray:
        J = -assemble_weighted_mass(self.basis, self.dg(self.basis.to_fine(np.asarray(b, dtype=float))))
        J[np.diag_indices_from(J)] += self.problem.symbol
        return J

    def ray(self, w):
        """``t -> (J(t w), d/dt J(t w))`` using one synthesis of ``w``."""
        w = np.asarray(w, dtype=float)
        wv = self.basis.to_fine(w)
        quad = float(np.sum(self.problem.symbol * w * w))
        integ = self.basis.integrate_fine

        def value(t):
            return 0.5 * t * t * quad - integ(self.G(t * wv))

        def slope(t):
            return t * quad - integ(self.g(t * wv) * wv)

        return value, slope

    def riesz(self, g) -> np.ndarray:
        """Sobolev gradient: the ``H^{alpha/2}`` representative of ``g``."""
        return g / self.problem.symbol

    def hnorm(self, b) -> float:
        return float(np.sqrt(np.sum(self.problem.symbol * np.asarray(b) ** 2)))


def moved_functional(u0, p: Problem) -> MovedFunctional:
    base = u0.coeffs if isinstance(u0, (SpectralFunction, Solution)) else np.asarray(u0, dtype=float)
    return MovedFunctional(p, np.array(base, dtype=float))


@dataclass
class MountainPassConfig:
    """Settings of the path deformation.

    ``c_star`` defaults to :func:`critical_level` of the problem at hand.
    """

    deform_step: float = 1.0
    path_nodes: int = 41
    max_iters: int = 2000
    path_tol: float = 1e-4
    newton_tol: float = 1e-10
    newton_max_iters: int = 60
    n_profiles: int = 8
    c_star: float | None = None

    def __post_init__(self):
        if self.path_nodes < 3 or self.deform_step <= 0:
            raise ValueError("need at least 3 path nodes and a positive step")
        if self.c_star is not None and not self.c_star > 0:
            raise ValueError("c_star must be positive")


@dataclass
class MountainPassResult:
    solution: Solution
    c_est: float
    c_path: float
    c_star: float
    iterations: int
    path_max_history: list = field(default_factory=list)
    distance: float = float("nan")
    endpoint_energy: float = float("nan")

    @property
    def below_threshold(self) -> bool:
        return self.c_est < self.c_star


def _ray(func: MovedFunctional, e, t_max=1e6):
    """Smallest ``t`` on a doubling grid with ``J(t e) < 0`` and the max of ``J`` before it."""
    t = 0.05
    top = 0.0
    while t < t_max:
        val = func.energy(t * e)
        if val < 0 and t > 0.05:
            return t, top
        top = max(top, val)
        t *= 1.25
    return None, np.inf


def _endpoint(func: MovedFunctional, cfg: MountainPassConfig):
    basis = func.basis
    p = func.problem
    _, phi = first_eigenpair(basis, p.alpha)
    h = min(L / (m + 1) for L, m in zip(basis.domain.lengths, basis.modes))
    cands = [phi.coeffs / func.hnorm(phi.coeffs)]
    for eps in np.geomspace(2 * h, 0.5 * min(basis.domain.lengths), cfg.n_profiles):
        c = centered_bubble(basis, eps, p.alpha).coeffs
        cands.append(c / func.hnorm(c))
    best = None
    for e in cands:
        t, top = _ray(func, e)
        if t is not None and (best is None or top < best[1]):
            best = (t * e, top)
    if best is None:
        raise SolverError("no ray direction reaches negative energy")
    return best[0]


def _ray_max(func: MovedFunctional, w, t_hint: float = 1.0):
    """First local maximizer ``t*`` of ``t -> J(t w)`` and ``J(t* w)``.

    Brackets the sign change of ``d/dt J(t w) = J'(t w) . w`` on a geometric
    grid around ``t_hint`` and refines it with Brent's method.
    """
    value, dJ = func.ray(w)
    lo = t_hint * 0.5
    while lo > 1e-8 and dJ(lo) <= 0:
        lo *= 0.5
    if dJ(lo) <= 0:
        raise SolverError("ray is descending from the origin")
    hi = lo * 1.25
    while dJ(hi) > 0:
        lo, hi = hi, hi * 1.25
        if hi > 1e8:
            raise SolverError("energy is unbounded along the ray direction")
    t = scipy.optimize.brentq(dJ, lo, hi, xtol=1e-13 * hi, rtol=1e-13)
    return t, value(t)


def _descend(func: MovedFunctional, w, cfg: MountainPassConfig):
    """Minimize ``Phi(w) = max_t J(t w)`` over the unit ``H^{alpha/2}`` sphere.

    At the ray maximizer ``v = t* w`` the gradient of ``J`` is orthogonal to
    ``w``, so its Sobolev representative is a tangent descent direction for
    ``Phi``.  Armijo backtracking makes the path maximum nonincreasing.
    """
    w = w / func.hnorm(w)
    t, phi = _ray_max(func, w)
    history = [phi]
    step = cfg.deform_step
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = func.gradient(t * w)
        d = func.riesz(g)
        dn2 = float(g @ d)
        if np.sqrt(dn2) < cfg.path_tol:
            break
        tau = step
        accepted = False
        while tau > 1e-12:
            trial = w - tau * d / t
            trial = trial / func.hnorm(trial)
            try:
                tt, pt = _ray_max(func, trial, t)
            except SolverError:
                pt = np.inf
            if pt <= phi - 1e-4 * tau * dn2 / t:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            log.info("ray minimax stalled at level %.10g (|grad| %.3e)", phi, np.sqrt(dn2))
            break
        w, t, phi = trial, tt, pt
        history.append(phi)
        step = min(2.0 * tau, 4.0 * cfg.deform_step) if tau == step else tau
    return w, t, it, history


def _ray_end(func: MovedFunctional, w, t):
    """A ray parameter past ``t`` with negative energy (the path endpoint)."""
    value, _ = func.ray(w)
    end = 1.25 * t
    while value(end) >= 0 and end < 1e8 * t:
        end *= 1.25
    return end


def path_nodes(w, t_end: float, n: int) -> np.ndarray:
    """Uniform nodes of the segment ``[0, t_end w]``."""
    return np.linspace(0.0, t_end, n)[:, None] * np.asarray(w)[None, :]


def mountain_pass(func: MovedFunctional, config: MountainPassConfig | None = None, endpoint=None,
                  kind: str = "mountain_pass", warn_alpha: bool = True) -> MountainPassResult:
    """Mountain-pass critical point of ``func`` refined by Newton.

    Paths are the segments ``[0, T w]`` with ``J(T w) < 0``, so the path
    maximum is the ray maximum ``Phi(w)``.  The initial direction is the
    concentrated profile with the lowest ray maximum (or ``endpoint``).  The
    highest node ``t* w`` then takes Armijo-damped Sobolev-gradient steps,
    renormalized to the unit sphere, so the path maximum never increases.
    Newton refines the highest node once its gradient is below ``path_tol``.

    Returns the second solution ``u0 + v`` of the underlying problem.  A
    ``RuntimeWarning`` is issued for ``alpha < 1`` unless ``warn_alpha`` is
    false: second solutions above a minimal one are only guaranteed for
    ``alpha >= 1``.

    Raises
    ------
    SolverError
        If no endpoint with negative energy exists, Newton fails, or the
        refined point collapses onto ``u0``.
    """
    cfg = config or MountainPassConfig()
    p = func.problem
    if warn_alpha and p.alpha < 1:
        warnings.warn("mountain-pass existence is only established for alpha >= 1; exploring anyway",
                      RuntimeWarning, stacklevel=2)
    end = _endpoint(func, cfg) if endpoint is None else np.asarray(endpoint, dtype=float)
    end_energy = func.energy(end)
    if end_energy >= 0:
        raise SolverError("path endpoint must have negative energy")
    w, t, iters, history = _descend(func, end, cfg)
    c_path = history[-1]
    res_fun = lambda gg: float(np.abs(p.basis.to_fine(gg)).max())
    v = t * w
    refined = None
    try:
        refined = newton_solve(p, v, tol=cfg.newton_tol, max_iters=cfg.newton_max_iters, kind=kind,
                               grad=func.gradient, jac=func.jacobian)
    except SolverError as exc:
        raise SolverError(f"Newton refinement of the mountain-pass point failed: {exc}") from exc
    v = refined.coeffs
    dist = func.hnorm(v)
    if dist <= 10 * cfg.newton_tol or float(np.abs(p.basis.to_fine(v)).max()) < 1e-6:
        raise SolverError("mountain-pass refinement collapsed onto the base solution")
    c_est = func.energy(v)
    c_star = cfg.c_star if cfg.c_star is not None else critical_level(p.alpha, p.dim)
    info = {"moved_residual": res_fun(func.gradient(v)), "path": path_nodes(w, _ray_end(func, w, t), cfg.path_nodes)}
    if not c_est < c_star:
        info["flag"] = "level at or above c*: possible loss of compactness"
        log.warning("mountain-pass level %.6g is not below c* = %.6g", c_est, c_star)
    u = func.base + v
    sol = make_solution(u, p, kind, iterations=iters + refined.iterations, history=history, info=info)
    return MountainPassResult(solution=sol, c_est=c_est, c_path=c_path, c_star=c_star,
                              iterations=iters, path_max_history=history, distance=dist,
                              endpoint_energy=end_energy)


def superlinear_solve(p: Problem, config: MountainPassConfig | None = None) -> MountainPassResult:
    """Positive solution for ``1 < q < 2*-1`` as a mountain pass of the energy itself."""
    if not p.q > 1:
        raise ValueError("superlinear_solve needs q > 1")
    if not p.dim > p.alpha * (1.0 + 1.0 / p.q):
        raise ValueError(f"need N > alpha (1 + 1/q) = {p.alpha * (1 + 1 / p.q):g}")
    func = MovedFunctional(p, np.zeros(p.basis.size))
    res = mountain_pass(func, config, warn_alpha=False)
    if not res.solution.positive:
        raise SolverError("superlinear mountain pass produced a sign-changing state")
    return res

"""alpha-harmonic extension to the half-cylinder by separation of variables.

For ``u = sum a_j phi_j`` the extension solving ``div(y^{1-alpha} grad w) = 0``
with ``w(., 0) = u`` and zero lateral data is

    w(x, y) = sum_j a_j phi_j(x) theta(sqrt(rho_j) y),

where ``theta`` is the decaying solution of
``theta'' + (1 - alpha)/s theta' - theta = 0`` with ``theta(0) = 1``.  Each
mode then carries the weighted Dirichlet energy ``rho_j^{alpha/2} e_alpha`` with
``e_alpha = int_0^inf s^{1-alpha} (theta'^2 + theta^2) ds``, so the isometry
normalization is ``kappa_alpha = 1 / e_alpha``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .spectral import SpectralFunction

__all__ = [
    "ThetaProfile",
    "Constants",
    "ExtensionField",
    "theta_profile",
    "theta_ode",
    "kappa",
    "kappa_closed_form",
    "extend",
    "neumann_trace",
    "richardson_limit",
]


def _check_alpha(alpha):
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")


def _graded_quad(func, alpha, upper, tol=1e-13):
    """``int_0^upper func(s) ds`` for integrands ~ s^{-|1-alpha|} at 0.

    Substitutes ``s = t^{1/g}`` with ``g = 1 - |1 - alpha|`` on ``[0, 1]`` so the
    leading singularity becomes bounded, then integrates ``[1, upper]`` directly.
    """
    g = 1.0 - abs(1.0 - alpha)

    def inner(t):
        if t == 0.0:
            t = 1e-300
        s = t ** (1.0 / g)
        return func(s) * s / (g * t)

    head_end = min(1.0, upper)
    head, _ = integrate.quad(inner, 0.0, head_end**g, epsabs=0.0, epsrel=tol, limit=400)
    tail = 0.0
    if upper > 1.0:
        pts = [p for p in (5.0, 10.0, 20.0) if 1.0 < p < upper]
        tail, _ = integrate.quad(func, 1.0, upper, epsabs=0.0, epsrel=tol, limit=400,
                                 points=pts or None)
    return head + tail


@dataclass(frozen=True)
class ThetaProfile:
    """Decaying profile ``theta_alpha`` with ``theta(0) = 1``.

    ``energy`` is the weighted energy ``e_alpha`` obtained by quadrature and
    ``flux0`` the limit ``-lim_{s->0} s^{1-alpha} theta'(s)`` read off the
    small-``s`` expansion; integration by parts makes them equal.
    """

    alpha: float
    s_max: float
    energy: float
    flux0: float

    @property
    def _nu(self):
        return self.alpha / 2.0

    @property
    def _c(self):
        nu = self._nu
        return 2.0 ** (1.0 - nu) / special.gamma(nu)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        nu = self._nu
        safe = np.where(s > 0, s, 1.0)
        out = self._c * safe**nu * special.kve(nu, safe) * np.exp(-safe)
        out = np.where(s > 0, out, 1.0)
        return out if out.ndim else float(out)

    def deriv(self, s):
        """``theta'(s) = -c s^nu K_{1-nu}(s)`` (singular at 0 when alpha < 1)."""
        s = np.asarray(s, dtype=float)
        nu = self._nu
        out = -self._c * s**nu * special.kve(1.0 - nu, s) * np.exp(-s)
        return out if out.ndim else float(out)

    def weighted_flux(self, s):
        """``-s^{1-alpha} theta'(s)``, which tends to ``flux0`` as ``s -> 0``."""
        s = np.asarray(s, dtype=float)
        mu = 1.0 - self._nu
        out = self._c * s**mu * special.kve(mu, s) * np.exp(-s)
        return out if out.ndim else float(out)


@functools.lru_cache(maxsize=64)
def theta_profile(alpha: float, s_max: float = 40.0, tol: float = 1e-13) -> ThetaProfile:
    """Build ``theta_alpha`` from the Bessel closed form and its energy by quadrature.

    ``theta(s) = 2^{1-alpha/2} / Gamma(alpha/2) s^{alpha/2} K_{alpha/2}(s)``.
    """
    _check_alpha(alpha)
    if math.exp(-s_max) > tol:
        raise ValueError(f"s_max={s_max} too small for tolerance {tol}")
    nu = alpha / 2.0
    mu = 1.0 - nu
    c = 2.0 ** (1.0 - nu) / special.gamma(nu)
    # s^mu K_mu(s) -> 2^{mu-1} Gamma(mu) as s -> 0
    flux0 = c * 2.0 ** (mu - 1.0) * special.gamma(mu)
    prof = ThetaProfile(alpha, s_max, energy=float("nan"), flux0=flux0)

    def integrand(s):
        return s ** (1.0 - alpha) * (prof.deriv(s) ** 2 + prof(s) ** 2)

    energy = _graded_quad(integrand, alpha, s_max, tol=tol)
    if not np.isfinite(energy) or energy <= 0:
        raise ArithmeticError(f"profile energy quadrature failed for alpha={alpha}")
    return ThetaProfile(alpha, s_max, energy=energy, flux0=flux0)


def theta_ode(alpha: float, s, s_start: float = 25.0, s_min: float = 1e-6, rtol: float = 1e-13):
    """Independent shooting solution of the profile ODE.

    Integrates ``theta'' = theta - (1 - alpha)/s theta'`` backward from
    ``s_start``, where any admixture of the growing solution dies out, then
    normalizes by ``theta(0) ~ theta(s_min) - s_min theta'(s_min) / alpha``
    (the bounded Frobenius branches are ``1`` and ``s^alpha``).
    """
    _check_alpha(alpha)
    s = np.atleast_1d(np.asarray(s, dtype=float))

    def rhs(t, y):
        return [y[1], y[0] - (1.0 - alpha) / t * y[1]]

    y0 = [1.0, -1.0 + (alpha - 1.0) / (2.0 * s_start)]
    sol = integrate.solve_ivp(rhs, (s_start, s_min), y0, method="DOP853", rtol=rtol,
                              atol=1e-300, dense_output=True)
    if not sol.success:
        raise ArithmeticError(f"profile shooting failed: {sol.message}")
    th, dth = sol.sol(s_min)
    theta0 = th - s_min * dth / alpha
    vals = sol.sol(np.clip(s, s_min, s_start))[0] / theta0
    return vals if vals.size > 1 else float(vals[0])


def richardson_limit(func: Callable[[float], float], h0: float, exponents: Sequence[float],
                     levels: int | None = None) -> float:
    """Extrapolate ``lim_{h->0} func(h)`` given the error expansion exponents."""
    exponents = list(exponents)
    levels = len(exponents) + 1 if levels is None else levels
    hs = [h0 / 2.0**k for k in range(levels)]
    table = [float(func(h)) for h in hs]
    for p in exponents[: levels - 1]:
        f = 2.0**p
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[-1]


@dataclass(frozen=True)
class Constants:
    alpha: float
    kappa_alpha: float
    profile_energy: float
    s_alpha_N: float | None = None
    dim: int | None = None


def kappa_closed_form(alpha: float) -> float:
    """``Gamma(alpha/2) / (2^{1-alpha} Gamma(1 - alpha/2))``, used only as a cross-check."""
    return special.gamma(alpha / 2.0) / (2.0 ** (1.0 - alpha) * special.gamma(1.0 - alpha / 2.0))


def kappa(alpha: float, dim: int | None = None) -> Constants:
    """Isometry-normalizing constant ``kappa_alpha = 1 / e_alpha``.

    When ``dim`` is given the trace constant ``S(alpha, dim)`` is attached too.
    """
    prof = theta_profile(alpha)
    s_val = None
    if dim is not None:
        from .kernels import sobolev_constant

        s_val = sobolev_constant(alpha, dim)
    return Constants(alpha, 1.0 / prof.energy, prof.energy, s_val, dim)


@dataclass(frozen=True)
class ExtensionField:
    """Separated extension ``w = sum a_j phi_j(x) theta(sqrt(rho_j) y)``.

    ``perturbation`` optionally adds ``sum b_j phi_j(x) psi(y)`` with
    ``psi(0) = 0`` (given as ``(b, psi, dpsi)``); such fields share the trace
    of ``base`` but not its energy.
    """

    base: SpectralFunction
    profile: ThetaProfile
    perturbation: tuple | None = None

    @property
    def alpha(self):
        return self.profile.alpha

    def trace(self) -> SpectralFunction:
        return self.base

    def mode_values(self, y):
        """``w_j(y)`` for all modes, shape ``(len(y), M)``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        sq = np.sqrt(self.base.basis.rho)
        vals = self.profile(np.outer(y, sq)) * self.base.coeffs
        if self.perturbation is not None:
            b, psi, _ = self.perturbation
            vals = vals + np.outer(psi(y), b)
        return vals

    def __call__(self, x, y):
        """Pointwise value at spatial points ``x`` (shape ``(P, N)``) and heights ``y``."""
        basis = self.base.basis
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        phi = np.ones((pts.shape[0], basis.size))
        for axis, L in enumerate(basis.domain.lengths):
            k = basis.wavenumbers[:, axis]
            phi *= np.sqrt(2.0 / L) * np.sin(np.outer(pts[:, axis], k) * np.pi / L)
        y = np.broadcast_to(np.asarray(y, dtype=float), (pts.shape[0],))
        return np.einsum("pj,pj->p", phi, self.mode_values(y) if y.ndim else self.mode_values([y]))

    def mode_energies(self, kappa_alpha: float | None = None) -> np.ndarray:
        """``kappa int_0^inf y^{1-alpha} (rho_j w_j^2 + w_j'^2) dy`` per mode, by quadrature in y."""
        alpha = self.alpha
        kap = kappa(alpha).kappa_alpha if kappa_alpha is None else kappa_alpha
        prof = self.profile
        rho = self.base.basis.rho
        a = self.base.coeffs
        out = np.empty(len(rho))
        pert = self.perturbation
        for j, r in enumerate(rho):
            sq = math.sqrt(r)
            aj = a[j]
            bj = 0.0 if pert is None else pert[0][j]
            if aj == 0.0 and bj == 0.0:
                out[j] = 0.0
                continue

            def integrand(y, sq=sq, r=r, aj=aj, bj=bj):
                w = aj * prof(sq * y)
                dw = aj * sq * prof.deriv(sq * y)
                if bj:
                    w += bj * pert[1](y)
                    dw += bj * pert[2](y)
                return y ** (1.0 - alpha) * (r * w * w + dw * dw)

            scale = 1.0 / sq

            def scaled(t, integrand=integrand, scale=scale):
                return integrand(t * scale) * scale

            upper = prof.s_max if pert is None else max(prof.s_max, 60.0 * sq)
            out[j] = kap * _graded_quad(scaled, alpha, upper)
        return out

    def energy(self, kappa_alpha: float | None = None) -> float:
        """``||w||^2_{X_0^alpha}``; modes are L2-orthogonal in ``x`` so energies add."""
        return float(np.sum(self.mode_energies(kappa_alpha)))


def extend(u: SpectralFunction, alpha: float) -> ExtensionField:
    return ExtensionField(u, theta_profile(alpha))


def neumann_trace(w: ExtensionField, method: str = "series") -> SpectralFunction:
    """``-kappa lim_{y->0} y^{1-alpha} dw/dy`` as a spectral function.

    Per mode the limit equals ``a_j rho_j^{alpha/2} flux0``.  ``method="richardson"``
    extrapolates the weighted flux numerically instead of using the series value.
    """
    if w.perturbation is not None:
        raise ValueError("Neumann trace is defined for pure extensions only")
    prof = w.profile
    alpha = prof.alpha
    if method == "series":
        flux = prof.flux0
    elif method == "richardson":
        flux = richardson_limit(prof.weighted_flux, 1e-2, [2.0 - alpha, 2.0, 4.0 - alpha], levels=4)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.isfinite(flux):
        raise ArithmeticError("Neumann limit extraction failed")
    kap = 1.0 / prof.energy
    u = w.base
    return u.copy_with(kap * flux * u.coeffs * u.basis.rho ** (alpha / 2.0))

"""Whole-space objects: extremal bubbles, Poisson/Riesz kernels, sharp constants.

Everything here lives on R^N (N in {1, 2}); radial integrals are done in the
variable ``tau = log r`` so that strongly concentrated profiles cost nothing
extra.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special, stats

from .extension import kappa

__all__ = [
    "sobolev_constant",
    "sharp_sobolev_constant",
    "poisson_constant",
    "riesz_constant",
    "Bubble",
    "CutoffBubble",
    "bubble",
    "cutoff_bubble",
    "smoothstep_cutoff",
    "poisson_kernel",
    "poisson_extend",
    "riesz_pv",
    "fourier_frac_even",
    "bubble_fourier",
    "image_error_bound",
    "bubble_rayleigh",
    "ScalingReport",
    "cutoff_norm_scaling",
    "sphere_area",
]


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^dim (2 for dim=1)."""
    return 2.0 * math.pi ** (dim / 2.0) / special.gamma(dim / 2.0)


def _radial_integral(g: Callable, dim: int, lo: float = -60.0, hi: float = 6.0,
                     points=None, tol: float = 1e-12, limit: int = 500) -> float:
    """``int_{R^N} g(|x|) dx`` as ``|S^{N-1}| int g(e^t) e^{N t} dt`` over ``[lo, hi]``."""

    def integrand(t):
        r = math.exp(t)
        return g(r) * r**dim

    val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=tol, limit=limit, points=points)
    return sphere_area(dim) * val


def sobolev_constant(alpha: float, dim: int) -> float:
    """Best trace constant ``S(alpha, N)`` of the weighted extension energy.

    Evaluated in log-Gamma form.  The last factor is ``Gamma(N)^{alpha/N}``;
    the variant ``Gamma(N)^{alpha/2}`` coincides with it for N <= 2 only.
    """
    if not (0.0 < alpha < min(dim, 2.0)):
        raise ValueError(f"need 0 < alpha < min(N, 2), got alpha={alpha}, N={dim}")
    g = special.gammaln
    log_s = (
        math.log(2.0)
        + 0.5 * alpha * math.log(math.pi)
        + g((dim + alpha) / 2.0)
        + g((2.0 - alpha) / 2.0)
        + (alpha / dim) * g(dim / 2.0)
        - g(alpha / 2.0)
        - g((dim - alpha) / 2.0)
        - (alpha / dim) * g(dim)
    )
    return math.exp(log_s)


def sharp_sobolev_constant(alpha: float, dim: int) -> float:
    """``kappa_alpha S(alpha, N)``: best constant of ``||(-Delta)^{alpha/4} u||^2 >= C ||u||^2_{2*}``."""
    return kappa(alpha).kappa_alpha * sobolev_constant(alpha, dim)


@functools.lru_cache(maxsize=64)
def poisson_constant(alpha: float, dim: int) -> float:
    """``c_{N,alpha}`` fixed by unit mass of ``P_1(x) = c (|x|^2 + 1)^{-(N+alpha)/2}``."""
    mass = _radial_integral(lambda r: (r * r + 1.0) ** (-(dim + alpha) / 2.0), dim,
                            lo=-40.0, hi=40.0 / max(alpha, 0.05) + 20.0)
    return 1.0 / mass


def riesz_constant(alpha: float, dim: int) -> float:
    """``d_{N,alpha} = alpha c_{N,alpha} kappa_alpha``."""
    return alpha * poisson_constant(alpha, dim) * kappa(alpha).kappa_alpha


@dataclass(frozen=True)
class Bubble:
    """``u_eps(x) = eps^{(N-alpha)/2} / (|x|^2 + eps^2)^{(N-alpha)/2}``."""

    eps: float
    alpha: float
    dim: int

    @property
    def beta(self):
        return (self.dim - self.alpha) / 2.0

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.eps**self.beta / (r * r + self.eps**2) ** self.beta

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1:
            return self.radial(np.abs(x) if x.ndim < 2 else np.abs(x[..., 0]))
        return self.radial(np.linalg.norm(np.atleast_2d(x), axis=-1))


def bubble(eps: float, alpha: float, dim: int) -> Bubble:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not dim > alpha:
        raise ValueError("bubbles need N > alpha")
    return Bubble(float(eps), float(alpha), int(dim))


def smoothstep_cutoff(s):
    """Nonincreasing C^2 cutoff: 1 on [0, 1/2], 0 on [1, inf), quintic in between."""
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    out = 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CutoffBubble:
    bubble: Bubble
    r: float
    phi: Callable = field(default=smoothstep_cutoff, repr=False)

    def radial(self, rad):
        return self.phi(np.asarray(rad, dtype=float) / self.r) * self.bubble.radial(rad)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        rad = np.abs(x) if self.bubble.dim == 1 and x.ndim < 2 else np.linalg.norm(np.atleast_2d(x), axis=-1)
        return self.radial(rad)

    def lp_norm(self, p: float, power: bool = True) -> float:
        """``||phi u_eps||_p^p`` (or the norm itself with ``power=False``)."""
        eps, dim = self.bubble.eps, self.bubble.dim
        lo = math.log(eps) - 40.0
        hi = math.log(self.r)
        knee = math.log(eps)
        val = _radial_integral(lambda rr: float(self.radial(rr)) ** p, dim, lo=lo, hi=hi,
                               points=[knee, hi + math.log(0.5)])
        return val if power else val ** (1.0 / p)


def cutoff_bubble(eps: float, alpha: float, dim: int, r: float = 1.0) -> CutoffBubble:
    return CutoffBubble(bubble(eps, alpha, dim), float(r))


def poisson_kernel(x, y: float, alpha: float, dim: int = 1):
    """``P_y(x) = c y^alpha / (|x|^2 + y^2)^{(N+alpha)/2}``, ``x`` as radii or points."""
    x = np.asarray(x, dtype=float)
    r2 = x * x if (dim == 1 or x.ndim == 0) else np.sum(x * x, axis=-1)
    return poisson_constant(alpha, dim) * y**alpha / (r2 + y * y) ** ((dim + alpha) / 2.0)


def poisson_extend(u: Callable[[float], float], alpha: float, x: float, y: float,
                   tol: float = 1e-10) -> float:
    """``w(x, y) = (P_y * u)(x)`` on R (N = 1) by adaptive quadrature.

    The substitution ``s = x + y tan(theta)`` maps the kernel onto a bounded
    weight on ``(-pi/2, pi/2)``; ``u`` only needs to be bounded.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    c = poisson_constant(alpha, 1)

    # P_y(y tan t) y sec^2 t = c cos^{alpha-1}(t)
    def integrand(t):
        return c * math.cos(t) ** (alpha - 1.0) * u(x + y * math.tan(t))

    half = math.pi / 2.0
    val, err = integrate.quad(integrand, -half, half, epsabs=tol, epsrel=tol, limit=400,
                              points=[0.0])
    if err > 100 * max(tol, tol * abs(val)):
        raise ArithmeticError(f"Poisson quadrature did not converge (err={err:.2e})")
    return val


def riesz_pv(u: Callable[[float], float], alpha: float, x: float, tol: float = 1e-11,
             split: float = 1.0) -> float:
    """``(-Delta)^{alpha/2} u(x)`` on R as a principal-value integral.

    Symmetric differences ``2u(x) - u(x+t) - u(x-t)`` remove the singularity;
    on ``[0, delta]`` they are replaced by ``-u''(x) t^2`` (five-point stencil)
    to avoid cancellation, and the tail beyond ``split`` is integrated to
    infinity.
    """
    d = riesz_constant(alpha, 1)
    ux = u(x)
    delta = 1e-3
    h = 1e-2
    upp = (-u(x + 2 * h) + 16 * u(x + h) - 30 * ux + 16 * u(x - h) - u(x - 2 * h)) / (12 * h * h)
    innermost = -upp * delta ** (2.0 - alpha) / (2.0 - alpha)

    def sym(t):
        return (2.0 * ux - u(x + t) - u(x - t)) / t ** (1.0 + alpha)

    near, _ = integrate.quad(sym, delta, split, epsabs=tol, epsrel=tol, limit=400)
    near += innermost
    far_const = 2.0 * ux * split ** (-alpha) / alpha
    far, err = integrate.quad(lambda t: (u(x + t) + u(x - t)) / t ** (1.0 + alpha), split,
                              np.inf, epsabs=tol, epsrel=tol, limit=400)
    if not np.isfinite(far) or err > 1e3 * max(tol, tol * abs(far)):
        raise ArithmeticError("tail of the principal-value integral did not converge")
    return d * (near + far_const - far)


def fourier_frac_even(fhat: Callable[[float], float], alpha: float, x: float,
                      tol: float = 1e-12, cutoff: float = 80.0) -> float:
    """``(-Delta)^{alpha/2} f(x)`` for even ``f`` on R from ``fhat(k) = int f e^{-ikx}``.

    Uses ``(1/pi) int_0^inf k^alpha fhat(k) cos(k x) dk``.
    """

    def integrand(k):
        return k**alpha * fhat(k)

    if x == 0.0:
        val, _ = integrate.quad(integrand, 0.0, cutoff, epsabs=tol, epsrel=tol, limit=400)
    else:
        val, _ = integrate.quad(integrand, 0.0, cutoff, weight="cos", wvar=x, epsabs=tol * 1e-2,
                                epsrel=tol, limit=400)
    return val / math.pi


def image_error_bound(alpha: float, l1_norm: float, length: float) -> float:
    """Leading error of the box operator on ``(0, length)`` against the whole-line one.

    Dirichlet sine series act on the odd ``2 length``-periodic extension; for
    a profile centred in the box the images of alternating sign at distances
    ``n length`` shift ``(-Delta)^{alpha/2} u`` near the centre by about
    ``2 d_{1,alpha} ||u||_1 eta(1 + alpha) / length^{1+alpha}`` with ``eta``
    the alternating zeta function.
    """
    eta = (1.0 - 2.0 ** (-alpha)) * special.zeta(1.0 + alpha)
    return 2.0 * riesz_constant(alpha, 1) * l1_norm * eta / length ** (1.0 + alpha)


def bubble_fourier(b: Bubble, k):
    """Fourier transform of ``u_eps`` (radial, ``int u e^{-i k x} dx`` convention)."""
    k = np.asarray(k, dtype=float)
    beta = b.beta
    nu = b.alpha / 2.0
    eps = b.eps
    ke = k * eps
    pref = (2.0 * math.pi) ** (b.dim / 2.0) * 2.0 ** (1.0 - beta) / special.gamma(beta)
    # u_eps = eps^{-beta} u_1(x / eps)  =>  hat u_eps(k) = eps^{N - beta} hat u_1(eps k)
    return eps ** (b.dim - beta) * pref * ke ** (-nu) * special.kv(nu, ke)


def bubble_rayleigh(alpha: float, dim: int, eps: float = 1.0, tol: float = 1e-11) -> float:
    """``||(-Delta)^{alpha/4} u_eps||^2_{L2(R^N)} / ||u_eps||^2_{L^{2*}}`` by quadrature.

    The numerator is computed on the Fourier side with symbol ``|k|^alpha``.
    """
    b = bubble(eps, alpha, dim)
    crit = 2.0 * dim / (dim - alpha)
    le = math.log(eps)

    def spectrum(kk):
        return kk**alpha * float(bubble_fourier(b, kk)) ** 2

    num = _radial_integral(spectrum, dim, lo=-40.0 / (dim - alpha) - le, hi=5.0 - le, points=[-le], tol=tol)
    num /= (2.0 * math.pi) ** dim
    den = _radial_integral(lambda r: float(b.radial(r)) ** crit, dim, lo=le - 40.0,
                           hi=le + 40.0 / (dim * (crit - 1.0)) + 40.0, points=[le], tol=tol)
    return num / den ** (2.0 / crit)


@dataclass
class ScalingReport:
    """Log-log fit of a cutoff-bubble norm against ``eps``."""

    quantity: str
    alpha: float
    dim: int
    r: float
    eps: np.ndarray
    norm: np.ndarray
    fitted_exponent: float
    stderr: float
    expected_exponent: float | None = None
    r_squared: float = float("nan")
    log_linear_r_squared: float | None = None
    notes: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "norm", "fitted_exponent", "stderr"])
        for e, n in zip(self.eps, self.norm):
            w.writerow([repr(float(e)), repr(float(n)), repr(self.fitted_exponent), repr(self.stderr)])
        return buf.getvalue()


_QUANTITIES = ("l2", "lr", "lq1", "crit")


def cutoff_norm_scaling(alpha: float, dim: int, r: float, eps_list: Sequence[float],
                        quantity: str = "l2", q: float | None = None,
                        min_r_squared: float = 0.999) -> ScalingReport:
    """Fit ``log ||phi u_eps|| ~ gamma log eps`` over a geometric ``eps_list``.

    quantity
        ``"l2"``: ``||phi u_eps||_2^2``; when ``N = 2 alpha`` the fit is done on
        ``||phi u_eps||_2^2 / log(1/eps)`` and a linear fit of
        ``||phi u_eps||_2^2 / eps^alpha`` against ``log(1/eps)`` is reported too.
        ``"lr"``: ``||phi u_eps||_r^r`` with ``r = (N + alpha)/(N - alpha)``.
        ``"lq1"``: ``||eta_eps||_{q+1}^{q+1}`` with ``eta = phi u_eps / ||phi u_eps||_{2*}``.
        ``"crit"``: ``||phi u_eps||_{2*}`` (should be flat).
    """
    if quantity not in _QUANTITIES:
        raise ValueError(f"quantity must be one of {_QUANTITIES}")
    eps = np.asarray(sorted(eps_list), dtype=float)
    if eps.max() >= r / 4.0:
        raise ValueError("largest eps must stay below r/4")
    if len(eps) < 3:
        raise ValueError("need at least three eps values for a fit")
    ratios = eps[1:] / eps[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ValueError("eps_list must be geometric")
    crit = 2.0 * dim / (dim - alpha)
    norms = []
    for e in eps:
        cb = cutoff_bubble(e, alpha, dim, r)
        if quantity == "l2":
            norms.append(cb.lp_norm(2.0))
        elif quantity == "lr":
            norms.append(cb.lp_norm((dim + alpha) / (dim - alpha)))
        elif quantity == "crit":
            norms.append(cb.lp_norm(crit, power=False))
        else:
            if q is None:
                raise ValueError("quantity 'lq1' needs q")
            scale = cb.lp_norm(crit, power=False)
            norms.append(cb.lp_norm(q + 1.0) / scale ** (q + 1.0))
    norms = np.asarray(norms)
    borderline = quantity == "l2" and math.isclose(dim, 2.0 * alpha)
    target = norms / np.log(1.0 / eps) if borderline else norms
    fit = stats.linregress(np.log(eps), np.log(target))
    expected = {
        "l2": alpha if dim >= 2 * alpha else dim - alpha,
        "lr": (dim - alpha) / 2.0,
        "crit": 0.0,
        "lq1": None if q is None else (alpha - dim) * q / 2.0 + (alpha + dim) / 2.0,
    }[quantity]
    rep = ScalingReport(quantity, alpha, dim, r, eps, norms, float(fit.slope), float(fit.stderr),
                        expected, float(fit.rvalue**2))
    if borderline:
        lin = stats.linregress(np.log(1.0 / eps), norms / eps**alpha)
        rep.log_linear_r_squared = float(lin.rvalue**2)
        rep.notes = "fit on norm / log(1/eps)"
    if quantity != "crit" and rep.r_squared < min_r_squared:
        raise ArithmeticError(
            f"log-log fit residual too large (R^2={rep.r_squared:.6f}); refine quadrature or eps range"
        )
    return rep

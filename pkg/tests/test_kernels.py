import math

import mpmath as mp
import numpy as np
import pytest
import scipy.integrate as integrate
from hypothesis import given, strategies as st

from fraclap.extension import kappa
from fraclap.kernels import (bubble, bubble_rayleigh, cutoff_bubble, cutoff_norm_scaling, fourier_frac_even,
                             image_error_bound, poisson_constant, poisson_extend, poisson_kernel,
                             riesz_constant, riesz_pv, sharp_sobolev_constant, smoothstep_cutoff,
                             sobolev_constant)


def sobolev_mp(a, n):
    """Trace constant from arbitrary-precision Gamma values."""
    mp.mp.dps = 30
    a = mp.mpf(a)
    num = 2 * mp.pi ** (a / 2) * mp.gamma((n + a) / 2) * mp.gamma((2 - a) / 2) * mp.gamma(mp.mpf(n) / 2) ** (a / n)
    return float(num / (mp.gamma(a / 2) * mp.gamma((n - a) / 2) * mp.gamma(n) ** (a / n)))


def test_sobolev_constant_alpha_one_plane():
    assert sobolev_constant(1.0, 2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)


@pytest.mark.parametrize("a,n", [(0.5, 1), (0.8, 2), (1.5, 2), (0.1, 1)])
def test_sobolev_constant_high_precision(a, n):
    assert sobolev_constant(a, n) == pytest.approx(sobolev_mp(a, n), rel=1e-13)


def test_sobolev_constant_regression():
    assert sobolev_constant(0.5, 1) == pytest.approx(0.40495836361518451, rel=1e-13)


@pytest.mark.parametrize("n", [1, 2])
def test_sobolev_constant_continuous(n):
    a = np.linspace(0.01, min(n, 2) - 0.01, 300)
    s = np.array([sobolev_constant(x, n) for x in a])
    assert np.all(np.isfinite(s)) and np.all(s > 0)
    # no poles or jumps: steps stay comparable to the grid spacing
    assert np.max(np.abs(np.diff(s))) < 20 * (a[1] - a[0]) * np.max(s)


def test_sobolev_constant_rejects_alpha_above_dim():
    with pytest.raises(ValueError):
        sobolev_constant(1.0, 1)


@pytest.mark.parametrize("a,n", [(1.0, 2), (0.5, 1), (0.8, 2)])
def test_bubble_quotient_is_sharp_constant(a, n):
    assert bubble_rayleigh(a, n) == pytest.approx(kappa(a).kappa_alpha * sobolev_constant(a, n), rel=1e-8)


def test_bubble_quotient_scale_invariant():
    assert bubble_rayleigh(0.8, 2, eps=2.0) == pytest.approx(bubble_rayleigh(0.8, 2, eps=1.0), rel=1e-10)


@given(st.floats(0.05, 5.0), st.sampled_from([(0.5, 1), (1.0, 2), (1.5, 2)]),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_bubble_shape(eps, case, x):
    a, n = case
    b1, be = bubble(1.0, a, n), bubble(eps, a, n)
    assert be(np.zeros(n)) == pytest.approx(eps ** (-(n - a) / 2))
    pt = np.array(x[:n])
    assert be(pt) == pytest.approx(eps ** ((a - n) / 2) * b1(pt / eps), rel=1e-12)
    r = np.linspace(0, 10, 50)
    assert np.all(np.diff(be.radial(r)) < 0) and np.all(be.radial(r) > 0)


def test_bubble_critical_norm_scale_free():
    a = 0.5
    crit = 2 / (1 - a)
    vals = [2 * integrate.quad(lambda x: bubble(e, a, 1).radial(x) ** crit, 0, np.inf, epsabs=0, epsrel=1e-12,
                               limit=400)[0] for e in (0.5, 1.0, 3.0)]
    assert np.allclose(vals, vals[0], rtol=1e-8)


def test_cutoff_profile():
    cb = cutoff_bubble(0.1, 1.0, 2, r=1.0)
    assert cb.radial(0.3) == pytest.approx(cb.bubble.radial(0.3))
    assert cb.radial(1.0) == 0.0 and cb.radial(2.0) == 0.0
    s = np.linspace(0, 1.2, 200)
    assert np.all(np.diff(smoothstep_cutoff(s)) <= 0)


@pytest.mark.parametrize("a", [0.3, 1.0, 1.7])
@pytest.mark.parametrize("y", [0.05, 1.0, 7.0])
def test_poisson_kernel_mass(a, y):
    mass = integrate.quad(lambda t: poisson_kernel(t, y, a), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    assert mass == pytest.approx(1.0, rel=1e-9)


def test_poisson_kernel_self_similar():
    x = np.linspace(-3, 3, 13)
    for y in (0.3, 2.0):
        assert np.allclose(poisson_kernel(x, y, 0.7), poisson_kernel(x / y, 1.0, 0.7) / y, rtol=1e-13)


def test_poisson_extend_constant():
    assert poisson_extend(lambda s: 1.0 if abs(s) < 1e4 else 0.0, 0.5, 0.0, 0.01) == pytest.approx(1.0, abs=1e-6)


def test_extended_bubble_self_similar():
    a, eps = 0.6, 0.4
    b1, be = bubble(1.0, a, 1), bubble(eps, a, 1)
    for x, y in ((0.0, 0.3), (0.5, 1.0)):
        lhs = poisson_extend(lambda s: float(be.radial(abs(s))), a, x, y)
        rhs = eps ** ((a - 1) / 2) * poisson_extend(lambda s: float(b1.radial(abs(s))), a, x / eps, y / eps)
        assert lhs == pytest.approx(rhs, rel=1e-6)


def test_constant_chain():
    # alpha c_{N,alpha} kappa_alpha = d_{N,alpha}
    for a in (0.4, 1.0, 1.6):
        assert a * poisson_constant(a, 1) * kappa(a).kappa_alpha == pytest.approx(riesz_constant(a, 1), rel=1e-8)


@pytest.mark.parametrize("a", [0.3, 0.5, 0.8])
def test_riesz_bubble_is_critical(a):
    # (-Delta)^{a/2} u_1 = 2^a Gamma((1+a)/2) / Gamma((1-a)/2) u_1^{2*-1} on R
    b = bubble(1.0, a, 1)
    c = 2**a * math.gamma((1 + a) / 2) / math.gamma((1 - a) / 2)
    for x in (0.0, 0.7):
        got = riesz_pv(lambda s: float(b.radial(abs(s))), a, x)
        assert got == pytest.approx(c * float(b.radial(x)) ** ((1 + a) / (1 - a)), rel=1e-8)


def test_riesz_zero_and_linearity():
    u = lambda s: math.exp(-s * s)
    v = lambda s: 1 / (1 + s**4)
    assert riesz_pv(lambda s: 0.0, 0.5, 0.3) == 0.0
    lhs = riesz_pv(lambda s: 2 * u(s) - 3 * v(s), 0.5, 0.3)
    assert lhs == pytest.approx(2 * riesz_pv(u, 0.5, 0.3) - 3 * riesz_pv(v, 0.5, 0.3), abs=1e-8)


@pytest.mark.parametrize("a", [0.5, 1.0, 1.5])
def test_riesz_matches_fourier(a):
    fhat = lambda k: math.sqrt(math.pi) * math.exp(-k * k / 4)
    for x in (0.0, 0.5, 1.3):
        ref = fourier_frac_even(fhat, a, x)
        assert riesz_pv(lambda s: math.exp(-s * s), a, x) == pytest.approx(ref, rel=1e-7, abs=1e-9)


def test_image_error_bound_decays():
    assert image_error_bound(0.5, 1.0, 100.0) == pytest.approx(image_error_bound(0.5, 1.0, 25.0) / 8.0)


EPS = np.geomspace(1e-6, 1e-3, 7)


def test_scaling_l2_above_borderline():
    rep = cutoff_norm_scaling(0.5, 2, 1.0, EPS, "l2")
    assert rep.fitted_exponent == pytest.approx(0.5, abs=0.05)


def test_scaling_l2_borderline_log():
    rep = cutoff_norm_scaling(1.0, 2, 1.0, EPS, "l2")
    assert rep.fitted_exponent == pytest.approx(1.0, abs=0.05)
    assert rep.log_linear_r_squared > 0.99


def test_scaling_lr_between():
    rep = cutoff_norm_scaling(0.75, 1, 1.0, EPS, "lr")
    assert rep.fitted_exponent == pytest.approx(0.125, abs=0.05)


def test_scaling_superlinear_power():
    rep = cutoff_norm_scaling(0.8, 2, 1.0, EPS, "lq1", q=2.0)
    assert rep.fitted_exponent == pytest.approx((0.8 - 2) * 2 / 2 + (0.8 + 2) / 2, abs=0.05)


def test_scaling_report_csv():
    rep = cutoff_norm_scaling(0.5, 2, 1.0, EPS, "l2")
    lines = rep.to_csv().splitlines()
    assert lines[0] == "eps,norm,fitted_exponent,stderr" and len(lines) == 1 + len(EPS)


@pytest.mark.parametrize("eps", [[1e-3, 1e-2, 0.5], [1e-4, 2e-4, 5e-4], [1e-4, 1e-3]])
def test_scaling_rejects_bad_eps(eps):
    with pytest.raises(ValueError):
        cutoff_norm_scaling(0.5, 2, 1.0, eps, "l2")

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import box_basis
from fraclap.extension import (ExtensionField, extend, kappa, kappa_closed_form, neumann_trace, theta_ode,
                               theta_profile)
from fraclap.spectral import SpectralFunction, apply_frac, norm_hs

ALPHAS = (0.3, 0.5, 0.9, 1.0, 1.3, 1.7)


def random_function(basis, seed):
    return SpectralFunction(basis, np.random.default_rng(seed).standard_normal(basis.size))


def test_profile_alpha_one_is_exponential():
    prof = theta_profile(1.0)
    s = np.linspace(0, 10, 21)
    assert np.allclose(prof(s), np.exp(-s), rtol=1e-13, atol=0)
    assert prof(1.0) == pytest.approx(math.exp(-1))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_profile_normalized_and_decreasing(alpha):
    prof = theta_profile(alpha)
    assert prof(0.0) == 1.0
    s = np.linspace(1e-6, 30, 400)
    assert np.all(np.diff(prof(s)) < 0)


@pytest.mark.parametrize("alpha", (0.5, 0.9, 1.3))
def test_profile_closed_form_matches_shooting(alpha):
    prof = theta_profile(alpha)
    for s in (0.3, 1.0, 3.0):
        assert prof(s) == pytest.approx(theta_ode(alpha, s), rel=1e-8)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_profile_envelope(alpha):
    # log theta(s) + s - (alpha - 1)/2 log s stays bounded on the tail
    prof = theta_profile(alpha)
    s = np.linspace(5, prof.s_max, 200)
    env = np.log(prof(s)) + s - 0.5 * (alpha - 1) * np.log(s)
    assert np.ptp(env) < 0.1


def test_kappa_one():
    assert kappa(1.0).kappa_alpha == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_kappa_against_closed_form(alpha):
    # The operational constant equals Gamma(a/2) / (2^{1-a} Gamma(1-a/2)); the
    # expression 2^{1-a} Gamma(1-a/2) / Gamma(a/2) is its reciprocal.
    k = kappa(alpha).kappa_alpha
    assert k == pytest.approx(kappa_closed_form(alpha), rel=1e-6)
    assert 1.0 / k == pytest.approx(2 ** (1 - alpha) * math.gamma(1 - alpha / 2) / math.gamma(alpha / 2),
                                    rel=1e-6)


def test_kappa_attaches_trace_constant():
    c = kappa(1.0, dim=2)
    assert c.s_alpha_N == pytest.approx(math.sqrt(math.pi))


def test_extend_first_mode_alpha_one():
    b = box_basis(1, 8)
    w = extend(SpectralFunction.mode(b, 0), 1.0)
    x = np.array([[0.4], [1.7]])
    for y in (0.0, 0.5, 2.0):
        expected = math.sqrt(2 / math.pi) * np.sin(x[:, 0]) * math.exp(-y)
        assert np.allclose(w(x, y), expected, atol=1e-14)


def test_extend_zero():
    w = extend(SpectralFunction.zeros(box_basis(1, 8)), 0.5)
    assert w.energy() == 0.0
    assert np.all(w([[1.0]], 0.3) == 0.0)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_isometry_random(alpha):
    b = box_basis(1, 16)
    for seed in range(5):
        u = random_function(b, seed)
        hs = norm_hs(u, alpha) ** 2
        assert abs(extend(u, alpha).energy() - hs) <= 1e-6 * hs


def test_isometry_two_dimensional():
    b = box_basis(2, 4)
    u = random_function(b, 7)
    hs = norm_hs(u, 1.3) ** 2
    assert extend(u, 1.3).energy() == pytest.approx(hs, rel=1e-6)


def test_neumann_trace_examples():
    b = box_basis(1, 8)
    phi1, phi2 = SpectralFunction.mode(b, 0), SpectralFunction.mode(b, 1)
    assert np.allclose(neumann_trace(extend(phi1, 0.6)).coeffs, phi1.coeffs, atol=1e-12)
    assert np.allclose(neumann_trace(extend(phi2, 1.0)).coeffs, 2 * phi2.coeffs, atol=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("method", ["series", "richardson"])
def test_neumann_trace_matches_operator(alpha, method):
    u = random_function(box_basis(1, 16), 3)
    got = neumann_trace(extend(u, alpha), method=method).coeffs
    ref = apply_frac(u, alpha).coeffs
    assert np.all(np.abs(got - ref) <= 1e-6 * np.abs(ref))


@given(st.integers(0, 10_000), st.floats(0.2, 1.8), st.floats(0.1, 3.0))
def test_trace_inequality_under_perturbation(seed, alpha, amp):
    # adding a field vanishing at y = 0 keeps the trace and strictly raises the energy
    b = box_basis(1, 6)
    u = random_function(b, seed)
    w = extend(u, alpha)
    bcoef = amp * np.random.default_rng(seed + 1).standard_normal(b.size)
    psi = lambda y: y * np.exp(-y)
    dpsi = lambda y: (1 - y) * np.exp(-y)
    z = ExtensionField(u, w.profile, (bcoef, psi, dpsi))
    assert np.allclose(z(np.array([[0.7]]), 0.0), w(np.array([[0.7]]), 0.0))
    assert norm_hs(u, alpha) ** 2 <= w.energy() * (1 + 1e-8)
    assert w.energy() < z.energy()

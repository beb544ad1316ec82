import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import box_basis
from fraclap.solvers import (MountainPassConfig, NegativePartWarning, NoSolutionError, Problem, SolverError,
                             branch_sweep, brezis_lieb_defect, brezis_lieb_scaling, critical_level, energy,
                             energy_gradient, eigen_identity_gap, linf_stability, make_barriers,
                             make_subsolution, monotone_iterate, mountain_pass, moved_functional,
                             newton_solve, nonexistence_probe, rayleigh_minimize, rayleigh_quotient, residual,
                             superlinear_solve, thread_count)
from fraclap.solvers.problem import is_positive, truncation_estimate
from fraclap.spectral import SpectralFunction, first_eigenpair, norm_hs

seeds = st.integers(0, 2**32 - 1)


def problem(dim=1, modes=32, alpha=0.5, q=0.5, lam=0.0):
    return Problem(box_basis(dim, modes), alpha, q, lam)


@pytest.fixture(scope="module")
def sublinear_1d():
    p = problem(lam=0.05)
    return p, monotone_iterate(p, make_subsolution(p))


@pytest.fixture(scope="module")
def sublinear_2d():
    p = problem(2, 16, 1.0, 0.5, 0.35)
    u0 = monotone_iterate(p, make_subsolution(p))
    return p, u0, mountain_pass(moved_functional(u0, p))


# problem and energy ---------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(alpha=1.0), dict(alpha=0.0), dict(q=3.5), dict(q=0.0), dict(lam=-1.0)])
def test_problem_windows(kw):
    base = dict(basis=box_basis(1, 8), alpha=0.5, q=0.5, lam=0.1)
    base.update(kw)
    with pytest.raises(ValueError):
        Problem(**base)


def test_energy_zero():
    p = problem(lam=1.0)
    assert energy(SpectralFunction.zeros(p.basis), p) == 0.0
    assert np.all(energy_gradient(SpectralFunction.zeros(p.basis), p).coeffs == 0.0)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_energy_on_first_mode(t):
    # N=1, alpha=1/2: 2* = 4 and int_0^pi phi_1^4 = 3 / (2 pi)
    p = problem(lam=0.0)
    u = SpectralFunction.mode(p.basis, 0) * t
    assert energy(u, p) == pytest.approx(t * t / 2 - t**4 / 4 * 3 / (2 * math.pi), rel=1e-12)


def test_gradient_along_first_mode():
    p = problem(lam=0.0)
    g = energy_gradient(SpectralFunction.mode(p.basis, 0), p)
    assert g.coeffs[0] == pytest.approx(1 - 3 / (2 * math.pi), rel=1e-12)


@given(seeds)
def test_energy_lambda_derivative(seed):
    p = problem(lam=0.3)
    a = np.abs(np.random.default_rng(seed).standard_normal(p.basis.size)) / (1 + p.basis.rho)
    h = 1e-5
    fd = (energy(a, p.with_lambda(0.3 + h), warn=False) - energy(a, p.with_lambda(0.3 - h), warn=False)) / (2 * h)
    vals = np.maximum(p.basis.to_fine(a), 0)
    exact = -p.basis.integrate_fine(vals ** (p.q + 1)) / (p.q + 1)
    assert fd == pytest.approx(exact, rel=1e-7, abs=1e-12)


def test_energy_warns_on_negative_part():
    p = problem(lam=0.1)
    with pytest.warns(NegativePartWarning):
        energy(-SpectralFunction.mode(p.basis, 0), p)


GRAD_CASES = [(1, 0.5, 0.5), (2, 1.0, 1.0), (2, 0.8, 2.0)]


@given(seeds, st.sampled_from(GRAD_CASES))
def test_gradient_matches_finite_differences(seed, case):
    dim, alpha, q = case
    p = problem(dim, 24 if dim == 1 else 8, alpha, q, 0.7)
    rng = np.random.default_rng(seed)
    lam1, phi = first_eigenpair(p.basis, alpha)
    a = 2.0 * phi.coeffs + 0.1 * rng.standard_normal(p.basis.size) / (1 + p.basis.rho)
    g = energy_gradient(a, p).coeffs
    d = rng.standard_normal(p.basis.size)
    h = 1e-6
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativePartWarning)
        fd = (energy(a + h * d, p) - energy(a - h * d, p)) / (2 * h)
    assert abs(fd - g @ d) <= 1e-6 * max(abs(g @ d), np.linalg.norm(g) * np.linalg.norm(d) * 1e-3)


# barriers and monotone iteration ---------------------------------------------

def test_barriers_ordered():
    p = problem(lam=0.05)
    sub, sup = make_barriers(p)
    lo, hi = p.basis.to_fine(sub.coeffs), p.basis.to_fine(sup.coeffs)
    assert np.all(lo <= hi) and lo.max() > 0
    # eps phi_1 is a subsolution: lambda_1 eps phi_1 <= f(eps phi_1)
    assert np.all(p.lambda_1 * lo <= p.f(lo) + 1e-15)


def test_barriers_trivial_at_zero():
    sub, sup = make_barriers(problem(lam=0.0))
    assert np.all(sub.coeffs == 0) and np.all(sup.coeffs == 0)


def test_barriers_fail_far_above():
    p = problem(lam=10.0)
    with pytest.raises(NoSolutionError):
        make_barriers(p)


def test_monotone_trivial_at_zero():
    p = problem(lam=0.0)
    sol = monotone_iterate(p, SpectralFunction.zeros(p.basis))
    assert np.all(sol.coeffs == 0) and sol.residual == 0.0


def test_monotone_minimal_solution(sublinear_1d):
    p, sol = sublinear_1d
    assert sol.residual < 1e-8 and sol.positive and sol.kind == "minimal"
    plain = monotone_iterate(p, make_subsolution(p), polish=False)
    # no ordering violation means every step moved up nodally, so the shift stayed 0
    assert plain.info["shift"] == 0.0
    assert np.abs(p.basis.to_fine(plain.coeffs - sol.coeffs)).max() < 1e-7


def test_monotone_reports_gap_to_downward_limit():
    p = problem(lam=0.05)
    sub, sup = make_barriers(p)
    sol = monotone_iterate(p, sub, sup)
    assert sol.info["gap"] < 1e-6


def test_monotone_refuses_superlinear():
    with pytest.raises(ValueError):
        monotone_iterate(problem(2, 8, 0.8, 2.0, 1.0), np.zeros(64))


def test_minimal_solutions_ordered_in_lambda():
    p = problem(lam=0.1)
    ua = monotone_iterate(p, make_subsolution(p))
    ub = monotone_iterate(p.with_lambda(0.3), make_subsolution(p.with_lambda(0.3)))
    assert np.all(p.basis.to_fine(ua.coeffs) <= p.basis.to_fine(ub.coeffs) + 1e-10)


@pytest.fixture(scope="module")
def branch_1d():
    p = problem(lam=0.0)
    return p, branch_sweep(p, np.linspace(0.01, 1.0, 25), tol_lambda=1e-3)


def test_branch_monotone_and_bracketed(branch_1d):
    p, br = branch_1d
    assert 0 < br.lambda_lo < br.lambda_hi and br.rel_width < 1e-3
    vals = np.array([p.basis.to_fine(s.coeffs) for s in br.points])
    assert np.all(np.diff(vals, axis=0) >= -1e-9)
    assert np.all(np.diff([s.linf for s in br.points]) >= 0)
    assert all(np.isfinite(s.energy) for s in br.points)


def test_branch_regression(branch_1d):
    _, br = branch_1d
    # fold of the discrete minimal branch lies in (0.5205, 0.5207) at 32 modes
    assert 0.5195 < br.lambda_lo < 0.5207 < br.lambda_hi < 0.522


def test_branch_above_bracket_all_fail(branch_1d):
    p, br = branch_1d
    with pytest.raises(SolverError):
        branch_sweep(p, np.linspace(1.05, 1.5, 4) * br.lambda_hi)


def test_newton_trivial_fixed_point():
    p = problem(lam=0.0)
    sol = newton_solve(p, np.zeros(p.basis.size))
    assert sol.iterations == 0 and sol.residual == 0.0


def test_newton_quadratic_from_minimal():
    p = problem(lam=0.3)
    rough = monotone_iterate(p, make_subsolution(p), tol=1e-3, polish=False)
    sol = newton_solve(p, rough.coeffs, tol=1e-13)
    h = sol.history
    assert sol.residual < 1e-13 and len(h) >= 3
    # e_{k+1} <= C e_k^2
    # over the last iterations, skipping steps that land on the round-off floor
    ratios = [h[k + 1] / h[k] ** 2 for k in range(len(h) - 1) if h[k + 1] > 1e-14]
    assert len(ratios) >= 2 and all(r < 1e3 for r in ratios[-2:])
    assert h[-2] < 1e-2 * h[-3]


def test_newton_finds_nothing_above_bracket(branch_1d):
    p, br = branch_1d
    pp = p.with_lambda(1.05 * br.lambda_hi)
    lam1, phi = first_eigenpair(p.basis, p.alpha)
    found = 0
    for amp in np.geomspace(0.1, 10, 8):
        try:
            sol = newton_solve(pp, amp * phi.coeffs, max_iters=60)
        except SolverError:
            continue
        found += sol.positive and sol.linf > 1e-6 and linf_stability(sol, pp)[0] < 0.1
    assert found == 0


# solution invariants ----------------------------------------------------------

def _identity_ok(sol, p):
    lam1, phi = first_eigenpair(p.basis, p.alpha)
    l1 = p.basis.integrate_fine(np.abs(p.basis.to_fine(phi.coeffs)))
    return abs(sol.eigen_identity_gap) <= max(10 * sol.residual * l1, 1e-12)


def test_eigen_identity_on_accepted_solutions(sublinear_1d, sublinear_2d, branch_1d):
    p, sol = sublinear_1d
    assert _identity_ok(sol, p)
    p2, u0, mp = sublinear_2d
    assert _identity_ok(u0, p2) and _identity_ok(mp.solution, p2)
    pb, br = branch_1d
    assert all(_identity_ok(s, pb.with_lambda(s.lam)) for s in br.points)


def test_linf_stable_under_refinement(sublinear_1d):
    p, sol = sublinear_1d
    change, ref = linf_stability(sol, p)
    assert change < 0.1 and ref.positive


def test_positivity_rule():
    b = box_basis(1, 16)
    lam1, phi = first_eigenpair(b, 0.5)
    assert is_positive(phi.coeffs, b)
    assert not is_positive(-phi.coeffs, b)
    assert not is_positive(np.zeros(b.size), b)
    assert truncation_estimate(phi.coeffs, b) == 0.0


# moved functional and mountain pass ------------------------------------------

def test_moved_functional_basics(sublinear_2d):
    p, u0, _ = sublinear_2d
    mf = moved_functional(u0, p)
    assert mf.energy(np.zeros(p.basis.size)) == 0.0
    assert np.abs(p.basis.to_fine(mf.gradient(np.zeros(p.basis.size)))).max() < 1e-8
    s = np.random.default_rng(0).uniform(-1, 3, p.basis.fine_grid)
    g = mf.g(s)
    assert np.all(g >= 0) and np.all(g[s < 0] == 0)


@given(seeds)
def test_translation_identity(seed):
    p = problem(2, 8, 1.0, 0.5, 0.3)
    u0 = monotone_iterate(p, make_subsolution(p), tol=1e-12)
    mf = moved_functional(u0, p)
    rng = np.random.default_rng(seed)
    # v >= 0 nodally: square of a random field, re-expanded
    raw = rng.standard_normal(p.basis.size) / (1 + p.basis.rho)
    v = p.basis.from_fine(p.basis.to_fine(raw) ** 2)
    v *= rng.uniform(0.1, 3.0) / max(np.abs(p.basis.to_fine(v)).max(), 1e-300)
    if p.basis.to_fine(v).min() < 0:
        # negative ringing of the re-expansion; the identity only holds for v >= 0
        return
    lhs = mf.energy(v)
    rhs = energy(u0.coeffs + v, p, warn=False) - energy(u0.coeffs, p, warn=False)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_mountain_pass_second_solution(sublinear_2d):
    p, u0, res = sublinear_2d
    u2 = res.solution
    assert u2.kind == "mountain_pass" and u2.positive
    assert u2.residual < 1e-8
    assert res.distance > 10 * 1e-10
    assert norm_hs(u2.u - u0.u, p.alpha) == pytest.approx(res.distance)
    assert res.c_est < res.c_star == pytest.approx(critical_level(1.0, 2))
    assert critical_level(1.0, 2) == pytest.approx(math.pi / 4)
    hist = np.array(res.path_max_history)
    assert np.all(np.diff(hist) <= 1e-14 * np.abs(hist[:-1]))
    path = res.solution.info["path"]
    mf = moved_functional(u0, p)
    assert path.shape[0] == 41 and mf.energy(path[0]) == 0.0 and mf.energy(path[-1]) < 0


def test_mountain_pass_config_validation():
    with pytest.raises(ValueError):
        MountainPassConfig(path_nodes=2)
    with pytest.raises(ValueError):
        MountainPassConfig(c_star=-1.0)


def test_mountain_pass_warns_below_alpha_one():
    p = problem(lam=0.05)
    u0 = monotone_iterate(p, make_subsolution(p))
    with pytest.warns(RuntimeWarning, match="alpha >= 1"):
        try:
            mountain_pass(moved_functional(u0, p))
        except SolverError:
            pass


def test_superlinear_solution():
    p = problem(2, 16, 0.8, 2.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        res = superlinear_solve(p)
    assert res.solution.positive and res.solution.residual < 1e-7
    assert res.c_est < res.c_star


def test_superlinear_window():
    with pytest.raises(ValueError):
        superlinear_solve(problem(1, 16, 0.8, 1.5, 1.0))


# Rayleigh quotient -----------------------------------------------------------

@pytest.fixture(scope="module")
def linear_2d():
    return problem(2, 12, 1.0, 1.0, 0.0)


def test_rayleigh_below_sharp_constant(linear_2d):
    p = linear_2d.with_lambda(0.5 * linear_2d.lambda_1)
    res = rayleigh_minimize(p)
    assert res.below_sharp and res.solution.positive and res.solution.residual < 1e-9
    assert rayleigh_quotient(res.minimizer, p) == pytest.approx(res.s_lambda, rel=1e-10)


def test_rayleigh_nonincreasing_in_lambda(linear_2d):
    lam1 = linear_2d.lambda_1
    vals = [rayleigh_minimize(linear_2d.with_lambda(f * lam1), refine=False).s_lambda for f in (0.2, 0.4, 0.6, 0.8)]
    assert np.all(np.diff(vals) < 0)


def test_rayleigh_preconditions(linear_2d):
    with pytest.raises(ValueError):
        rayleigh_minimize(linear_2d.with_lambda(1.1 * linear_2d.lambda_1))
    with pytest.raises(ValueError):
        rayleigh_minimize(problem(2, 8, 1.0, 0.5, 0.5))
    with pytest.raises(ValueError):
        rayleigh_minimize(problem(2, 8, 1.5, 1.0, 0.5))


def test_probe_matches_rayleigh(linear_2d):
    p = linear_2d.with_lambda(0.5 * linear_2d.lambda_1)
    ref = rayleigh_minimize(p).solution
    rep = nonexistence_probe(p, n_inits=4, seed=3)
    assert rep.n_found >= 1
    best = min(norm_hs(s.u - ref.u, 1.0) for s in rep.solutions)
    assert best < 1e-6


def test_probe_above_first_eigenvalue(linear_2d):
    rep = nonexistence_probe(linear_2d.with_lambda(1.1 * linear_2d.lambda_1), n_inits=4)
    assert rep.n_found == 0
    assert len(rep.attempts) == 5 and all(np.isfinite(r["amplitude"]) for r in rep.rows())


def test_probe_independent_of_threads(linear_2d):
    p = linear_2d.with_lambda(1.1 * linear_2d.lambda_1)
    a = [r for r in nonexistence_probe(p, n_inits=3, workers=1).rows()]
    b = [r for r in nonexistence_probe(p, n_inits=3, workers=3).rows()]
    assert a == b or np.allclose([r["residual"] for r in a], [r["residual"] for r in b], equal_nan=True)


def test_thread_count(monkeypatch):
    monkeypatch.setenv("FRACLAP_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("FRACLAP_THREADS", "bogus")
    assert thread_count() == 1


# Brezis-Lieb splitting ---------------------------------------------------------

def _smooth(x):
    return 1.0 + 0.3 * np.sin(np.sum(x))


def test_brezis_lieb_defect_halves():
    rep = brezis_lieb_scaling(_smooth, 2.0, 1.0, 2, [0.04, 0.02, 0.01, 0.005])
    assert np.all(np.abs(rep.halving_ratios - 2.0) <= 0.2 * 2.0)


@pytest.mark.parametrize("q,dim", [(1.5, 1), (3.0, 1), (3.0, 2)])
def test_brezis_lieb_rate(q, dim):
    rep = brezis_lieb_scaling(_smooth, q, 0.5 if dim == 1 else 1.0, dim, [1e-3, 5e-4, 2.5e-4])
    assert rep.fitted_rate == pytest.approx(dim / q, abs=0.05)
    alpha = 0.5 if dim == 1 else 1.0
    assert brezis_lieb_defect(_smooth, q, 1e-4, alpha, dim) < rep.defect[0]

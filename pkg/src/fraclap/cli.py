"""``fraclap`` command-line front end.

Each subcommand builds a run configuration from defaults, an optional JSON
config file and command-line flags (in increasing priority), runs the
matching library operation and writes CSV artifacts with a JSON header line
into the output directory.

Exit status: 0 on success, 2 when the solver reports that no positive
solution exists, 1 on errors.  A probe that finds nothing where theory rules
solutions out (``q = 1`` with ``lambda >= lambda_1``, or ``lambda = 0``) is a
success.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import re
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io as fio
from .extension import extend, kappa, kappa_closed_form, neumann_trace
from .kernels import (bubble_rayleigh, cutoff_norm_scaling, poisson_constant, riesz_constant,
                      sharp_sobolev_constant, sobolev_constant)
from .solvers import (NoSolutionError, Problem, SolverError, branch_sweep, make_subsolution,
                      monotone_iterate, mountain_pass, moved_functional, nonexistence_probe,
                      rayleigh_minimize, superlinear_solve)
from .spectral import Domain, SpectralFunction, build_basis, first_eigenpair, norm_hs

log = logging.getLogger("fraclap")

EXIT_OK, EXIT_ERROR, EXIT_NONEXISTENCE = 0, 1, 2

COMMANDS = ("verify-constants", "verify-extension", "scaling", "solve", "branch", "rayleigh",
            "second-solution", "probe")

DEFAULTS = {
    "problem": {"dim": 1, "alpha": 0.5, "q": 0.5, "length": math.pi},
    "numerics": {"oversample": 4, "tol": 1e-9, "seed": 0, "n_inits": 16, "tol_lambda": 1e-3,
                 "quantity": "l2", "radius": 1.0, "n_functions": 20,
                 "eps_list": [float(e) for e in np.geomspace(1e-6, 1e-3, 7)]},
    "output": {"directory": "fraclap-out"},
}

COMMAND_DEFAULTS = {
    "verify-constants": {"problem": {"dim": 2, "alpha": 1.0}},
    "rayleigh": {"problem": {"dim": 2, "alpha": 1.0, "q": 1.0, "lambda_frac": 0.5}},
    "probe": {"problem": {"dim": 2, "alpha": 1.0, "q": 1.0}},
    "second-solution": {"problem": {"dim": 2, "alpha": 1.0, "q": 0.5}},
}


class ConfigError(ValueError):
    pass


# configuration -------------------------------------------------------------

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the last key of ``path`` in the raw JSON."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(keys[-1]), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_config_file(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    errors = sorted(jsonschema.Draft202012Validator(fio.load_schema()).iter_errors(data),
                    key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            field = ".".join(str(p) for p in err.absolute_path) or "<root>"
            line = _line_of(text, err.absolute_path)
            where = f"{path}:{line}" if line else str(path)
            lines.append(f"{where}: field '{field}': {err.message}")
        raise ConfigError("\n".join(lines))
    return data


def _flag_config(args) -> dict:
    problem = {k: v for k, v in {
        "dim": args.dim, "alpha": args.alpha, "q": args.q, "lambda": args.lam,
        "lambda_frac": args.lambda_frac, "length": args.length}.items() if v is not None}
    numerics = {k: v for k, v in {
        "modes": args.modes, "oversample": args.oversample, "tol": args.tol, "seed": args.seed,
        "n_inits": args.n_inits, "tol_lambda": args.tol_lambda, "quantity": args.quantity,
        "radius": args.radius, "n_functions": args.n_functions,
        "eps_list": _floats(args.eps_list), "lambda_grid": _floats(args.lambda_grid)}.items()
        if v is not None}
    out = {}
    if problem:
        out["problem"] = problem
    if numerics:
        out["numerics"] = numerics
    if args.output is not None:
        out["output"] = {"directory": args.output}
    return out


def _floats(text):
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def build_config(args) -> dict:
    cfg = _merge(DEFAULTS, COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        filecfg = load_config_file(args.config)
        if "command" in filecfg and filecfg["command"] != args.command:
            log.warning("config file command %r overridden by %r", filecfg["command"], args.command)
        filecfg.pop("command", None)
        filecfg.pop("schema_version", None)
        cfg = _merge(cfg, filecfg)
    cfg = _merge(cfg, _flag_config(args))
    if "problem" in cfg and "lambda" in cfg["problem"] and "lambda_frac" in cfg["problem"]:
        # an explicit flag wins over a value inherited from defaults or the file
        if args.lam is not None:
            cfg["problem"].pop("lambda_frac")
        elif args.lambda_frac is not None:
            cfg["problem"].pop("lambda")
        else:
            raise ConfigError("field 'problem': give either lambda or lambda_frac, not both")
    num = cfg["numerics"]
    num.setdefault("modes", 32 if cfg["problem"]["dim"] == 1 else 24)
    cfg["command"] = args.command
    cfg["schema_version"] = fio.SCHEMA_VERSION
    try:
        jsonschema.validate(cfg, fio.load_schema())
    except jsonschema.ValidationError as err:
        field = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"field '{field}': {err.message}") from None
    _check_windows(cfg)
    return cfg


def _check_windows(cfg):
    pr = cfg["problem"]
    n, a, q = pr["dim"], pr["alpha"], pr["q"]
    if not n > a:
        raise ConfigError(f"field 'problem.alpha': need N > alpha (N={n}, alpha={a})")
    crit = 2.0 * n / (n - a)
    if cfg["command"] not in ("verify-constants", "verify-extension", "scaling") and not 0 < q < crit - 1:
        raise ConfigError(f"field 'problem.q': need 0 < q < 2*-1 = {crit - 1:g}, got {q}")


def _problem(cfg, lam=None) -> Problem:
    pr, num = cfg["problem"], cfg["numerics"]
    n, m = pr["dim"], num["modes"]
    dom = Domain((pr["length"],) * n, (m,) * n)
    basis = build_basis(dom, (m,) * n, num["oversample"])
    p = Problem(basis, pr["alpha"], pr["q"], 0.0)
    if lam is None:
        lam = _resolve_lambda(cfg, p)
    return p.with_lambda(lam) if lam is not None else p


def _resolve_lambda(cfg, p: Problem):
    pr = cfg["problem"]
    if "lambda" in pr:
        return float(pr["lambda"])
    if "lambda_frac" in pr:
        return float(pr["lambda_frac"]) * p.lambda_1
    return None


def _outdir(cfg) -> Path:
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solution_meta(sol):
    return {"kind": sol.kind, "lambda": sol.lam, "residual": sol.residual, "energy": sol.energy,
            "linf": sol.linf, "eigen_identity_gap": sol.eigen_identity_gap, "positive": sol.positive}


# commands ------------------------------------------------------------------

def cmd_verify_constants(cfg) -> int:
    a, n = cfg["problem"]["alpha"], cfg["problem"]["dim"]
    k = kappa(a).kappa_alpha
    s = sobolev_constant(a, n)
    ks = sharp_sobolev_constant(a, n)
    rows = [
        ("S_alpha_N", s, math.sqrt(math.pi) if (a, n) == (1.0, 2) else float("nan")),
        ("kappa_alpha", k, kappa_closed_form(a)),
        ("kappa_S", ks, bubble_rayleigh(a, n)),
        ("c_N_alpha", poisson_constant(a, n), float("nan")),
        ("d_N_alpha", riesz_constant(a, n), float("nan")),
    ]
    print(f"S({a:g},{n}) = {s:.6f}")
    print(f"kappa_{a:g} = {k:.6f}")
    print(f"kappa*S = {ks:.6f} (bubble quotient {rows[2][2]:.6f})")
    fio.write_artifact(_outdir(cfg) / "constants.csv", "constants", cfg,
                       ["name", "value", "reference", "abs_error"],
                       [(nm, v, r, abs(v - r)) for nm, v, r in rows])
    return EXIT_OK


def cmd_verify_extension(cfg) -> int:
    pr, num = cfg["problem"], cfg["numerics"]
    a, n = pr["alpha"], pr["dim"]
    m = min(num["modes"], 16) if n == 1 else min(num["modes"], 4)
    dom = Domain((pr["length"],) * n, (max(m, 16),) * n)
    basis = build_basis(dom, (m,) * n, num["oversample"])
    rng = np.random.default_rng(num["seed"])
    rows = []
    worst_iso = worst_trace = 0.0
    for i in range(num["n_functions"]):
        u = SpectralFunction(basis, rng.standard_normal(basis.size))
        w = extend(u, a)
        hs = norm_hs(u, a) ** 2
        iso = abs(w.energy() - hs) / hs
        tr = neumann_trace(w)
        lhs = tr.coeffs
        rhs = u.coeffs * basis.rho ** (a / 2)
        terr = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
        worst_iso, worst_trace = max(worst_iso, iso), max(worst_trace, terr)
        rows.append((i, hs, w.energy(), iso, terr))
    print(f"alpha={a:g}: max isometry defect {worst_iso:.3e}, max Neumann-trace error {worst_trace:.3e}")
    fio.write_artifact(_outdir(cfg) / "extension.csv", "extension", cfg,
                       ["function", "norm_hs_sq", "extension_energy", "isometry_defect", "trace_error"], rows)
    return EXIT_OK


def cmd_scaling(cfg) -> int:
    pr, num = cfg["problem"], cfg["numerics"]
    rep = cutoff_norm_scaling(pr["alpha"], pr["dim"], num["radius"], num["eps_list"], num["quantity"],
                              q=pr.get("q"))
    print(f"{rep.quantity}: fitted exponent {rep.fitted_exponent:.4f} +- {rep.stderr:.1e}"
          f" (expected {rep.expected_exponent})")
    fio.write_artifact(_outdir(cfg) / "scaling.csv", "scaling", cfg,
                       ["eps", "norm", "fitted_exponent", "stderr"],
                       [(e, v, rep.fitted_exponent, rep.stderr) for e, v in zip(rep.eps, rep.norm)],
                       extra={"expected_exponent": rep.expected_exponent, "r_squared": rep.r_squared})
    return EXIT_OK


def cmd_solve(cfg) -> int:
    p = _problem(cfg)
    if p.lam is None:
        raise ConfigError("field 'problem.lambda': solve needs lambda or lambda_frac")
    tol = cfg["numerics"]["tol"]
    if p.q < 1:
        sol = monotone_iterate(p, make_subsolution(p), tol=tol) if p.lam > 0 else None
        if sol is None:
            raise NoSolutionError("lambda = 0 gives only the trivial solution")
    elif p.q == 1:
        if p.lam >= p.lambda_1:
            raise NoSolutionError(f"no positive solution for lambda >= lambda_1 = {p.lambda_1:g}")
        sol = rayleigh_minimize(p, newton_tol=tol).solution
    else:
        sol = superlinear_solve(p).solution
    print(f"{sol.kind} solution at lambda={sol.lam:g}: max u = {sol.linf:.6g}, residual {sol.residual:.2e}")
    fio.write_snapshot(_outdir(cfg) / "solution.csv", sol.u, cfg, _solution_meta(sol))
    return EXIT_OK


def _lambda_grid(cfg, p):
    grid = cfg["numerics"].get("lambda_grid")
    if grid:
        return np.asarray(grid, dtype=float)
    return p.lambda_1 * np.linspace(0.01, 2.0, 50)


def cmd_branch(cfg) -> int:
    p = _problem(cfg, lam=0.0)
    if not p.q < 1:
        raise ConfigError("field 'problem.q': branch needs q < 1")
    br = branch_sweep(p, _lambda_grid(cfg, p), tol_lambda=cfg["numerics"]["tol_lambda"],
                      tol=cfg["numerics"]["tol"])
    cols = ["row", "lambda", "lambda_hi", "linf", "energy", "residual", "eigen_identity_gap"]
    rows = [("point", r["lambda"], None, r["linf"], r["energy"], r["residual"], r["eigen_identity_gap"])
            for r in br.rows()]
    rows.append(("bracket", br.lambda_lo, br.lambda_hi, None, None, None, None))
    print(f"{len(br.points)} minimal solutions; threshold bracket [{br.lambda_lo:.6g}, {br.lambda_hi:.6g}]")
    fio.write_artifact(_outdir(cfg) / "branch.csv", "branch", cfg, cols, rows,
                       extra={"lambda_1": p.lambda_1})
    return EXIT_OK


def cmd_rayleigh(cfg) -> int:
    p = _problem(cfg)
    if p.lam >= p.lambda_1:
        raise NoSolutionError(f"no positive solution for lambda >= lambda_1 = {p.lambda_1:g}")
    res = rayleigh_minimize(p, newton_tol=cfg["numerics"]["tol"])
    print(f"S_lambda = {res.s_lambda:.8f}; kappa*S = {res.sharp_constant:.8f}; below: {res.below_sharp}")
    out = _outdir(cfg)
    row = [p.lam, res.s_lambda, res.sharp_constant, res.below_sharp, res.iterations]
    cols = ["lambda", "s_lambda", "sharp_constant", "below_sharp", "iterations"]
    if res.solution is not None:
        cols += ["residual", "linf"]
        row += [res.solution.residual, res.solution.linf]
        fio.write_snapshot(out / "solution.csv", res.solution.u, cfg, _solution_meta(res.solution))
    fio.write_artifact(out / "rayleigh.csv", "rayleigh", cfg, cols, [row])
    return EXIT_OK


def cmd_second_solution(cfg) -> int:
    p = _problem(cfg)
    tol = cfg["numerics"]["tol"]
    if not p.q < 1:
        raise ConfigError("field 'problem.q': second-solution needs q < 1")
    if p.lam is None:
        br = branch_sweep(p.with_lambda(0.0), _lambda_grid(cfg, p), tol_lambda=1e-2, tol=tol)
        p = p.with_lambda(0.5 * br.lambda_lo)
        log.info("using mid-branch lambda %.6g", p.lam)
    u0 = monotone_iterate(p, make_subsolution(p), tol=tol)
    res = mountain_pass(moved_functional(u0, p))
    u2 = res.solution
    print(f"second solution at lambda={p.lam:.6g}: level {res.c_est:.6f} (c* = {res.c_star:.6f}),"
          f" max u = {u2.linf:.6g} vs minimal {u0.linf:.6g}")
    out = _outdir(cfg)
    fio.write_snapshot(out / "minimal.csv", u0.u, cfg, _solution_meta(u0))
    fio.write_snapshot(out / "second.csv", u2.u, cfg, _solution_meta(u2))
    fio.write_artifact(out / "second_solution.csv", "second-solution", cfg,
                       ["lambda", "c_est", "c_star", "below_c_star", "residual", "distance", "linf_minimal",
                        "linf_second"],
                       [(p.lam, res.c_est, res.c_star, res.below_threshold, u2.residual, res.distance,
                         u0.linf, u2.linf)])
    return EXIT_OK


def cmd_probe(cfg) -> int:
    p = _problem(cfg)
    if p.lam is None:
        raise ConfigError("field 'problem.lambda': probe needs lambda or lambda_frac")
    num = cfg["numerics"]
    rep = nonexistence_probe(p, n_inits=num["n_inits"], seed=num["seed"], tol=num["tol"])
    cols = ["init", "amplitude", "outcome", "residual", "linf", "eigen_identity_gap", "refined_linf"]
    fio.write_artifact(_outdir(cfg) / "probe.csv", "probe", cfg, cols, list(rep.rows()),
                       extra={"lambda": p.lam, "lambda_1": rep.lambda_1, "n_found": rep.n_found})
    ruled_out = p.lam == 0 or (p.q == 1 and p.lam >= rep.lambda_1)
    if rep.n_found == 0:
        print(f"no positive solution found ({len(rep.attempts)} starts, "
              f"{rep.n_unresolved} grid-scale states rejected)")
        return EXIT_OK if ruled_out else EXIT_NONEXISTENCE
    print(f"{rep.n_found} positive solution(s) found")
    if ruled_out:
        log.error("positive solution found where none can exist: probe FAILURE")
        return EXIT_ERROR
    return EXIT_OK


HANDLERS = {
    "verify-constants": cmd_verify_constants,
    "verify-extension": cmd_verify_extension,
    "scaling": cmd_scaling,
    "solve": cmd_solve,
    "branch": cmd_branch,
    "rayleigh": cmd_rayleigh,
    "second-solution": cmd_second_solution,
    "probe": cmd_probe,
}

HELP = {
    "verify-constants": "print S(alpha,N), kappa_alpha and derived constants",
    "verify-extension": "check the extension isometry and Neumann trace on random functions",
    "scaling": "fit power laws of cutoff-bubble norms in eps",
    "solve": "one positive solution (minimal for q<1, Rayleigh for q=1, mountain pass for q>1)",
    "branch": "minimal-solution branch and existence-threshold bracket (q<1)",
    "rayleigh": "minimize the critical quotient for q=1",
    "second-solution": "mountain-pass solution above the minimal one (q<1)",
    "probe": "multi-start search for positive solutions",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Spectral solvers for (-Delta)^{alpha/2} u = lambda u^q + u^{2*-1} on boxes.",
        epilog="Exit status: 0 success, 2 nonexistence reported by the solver, 1 error. "
               "FRACLAP_THREADS sets the worker count of the probe.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name],
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sp.add_argument("--config", help="JSON run configuration (see docs/config.schema.json)")
        sp.add_argument("--output", "-o", help="output directory (default fraclap-out)")
        g = sp.add_argument_group("problem")
        g.add_argument("--dim", type=int, help="space dimension N (1 or 2)")
        g.add_argument("--alpha", type=float, help="order alpha in (0, min(N,2))")
        g.add_argument("--q", type=float, help="lower power q")
        g.add_argument("--lambda", dest="lam", type=float, help="lambda")
        g.add_argument("--lambda-frac", type=float, help="lambda as a multiple of lambda_1")
        g.add_argument("--length", type=float, help="box side (default pi)")
        g = sp.add_argument_group("numerics")
        g.add_argument("--modes", type=int, help="modes per axis (default 32 in 1D, 24 in 2D)")
        g.add_argument("--oversample", type=int, help="quadrature oversampling factor (default 4)")
        g.add_argument("--tol", type=float, help="residual tolerance (default 1e-9)")
        g.add_argument("--seed", type=int, help="random seed (default 0)")
        g.add_argument("--n-inits", type=int, help="probe starts (default 16)")
        g.add_argument("--lambda-grid", help="comma-separated lambda values for branch sweeps")
        g.add_argument("--tol-lambda", type=float, help="relative bracket width (default 1e-3)")
        g.add_argument("--eps-list", help="comma-separated geometric eps values for scaling")
        g.add_argument("--quantity", choices=["l2", "lr", "lq1", "crit"], help="scaling quantity (default l2)")
        g.add_argument("--radius", type=float, help="cutoff radius for scaling (default 1)")
        g.add_argument("--n-functions", type=int, help="random functions for verify-extension (default 20)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except NoSolutionError as exc:
        print(f"no positive solution: {exc}", file=sys.stderr)
        return EXIT_NONEXISTENCE
    except (SolverError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

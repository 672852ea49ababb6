"""Command line entry point: ``maxintpos <command> --scenario FILE``.

Every run writes ``report.json`` to ``--out`` plus one tab-separated table:

  optimize   trajectory.tsv  iteration, value, grad_norm (best restart)
  certify    residuals.tsv   i, j, M, M_stderr, residual (M - C I)
  gradcheck  gradcheck.tsv   direction_id, kind, analytic, numeric, gap, bound, pass
  scan       scan.tsv        r, m, stderr, converged, flagged
  mu-john    mu_john.tsv     r, iso_residual, iso_stderr, shape_residual, support_distance, mass
  validate   validate.tsv    check, param1, param2, value, reference, error, pass

Exit codes: 0 success, 1 input error, 2 failed certificate or check,
3 optimizer non-convergence or a flagged scan.
"""
import argparse
import csv
import json
import os
import sys
import time

import numpy as np
from scipy import integrate, linalg

from . import __version__, _rng
from .bodies import AllSpace, Ball, Ellipsoid
from .certify import certificate_from_bundle, john_limit_measure
from .errors import (DecayFitError, EmptyRegionError, InputError, PreconditionError, SingularPointError,
                     UnsupportedError)
from .functions import LogConcaveFunc
from .optimizer import OptimizeConfig, maximize, scan_radius
from .position import Position
from .quadrature import moment_bundle, polar_identity_check
from .scenario import parse_scenario
from .variation import check_regularity, closed_form_I, fd_check

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_NONCONV = 0, 1, 2, 3
COMMANDS = ("optimize", "certify", "gradcheck", "scan", "mu-john", "validate")
VALIDATE_TOL = 1e-8


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    p = _Parser(prog="maxintpos", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", help="scenario JSON file (not needed for validate)")
    p.add_argument("--budget", type=int, help="samples per integral (overrides the scenario)")
    p.add_argument("--seed", type=int, help="base seed (overrides the scenario)")
    p.add_argument("--tol", type=float, help="certificate tolerance (overrides the scenario)")
    p.add_argument("--workers", type=int, default=1, help="threads for sample blocks")
    p.add_argument("--out", default="maxintpos-out", help="output directory")
    p.add_argument("--radii", help="comma-separated radii for scan and mu-john")
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step for gradcheck")
    p.add_argument("--directions", type=int, default=5, help="random traceless directions for gradcheck")
    p.add_argument("--shifts", type=int, default=3, help="random shift directions for gradcheck")
    return p


def _clean(obj):
    """JSON-safe copy: numpy to lists and floats, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _radii(args, sc):
    if args.radii:
        try:
            return [float(r) for r in args.radii.split(",") if r.strip()]
        except ValueError:
            raise InputError("--radii must be a comma-separated list of numbers") from None
    if sc is not None and sc.radii:
        return [float(r) for r in sc.radii]
    raise InputError("no radii given (use --radii or the scenario's 'radii')")


def _measure_parts(sc):
    """Split a measure-mode scenario into (mu, K, L): f is mu restricted to K, g the indicator of L."""
    f = sc.f
    if isinstance(f.support, AllSpace):
        raise InputError("measure mode needs f restricted to a body K (e.g. restricted_gaussian)")
    mu = LogConcaveFunc(f.potential, AllSpace(sc.dim), f.log_scale)
    return mu, f.support, sc.g.support


def _regularity(sc, g):
    if not sc.flags["support_regularity"]:
        raise UnsupportedError("scenario declares support_regularity false")
    check_regularity(sc.f, g)


def _config(sc, budget, seed, workers, **defaults):
    opts = dict(defaults)
    opts.update(sc.optimizer)
    opts.setdefault("budget_per_eval", budget)
    return OptimizeConfig(seed=seed, workers=workers, **opts)


def cmd_optimize(sc, args, ctx):
    _regularity(sc, sc.g)
    cfg = _config(sc, ctx["budget"], ctx["seed"], args.workers)
    res = maximize(sc.f, sc.g, sc.mode, cfg, sc.position, check=False)
    bundle = moment_bundle(sc.f, sc.g.pullback(res.position), ctx["budget"], ctx["seed"], workers=args.workers)
    cert = certificate_from_bundle(bundle, ctx["tol"])
    payload = res.to_dict()
    payload["certificate"] = cert.to_dict()
    _write_table(os.path.join(args.out, "trajectory.tsv"), ["iteration", "value", "grad_norm"], res.trajectory)
    return payload, EXIT_OK if res.converged else EXIT_NONCONV


def cmd_certify(sc, args, ctx):
    g = sc.g_at_position
    _regularity(sc, g)
    bundle = moment_bundle(sc.f, g, ctx["budget"], ctx["seed"], workers=args.workers)
    cert = certificate_from_bundle(bundle, ctx["tol"])
    n = sc.dim
    R = cert.M - cert.C * np.eye(n)
    rows = [(i, j, cert.M[i, j], cert.M_stderr[i, j], R[i, j]) for i in range(n) for j in range(n)]
    _write_table(os.path.join(args.out, "residuals.tsv"), ["i", "j", "M", "M_stderr", "residual"], rows)
    payload = cert.to_dict()
    payload["bundle"] = bundle.to_dict()
    return payload, EXIT_OK if cert.passed else EXIT_FAIL


def _directions(n, count, shifts, seed):
    rng = _rng.generator(seed, _rng.DIRECTIONS, 0)
    out = []
    if n > 1:
        for _ in range(count):
            D = rng.standard_normal((n, n))
            D -= np.trace(D) / n * np.eye(n)
            out.append(("matrix", D / np.linalg.norm(D)))
    for _ in range(shifts):
        y = rng.standard_normal(n)
        out.append(("shift", y / np.linalg.norm(y)))
    return out


def cmd_gradcheck(sc, args, ctx):
    g = sc.g_at_position
    _regularity(sc, g)
    rows, checks = [], []
    for k, (kind, d) in enumerate(_directions(sc.dim, args.directions, args.shifts, ctx["seed"])):
        chk = fd_check(sc.f, g, d, args.h, ctx["budget"], ctx["seed"] + 2 * k, args.workers)
        rows.append((k, kind, chk.analytic, chk.numeric, chk.gap, chk.bound(), chk.passed()))
        item = chk.to_dict()
        item.update({"id": k, "kind": kind, "direction": d, "pass": chk.passed()})
        checks.append(item)
    _write_table(os.path.join(args.out, "gradcheck.tsv"),
                 ["direction_id", "kind", "analytic", "numeric", "gap", "bound", "pass"], rows)
    within = sum(r[-1] for r in rows)
    strict = all(c["gap"] <= 5 * c["bound"] for c in checks)
    ok = bool(rows) and within >= 0.95 * len(rows) and strict
    return {"h": args.h, "checks": checks, "fraction_within_bound": within / max(len(rows), 1),
            "all_within_5x": strict, "pass": ok}, EXIT_OK if ok else EXIT_FAIL


def cmd_scan(sc, args, ctx):
    mu, K, L = _measure_parts(sc)
    cfg = _config(sc, ctx["budget"], ctx["seed"], args.workers, restarts=1)
    pts = scan_radius(mu, K, L, _radii(args, sc), cfg)
    rows = [(p.r, p.value.value, p.value.stderr, p.result.converged, p.flagged) for p in pts]
    _write_table(os.path.join(args.out, "scan.tsv"), ["r", "m", "stderr", "converged", "flagged"], rows)
    flagged = any(p.flagged for p in pts)
    return {"points": [p.to_dict() for p in pts], "sandwich_ok": not flagged}, \
        EXIT_NONCONV if flagged else EXIT_OK


def cmd_mu_john(sc, args, ctx):
    mu, K, _ = _measure_parts(sc)
    cfg = _config(sc, ctx["budget"], ctx["seed"], args.workers, restarts=1)
    steps = john_limit_measure(mu, K, _radii(args, sc), ctx["tol"], ctx["budget"], ctx["seed"], cfg,
                               workers=args.workers)
    rows = [(s.r, s.iso_residual, s.iso_stderr, s.shape_residual, s.support_distance, s.sample.total)
            for s in steps]
    _write_table(os.path.join(args.out, "mu_john.tsv"),
                 ["r", "iso_residual", "iso_stderr", "shape_residual", "support_distance", "mass"], rows)
    iso_ok = all(b.iso_residual <= a.iso_residual + 3 * np.hypot(a.iso_stderr, b.iso_stderr)
                 for a, b in zip(steps, steps[1:]))
    dist_ok = all(b.support_distance < a.support_distance for a, b in zip(steps, steps[1:]))
    payload = {"steps": [s.to_dict() for s in steps], "iso_non_increasing": iso_ok,
               "support_distance_decreasing": dist_ok,
               "measure": "density-weighted surface measure on the boundary of K inside T_r B + z_r"}
    return payload, EXIT_OK if iso_ok and dist_ok else EXIT_FAIL


def reference_I(lam, s):
    """int exp(-(|t| + |lam t + s|)) dt by adaptive quadrature with the kinks as breakpoints."""
    kinks = sorted({0.0, -s / lam})
    edges = [-60.0 + kinks[0]] + kinks + [60.0 + kinks[-1]]
    fn = lambda t: np.exp(-(abs(t) + abs(lam * t + s)))
    return sum(integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
               for a, b in zip(edges, edges[1:]) if b > a)


def validation_grid():
    lams = np.round(np.arange(0.1, 10.0001, 0.1), 10)
    ss = np.round(np.arange(-5.0, 5.0001, 0.5), 10)
    return lams, ss


def _random_sl(rng, n, spread=0.3):
    """exp of a small random traceless matrix: determinant one, condition number near 1."""
    D = spread * rng.standard_normal((n, n))
    return linalg.expm(D - np.trace(D) / n * np.eye(n))


def polar_cases(seed=0):
    """(label, body, A, T) for ball and ellipsoid in n = 2, 3 with three random A each."""
    rng = _rng.generator(seed, _rng.AUX, 10 ** 6)
    out = []
    for n in (2, 3):
        S = 0.2 * rng.standard_normal((n, n))
        bodies = [("ball", Ball(1.0, n)), ("ellipsoid", Ellipsoid(linalg.expm(S + S.T)))]
        for name, body in bodies:
            for k in range(3):
                out.append((f"{name}-n{n}-A{k}", body, rng.standard_normal((n, n)), _random_sl(rng, n)))
    return out


def polar_phi(x):
    x = np.atleast_2d(x)
    return 2.0 + np.cos(x[:, 0]) + 0.5 * np.tanh(x[:, -1])


def cmd_validate(sc, args, ctx):
    rows = []
    lams, ss = validation_grid()
    worst = 0.0
    for lam in lams:
        for s in ss:
            v, ref = closed_form_I(lam, s), reference_I(lam, s)
            worst = max(worst, abs(v - ref))
    rows.append(("closed_form_grid", len(lams), len(ss), worst, 0.0, worst, worst <= VALIDATE_TOL))
    cont = max(max(abs(closed_form_I(1 + e, s) - closed_form_I(1.0, s)) for e in (-1e-6, 1e-6)) for s in ss)
    rows.append(("closed_form_continuity", 1.0, 1e-6, cont, 0.0, cont, cont <= 1e-5))
    polar = []
    budget = ctx["budget"]
    for k, (label, body, A, T) in enumerate(polar_cases(ctx["seed"])):
        chk = polar_identity_check(polar_phi, body, A, T, budget, ctx["seed"] + k, args.workers)
        ok = chk.gap <= 3 * chk.combined_stderr
        rows.append((f"polar:{label}", body.dim, k, chk.lhs, chk.rhs, chk.gap, ok))
        item = chk.to_dict()
        item.update({"case": label, "gap": chk.gap, "combined_stderr": chk.combined_stderr, "pass": ok})
        polar.append(item)
    _write_table(os.path.join(args.out, "validate.tsv"),
                 ["check", "param1", "param2", "value", "reference", "error", "pass"], rows)
    ok = all(r[-1] for r in rows)
    return {"closed_form_max_error": worst, "closed_form_continuity": cont, "polar": polar, "pass": ok}, \
        EXIT_OK if ok else EXIT_FAIL


HANDLERS = {"optimize": cmd_optimize, "certify": cmd_certify, "gradcheck": cmd_gradcheck,
            "scan": cmd_scan, "mu-john": cmd_mu_john, "validate": cmd_validate}


def run(command, scenario, args):
    """Dispatch one command; returns (report dict, exit code) and writes the artifacts."""
    sc = scenario
    ctx = {"budget": args.budget or (sc.budget if sc else 200_000),
           "seed": args.seed if args.seed is not None else (sc.seed if sc else 0),
           "tol": args.tol or (sc.tol if sc else 5e-3)}
    if ctx["budget"] < 1000:
        raise InputError("--budget must be at least 1000")
    if args.workers < 1:
        raise InputError("--workers must be at least 1")
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    payload, code = HANDLERS[command](sc, args, ctx)
    report = {"tool": "maxintpos", "version": __version__, "command": command,
              "scenario": sc.echo() if sc else None, "seed": ctx["seed"], "budget": ctx["budget"],
              "tol": ctx["tol"], "workers": args.workers, "exit_code": code, "payload": payload,
              "wall_time": time.perf_counter() - t0}
    report = _clean(report)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2)
    return report, code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        sc = None
        if args.command != "validate" or args.scenario:
            if not args.scenario:
                raise InputError(f"{args.command} needs --scenario")
            sc = parse_scenario(args.scenario)
        report, code = run(args.command, sc, args)
    except (InputError, PreconditionError, UnsupportedError, EmptyRegionError, DecayFitError,
            SingularPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    summary = {k: report["payload"][k] for k in ("pass", "converged", "center_residual", "iso_residual",
                                                 "sandwich_ok") if k in report["payload"]}
    print(json.dumps({"command": report["command"], "exit_code": code, **summary}))
    return code


if __name__ == "__main__":
    sys.exit(main())

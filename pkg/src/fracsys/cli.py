"""Command-line front end: ``fracsys {eval,solve,eig,verify,scan}``.

Exit codes: 0 success, 1 a verification failed (verify) or a cell blew up
where the criticality condition holds (scan), 2 invalid arguments, 3
quadrature refinement (or the eigen power iteration) did not converge.

Every flag can also be given in a flat ``key = value`` file passed with
``--config``; keys are flag names without the leading dashes (``-`` and
``_`` are interchangeable) and flags on the command line win.  When
``--output-dir`` is set the effective configuration is written there as
``config.txt``, next to the primary outputs; the only time-dependent data
go to ``run_metadata.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, profiles
from ._kernels import BACKEND
from ._parallel import ordered_map
from .exponents import ProblemParams, classify_exponents, supersolution_exponents, theta_threshold
from .operator import Grid1D, assemble_operator
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    angular_factor,
    normalization_constant,
    pv_radial_fraclap,
    supersolution_constants,
)
from .solver import ConvergenceError, SolverConfig, Status, principal_eigenpair, solve_system
from . import verify as V

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_QUADRATURE = 0, 1, 2, 3

SCAN_COLUMNS = ["p", "q", "beta1", "beta2", "condition_holds", "status", "sup_u", "sup_v", "iterations"]

CHECKS = ["sign-sigma", "theta-bound", "harnack", "supersolution", "f-inequality", "dimension-reduction"]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def parse_range(text: str, default_spacing: str | None = None) -> np.ndarray:
    """``a:b:k`` or ``a:b:k:log`` / ``a:b:k:lin``, or a single value ``a``.

    Without a suffix the spacing is ``default_spacing``, or logarithmic when
    ``a > 0`` and linear otherwise.
    """
    parts = text.split(":")
    if len(parts) == 1:
        try:
            return np.array([float(parts[0])])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value {text!r}") from None
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(f"expected a:b:k[:log|:lin], got {text!r}")
    try:
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("range needs k >= 1")
    spacing = parts[3] if len(parts) == 4 else default_spacing or ("log" if a > 0 else "lin")
    if spacing == "log":
        if not (a > 0 and b > 0):
            raise argparse.ArgumentTypeError("log spacing needs positive endpoints")
        return np.geomspace(a, b, k)
    if spacing == "lin":
        return np.linspace(a, b, k)
    raise argparse.ArgumentTypeError(f"unknown spacing {spacing!r}")


def _lin_range(text: str) -> np.ndarray:
    return parse_range(text, "lin")


def _emit(text: str) -> set:
    items = {x.strip() for x in text.split(",") if x.strip()}
    bad = items - {"json", "csv"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown emit format(s): {', '.join(sorted(bad))}")
    return items


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key=value file mirroring the flags")
    p.add_argument("--output-dir", help="directory for JSON/CSV outputs (nothing is written if omitted)")
    p.add_argument("--emit", type=_emit, default={"json", "csv"}, help="comma list from {json,csv}")
    p.add_argument("--seed", type=int, default=0, help="seed for random sample generation")


def _add_quadrature(p):
    g = p.add_argument_group("quadrature")
    g.add_argument("--gauss-order", type=int, default=16)
    g.add_argument("--near-field-radius", type=float, default=0.5)
    g.add_argument("--truncation-radius", type=float, default=100.0)
    g.add_argument("--tolerance", type=float, default=1e-9)
    g.add_argument("--grading-levels", type=int, default=8)
    g.add_argument("--max-refinements", type=int, default=3)


def _add_grid(p):
    g = p.add_argument_group("grid")
    g.add_argument("--cells", type=int, default=128)
    g.add_argument("--left", type=float, default=-1.0)
    g.add_argument("--right", type=float, default=1.0)


def _add_solver(p, mode_default):
    g = p.add_argument_group("iteration")
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--damping", type=float, default=1.0)
    g.add_argument("--max-iter", type=int, default=10000)
    g.add_argument("--tol", type=float, default=1e-10)
    g.add_argument("--init", type=float, default=0.5, help="constant initial value")
    g.add_argument("--blowup-threshold", type=float, default=1e8)
    g.add_argument("--mode", choices=["picard", "normalized"], default=mode_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracsys",
        description="Fractional Laplacian quadrature, coupled-system solver and margin checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("eval", help="evaluate (-Delta)^s of a radial profile")
    p.add_argument("--n", type=int, help="dimension (required)")
    p.add_argument("--s", type=float, help="fractional order (required)")
    p.add_argument("--profile", default=None,
                   help="power:SIGMA | theta | supersol:ALPHA | bump | gaussian | constant (required)")
    p.add_argument("--radii", default="1:10:5", help="a:b:k[:log|:lin] (log when a > 0 unless given)")
    p.add_argument("--normalized", action="store_true", help="multiply by C(n, s)")
    p.add_argument("--constants", action="store_true", help="also print C(n,s) and the angular factor")
    _add_quadrature(p)
    _add_common(p)

    p = sub.add_parser("solve", help="solve the 1-D coupled system by fixed-point iteration")
    for name in ("s", "t", "p", "q"):
        p.add_argument(f"--{name}", type=float, help=f"{name} (required)")
    _add_grid(p)
    _add_solver(p, "picard")
    p.add_argument("--export-matrix", help="write the s-operator matrix as text to this path")
    _add_common(p)

    p = sub.add_parser("eig", help="principal eigenpair of the coupled linear system")
    p.add_argument("--n", type=int, default=1, help="dimension (only 1 is discretised)")
    p.add_argument("--s", type=float, help="s (required)")
    p.add_argument("--t", type=float, help="t (required)")
    p.add_argument("--p", type=float, default=None, help="with --q, also report the shift threshold theta0")
    p.add_argument("--q", type=float, default=None)
    _add_grid(p)
    p.add_argument("--max-iter", type=int, default=10000)
    _add_common(p)

    p = sub.add_parser("verify", help="run margin checks; exit 0 iff all pass")
    p.add_argument("--check", action="append", choices=CHECKS + ["all"],
                   help="check to run (repeatable; default all)")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--t", type=float, default=None, help="defaults to s")
    p.add_argument("--p", type=float, default=5.0)
    p.add_argument("--q", type=float, default=5.0)
    p.add_argument("--sigma", type=float, default=None, help="defaults to -n + s")
    p.add_argument("--alpha", type=float, action="append", help="f-inequality exponent (repeatable)")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--radii", default=None, help="a:b:k[:log|:lin]; per-check default if omitted")
    p.add_argument("--bound", type=float, default=None, help="harnack ratio bound")
    p.add_argument("--force", action="store_true", help="compute super-solution constants outside their regime")
    _add_quadrature(p)
    _add_common(p)

    p = sub.add_parser("scan", help="solve over a (p, q) grid and tabulate sup norms")
    p.add_argument("--p", dest="p_range", default=None, help="a:b:k (linear, required)")
    p.add_argument("--q", dest="q_range", default=None, help="a:b:k (linear, required)")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--s", type=float, help="s (required)")
    p.add_argument("--t", type=float, help="t (required)")
    _add_grid(p)
    _add_solver(p, "normalized")
    _add_common(p)
    return parser


REQUIRED = {
    "eval": ["n", "s", "profile"],
    "solve": ["s", "t", "p", "q"],
    "eig": ["s", "t"],
    "verify": [],
    "scan": ["p_range", "q_range", "s", "t"],
}


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if args.config:
        try:
            values = read_config_file(args.config)
        except (OSError, UsageError) as exc:
            sub.error(str(exc))
        aliases = {"p": "p_range", "q": "q_range"} if args.command == "scan" else {}
        values = {aliases.get(k, k): v for k, v in values.items()}
        # configs echoed into an output directory name their subcommand
        named = values.pop("command", args.command)
        if named != args.command:
            sub.error(f"config file is for subcommand {named!r}")
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(values) - set(known))
        if unknown:
            sub.error(f"unknown config key(s): {', '.join(unknown)}")
        defaults = {}
        for key, raw in values.items():
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(action, argparse._AppendAction):
                conv = action.type or str
                defaults[key] = [conv(x.strip()) for x in raw.split(",") if x.strip()]
            else:
                conv = action.type or str
                try:
                    defaults[key] = conv(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    sub.error(f"config key {key}: {exc}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED[args.command] if getattr(args, k) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_range", "").replace("_", "-") for m in missing)
        sub.error(f"missing required argument(s): {flags}")
    return args


# ---------------------------------------------------------------- output helpers


def _effective_config(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("config", "output_dir"):
            continue
        if isinstance(v, set):
            v = ",".join(sorted(v))
        elif isinstance(v, list):
            v = ",".join(str(x) for x in v)
        out[k] = v
    return out


def _prepare_output(args):
    if not args.output_dir:
        return None
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"{k} = {v}" for k, v in _effective_config(args).items() if v is not None]
    (out / "config.txt").write_text("\n".join(lines) + "\n")
    meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "backend": BACKEND,
        "argv": sys.argv[1:],
    }
    (out / "run_metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _spec(args) -> QuadratureSpec:
    return QuadratureSpec(
        gauss_order=args.gauss_order,
        near_field_radius=args.near_field_radius,
        truncation_radius=args.truncation_radius,
        tolerance=args.tolerance,
        grading_levels=args.grading_levels,
        max_refinements=args.max_refinements,
    )


def _grid(args) -> Grid1D:
    return Grid1D(args.left, args.right, args.cells)


# ---------------------------------------------------------------- eval


def make_profile(text: str, n: int, s: float) -> profiles.RadialProfile:
    name, _, arg = text.partition(":")
    if name == "power":
        if not arg:
            raise UsageError("power profile needs an exponent, e.g. power:-2")
        return profiles.power(float(arg))
    if name == "theta":
        return profiles.theta(n, s)
    if name == "supersol":
        if not arg:
            raise UsageError("supersol profile needs a decay exponent, e.g. supersol:0.25")
        return profiles.decaying(float(arg))
    if name == "bump":
        return profiles.bump(s)
    if name == "gaussian":
        return profiles.gaussian()
    if name == "constant":
        return profiles.constant(float(arg) if arg else 1.0)
    raise UsageError(f"unknown profile {text!r}")


def cmd_eval(args) -> int:
    radii = parse_range(args.radii)
    spec = _spec(args)
    prof = make_profile(args.profile, args.n, args.s)
    values = [pv_radial_fraclap(prof, args.n, args.s, float(r), spec, normalized=args.normalized)
              for r in radii]
    print(f"# (-Delta)^{args.s:g} {prof.name} in R^{args.n}"
          + (" (normalized)" if args.normalized else " (C(n,s) = 1)"))
    print(f"{'radius':>14}  {'value':>24}")
    for r, v in zip(radii, values):
        print(f"{r:14.6g}  {v:24.16e}")
    extra = {}
    if args.constants:
        extra["normalization_constant"] = normalization_constant(args.n, args.s, spec)
        print(f"C(n,s) = {extra['normalization_constant']!r}")
        if args.n >= 2:
            extra["angular_factor"] = angular_factor(args.n, args.s, spec)
            print(f"angular factor = {extra['angular_factor']!r}")
    out = _prepare_output(args)
    if out is not None:
        if "json" in args.emit:
            _write_json(out / "eval.json", {
                "n": args.n, "s": args.s, "profile": args.profile, "normalized": args.normalized,
                "radii": radii.tolist(), "values": values, **extra,
            })
        if "csv" in args.emit:
            with open(out / "eval.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["radius", "value"])
                for r, v in zip(radii, values):
                    w.writerow([_fmt(r), _fmt(v)])
    return EXIT_OK


# ---------------------------------------------------------------- solve / eig


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        tol_residual=args.tol, max_iter=args.max_iter, damping=args.damping, theta=args.theta,
        blowup_threshold=args.blowup_threshold, init=args.init, mode=args.mode,
    )


def cmd_solve(args) -> int:
    params = ProblemParams(1, args.s, args.t, args.p, args.q)
    grid = _grid(args)
    As = assemble_operator(grid, args.s)
    At = As if args.t == args.s else assemble_operator(grid, args.t)
    sol = solve_system(As, At, params.p, params.q, _solver_config(args))
    print(f"status={sol.status.value} iterations={sol.iterations} sup_u={sol.sup_u!r} sup_v={sol.sup_v!r} "
          f"residual_u={sol.residual_u:.3e} residual_v={sol.residual_v:.3e}")
    if args.export_matrix:
        As.export_text(args.export_matrix)
    out = _prepare_output(args)
    if out is not None:
        if "json" in args.emit:
            sol.write_json(out / "solution.json")
        if "csv" in args.emit:
            sol.write_trace_csv(out / "trace.csv")
    return EXIT_OK


def cmd_eig(args) -> int:
    if args.n != 1:
        raise UsageError("only n = 1 is discretised")
    for name in ("s", "t"):
        if not 0.0 < getattr(args, name) < 1.0:
            raise UsageError(f"{name} must lie in (0, 1)")
    grid = _grid(args)
    As = assemble_operator(grid, args.s)
    At = As if args.t == args.s else assemble_operator(grid, args.t)
    pair = principal_eigenpair(As, At, SolverConfig(max_iter=args.max_iter))
    print(f"lambda1={pair.lambda1!r} residual={pair.residual:.3e} power_iterations={pair.power_iterations}")
    data = pair.to_dict()
    if args.p is not None and args.q is not None:
        data["theta0"] = theta_threshold(pair.lambda1, args.p, args.q)
        print(f"theta0={data['theta0']!r}")
    out = _prepare_output(args)
    if out is not None:
        if "json" in args.emit:
            _write_json(out / "eig.json", data)
        if "csv" in args.emit:
            with open(out / "eig.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "phi", "psi"])
                for x, a, b in zip(grid.nodes, pair.phi.values, pair.psi.values):
                    w.writerow([_fmt(x), _fmt(a), _fmt(b)])
    return EXIT_OK


# ---------------------------------------------------------------- verify


def _run_check(name, args, spec):
    n, s = args.n, args.s
    t = args.s if args.t is None else args.t
    radii = parse_range(args.radii) if args.radii else None
    if name == "sign-sigma":
        sigma = -n + s if args.sigma is None else args.sigma
        return [V.check_sign_sigma(n, s, sigma, parse_range("1:10:10") if radii is None else radii, spec)]
    if name == "theta-bound":
        return [V.check_theta_bound(n, s, radii, spec)]
    if name == "harnack":
        alpha = n - 2.0 * s
        prof = profiles.decaying(alpha)
        bound = 2.0**alpha + 0.1 if args.bound is None else args.bound
        return [V.check_harnack_ratio(prof, parse_range("1:100:20") if radii is None else radii, bound)]
    if name == "supersolution":
        params = ProblemParams(n, s, t, args.p, args.q)
        pair = supersolution_constants(params, spec, force=args.force)
        return [V.check_supersolution(pair, parse_range("0.1:50:30") if radii is None else radii, spec)]
    if name == "f-inequality":
        if args.alpha:
            alphas = args.alpha
        else:
            k1, k2 = supersolution_exponents(ProblemParams(n, s, t, args.p, args.q))
            alphas = sorted({s * k1, t * k2})
        S = V.random_f_samples(args.samples, args.seed)
        return ordered_map(lambda a: V.check_f_inequality(a, S), alphas)
    if name == "dimension-reduction":
        nn = max(n, 2)
        return [V.check_dimension_reduction(profiles.gaussian(), nn, s,
                                            parse_range("0.5:3:4:lin") if radii is None else radii, spec)]
    raise UsageError(f"unknown check {name!r}")


def cmd_verify(args) -> int:
    selected = args.check or ["all"]
    names = CHECKS if "all" in selected else list(dict.fromkeys(selected))
    spec = _spec(args)
    reports = []
    for name in names:
        reports.extend(_run_check(name, args, spec))
    for rep in reports:
        print(rep.summary())
        for child in rep.children:
            print("  " + child.summary())
    ok = all(r.all_passed for r in reports)
    out = _prepare_output(args)
    if out is not None and "json" in args.emit:
        _write_json(out / "verify.json", {"passed": ok, "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- scan


def _scan_cell(pq, args, As, At):
    p, q = pq
    rec = {"p": p, "q": q}
    try:
        params = ProblemParams(args.n, args.s, args.t, p, q)
    except ValueError:
        rec.update(beta1=math.nan, beta2=math.nan, condition_holds=False, status="InvalidParams",
                   sup_u=math.nan, sup_v=math.nan, iterations=0)
        return rec
    report = classify_exponents(params)
    sol = solve_system(As, At, p, q, _solver_config(args))
    rec.update(beta1=report.beta1, beta2=report.beta2, condition_holds=report.condition_holds,
               status=sol.status.value, sup_u=sol.sup_u, sup_v=sol.sup_v, iterations=sol.iterations)
    return rec


def cmd_scan(args) -> int:
    ps = _lin_range(args.p_range)
    qs = _lin_range(args.q_range)
    _solver_config(args)  # validate before any work
    grid = _grid(args)
    As = assemble_operator(grid, args.s)
    At = As if args.t == args.s else assemble_operator(grid, args.t)
    As.cholesky()
    At.cholesky()
    cells = [(float(p), float(q)) for p in ps for q in qs]
    records = ordered_map(lambda c: _scan_cell(c, args, As, At), cells)
    out = Path(args.output_dir or ".")
    args.output_dir = str(out)
    _prepare_output(args)
    with open(out / "scan.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        for rec in records:
            w.writerow([_fmt(rec[c]) if c != "condition_holds" else str(rec[c]).lower() for c in SCAN_COLUMNS])
    holds = [r for r in records if r["condition_holds"]]
    bounded = [max(r["sup_u"], r["sup_v"]) for r in holds if r["status"] == Status.CONVERGED.value]
    non_converged = [{"p": r["p"], "q": r["q"], "status": r["status"]}
                     for r in records if r["status"] != Status.CONVERGED.value]
    blown = [c for c in non_converged if c["status"] == Status.BLOWN_UP.value
             and any(r["p"] == c["p"] and r["q"] == c["q"] and r["condition_holds"] for r in records)]
    summary = {
        "n_records": len(records),
        "max_sup_where_condition_holds": max(bounded) if bounded else None,
        "non_converged": non_converged,
        "blown_up_where_condition_holds": blown,
    }
    if "json" in args.emit:
        _write_json(out / "scan_summary.json", summary)
    print(f"{len(records)} cells; max sup where condition holds: {summary['max_sup_where_condition_holds']}; "
          f"non-converged: {len(non_converged)}")
    return EXIT_FAIL if blown else EXIT_OK


COMMANDS = {"eval": cmd_eval, "solve": cmd_solve, "eig": cmd_eig, "verify": cmd_verify, "scan": cmd_scan}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (QuadratureError, ConvergenceError) as exc:
        print(f"fracsys {args.command}: did not converge: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    except (UsageError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"fracsys {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

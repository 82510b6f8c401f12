"""Command line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical
non-convergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
import time

import numpy as np

from fracspec import eig as eigmod
from fracspec import feq, sdc
from fracspec.basis import JfpBasis, mapped_grid
from fracspec.errors import FracSpecError, NonConvergenceError
from fracspec.kernels import BACKEND
from fracspec.opcore import build_fio

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NONCONV, EXIT_IO = 0, 2, 3, 4
SHOWCASES = ("abel", "var", "bbo", "airy", "sdc", "eig")

logger = logging.getLogger("fracspec")


class UsageError(Exception):
    pass


def _num(x) -> str:
    return repr(float(x))


def _json_num(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _csv(meta: dict, header: list[str], rows) -> str:
    out = io.StringIO()
    out.write(f"# schema_version: {SCHEMA_VERSION}\n")
    for k, v in meta.items():
        out.write(f"# {k}: {v}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
    return out.getvalue()


def _table(meta: dict, header: list[str], rows, fmt: str) -> str:
    if fmt == "csv":
        return _csv(meta, header, rows)
    cols = {h: [r[i] if isinstance(r[i], str) else _json_num(r[i]) for r in rows] for i, h in enumerate(header)}
    doc = {"schema_version": SCHEMA_VERSION, **{k: _jsonable(v) for k, v in meta.items()}, "columns": cols}
    return json.dumps(doc, indent=1) + "\n"


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (str, type(None))):
        return v
    return _json_num(v)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _check_n(n: int, name: str = "n") -> int:
    if n < 1:
        raise UsageError(f"{name} must be positive")
    return n


# commands


def cmd_build(args) -> int:
    n = _check_n(args.n)
    t0 = time.perf_counter()
    op = build_fio(args.mu, args.alpha, args.beta, n)
    wall = time.perf_counter() - t0
    print(f"built {n} columns in {wall:.3g} s (backend {BACKEND})", file=sys.stderr)
    meta = {"mu": args.mu, "alpha": args.alpha, "beta": args.beta, "N": n}
    if args.timing:
        meta["wall_time"] = wall
    if args.format == "json":
        doc = op.to_json()
        doc.update({k: v for k, v in meta.items() if k not in doc})
        doc["matrix"] = op.matrix(n, n).tolist()
        del doc["columns"]
        text = json.dumps(doc) + "\n"
    else:
        text = f"# schema_version: {SCHEMA_VERSION}\n"
        text += "".join(f"# {k}: {v!r}\n" for k, v in meta.items())
        text += op.to_csv(n)
    _emit(text, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        problem, settings = feq.load_problem(args.problem)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed problem file: {exc}") from exc
    tol = args.tol if args.tol is not None else settings["tol"]
    n_max = args.n_max if args.n_max is not None else settings["n_max"]
    try:
        rep = feq.solve(problem, tol, n_max)
    except NonConvergenceError as exc:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "status": "non-convergence",
            "message": str(exc),
            "residual_history": [list(h) if isinstance(h, tuple) else h for h in exc.history],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        raise
    exact = feq.exact_from_spec(settings["exact"]) if "exact" in settings else None
    xs = mapped_grid(problem.basis, args.points) if args.points else None
    doc = feq.report_to_json(rep, xs, exact)
    if not args.timing:
        doc.pop("wall_time", None)
    print(f"N_used={rep.n_used} residual={rep.residual:.3e}", file=sys.stderr)
    if "max_error" in doc:
        print(f"max_error={doc['max_error']:.3e}", file=sys.stderr)
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return EXIT_OK


def _fie_showcase(name, rep, xs, exact, meta, args) -> int:
    u = np.asarray(rep(xs))
    err = np.abs(u - exact(xs))
    meta.update({"N_used": rep.n_used, "residual": rep.residual, "max_error": float(err.max())})
    print(f"{name}: N_used={rep.n_used} max_error={err.max():.3e}", file=sys.stderr)
    _emit(_table(meta, ["x", "value", "error"], zip(xs, u.real, err), args.format), args.out)
    return EXIT_OK


def _show_abel(args) -> int:
    lam = 2.0 if args.lam is None else args.lam
    rep = feq.solve(feq.abel_problem(lam), args.tol, args.n_max or 4096)
    xs = mapped_grid(JfpBasis(0.0, 0.5), args.points)
    return _fie_showcase("abel", rep, xs, lambda x: feq.abel_exact(x, lam), {"showcase": "abel", "lambda": lam}, args)


def _show_var(args) -> int:
    rep = feq.solve(feq.var_problem(), args.tol, args.n_max or 4096)
    xs = mapped_grid(JfpBasis(0.0, 1 / 6), args.points)
    return _fie_showcase("var", rep, xs, lambda x: (1 + np.asarray(x)) ** 1.5, {"showcase": "var"}, args)


def _show_bbo(args) -> int:
    rep = feq.solve_bbo(args.tol, args.n_max or 2048)
    ts = np.linspace(0.01, 2.0, args.points)
    v = np.asarray(rep(ts - 1.0)).real
    err = np.abs(v - feq.bbo_exact(ts))
    meta = {"showcase": "bbo", "N_used": rep.n_used, "residual": rep.residual, "max_error": float(err.max())}
    print(f"bbo: N_used={rep.n_used} max_error={err.max():.3e}", file=sys.stderr)
    _emit(_table(meta, ["t", "value", "error"], zip(ts, v, err), args.format), args.out)
    return EXIT_OK


def _show_airy(args) -> int:
    if args.paper_scale:
        eps, n_max = 1e-7, 50_000
    else:
        eps, n_max = (1e-3 if args.epsilon is None else args.epsilon), (args.n_max or 8000)
    rep = feq.solve_airy(eps, args.tol, n_max)
    xs = mapped_grid(JfpBasis(1.0, 0.5), args.points)
    u = np.asarray(rep(xs), dtype=complex)
    ends = np.asarray(rep(np.array([-1.0, 1.0])), dtype=complex)
    bc_err = max(abs(ends[0]), abs(ends[1] - 1))
    cauchy = [e for _, e in rep.cauchy_errors]
    meta = {
        "showcase": "airy",
        "epsilon": eps,
        "N_used": rep.n_used,
        "boundary_error": float(bc_err),
        "cauchy_errors": " ".join(_num(e) for e in cauchy) if args.format == "csv" else cauchy,
    }
    print(f"airy: N_used={rep.n_used} boundary_error={bc_err:.3e}", file=sys.stderr)
    _emit(_table(meta, ["x", "re_u", "im_u"], zip(xs, u.real, u.imag), args.format), args.out)
    return EXIT_OK


def _show_sdc(args) -> int:
    prob = sdc.showcase_problem(N=args.n or 10, scheme=args.scheme)
    res = sdc.sdc_solve(prob)
    exact = math.sqrt(math.pi) * (1 + res.grid) / 2
    err = np.abs(res.values - exact)
    meta = {"showcase": "sdc", "N": prob.N, "scheme": prob.scheme, "sweeps": res.sweeps, "max_error": float(err.max())}
    print(f"sdc: sweeps={res.sweeps} max_error={err.max():.3e}", file=sys.stderr)
    order = np.argsort(res.grid)
    rows = zip(res.grid[order], res.values[order], err[order])
    _emit(_table(meta, ["t", "value", "error"], rows, args.format), args.out)
    return EXIT_OK


def _eig_table(problem: eigmod.EigProblem, args) -> int:
    rep = eigmod.eig_solve(problem)
    rows = []
    for r in rep.table():
        lam = complex(r["eigenvalue"])
        if r["ml_trusted"]:
            kind, val = "mittag_leffler", abs(complex(r["ml_value"]))
        else:
            kind, val = "eigen_residual", r["eigen_residual"]
        rows.append((float(r["index"]), lam.real, lam.imag, kind, val))
        print(f"{r['index']:2d}  {lam.real:.15f} {lam.imag:+.15f}i  {kind}={val:.2e}", file=sys.stderr)
    meta = {
        "showcase": "eig",
        "mu1": problem.mu1,
        "mu2": problem.mu2,
        "N_final": rep.truncations[-1],
        "cauchy_errors": " ".join(_num(e) for _, e in rep.cauchy_errors)
        if args.format == "csv"
        else [e for _, e in rep.cauchy_errors],
    }
    _emit(_table(meta, ["index", "re", "im", "check", "check_value"], rows, args.format), args.out)
    return EXIT_OK


def _show_eig(args) -> int:
    return _eig_table(eigmod.showcase_problem(), args)


def cmd_showcase(args) -> int:
    _check_n(args.points, "points")
    return {
        "abel": _show_abel,
        "var": _show_var,
        "bbo": _show_bbo,
        "airy": _show_airy,
        "sdc": _show_sdc,
        "eig": _show_eig,
    }[args.name](args)


def cmd_eig(args) -> int:
    problem = eigmod.EigProblem(
        mu1=args.mu1,
        mu2=args.mu2,
        basis=JfpBasis(args.alpha, args.beta),
        m=args.m,
        n_cap=args.n_cap,
    )
    return _eig_table(problem, args)


def _fit_slope(ns, ts) -> float | None:
    if len(ns) < 2:
        return None
    return float(np.polyfit(np.log(ns), np.log(ts), 1)[0])


def cmd_bench(args) -> int:
    sizes = args.sizes
    if any(n < 1 for n in sizes) or list(sizes) != sorted(sizes):
        raise UsageError("sizes must be positive and ascending")
    times = []
    for n in sizes:
        runs = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            build_fio(args.mu, args.alpha, args.beta, n)
            runs.append(time.perf_counter() - t0)
        times.append(float(np.median(runs)))
        print(f"N={n:6d}  {times[-1]:.4f} s", file=sys.stderr)
    slope = _fit_slope(sizes, times)
    msg = "slope: not applicable (single size)" if slope is None else f"slope: {slope:.3f}"
    print(msg)
    meta = {
        "mu": args.mu,
        "alpha": args.alpha,
        "beta": args.beta,
        "backend": BACKEND,
        "repeats": args.repeats,
        "slope": "not applicable" if slope is None else slope,
    }
    if args.out:
        _emit(_table(meta, ["N", "seconds"], zip(map(float, sizes), times), args.format), args.out)
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracspec", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of option defaults for the command")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt="csv"):
        p.add_argument("--out", "-o", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)

    p = sub.add_parser("build", help="build and export a truncated operator")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--timing", action="store_true", help="embed the construction time in the output")
    common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("problem")
    p.add_argument("--tol", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--points", type=int, default=1001, help="sample points for values (0 for none)")
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("showcase", help="run one of the worked examples")
    p.add_argument("name", choices=SHOWCASES)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--paper-scale", action="store_true", help="airy only: eps=1e-7, N up to 50000 (slow)")
    p.add_argument("--tol", type=float, default=1e-13)
    p.add_argument("--n-max", type=int)
    p.add_argument("--n", type=int, help="sdc grid size")
    p.add_argument("--scheme", choices=sdc.SCHEMES, default="trapezoid")
    p.add_argument("--points", type=int, default=1001)
    common(p)
    p.set_defaults(func=cmd_showcase)

    p = sub.add_parser("eig", help="fractional eigenvalue problem")
    p.add_argument("--mu1", type=float, default=1.5)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--n-cap", type=int, default=4096)
    common(p)
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("bench", help="time operator construction")
    p.add_argument("--sizes", type=int, nargs="+", default=[1024, 2048, 4096])
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], path: str) -> argparse.Namespace:
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    cfg.pop("schema_version", None)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in sub.choices), None)
    if command is None:
        return parser.parse_args(argv)
    subparser = sub.choices[command]
    known = {a.dest for a in subparser._actions} - {"help"}
    unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {unknown}")
    # command-line flags win over the file
    subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
    for action in subparser._actions:
        if action.dest in cfg or action.dest.replace("_", "-") in cfg:
            action.required = False
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        if "--config" in argv or any(a.startswith("--config=") for a in argv):
            cfg_parser = argparse.ArgumentParser(add_help=False)
            cfg_parser.add_argument("--config")
            path = cfg_parser.parse_known_args(argv)[0].config
            args = _apply_config(parser, argv, path)
        else:
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (FracSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

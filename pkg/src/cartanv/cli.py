"""Command-line interface: ``cartanv {list-metrics, eval, check, geodesic}``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .cartan import PhasePoint
from .errors import CartanError, ConfigurationError, GeometryError
from .geodesic import integrate
from .metrics import BUILTIN_LABELS, builtin
from .registry import CHECKS
from .report import canonical_json, emit_report
from .sampling import RunConfig
from .state import GeometryState
from .suite import failed_report, load_descriptor, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _metric_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--metric", default="randers-dual", help="built-in metric label")
    g.add_argument("--metric-file", help="file holding a K^2 expression")
    p.add_argument("--dim", type=int, default=None, help="dimension n (default 3, or inferred from the file)")


def _config(args) -> RunConfig:
    checks = None
    if args.checks is not None:
        checks = tuple(c for c in args.checks.split(",") if c)
    return RunConfig(
        metric=args.metric,
        metric_file=args.metric_file,
        dim=args.dim,
        samples=args.samples,
        seed=args.seed,
        tol_ad=args.tol_ad,
        tol_fd=args.tol_fd,
        tol_curv=args.tol_curv,
        checks=checks,
        output=args.out,
        fmt=args.format,
        timing=args.timing,
        threads=args.threads,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cartanv", description="Verification engine for Cartan-space geometry.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-metrics", help="list built-in metrics and checks")

    ev = sub.add_parser("eval", help="dump the geometry at one point as JSON")
    _metric_args(ev)
    ev.add_argument("--x", type=_floats, required=True)
    ev.add_argument("--p", type=_floats, required=True)
    ev.add_argument("--out")

    ck = sub.add_parser("check", help="run the verification suite")
    _metric_args(ck)
    ck.add_argument("--samples", type=int, default=100)
    ck.add_argument("--seed", type=int, default=42)
    ck.add_argument("--tol-ad", type=float, default=1e-9)
    ck.add_argument("--tol-fd", type=float, default=1e-5)
    ck.add_argument("--tol-curv", type=float, default=1e-7)
    ck.add_argument("--checks", help="comma-separated check names (default: all applicable)")
    ck.add_argument("--format", choices=("text", "json"), default="text")
    ck.add_argument("--out", help="write the report here instead of stdout")
    ck.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")
    ck.add_argument("--threads", type=int, default=None, help="worker processes")

    geo = sub.add_parser("geodesic", help="integrate a fiber geodesic with RK4")
    _metric_args(geo)
    geo.add_argument("--x", type=_floats, required=True)
    geo.add_argument("--p", type=_floats, required=True)
    geo.add_argument("--v", type=_floats, default=None, help="initial velocity (default radial)")
    geo.add_argument("--step", type=float, default=1e-3)
    geo.add_argument("--steps", type=int, default=200)
    geo.add_argument("--out")
    return parser


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_list(args) -> int:
    for label in BUILTIN_LABELS:
        d = builtin(label)
        flags = ", ".join(f"{k}={v}" for k, v in d.flags.items())
        print(f"{label:18s} {d.expression}  [{flags}]")
    print()
    for c in CHECKS:
        print(f"{c.name:24s} {c.anchor:36s} {c.description}")
    return EXIT_OK


def _descriptor(args):
    cfg = RunConfig(metric=args.metric, metric_file=args.metric_file, dim=args.dim)
    return load_descriptor(cfg)


def cmd_eval(args) -> int:
    d = _descriptor(args)
    s = GeometryState(d.structure, PhasePoint(args.x, args.p))
    data = {
        "metric": d.label,
        "x": list(args.x),
        "p": list(args.p),
        "K": s.Kval,
        "g_upper": s.g_upper.tolist(),
        "g_lower": s.g_lower.tolist(),
        "p_upper": s.p_upper.tolist(),
        "cartan": s.cartan.tolist(),
        "N": s.N.tolist(),
        "t": s.t.tolist(),
        "zeta": s.zeta.tolist(),
        "G": s.G.tolist(),
        "J": s.J.tolist(),
        "Omega": s.Omega.tolist(),
    }
    _write(canonical_json(data) + "\n", args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        cfg = _config(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_suite(cfg)
    except ConfigurationError as exc:
        report = failed_report(cfg, exc)
    text = emit_report(report, cfg.fmt, cfg.output)
    if cfg.output is None:
        sys.stdout.write(text)
    return report.exit_code


def cmd_geodesic(args) -> int:
    d = _descriptor(args)
    run = integrate(d.structure, args.x, args.p, args.v, h=args.step, steps=args.steps)
    data = {
        "metric": d.label,
        "step": args.step,
        "steps": args.steps,
        "final_p": run.p[-1].tolist(),
        "final_v": run.v[-1].tolist(),
        "energy_drift": run.energy_drift,
        "line_deviation": run.line_deviation,
    }
    _write(canonical_json(data) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"list-metrics": cmd_list, "eval": cmd_eval, "check": cmd_check, "geodesic": cmd_geodesic}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CartanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

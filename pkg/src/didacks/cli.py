"""Command-line entry point: ``didacks fit | verify | grid``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import kernel
from .experiments import ConfigError, ExperimentConfig, bundled_names, run_experiment, to_csv, to_table
from .fit import FitError
from .geometry import ring_grid, separation_stats
from .kernel import DomainError
from .linalg import ConvergenceError, SingularSystemError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_TOLERANCE = 3


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_fit(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
        if args.precision:
            config = config.with_precision(args.precision)
    except (ConfigError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if args.dump_config:
        sys.stdout.write(config.to_json())
        return EXIT_OK
    try:
        rows = run_experiment(config, jobs=args.jobs)
    except (DomainError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except (FitError, SingularSystemError, ConvergenceError, ArithmeticError) as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = config.doc.get("outputs", {})
    label = config.doc["label"]
    csv_path = out / outputs.get("csv", f"{label}.csv")
    table = to_table(rows)
    csv_path.write_text(to_csv(rows), encoding="utf-8")
    if "table" in outputs:
        (out / outputs["table"]).write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .oracle import IDENTITIES, QuadratureError, QuadratureSpec, run_battery

    try:
        spec = QuadratureSpec.parse(args.spec)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if args.only and args.only not in IDENTITIES:
        _err(f"unknown identity {args.only!r}; known: {', '.join(IDENTITIES)}")
        return EXIT_CONFIG
    saved = kernel._REPLICATION_SCALE
    if args.kernel_scale is not None:
        kernel._REPLICATION_SCALE = args.kernel_scale
    try:
        reports = run_battery(spec, only=args.only)
    except QuadratureError as exc:
        _err(f"quadrature did not converge: {exc}")
        return EXIT_NUMERICAL
    finally:
        kernel._REPLICATION_SCALE = saved
    width = max(len(r.name) for r in reports)
    failed = 0
    for r in reports:
        verdict = "pass" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{r.name.ljust(width)}  {verdict}  residual={r.scaled_residual:.2e}  tol={r.tolerance:.0e}  {r.detail}")
    print(f"{len(reports) - failed}/{len(reports)} identities within tolerance")
    return EXIT_OK if failed == 0 else EXIT_TOLERANCE


def cmd_grid(args) -> int:
    try:
        cfg = ring_grid(args.n_theta, args.radius)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(f"# n_theta={cfg.n_theta} radius={cfg.radius:g} points={len(cfg)}")
    if len(cfg) >= 2:
        st = separation_stats(cfg)
        print(f"# min_sep_deg={st.min_sep_deg:.4f} max_min_sep_deg={st.max_min_sep_deg:.4f}")
    if not args.summary:
        print("x,y,z")
        for p in cfg.points:
            print(",".join(f"{v:.17g}" for v in p))
    return EXIT_OK


def cmd_list(args) -> int:
    for name in bundled_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="didacks", description="Point-source harmonic interpolation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run an experiment config and write CSV + text table")
    p.add_argument("--config", required=True, help="JSON file or bundled config name (see 'list')")
    p.add_argument("--precision", choices=["double", "extended"], help="override the config's backend")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for multi-case configs")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="run the quadrature identity battery")
    p.add_argument("--spec", default="64,128,64", help="n_polar,n_azimuth,n_radial")
    p.add_argument("--only", help="run a single identity")
    p.add_argument("--kernel-scale", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("grid", help="print a ring grid and its separation statistics")
    p.add_argument("--n-theta", type=int, required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--summary", action="store_true", help="statistics only")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("list", help="list bundled configs")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as a numerical failure
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

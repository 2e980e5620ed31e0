"""Command-line entry point.

Subcommands:
    dnls check  --config run.toml          hypothesis checks only
    dnls run    --config run.toml          full simulation + diagnostics
    dnls sweep  --config sweep.toml        cartesian parameter sweep
    dnls verify --csv out/series.csv ...   re-verify identities from a CSV

Exit codes: 0 all verdicts green, 1 a verdict failed, 2 run aborted,
3 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

from dnls import grid as grid_mod
from dnls import runner
from dnls.config import ConfigError, parse_config, parse_sweep
from dnls.grid import Grid


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="TOML configuration file")
    p.add_argument("--out", default=None, help="output directory (default: from config)")
    p.add_argument("--threads", type=int, default=0,
                   help="FFT worker threads (default: DNLS_THREADS or all cores)")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnls",
        description="Damped defocusing NLS simulator and diagnostics engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("check", "evaluate the structural hypotheses without time-stepping"),
        ("run", "run the simulation and verify the identity/bound hierarchy"),
        ("sweep", "run a cartesian sweep over config axes"),
    ]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
    v = sub.add_parser("verify", help="re-verify conservation identities from a series CSV")
    v.add_argument("--csv", required=True, help="series CSV written by a run")
    v.add_argument("--d", type=int, required=True, help="spatial dimension of the run")
    v.add_argument("--N", type=int, required=True, help="grid points per axis")
    v.add_argument("--L", type=float, required=True, help="box half-length")
    v.add_argument("--dt", type=float, required=True, help="time step of the run")
    v.add_argument("--leak-tol", type=float, default=1e-8,
                   help="boundary-shell mass fraction tolerated before the virial "
                        "verdict becomes inconclusive")
    return parser


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    threads = getattr(args, "threads", 0)
    if threads:
        grid_mod.set_threads(threads)
        os.environ["DNLS_THREADS"] = str(threads)

    try:
        if args.command == "verify":
            grid = Grid(d=args.d, N=args.N, L=args.L)
            profiles_ = runner.verify_from_csv(args.csv, grid, args.dt,
                                               leak_tol=args.leak_tol)
            code = runner.EXIT_OK
            for prof in profiles_:
                print(f"{prof.identity}: {prof.verdict} (max rel residual {prof.relative[0]:.3e})")
                if prof.verdict == "FAIL":
                    code = runner.EXIT_FAIL
            return code

        text = _read(args.config)
        if args.command == "sweep":
            base, axes, cap = parse_sweep(text)
            out_dir = args.out or base.output.directory
            return runner.sweep(base, axes, out_dir, cap=cap,
                                threads=max(threads, 1), quiet=args.quiet)
        cfg = parse_config(text)
        if args.command == "check":
            return runner.check(cfg, out_dir=args.out, quiet=args.quiet).exit_code
        return runner.run(cfg, out_dir=args.out, quiet=args.quiet).exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

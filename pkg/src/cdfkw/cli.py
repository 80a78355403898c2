"""Command line front end.

    cdfkw run --config exp.json [--seed N] [--jobs N] [--out DIR]
    cdfkw convergence --config sweep.json
    cdfkw benchmark --config bench.json
    cdfkw list-problems

Exit status: 0 ok, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .weno import CFLError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _jobs(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("--jobs must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdfkw", description="CDF-method and direct Monte Carlo solvers for kinematic waves")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "ensemble run writing cdf.csv (and error.csv)"),
        ("convergence", "sweep over dt_char, dx or M writing convergence.csv"),
        ("benchmark", "per-realization timing of both solvers writing timing.csv"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--seed", type=_u64, default=None, help="override master_seed")
        p.add_argument("--jobs", type=_jobs, default=1, help="worker processes")
        p.add_argument("--out", default=None, help="override output_dir")
    sub.add_parser("list-problems", help="print the problem catalog")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-problems":
        print(ex.list_problems())
        return EXIT_OK
    try:
        cfg = ex.load_config(args.config, args.seed, args.out)
        if args.command == "run":
            out = ex.run(cfg, args.jobs)
        elif args.command == "convergence":
            out = ex.convergence(cfg, args.jobs)
        else:
            out, ratios = ex.benchmark(cfg)
            for case, r in ratios.items():
                print(f"S={case}: WENO / characteristics time ratio {r:.1f}")
    except (ex.ConfigError, CFLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ex.NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

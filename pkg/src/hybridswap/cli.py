"""Command-line entry point.

    hybridswap <experiment> --config <file> [--seed N] [--out DIR]

Exit codes: 0 success, 2 config error, 3 invariant violation,
4 non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from .fock import InvariantViolation
from .pipeline import EXPERIMENTS, ConfigError, ConvergenceError, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridswap",
        description="Simulate hybrid discrete/continuous-variable entanglement swapping.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--config", required=True, help="INI config file (see configs/)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, experiment=args.experiment,
                             seed=args.seed, out_dir=args.out)
        out_dir = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

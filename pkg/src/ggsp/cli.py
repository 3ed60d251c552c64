"""Command-line entry point: ``ggsp denoise|complete|continuous --config F --seed S --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DataError
from .experiments.runner import KINDS, load_config, run_experiment

log = logging.getLogger("ggsp")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggsp", description="Run a graph random process experiment.")
    parser.add_argument("experiment", choices=KINDS)
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", required=True, type=int, help="unsigned 64-bit seed")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--workers", type=int, default=None, help="parallel repetitions")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config is for '{cfg.experiment}', command was '{args.experiment}'")
        if args.workers is not None:
            cfg.workers = args.workers
        report = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    log.info("finished in %.1f s", report["runtime_seconds"])
    return 0


if __name__ == "__main__":
    sys.exit(main())

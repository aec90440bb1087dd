import argparse
import json
import logging
import sys
from pathlib import Path

from config import ConfigError
from zeros import cfg
from zeros.experiment import COMMANDS, ExitCode, run
from zeros.limitlaw import SupportNotCovered
from zeros.stats import DegenerateRegion

logger = logging.getLogger(__name__)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment configuration (JSON)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker processes for trials")
    common.add_argument("--n", type=int, nargs="+", help="degrees to run")
    common.add_argument("--trials", type=int, help="trials per degree")
    common.add_argument("--grid-h", type=float, help="grid spacing")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(description="Zeros of sums of random polynomials with independent roots.")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        commands.add_parser(name, parents=[common], help=(func.__doc__ or "").strip().splitlines()[0])
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None:
            cfg.load(args.config)
    except (json.JSONDecodeError, OSError) as err:
        logger.error("Could not read the configuration: %s", err)
        return int(ExitCode.CONFIG)
    try:
        cfg.override(seed=args.seed, out=args.out, threads=args.threads, n=args.n, trials=args.trials,
                     grid_h=args.grid_h)
        cfg.validate()
        return int(run(args.command, cfg))
    except (ConfigError, SupportNotCovered, DegenerateRegion) as err:
        logger.error("Configuration error: %s", err)
        return int(ExitCode.CONFIG)
    except Exception as err:
        logger.exception(err)
        return int(ExitCode.FAIL)


if __name__ == "__main__":
    sys.exit(main())

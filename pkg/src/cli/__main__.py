"""
Command line entry point.

Usage:
    python -m src.cli simulate --config configs/simulate.json --out results/
    python -m src.cli critical-delay --config configs/critical_delay.json
    python -m src.cli sweep --config configs/sweep_tau.json --threads 4
    python -m src.cli validate --config configs/simulate.json --seed 3
    python -m src.cli feedback --config configs/feedback.json

Exit codes: 0 success, 2 configuration error, 3 when a simulate, validate or
sweep run ends with the Diverged verdict.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from src.cli.commands import (
    cmd_critical_delay,
    cmd_feedback,
    cmd_simulate,
    cmd_sweep,
    cmd_validate,
)
from src.cli.config import get_config, load_run_config
from src.diagnostics import FlockingVerdict
from src.exceptions import ConfigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
DIVERGED = FlockingVerdict.DIVERGED.value

COMMANDS = {
    "simulate": cmd_simulate,
    "critical-delay": cmd_critical_delay,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "feedback": cmd_feedback,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli", description="Delayed Cucker-Smale flocking toolkit"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, type=Path, help="Path to run config JSON")
        sub.add_argument("--out", type=Path, default=None, help="Directory to write results")
        sub.add_argument("--threads", type=int, default=None, help="Worker processes for sweeps")
        sub.add_argument("--seed", type=int, default=None, help="Override the config seed")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_config()
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)

    try:
        config = load_run_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads", f"must be >= 1, got {args.threads}")
    except ConfigError as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG

    out_dir = args.out or settings.OUT_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s with %s, writing to %s", args.command, args.config, out_dir)

    try:
        if args.command == "sweep":
            table = COMMANDS[args.command](
                config,
                out_dir,
                threads=args.threads or settings.THREADS,
                show_progress=settings.SHOW_PROGRESS,
            )
            verdicts = list(table["verdict"])
        else:
            result = COMMANDS[args.command](config, out_dir)
            verdicts = [result.get("verdict")]
    except ConfigError as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG

    if DIVERGED in verdicts:
        logger.warning("%s: %d run(s) diverged", args.command, verdicts.count(DIVERGED))
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""CLI: Command line entry point of the experiment harness.

Usage::

    headgrow exp1 --config exp1.cfg --seed 7 --out-dir runs
    headgrow checks --seeds 4

Exit status is 0 when every criterion passes, 1 when any fails (their
names go to stderr) and 2 for configuration errors.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence

from _headgrow.harness.checks import run_checks
from _headgrow.harness.checks import run_gradcheck
from _headgrow.harness.config import RunConfig
from _headgrow.harness.config import load_config
from _headgrow.harness.experiments import EXPERIMENTS
from _headgrow.harness.experiments import ExperimentReport
from _headgrow.harness.output import write_report
from _headgrow.harness.output import write_summary
from _headgrow.utils.exceptions import ConfigError
from _headgrow.utils.exceptions import HeadgrowError
from _headgrow.utils.logging import create_logger
from _headgrow.utils.logging import get_logger

__all__ = ["COMMANDS", "build_parser", "main"]

log = get_logger(__name__)

Runner = Callable[[RunConfig], ExperimentReport]

COMMANDS: Dict[str, Runner] = {
    **EXPERIMENTS,
    "checks": run_checks,
    "gradcheck": run_gradcheck,
}
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _u64(text: str) -> int:
    value = int(text, 10)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit")
    return value


def _positive(text: str) -> int:
    value = int(text, 10)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one subcommand per runner."""

    parser = argparse.ArgumentParser(
        prog="headgrow",
        description="Self-growing prototype-head layer experiments.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="Config file path")
    parser.add_argument(
        "--seed", type=_u64, default=None, help="Seed, overrides config"
    )
    parser.add_argument(
        "--out-dir", default=None, help="Output directory, overrides config"
    )
    parser.add_argument(
        "--seeds",
        type=_positive,
        default=1,
        help="Number of consecutive seeds to fan out over threads",
    )
    parser.add_argument("--log-level", default="INFO", choices=LOG_LEVELS)
    return parser


def _run_all(
    runner: Runner, configs: List[RunConfig]
) -> List[ExperimentReport]:
    if len(configs) == 1:
        return [runner(configs[0])]
    workers = min(len(configs), os.cpu_count() or 1)
    with ThreadPoolExecutor(workers, thread_name_prefix="seed") as pool:
        return list(pool.map(runner, configs))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return the exit status."""

    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out_dir)
        configs = [cfg.replace(seed=cfg.seed + i) for i in range(args.seeds)]
    except ConfigError as error:
        sys.stderr.write(f"headgrow: {error}\n")
        return EXIT_CONFIG

    folder = os.path.join(cfg.out_dir, args.command)
    os.makedirs(folder, exist_ok=True)
    create_logger(
        level=getattr(logging, args.log_level),
        filename=os.path.join(folder, "run.log"),
        filemode="w",
    )
    log.info(
        "Starting",
        command=args.command,
        seeds=args.seeds,
        run=f"{args.command}:{cfg.seed}",
    )
    try:
        reports = _run_all(COMMANDS[args.command], configs)
    except ConfigError as error:
        sys.stderr.write(f"headgrow: {error}\n")
        return EXIT_CONFIG
    except HeadgrowError as error:
        log.exception("Run aborted", command=args.command)
        sys.stderr.write(f"headgrow: {error}\n")
        return EXIT_FAILED

    for report in reports:
        write_report(report, cfg.out_dir)
    write_summary(reports, cfg.out_dir, args.command)
    failed = [
        f"{report.name}:{report.config.seed}:{name}"
        for report in reports
        for name in report.failures
    ]
    if failed:
        sys.stderr.write("failed criteria: " + ", ".join(failed) + "\n")
        return EXIT_FAILED
    log.info("All criteria met", command=args.command)
    return EXIT_OK

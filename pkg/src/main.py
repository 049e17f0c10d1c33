#!/usr/bin/env python3
"""
PTT-Sim: pseudo-spectral simulator for the incompressible Phan-Thien-Tanner system
Main entry point for the application

Usage:
    python -m src.main run --config config/run.example.json [--out runs/x] [--seed 7]
    python -m src.main verify --suite lp
    python -m src.main probe --estimate commutator --samples 100 --seed 0
    ptt-sim ...                     # after installation

Exit codes: 0 success, 1 verification failure, 2 config error,
3 blow-up in a scenario not expecting it.
"""

import argparse
import json
import sys
from typing import List, Optional

from . import __version__
from .estimate_probes import (
    ESTIMATES,
    PROBE_PS,
    compare_to_baseline,
    load_baselines,
    run_probe,
    save_baselines,
)
from .experiment_runner import ConfigError, RunIOError, run_from_file
from .utils.logger_setup import LoggerSetup
from .verification import SUITE_NAMES, verify

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptt-sim",
        description="Pseudo-spectral simulator and verification suites for the PTT system",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Run a configured scenario")
    run_parser.add_argument("--config", required=True, help="Run config JSON file")
    run_parser.add_argument("--out", default=None, help="Output directory (overrides the config)")
    run_parser.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")

    verify_parser = sub.add_parser("verify", help="Run invariant suites")
    verify_parser.add_argument("--suite", default="all", choices=SUITE_NAMES + ("all",))
    verify_parser.add_argument("--summary", default=None, help="Also write the JSON summary here")

    probe_parser = sub.add_parser("probe", help="Sample one paraproduct estimate")
    probe_parser.add_argument("--estimate", required=True, choices=ESTIMATES)
    probe_parser.add_argument("--samples", type=int, default=100)
    probe_parser.add_argument("--seed", type=int, default=0)
    probe_parser.add_argument("--p", type=float, action="append", default=None,
                              help="Lebesgue index (repeatable, default 2, 3 and 4)")
    return parser


def _print_json(payload):
    print(json.dumps(payload, indent=2, default=str))


def cmd_run(args, logger) -> int:
    try:
        artifacts = run_from_file(args.config, args.out, args.seed)
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        return EXIT_CONFIG
    except RunIOError as e:
        logger.error(f"Run output failed: {e}")
        return EXIT_FAILURE
    _print_json(artifacts.report)
    return artifacts.exit_code


def cmd_verify(args, logger) -> int:
    code, summary = verify(args.suite)
    _print_json(summary)
    if args.summary:
        with open(args.summary, "w") as f:
            json.dump(summary, f, indent=2, default=str)
    logger.info(f"verify {args.suite}: {'passed' if code == EXIT_OK else 'FAILED'}")
    return code


def cmd_probe(args, logger) -> int:
    if args.samples < 1:
        logger.error(f"--samples must be positive, got {args.samples}")
        return EXIT_CONFIG
    if args.estimate == "bony":
        report = run_probe("bony", args.seed, args.samples)
        _print_json(report.to_dict())
        return EXIT_OK if report.passed else EXIT_FAILURE

    baselines = load_baselines()
    reports, ok, recorded = [], True, False
    for p in args.p or PROBE_PS:
        report = run_probe(args.estimate, args.seed, args.samples, p)
        comparison = compare_to_baseline(report, baselines)
        recorded = recorded or comparison.data.get("recorded", False)
        ok = ok and report.passed and comparison.success
        reports.append({**report.to_dict(), "baseline": comparison.to_dict()})
    if recorded:
        save_baselines(baselines)
    _print_json(reports)
    return EXIT_OK if ok else EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)
    logger = LoggerSetup.setup("PTTSim")

    logger.info("=" * 70)
    logger.info(f"PTT-Sim {__version__}: {args.command}")
    logger.info("=" * 70)

    commands = {"run": cmd_run, "verify": cmd_verify, "probe": cmd_probe}
    try:
        return commands[args.command](args, logger)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

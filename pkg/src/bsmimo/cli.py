"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import scenario
from .errors import NumericalError

log = logging.getLogger("bsmimo")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="scenario INI file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out-dir", default=".", help="directory for output artifacts")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsmimo", description="Beam-space MIMO scenario runner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("synth-loads", help="load reactance sweep and schedule"), False)
    _common(sub.add_parser("antenna-report", help="basis patterns, imbalance, EVM, return loss"), False)
    p = sub.add_parser("simulate", help="link-level frames per SNR point")
    _common(p)
    p.add_argument("--frames", type=int, default=10, help="frames (channel draws) per SNR point")
    p = sub.add_parser("analyze-dataset", help="statistics of a stored channel ensemble")
    _common(p, False)
    p.add_argument("ensemble", help="ensemble CSV file")
    p = sub.add_parser("sweep", help="MI / capacity / SER curves over an ensemble")
    _common(p)
    p.add_argument("--ensemble", help="ensemble CSV file (default: generate from the config)")
    _common(sub.add_parser("run", help="full collect-to-metrics pipeline"))
    return parser


def _config(args) -> scenario.ScenarioConfig:
    cfg = scenario.load_config(args.config) if args.config else scenario.ScenarioConfig()
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def dispatch(args) -> None:
    cfg = _config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = max(1, args.threads)
    if args.command == "synth-loads":
        scenario.synth_loads(cfg, out)
    elif args.command == "antenna-report":
        scenario.antenna_report(cfg, out)
    elif args.command == "simulate":
        scenario.simulate(cfg, out, args.frames, threads)
    elif args.command == "analyze-dataset":
        scenario.analyze_dataset(cfg, Path(args.ensemble), out)
    elif args.command == "sweep":
        if args.ensemble:
            from .channel import load_ensemble

            ens = load_ensemble(args.ensemble)
        else:
            ens = scenario.collect(cfg, threads)
        _, h_norm = scenario.analyze(cfg, ens, out)
        scenario.sweep(cfg, h_norm, out, threads)
    elif args.command == "run":
        scenario.run(cfg, out, threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except NumericalError as exc:
        print(f"bsmimo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"bsmimo: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

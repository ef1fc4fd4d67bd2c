"""Command line entry point: ``hma-xlmimo run`` and ``hma-xlmimo sweep``.

Exit codes: 0 success, 2 usage, 3 invalid configuration, 4 output I/O,
5 every cell failed, 6 some cells failed (results still written).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import BASELINES, ConfigError, ExperimentConfig, load_config, parse_seeds
from .results import OutputError, emit_results
from .scenario import run_scenario, run_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_FAILED = 5
EXIT_PARTIAL = 6

log = logging.getLogger("hma_xlmimo")


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hma-xlmimo",
                                     description="HMA-assisted near-field wideband XL-MIMO uplink simulator.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "evaluate a single scenario for each seed"),
                            ("sweep", "sweep one axis over the configured values")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML config file (defaults are used when omitted)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seeds", help="seed list, e.g. 0-9 or 1,4,7")
        p.add_argument("--threads", type=int, help="worker processes for sweep cells")
        p.add_argument("--sets", help="comma list of feasible sets: UC,AO,BA,LP")
        p.add_argument("--baselines", help=f"comma list from: {','.join(BASELINES)} (empty string for none)")
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.out is not None:
        changes["out"] = args.out
    if args.seeds is not None:
        changes["seeds"] = parse_seeds(args.seeds)
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.sets is not None:
        changes["sets"] = tuple(s.upper() for s in _csv_list(args.sets))
    if args.baselines is not None:
        changes["baselines"] = _csv_list(args.baselines)
    if args.command == "run":
        changes.update(kind="single", axis=None, values=())
    elif config.kind != "sweep":
        raise ConfigError("kind", "the sweep command needs a config with kind: sweep, an axis and values")
    try:
        return dataclasses.replace(config, **changes)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        config = resolve_config(args)
    except ConfigError as exc:
        print(f"hma-xlmimo: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        records = [rec for seed in config.seeds for rec in run_scenario(config, seed)]
    else:
        records = run_sweep(config)

    try:
        emit_results(records, config.out, config, traces=config.traces)
    except OutputError as exc:
        print(f"hma-xlmimo: {exc}", file=sys.stderr)
        return EXIT_IO

    failed = sum(not r.ok for r in records)
    print(f"hma-xlmimo: {len(records)} records ({failed} failed), config {config.hash}, written to {config.out}",
          file=sys.stderr)
    if records and failed == len(records):
        return EXIT_FAILED
    if failed:
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

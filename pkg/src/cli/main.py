# src/cli/main.py

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from src.cli.commands import (
    cmd_akr,
    cmd_allocate,
    cmd_fkr_curve,
    cmd_fully_curve,
    cmd_simulate,
    cmd_simulate_tallies,
    cmd_witness,
)
from src.cli.config import load_run_config
from src.errors import ConfigError, DomainError


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _positive_int(text: str) -> int:
    try:
        value = int(float(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conclave",
        description="Anonymous conference key agreement: rates, allocations and protocol runs.",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Logging verbosity on stderr.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    def with_config(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = verbs.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="YAML run configuration.")
        sub.add_argument("--out", default=None, help="Output CSV (stdout when absent).")
        return sub

    with_config("akr", "Asymptotic key rates and advantage ratios.")
    for name, help_text in (
        ("fkr-curve", "Optimised finite key rates over L_tot."),
        ("allocate", "Round split of the optimised multipartite run."),
    ):
        sub = with_config(name, help_text)
        sub.add_argument("--l-tot", type=_positive_int, nargs="+", default=None)

    simulate = with_config("simulate", "Run the configured protocol end to end.")
    simulate.add_argument("--seed", type=int, default=None, help="Overrides the configured seed.")
    simulate.add_argument("--l-tot", type=_positive_int, nargs="+", default=None)
    simulate.add_argument("--transcript", action="store_true", help="Also export each public transcript.")
    simulate.add_argument("--key-out", default=None, help="Write the final key of the last successful run.")

    witness = verbs.add_parser("witness", help="GHZ fidelity bound from basis tallies.")
    witness.add_argument("--tallies", required=True, help="basis,outcome_bits,count file.")
    witness.add_argument("--out", default=None)

    tallies = with_config("tallies", "Simulate a tally file from the configured GHZ noise.")
    tallies.add_argument("--rounds", type=_positive_int, required=True)
    tallies.add_argument("--seed", type=int, default=None)

    with_config("fully-curve", "r_fully-M / r_fully-B across the Q_Z sweep.")
    return parser


def run(args: argparse.Namespace) -> None:
    if args.verb == "witness":
        cmd_witness(args.tallies, args.out)
        return

    config = load_run_config(args.config)
    out = args.out if args.out is not None else config.output
    if args.verb == "akr":
        cmd_akr(config, out)
    elif args.verb == "fkr-curve":
        cmd_fkr_curve(config, out, args.l_tot)
    elif args.verb == "allocate":
        cmd_allocate(config, out, args.l_tot)
    elif args.verb == "simulate":
        cmd_simulate(config, out, args.seed, args.l_tot, args.transcript, args.key_out)
    elif args.verb == "tallies":
        cmd_simulate_tallies(config, args.rounds, args.out, args.seed)
    elif args.verb == "fully-curve":
        cmd_fully_curve(config, out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(message)s", stream=sys.stderr)

    try:
        run(args)
    except (ConfigError, DomainError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

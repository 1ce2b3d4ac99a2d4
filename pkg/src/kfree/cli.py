"""Command line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .exceptions import KFreeError
from .scenario import Scenario, schottky_scenario

COMMANDS = ["main-search", "lemma51", "rank-lemma", "displacement", "tree", "all"]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, help="scenario JSON file (default: a seeded rank-2 Schottky group)")
    common.add_argument("--out", type=Path, help="write the certificate here instead of stdout")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--samples", type=int, help="number of sample points")
    common.add_argument("--ball", type=int, help="word-ball radius R")
    common.add_argument("--lambda", dest="lam", type=float, help="displacement threshold (default log(2k-1))")
    common.add_argument("--format", choices=["json", "csv", "text"], default="json")

    p = argparse.ArgumentParser(prog="kfree", description="Cylinder covers, nerves and rank checks for Schottky-type groups.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def load_scenario(args) -> Scenario:
    s = Scenario.load(args.scenario) if args.scenario else schottky_scenario(2, 0)
    return s.with_overrides(seed=args.seed, sample_count=args.samples, ball_radius=args.ball, lam=args.lam)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        s = load_scenario(args)
        if args.command == "all":
            cert = harness.run_all(s)
        else:
            cert = harness.SUITES[args.command](s)
    except KFreeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    text = cert.render(args.format)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if cert.verdict in (harness.PASS, harness.OBSERVED) else 1


if __name__ == "__main__":
    sys.exit(main())

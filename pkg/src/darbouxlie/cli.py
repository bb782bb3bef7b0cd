"""``verify`` command: run identity suites on a scenario and emit a JSON report."""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ScenarioError
from .scenario import load_scenario
from .stencil import SCHEMES
from .suites import SUITES, RunOptions, report_passed, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="verify",
                description="Numerically verify Darboux-Lie derivative identities on a scenario.")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--suite", action="append", default=[], metavar="NAME",
                   help="suite to run (repeatable; default: the scenario's list, else all)")
    p.add_argument("--eps", type=_positive_float, help="finite-difference step")
    p.add_argument("--stencil", choices=sorted(SCHEMES), help="finite-difference scheme")
    p.add_argument("--samples", type=_positive_int, help="samples per case")
    p.add_argument("--seed", type=_u64, help="RNG seed (overrides the scenario)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--list-suites", action="store_true", help="list suites and exit")
    return p


def render(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_suites:
        for name, (_, description) in SUITES.items():
            print(f"{name:24s}{description}")
        return EXIT_PASS
    if not args.scenario:
        print("verify: error: --scenario is required", file=sys.stderr)
        return EXIT_USAGE
    options = RunOptions(eps=args.eps, stencil=args.stencil, samples=args.samples,
                         seed=args.seed)
    try:
        scenario = load_scenario(args.scenario)
        report = run_scenario(scenario, args.suite or None, options)
    except ScenarioError as e:
        print(f"verify: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS if report_passed(report) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

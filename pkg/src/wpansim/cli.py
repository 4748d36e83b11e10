"""Command-line entry point: ``wpansim run <scenario> [options]``.

Exit codes: 0 on success, 1 when ``--check`` finds a violated invariant,
2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import ConfigError, load_scenario, run_scenario, write_pcap, write_stats, write_trace
from .harness.checks import run_checks
from .harness.output import OutputError


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems share the config-error exit code
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpansim", description="IEEE 802.15.4 LR-WPAN discrete-event simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, help="override [global] seed")
    run.add_argument("--duration", type=float, metavar="T_MS", help="override [global] duration_ms")
    run.add_argument("--trace", type=Path, metavar="PATH", help="write the event trace")
    run.add_argument("--pcap", type=Path, metavar="PATH", help="write captured frames as pcap")
    run.add_argument("--stats", type=Path, metavar="PATH", help="write statistics (.json for JSON)")
    run.add_argument("--check", action="store_true", help="assert run invariants; exit 1 on violation")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.scenario.read_text()
    except OSError as exc:
        print(f"wpansim: cannot read {args.scenario}: {exc.strerror or exc}", file=sys.stderr)
        return 2
    try:
        scenario = load_scenario(text)
        if args.duration is not None and args.duration <= 0:
            raise ConfigError("--duration must be positive")
        result = run_scenario(scenario, args.seed, args.duration)
    except ConfigError as exc:
        print(f"wpansim: {args.scenario}: {exc}", file=sys.stderr)
        return 2
    try:
        if args.trace:
            write_trace(result.trace, args.trace)
        if args.pcap:
            write_pcap(result.frames, args.pcap)
        if args.stats:
            write_stats(result.stats, args.stats)
    except OutputError as exc:
        print(f"wpansim: {exc}", file=sys.stderr)
        return 1
    total = result.stats.total
    print(f"events={result.stats.events} frames={total.frames_sent} delivered={total.msdu_delivered} "
          f"collided={total.collided} delivery_ratio={total.delivery_ratio:.4f}")
    if args.check:
        failures = 0
        for name, problems in run_checks(result).items():
            print(f"check {name}: {'ok' if not problems else 'FAILED'}")
            for p in problems[:10]:
                print(f"  {p}")
            failures += len(problems)
        if failures:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

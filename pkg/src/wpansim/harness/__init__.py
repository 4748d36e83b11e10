"""Scenario configuration, node assembly, execution and output."""

from pathlib import Path

from .config import ConfigError, Scenario, load_scenario
from .output import read_pcap, write_pcap, write_stats, write_trace
from .run import RunResult, Simulation, run_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def shipped_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.cfg"))}


__all__ = [
    "ConfigError", "RunResult", "SCENARIO_DIR", "Scenario", "Simulation", "load_scenario", "read_pcap",
    "run_scenario", "shipped_scenarios", "write_pcap", "write_stats", "write_trace",
]

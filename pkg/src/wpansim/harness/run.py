"""Build a network from a Scenario, run it, and collect trace, captured frames and statistics."""

from __future__ import annotations

from dataclasses import dataclass

from ..engine import Simulator
from ..frames import Address, ExtAddress, ShortAddress
from ..medium import Medium, Transmission
from ..trace import Trace
from .config import Scenario
from .node import Node
from .stats import RunStats, collect_stats


@dataclass(frozen=True)
class CapturedFrame:
    time: int
    source: str
    channel: int
    psdu: bytes


@dataclass
class RunResult:
    stats: RunStats
    trace: Trace
    frames: list[CapturedFrame]
    simulation: Simulation


class Simulation:
    def __init__(self, scenario: Scenario, seed: int | None = None, duration_ms: float | None = None):
        self.scenario = scenario
        self.seed = scenario.global_.seed if seed is None else seed
        self.duration_us = round((scenario.global_.duration_ms if duration_ms is None else duration_ms) * 1000)
        self.sim = Simulator(self.seed)
        self.trace = Trace()
        g = scenario.global_
        self.medium = Medium(self.sim, g.path_loss_exponent, g.reference_loss_db)
        self.frames: list[CapturedFrame] = []
        self.medium.listeners.append(self._capture)
        self.sent_at: dict[tuple[str, int], int] = {}
        self.delivered: set[tuple[str, int]] = set()
        self.nodes = [Node(self, cfg, i) for i, cfg in enumerate(scenario.nodes)]
        self._by_id = {n.node_id: n for n in self.nodes}
        self.coordinator = self._by_id[scenario.coordinator.node_id]
        # staged initialization, each stage across all nodes before the next
        for n in self.nodes:
            n.register(self.medium, self.trace, g.cca_threshold_dbm)
        for n in self.nodes:
            n.load_pibs(scenario, self.coordinator)
        for n in self.nodes:
            n.start_timers(scenario)
        for n in self.nodes:
            n.enter_rx()
        for n in self.nodes:
            n.start_traffic()

    def _capture(self, tx: Transmission) -> None:
        self.frames.append(CapturedFrame(tx.start, tx.source, tx.channel, tx.psdu))

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    def node_by_address(self, addr: Address | None) -> Node | None:
        for n in self.nodes:
            if isinstance(addr, ShortAddress) and n.mac_pib.macShortAddress == addr.value:
                return n
            if isinstance(addr, ExtAddress) and n.ext_address == addr.value:
                return n
        return None

    def run(self) -> RunResult:
        self.sim.run(self.duration_us)
        return RunResult(collect_stats(self), self.trace, self.frames, self)


def run_scenario(scenario: Scenario, seed: int | None = None, duration_ms: float | None = None) -> RunResult:
    return Simulation(scenario, seed, duration_ms).run()

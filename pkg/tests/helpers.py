"""Small builders shared by the test modules."""

from __future__ import annotations

import textwrap
from typing import Generator

from wpansim.engine import Simulator
from wpansim.frames import ShortAddress
from wpansim.harness import load_scenario
from wpansim.harness.run import Simulation
from wpansim.mac import Mac, McpsDataRequest, TxOptions
from wpansim.medium import Medium
from wpansim.phy import Phy
from wpansim.pib import MacPib, PhyPib
from wpansim.trace import Trace

PAN = 0x1234


class StubRng:
    """Stand-in for random.Random that always draws the lowest value."""

    def randint(self, lo: int, hi: int) -> int:
        return lo

    def randrange(self, *args: int) -> int:
        return args[0] if len(args) > 1 else 0


class Bench:
    """Hand-wired nodes on one medium, without the scenario harness."""

    def __init__(self, seed: int = 1, channel: int = 11):
        self.sim = Simulator(seed)
        self.medium = Medium(self.sim)
        self.trace = Trace()
        self.channel = channel
        self.macs: dict[str, Mac] = {}

    def phy(self, node_id: str, pos: tuple[float, float] = (0.0, 0.0), channel: int | None = None) -> Phy:
        pib = PhyPib()
        pib.set_attribute("phyCurrentChannel", self.channel if channel is None else channel)
        phy = Phy(self.sim, node_id, self.medium, pib, tracer=self.trace)
        self.medium.register(node_id, pos, radio=phy)
        return phy

    def node(self, node_id: str, pos: tuple[float, float] = (0.0, 0.0), short: int = 1, *,
             pan: int = PAN, rx_on: bool = True, ext: int | None = None) -> Mac:
        phy = self.phy(node_id, pos)
        pib = MacPib(phy.pib, ext if ext is not None else 0x1000 + len(self.macs),
                     self.sim.rng(node_id, "pib"))
        pib.store("macPANId", pan)
        pib.store("macShortAddress", short)
        pib.store("macRxOnWhenIdle", rx_on)
        mac = Mac(self.sim, node_id, phy, pib, tracer=self.trace)
        mac._idle()
        self.macs[node_id] = mac
        return mac

    def jam(self, start: int, stop: int, pos: tuple[float, float] = (1.0, 0.0), channel: int | None = None) -> None:
        """A radio-less jammer sending back-to-back maximum-length frames over [start, stop)."""
        self.medium.register("jammer", pos)
        channel = self.channel if channel is None else channel

        def loop() -> Generator:
            yield start
            while self.sim.now < stop:
                tx = self.medium.begin_transmission("jammer", channel, 0, bytes(127))
                yield tx.end - self.sim.now

        self.sim.process(loop(), "jammer")

    def send(self, mac: Mac, dst: int, payload: bytes = b"x" * 10, ack: bool = True, at: int = 0):
        """Issue an MCPS-DATA.request at ``at``; returns a one-item list filled with the confirm."""
        out: list = []

        def go() -> None:
            sig = mac.mcps_data_request(McpsDataRequest(ShortAddress(dst), payload, TxOptions(ack=ack)))
            sig.add_callback(out.append)

        self.sim.schedule_at(at, go)
        return out

    def events(self, node: str | None = None, layer: str | None = None, event: str | None = None):
        return self.trace.select(node, layer, event)


def build(text: str, seed: int | None = None, duration_ms: float | None = None) -> Simulation:
    return Simulation(load_scenario(textwrap.dedent(text)), seed, duration_ms)


def run(text: str, seed: int | None = None, duration_ms: float | None = None):
    return build(text, seed, duration_ms).run()


def beacon_pan(bo: int, so: int | None = None, *, duration_ms: float = 5000, channel: int = 11,
               extra: str = "") -> str:
    so = bo if so is None else so
    return f"""
[global]
seed = 3
duration_ms = {duration_ms}

[pan]
pan_id = 0x2222
channel = {channel}
beacon_order = {bo}
superframe_order = {so}

[node.coord]
role = coordinator
position = 0, 0
{extra}
"""


# criterion number -> (passed, title, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}

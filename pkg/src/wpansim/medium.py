"""Shared radio channel: log-distance propagation, overlap bookkeeping, energy sensing.

Collisions are binary: any other transmission on the same channel that
overlaps a frame in time and arrives above the receiver's sensitivity
destroys it.  There is no capture effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .engine import Simulator
from .enums import RxOutcome, timing_for_channel

NOISE_FLOOR_DBM = -100.0
DEFAULT_SENSITIVITY_DBM = -85.0
# history kept behind the oldest active frame; covers any CCA/ED window
_HISTORY_SLACK_US = 10_000


class Radio(Protocol):
    channel: int

    def signal_start(self, tx: Transmission, power_dbm: float) -> None: ...

    def signal_end(self, tx: Transmission, power_dbm: float) -> None: ...

    def transmission_done(self, tx: Transmission) -> None: ...


@dataclass
class NodePlacement:
    node_id: str
    x: float
    y: float
    rx_sensitivity: float = DEFAULT_SENSITIVITY_DBM
    radio: Radio | None = None


@dataclass(eq=False)
class Transmission:
    tx_id: int
    source: str
    channel: int
    tx_power: float
    psdu: bytes
    start: int
    end: int
    aborted: bool = False
    receivers: list[str] = field(default_factory=list, repr=False)

    def overlaps(self, other: Transmission) -> bool:
        return self.start < other.end and other.start < self.end


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def airtime(channel: int, psdu_len: int) -> int:
    return timing_for_channel(channel).airtime(psdu_len)


class EnergyMonitor:
    """Tracks peak aggregate received power at one node on one channel."""

    def __init__(self, medium: Medium, node_id: str, channel: int):
        self.medium = medium
        self.node_id = node_id
        self.channel = channel
        self.peak_dbm = NOISE_FLOOR_DBM
        self.update()

    def update(self) -> None:
        self.peak_dbm = max(self.peak_dbm, self.medium.current_energy(self.node_id, self.channel))

    def close(self) -> float:
        self.medium._monitors.remove(self)
        return self.peak_dbm


class Medium:
    def __init__(self, sim: Simulator, path_loss_exponent: float = 2.0, reference_loss_db: float = 40.2,
                 reference_distance: float = 1.0, noise_floor_dbm: float = NOISE_FLOOR_DBM):
        self.sim = sim
        self.path_loss_exponent = path_loss_exponent
        self.reference_loss_db = reference_loss_db
        self.reference_distance = reference_distance
        self.noise_floor_dbm = noise_floor_dbm
        self.nodes: dict[str, NodePlacement] = {}
        self.active: dict[int, Transmission] = {}
        self._history: list[Transmission] = []
        self._monitors: list[EnergyMonitor] = []
        self._loss_cache: dict[tuple[str, str], float] = {}
        self._next_id = 1
        self._end_events: dict[int, Any] = {}
        # called with every Transmission at its start (trace/pcap taps)
        self.listeners: list[Callable[[Transmission], None]] = []

    def register(self, node_id: str, position: tuple[float, float],
                 sensitivity: float = DEFAULT_SENSITIVITY_DBM, radio: Radio | None = None) -> NodePlacement:
        if node_id in self.nodes:
            raise ValueError(f"node {node_id!r} already registered")
        placement = NodePlacement(node_id, float(position[0]), float(position[1]), sensitivity, radio)
        self.nodes[node_id] = placement
        return placement

    # -- propagation ----------------------------------------------------------

    def path_loss(self, a: str, b: str) -> float:
        key = (a, b) if a <= b else (b, a)
        loss = self._loss_cache.get(key)
        if loss is None:
            pa, pb = self.nodes[a], self.nodes[b]
            d = max(math.hypot(pa.x - pb.x, pa.y - pb.y), self.reference_distance)
            loss = self.reference_loss_db + 10.0 * self.path_loss_exponent * math.log10(d / self.reference_distance)
            self._loss_cache[key] = loss
        return loss

    def received_power(self, tx: Transmission, receiver: str) -> float:
        return tx.tx_power - self.path_loss(tx.source, receiver)

    # -- transmissions ----------------------------------------------------------

    def begin_transmission(self, node: str, channel: int, power_dbm: float, psdu: bytes,
                           now: int | None = None) -> Transmission:
        if node not in self.nodes:
            raise KeyError(f"unregistered node {node!r}")
        start = self.sim.now if now is None else now
        tx = Transmission(self._next_id, node, channel, float(power_dbm), bytes(psdu), start,
                          start + airtime(channel, len(psdu)))
        self._next_id += 1
        self.active[tx.tx_id] = tx
        self._history.append(tx)
        for cb in self.listeners:
            cb(tx)
        for nid, placement in self.nodes.items():
            radio = placement.radio
            if nid == node or radio is None or radio.channel != channel:
                continue
            tx.receivers.append(nid)
            radio.signal_start(tx, self.received_power(tx, nid))
        self._touch_monitors(channel)
        self._end_events[tx.tx_id] = self.sim.schedule_at(tx.end, self._finish, tx)
        return tx

    def abort_transmission(self, tx: Transmission) -> None:
        if tx.tx_id not in self.active:
            return
        self.sim.cancel(self._end_events.get(tx.tx_id))
        tx.end = self.sim.now
        tx.aborted = True
        self._finish(tx)

    def _finish(self, tx: Transmission) -> None:
        self.active.pop(tx.tx_id, None)
        self._end_events.pop(tx.tx_id, None)
        for nid in tx.receivers:
            radio = self.nodes[nid].radio
            radio.signal_end(tx, self.received_power(tx, nid))
        src = self.nodes[tx.source].radio
        if src is not None:
            src.transmission_done(tx)
        self._touch_monitors(tx.channel)
        self._prune()

    def _prune(self) -> None:
        horizon = min((t.start for t in self.active.values()), default=self.sim.now) - _HISTORY_SLACK_US
        if self._history and self._history[0].end < horizon:
            self._history = [t for t in self._history if t.end >= horizon]

    # -- reception outcome ----------------------------------------------------------

    def receive_outcome(self, receiver: str, tx: Transmission) -> RxOutcome:
        sensitivity = self.nodes[receiver].rx_sensitivity
        if self.received_power(tx, receiver) < sensitivity:
            return RxOutcome.BELOW_SENSITIVITY
        for other in self._history:
            if other is tx or other.channel != tx.channel or other.source == receiver:
                continue
            if other.overlaps(tx) and self.received_power(other, receiver) >= sensitivity:
                return RxOutcome.COLLIDED
        return RxOutcome.DELIVERED

    # -- energy ----------------------------------------------------------------------

    def current_energy(self, node: str, channel: int) -> float:
        total = 0.0
        for tx in self.active.values():
            if tx.channel == channel and tx.source != node:
                total += dbm_to_mw(self.received_power(tx, node))
        return max(mw_to_dbm(total), self.noise_floor_dbm) if total > 0 else self.noise_floor_dbm

    def sense_energy(self, node: str, channel: int, window: int, now: int | None = None) -> float:
        """Peak aggregate received power over ``[now - window, now]``."""
        now = self.sim.now if now is None else now
        lo = now - window
        relevant = [t for t in self._history
                    if t.channel == channel and t.source != node and t.start <= now and t.end > lo]
        if not relevant:
            return self.noise_floor_dbm
        # aggregate power is piecewise constant, changing only at frame starts
        instants = {lo} | {t.start for t in relevant if t.start > lo}
        peak = 0.0
        for instant in instants:
            total = sum(dbm_to_mw(self.received_power(t, node))
                        for t in relevant if t.start <= instant < t.end)
            peak = max(peak, total)
        if peak <= 0.0:
            return self.noise_floor_dbm
        return max(mw_to_dbm(peak), self.noise_floor_dbm)

    def open_energy_monitor(self, node: str, channel: int) -> EnergyMonitor:
        mon = EnergyMonitor(self, node, channel)
        self._monitors.append(mon)
        return mon

    def _touch_monitors(self, channel: int) -> None:
        for mon in self._monitors:
            if mon.channel == channel:
                mon.update()

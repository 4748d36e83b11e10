"""Per-node stack assembly: PHY, MAC, PIBs, adapters, traffic and boot sequence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Generator

from ..adapters import AppPayload, LlcConverter, Sscs, TrafficGenerator, make_payload
from ..engine import Simulator
from ..enums import BROADCAST_ADDR, NO_SHORT_ADDR, ScanType, Status
from ..frames import Address, ExtAddress, ShortAddress
from ..mac import DataConfirm, DataIndication, Mac, ScanConfirm, TxOptions
from ..medium import Medium
from ..phy import Phy
from ..pib import MacPib, PhyPib
from ..trace import Trace
from .config import ConfigError, NodeConfig, Scenario

if TYPE_CHECKING:
    from .run import Simulation

EXT_BASE = 0x00124B0000000000


@dataclass
class AppCounters:
    generated: int = 0
    submitted: int = 0
    not_ready: int = 0
    confirmed: dict[str, int] = field(default_factory=dict)
    received: int = 0
    received_bytes: int = 0
    latencies: list[int] = field(default_factory=list)


class Node:
    def __init__(self, owner: Simulation, cfg: NodeConfig, index: int):
        self.owner = owner
        self.cfg = cfg
        self.node_id = cfg.node_id
        self.index = index
        self.ext_address = cfg.ext_address if cfg.ext_address is not None else EXT_BASE + index + 1
        self.app = AppCounters()
        self.ready = False
        self.scan_result: ScanConfirm | None = None
        self.assoc_status: Status | None = None
        self.gts_status: Status | None = None
        self.generators: list[TrafficGenerator] = []
        self._counter = 0

    @property
    def sim(self) -> Simulator:
        return self.owner.sim

    # -- initialization stages -------------------------------------------------------

    def register(self, medium: Medium, tracer: Trace, cca_threshold: float | None) -> None:
        cfg = self.cfg
        self.phy_pib = PhyPib()
        self.phy = Phy(self.sim, self.node_id, medium, self.phy_pib, sensitivity=cfg.sensitivity_dbm,
                       cca_threshold=cca_threshold, tracer=tracer)
        medium.register(self.node_id, cfg.position, cfg.sensitivity_dbm, radio=self.phy)
        self.mac_pib = MacPib(self.phy_pib, self.ext_address, self.sim.rng(self.node_id, "pib"))
        self.mac = Mac(self.sim, self.node_id, self.phy, self.mac_pib, tracer=tracer)
        self.sscs = Sscs(self.mac)
        self.llc = LlcConverter(self.mac, attach=False)
        self.sscs.receivers.append(self._on_indication)

    def load_pibs(self, scen: Scenario, coordinator: Node) -> None:
        cfg, pan = self.cfg, scen.pan
        self._set(self.phy_pib, "phyCurrentChannel", cfg.channel if cfg.channel is not None else pan.channel)
        self._set(self.phy_pib, "phyTransmitPower", cfg.tx_power_dbm)
        store = self.mac_pib.store
        store("macRxOnWhenIdle", cfg.rx_on_when_idle)
        if cfg.is_coordinator:
            store("macShortAddress", cfg.short_address if cfg.short_address is not None else 0x0000)
            store("macAssociationPermit", True)
        else:
            store("macBeaconOrder", pan.beacon_order)
            store("macSuperframeOrder", pan.superframe_order)
            store("macCoordShortAddress", coordinator.configured_short())
            store("macCoordExtendedAddress", coordinator.ext_address)
            if not cfg.associate:
                store("macPANId", pan.pan_id)
                store("macShortAddress", self.configured_short())
        for name, value in cfg.pib.items():
            pib = self.phy_pib if name.startswith("phy") else self.mac_pib
            self._set(pib, name, value)

    def _set(self, pib, name: str, value: Any) -> None:
        status = pib.set_attribute(name, value)
        if status != Status.SUCCESS:
            raise ConfigError(f"node {self.node_id!r}: cannot set {name} = {value!r} ({status})", self.cfg.line)

    def configured_short(self) -> int:
        if self.cfg.short_address is not None:
            return self.cfg.short_address
        return 0x0000 if self.cfg.is_coordinator else self.index

    def start_timers(self, scen: Scenario) -> None:
        self.sim.process(self._boot(scen), f"{self.node_id}:boot")
        cfg = self.cfg
        if cfg.poll_ms:
            self.sim.process(self._poll_loop(round(cfg.poll_ms * 1000)), f"{self.node_id}:poll")
        if cfg.silence_ms is not None:
            self.sim.schedule_at(round(cfg.silence_ms * 1000), self.mac.mlme_reset_request, True)

    def enter_rx(self) -> None:
        self.mac._idle()

    def start_traffic(self) -> None:
        for tcfg in self.cfg.traffic:
            gen = TrafficGenerator(self.sim, tcfg, lambda c, p, t=tcfg: self._send(t, p),
                                   self.sim.rng(self.node_id, f"traffic.{tcfg.name}"))
            self.generators.append(gen)
            gen.start()

    # -- boot -------------------------------------------------------------------------

    def _boot(self, scen: Scenario) -> Generator:
        cfg, pan = self.cfg, scen.pan
        mac = self.mac
        if cfg.scan is not None:
            kind = {"ed": ScanType.ED, "active": ScanType.ACTIVE, "passive": ScanType.PASSIVE}[cfg.scan.kind]
            self.scan_result = yield mac.mlme_scan_request(kind, cfg.scan.channels, cfg.scan.duration)
        if cfg.is_coordinator:
            status = mac.mlme_start_request(pan.pan_id, pan.channel, pan.beacon_order, pan.superframe_order)
            self.ready = status == Status.SUCCESS
            return
        if cfg.associate:
            at = round(cfg.associate_ms * 1000)
            if at > self.sim.now:
                yield at - self.sim.now
            coord = self._coordinator_address(scen)
            conf = yield mac.mlme_associate_request(cfg.channel if cfg.channel is not None else pan.channel,
                                                    pan.pan_id, coord)
            self.assoc_status = conf.status
            if conf.status != Status.SUCCESS:
                return
        elif pan.beacon_order < 15:
            mac.mlme_sync_request(track=True)
        if cfg.gts is not None:
            if pan.beacon_order < 15:
                yield mac.wait_for_clock()
            at = round(cfg.gts.at_ms * 1000)
            if at > self.sim.now:
                yield at - self.sim.now
            conf = yield mac.mlme_gts_request(cfg.gts.length, cfg.gts.direction, True)
            self.gts_status = conf.status
        self.ready = True

    def _coordinator_address(self, scen: Scenario) -> Address:
        if self.scan_result is not None:
            for desc in self.scan_result.pan_descriptors:
                if desc.coord_pan_id == scen.pan.pan_id:
                    return desc.coord_address
        coord = self.owner.node(scen.coordinator.node_id)
        short = coord.configured_short()
        return ShortAddress(short) if short < NO_SHORT_ADDR else ExtAddress(coord.ext_address)

    def _poll_loop(self, period: int) -> Generator:
        while True:
            yield period
            if self.ready and self.mac.clock is None:
                self.mac.mlme_poll_request()

    # -- application ------------------------------------------------------------------

    def resolve_destination(self, dst: str) -> Address:
        if dst == "broadcast":
            return ShortAddress(BROADCAST_ADDR)
        if dst.startswith("0x"):
            return ShortAddress(int(dst, 16))
        target = self.owner.coordinator if dst == "coordinator" else self.owner.node(dst)
        return target.mac.own_address()

    def _send(self, tcfg, payload: bytes) -> None:
        self.app.generated += 1
        if not self.ready:
            self.app.not_ready += 1
            return
        counter = self._counter
        self._counter += 1
        payload = make_payload(counter, len(payload))
        dst = self.resolve_destination(tcfg.dst)
        ack = tcfg.ack and not (isinstance(dst, ShortAddress) and dst.is_broadcast)
        gts, indirect = tcfg.mode == "gts", tcfg.mode == "indirect"
        if len(payload) >= 4:
            self.owner.sent_at[(self.node_id, counter)] = self.sim.now
        self.app.submitted += 1
        if tcfg.adapter == "llc":
            sig = self.llc.send(payload, dst, TxOptions(ack, gts, indirect))
        else:
            sig = self.sscs.data_request(AppPayload(dst, payload, None, ack, gts, indirect))
        sig.add_callback(self._on_confirm)

    def _on_confirm(self, conf: DataConfirm) -> None:
        key = conf.status.value
        self.app.confirmed[key] = self.app.confirmed.get(key, 0) + 1

    def _on_indication(self, ind: DataIndication) -> None:
        self.app.received += 1
        self.app.received_bytes += len(ind.msdu)
        src = self.owner.node_by_address(ind.src_addr)
        if src is None or len(ind.msdu) < 4:
            return
        counter = int.from_bytes(ind.msdu[:4], "big")
        sent = self.owner.sent_at.get((src.node_id, counter))
        if sent is not None:
            self.app.latencies.append(self.sim.now - sent)
            self.owner.delivered.add((src.node_id, counter))

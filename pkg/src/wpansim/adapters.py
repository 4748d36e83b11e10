"""Application adaptation on top of the MCPS-DATA service, and built-in traffic sources.

``Sscs`` stands in for an 802.2-style convergence sublayer and
``LlcConverter`` wraps raw packets from generic producers; both are
header-free and byte-transparent.  Traffic generators are simulation
processes that hand payloads to one of the two adapters.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Callable, Generator

from .engine import Signal, Simulator
from .enums import A_MAX_PHY_PACKET_SIZE, FCS_LEN, AddrMode, FrameType, Status
from .frames import Address, ShortAddress, FrameControl, addr_mode_of, header_length
from .mac import DataConfirm, DataIndication, Mac, MacUser, McpsDataRequest, TxOptions


def payload_budget(dst: Address | None, src_mode: AddrMode, same_pan: bool = True) -> int:
    """Largest MSDU that fits one PSDU for the given addressing."""
    fc = FrameControl(frame_type=FrameType.DATA, dst_addr_mode=addr_mode_of(dst), src_addr_mode=src_mode,
                      pan_id_compression=same_pan and dst is not None and src_mode != AddrMode.NONE)
    return A_MAX_PHY_PACKET_SIZE - header_length(fc) - FCS_LEN


@dataclass(frozen=True)
class AppPayload:
    dst: Address | None
    data: bytes
    dst_pan: int | None = None
    ack: bool = True
    gts: bool = False
    indirect: bool = False


class _Adapter(MacUser):
    """Shared plumbing: owns the MAC's user hooks and relays confirms and indications."""

    def __init__(self, mac: Mac, attach: bool = True):
        self.mac = mac
        self.receivers: list[Callable[[DataIndication], None]] = []
        self._handle = 0
        if attach:
            mac.user = self

    def _next_handle(self) -> int:
        self._handle = (self._handle + 1) & 0xFF
        return self._handle

    def _budget(self, dst: Address | None) -> int:
        src_mode = AddrMode.SHORT if isinstance(self.mac.own_address(), ShortAddress) else AddrMode.EXTENDED
        return payload_budget(dst, src_mode)

    def _send(self, req: McpsDataRequest) -> Signal:
        if len(req.msdu) > self._budget(req.dst_addr):
            out = Signal(self.mac.sim)
            out.succeed(DataConfirm(req.handle, Status.FRAME_TOO_LONG, self.mac.sim.now))
            return out
        return self.mac.mcps_data_request(req)

    def on_data_indication(self, ind: DataIndication) -> None:
        for deliver in self.receivers:
            deliver(ind)


class Sscs(_Adapter):
    def to_request(self, p: AppPayload) -> McpsDataRequest:
        return McpsDataRequest(p.dst, bytes(p.data), TxOptions(p.ack, p.gts, p.indirect), p.dst_pan,
                               self._next_handle())

    def data_request(self, p: AppPayload) -> Signal:
        """Confirm status passes through unchanged; oversize payloads never reach the MAC."""
        return self._send(self.to_request(p))


class LlcConverter(_Adapter):
    def __init__(self, mac: Mac, default_options: TxOptions = TxOptions(), attach: bool = True):
        super().__init__(mac, attach)
        self.default_options = default_options

    def convert(self, packet: bytes, dst: Address | None, options: TxOptions | None = None) -> McpsDataRequest:
        return McpsDataRequest(dst, bytes(packet), options or self.default_options, None, self._next_handle())

    def send(self, packet: bytes, dst: Address | None, options: TxOptions | None = None) -> Signal:
        return self._send(self.convert(packet, dst, options))


# -- traffic ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TrafficConfig:
    pattern: str = "periodic"  # or "poisson"
    interval_us: int = 100_000  # period, or mean inter-arrival for poisson
    size: int = 20
    dst: str = "coordinator"
    start_us: int = 0
    stop_us: int | None = None
    mode: str = "direct"  # direct | indirect | gts
    ack: bool = True
    adapter: str = "sscs"  # sscs | llc
    name: str = "t0"

    def __post_init__(self) -> None:
        if self.pattern not in ("periodic", "poisson"):
            raise ValueError(f"unknown traffic pattern {self.pattern!r}")
        if self.interval_us <= 0:
            raise ValueError("traffic interval must be positive")
        if self.size < 0:
            raise ValueError("payload size must be non-negative")
        if self.mode not in ("direct", "indirect", "gts"):
            raise ValueError(f"unknown transfer mode {self.mode!r}")
        if self.adapter not in ("sscs", "llc"):
            raise ValueError(f"unknown adapter {self.adapter!r}")
        if self.stop_us is not None and self.stop_us < self.start_us:
            raise ValueError("traffic stop precedes start")


def traffic_next(cfg: TrafficConfig, now: int, rng: random.Random) -> int:
    """Time of the send following one at ``now``."""
    if cfg.pattern == "periodic":
        return now + cfg.interval_us
    return now + max(1, round(rng.expovariate(1.0 / cfg.interval_us)))


def make_payload(counter: int, size: int) -> bytes:
    """4-byte big-endian counter followed by a deterministic filler."""
    head = struct.pack(">I", counter & 0xFFFFFFFF)
    if size <= 4:
        return head[4 - size:] if size else b""
    return head + bytes((counter + i) & 0xFF for i in range(size - 4))


@dataclass
class TrafficGenerator:
    sim: Simulator
    cfg: TrafficConfig
    send: Callable[[int, bytes], None]  # (counter, payload)
    rng: random.Random
    emitted: list[int] = field(default_factory=list)

    def start(self) -> None:
        self.sim.process(self._run(), f"traffic:{self.cfg.name}")

    def _run(self) -> Generator:
        cfg = self.cfg
        t = cfg.start_us
        counter = 0
        while cfg.stop_us is None or t < cfg.stop_us:
            if t > self.sim.now:
                yield t - self.sim.now
            self.emitted.append(t)
            self.send(counter, make_payload(counter, cfg.size))
            counter += 1
            t = traffic_next(cfg, t, self.rng)

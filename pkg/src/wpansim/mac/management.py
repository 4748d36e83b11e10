"""MLME side of the MAC: PAN start and beacons, synchronization, scans, association, polling, GTS."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Generator

from ..engine import TIMEOUT, Process, Signal
from ..enums import (
    A_BASE_SUPERFRAME_DURATION,
    A_GTS_DESC_PERSISTENCE_TIME,
    A_MAX_LOST_BEACONS,
    ASSOC_STATUS_BY_CODE,
    ASSOC_STATUS_CODES,
    BROADCAST_ADDR,
    BROADCAST_PAN,
    NO_SHORT_ADDR,
    SUPPORTED_CHANNELS,
    CommandId,
    FrameType,
    GtsDirection,
    ScanType,
    Status,
    TrxState,
)
from ..frames import (
    BeaconPayload,
    CapabilityInfo,
    ExtAddress,
    Frame,
    FrameError,
    GtsCharacteristics,
    GtsDescriptor,
    PanDescriptor,
    ShortAddress,
    SuperframeSpec,
    addr_mode_of,
    association_response_payload,
    decode_beacon_payload,
    encode_beacon_payload,
    encode_frame,
    make_frame,
    parse_association_response,
)
from ..pib import PibError
from ..phy import ed_level
from .primitives import (
    AssociateConfirm,
    AssociateIndication,
    BeaconNotify,
    GtsConfirm,
    ScanConfirm,
)
from .superframe import GtsTable, SuperframeClock


@dataclass
class _ScanState:
    scan_type: ScanType
    descriptors: list[PanDescriptor] = field(default_factory=list)
    seen: set = field(default_factory=set)

    def add(self, desc: PanDescriptor) -> None:
        key = (desc.coord_pan_id, desc.coord_address, desc.logical_channel)
        if key not in self.seen:
            self.seen.add(key)
            self.descriptors.append(desc)


@dataclass(eq=False)
class _GtsItem:
    frame: Frame
    psdu: bytes
    confirm: Callable[[Status], None]
    attempts: int = 0


class ManagementMixin:
    """MLME procedures; mixed into :class:`~wpansim.mac.core.Mac`."""

    def _init_management(self) -> None:
        self._tracking = False
        self._track_once = False
        self._missed = 0
        self._sync_timer = None
        self._clock_waiters: list[Signal] = []
        self._scan: _ScanState | None = None
        self._assoc_wait: Signal | None = None
        self._gts_wait: tuple[GtsCharacteristics, Signal] | None = None
        self._gts_busy = False
        self.gts_table: GtsTable | None = None
        self.my_gts: dict[GtsDirection, GtsDescriptor] = {}
        self._gts_queues: dict[tuple[int, GtsDirection], deque[_GtsItem]] = {}
        self._gts_sessions: set[tuple[int, GtsDirection]] = set()
        self._poll_proc: Process | None = None
        self._next_short = 0x0001
        self._assigned: dict[int, int] = {}
        self.auto_associate_response = True

    @property
    def _scan_active(self) -> bool:
        return self._scan is not None

    def _guard_ticks(self) -> int:
        return self.ticks(self.phy.timing.max_frame_duration) + 1

    # -- MLME-GET / MLME-SET / MLME-RESET ---------------------------------------------

    def mlme_get(self, attribute) -> tuple[Status, Any]:
        try:
            return Status.SUCCESS, self.pib.get_attribute(attribute)
        except PibError as exc:
            return exc.status, None

    def mlme_set(self, attribute, value) -> Status:
        status = self.pib.set_attribute(attribute, value)
        self.trace("MLME-SET.confirm", attribute=attribute, status=status)
        return status

    def mlme_reset_request(self, set_default: bool = True) -> Status:
        self.trace("MLME-RESET.request", set_default=set_default)
        for proc in list(self._procs):
            proc.kill()
        self.sim.cancel(self._sync_timer)
        for entry in list(self.indirect.entries):
            self.sim.cancel(entry.timer)
        self.phy.set_trx_state(TrxState.FORCE_TRX_OFF)
        self.pib.reset(set_default)
        self._init_state()
        self.trace("MLME-RESET.confirm", status=Status.SUCCESS)
        return Status.SUCCESS

    # -- MLME-START and beacon generation -----------------------------------------------

    def mlme_start_request(self, pan_id: int, channel: int, beacon_order: int = 15,
                           superframe_order: int = 15, pan_coordinator: bool = True) -> Status:
        self.trace("MLME-START.request", pan=f"0x{pan_id:04x}", channel=channel, bo=beacon_order,
                   so=superframe_order)
        status = self._start(pan_id, channel, beacon_order, superframe_order, pan_coordinator)
        self.trace("MLME-START.confirm", status=status)
        return status

    def _start(self, pan_id: int, channel: int, bo: int, so: int, pan_coordinator: bool) -> Status:
        if self.pib.macShortAddress == BROADCAST_ADDR:
            return Status.NO_SHORT_ADDRESS
        if not (0 <= bo <= 15 and 0 <= so <= 15) or (bo < 15 and so > bo):
            return Status.INVALID_PARAMETER
        if not 0 <= pan_id < BROADCAST_PAN:
            return Status.INVALID_PARAMETER
        if self.phy.pib.set_attribute("phyCurrentChannel", channel) != Status.SUCCESS:
            return Status.INVALID_PARAMETER
        if bo == 15:
            so = 15
        self.pib.store("macPANId", pan_id)
        self.pib.store("macBeaconOrder", bo)
        self.pib.store("macSuperframeOrder", so)
        self.is_pan_coordinator = pan_coordinator
        if bo < 15:
            self.gts_table = GtsTable(so)
            first = self.sim.now + self.ticks(self.phy.timing.turnaround)
            self._spawn(self._beacon_loop(first), "beacon")
        self._idle()
        return Status.SUCCESS

    def _beacon_spec(self) -> SuperframeSpec:
        bo, so = self.pib.macBeaconOrder, self.pib.macSuperframeOrder
        fcs = self.gts_table.final_cap_slot if self.gts_table is not None else 15
        return SuperframeSpec(bo, so, fcs, self.pib.macBattLifeExt, self.is_pan_coordinator,
                              self.pib.macAssociationPermit)

    def _build_beacon(self) -> Frame:
        gts = self.gts_table.beacon_descriptors() if self.gts_table is not None else ()
        shorts, exts = self.indirect.pending_addresses()
        body = BeaconPayload(self._beacon_spec(), self.pib.macGTSPermit, gts, shorts, exts,
                             bytes(self.pib.macBeaconPayload))
        return make_frame(FrameType.BEACON, self.pib.next_bsn(), src=self.own_address(),
                          src_pan=self.pib.macPANId, payload=encode_beacon_payload(body))

    def _beacon_loop(self, t: int) -> Generator:
        turnaround = self.ticks(self.phy.timing.turnaround)
        while True:
            prep = t - turnaround
            if prep > self.sim.now:
                yield prep - self.sim.now
            self._beaconing = True
            yield self.phy.set_trx_state(TrxState.TX_ON)
            if self.phy.state != TrxState.TX_ON or self.phy.switching:
                # the beacon has priority over whatever the transceiver was doing
                self.phy.set_trx_state(TrxState.FORCE_TRX_OFF)
                self.phy.set_trx_state(TrxState.TX_ON)
            if t > self.sim.now:
                yield t - self.sim.now
            frame = self._build_beacon()
            psdu = encode_frame(frame)
            spec = self._beacon_spec()
            self.clock = SuperframeClock(t, spec.beacon_order, spec.superframe_order, spec.final_cap_slot,
                                         self.phy.timing.airtime(len(psdu)), self.symbol)
            shorts, exts = self.indirect.pending_addresses()
            self.trace("BEACON.tx", bsn=frame.sequence_number, bo=spec.beacon_order, so=spec.superframe_order,
                       fcs=spec.final_cap_slot, gts=len(self.gts_table.allocated), pending=len(shorts) + len(exts))
            self.stats.beacons_sent += 1
            yield self.phy.data_request(psdu)
            self._beaconing = False
            self._idle()
            self._start_gts_sessions(t)
            self._wake_clock_waiters()
            t += self.clock.bi

    def _send_beacon_on_request(self) -> None:
        frame = self._build_beacon()
        self.submit(frame, "beacon", unslotted=True)

    # -- beacon reception and tracking -----------------------------------------------

    def mlme_sync_request(self, channel: int | None = None, track: bool = True) -> None:
        self.trace("MLME-SYNC.request", channel=channel if channel is not None else self.phy.channel,
                   track=track)
        if channel is not None:
            self.phy.pib.set_attribute("phyCurrentChannel", channel)
        self._tracking = True
        self._track_once = not track
        self._missed = 0
        self._arm_sync(self.sim.now + self._search_window())
        self._idle()

    def _search_window(self) -> int:
        bo = min(self.pib.macBeaconOrder, 14)
        return self.ticks(A_BASE_SUPERFRAME_DURATION * (2 ** bo + 1))

    def _arm_sync(self, deadline: int) -> None:
        self.sim.cancel(self._sync_timer)
        self._sync_timer = self.sim.schedule_at(deadline, self._beacon_missed)

    def _beacon_missed(self) -> None:
        self._sync_timer = None
        self._missed += 1
        self.stats.beacons_missed += 1
        self.trace("BEACON.miss", count=self._missed)
        if self._missed >= A_MAX_LOST_BEACONS:
            self._sync_loss(Status.BEACON_LOSS)
            return
        if self.clock is not None:
            # timer fired one guard interval after the expected beacon; aim at the next one
            expected = self.clock.superframe_start(self.sim.now)
            self._arm_sync(expected + self.clock.bi + self._guard_ticks())
        else:
            self._arm_sync(self.sim.now + self._search_window())

    def _sync_loss(self, reason: Status) -> None:
        self._tracking = False
        self.clock = None
        self.my_gts.clear()
        self.trace("MLME-SYNC-LOSS.indication", reason=reason)
        self.user.on_sync_loss(reason)
        self._idle()

    def wait_for_clock(self) -> Signal:
        sig = Signal(self.sim)
        if self.clock is not None:
            sig.succeed(self.clock)
        else:
            self._clock_waiters.append(sig)
        return sig

    def _wake_clock_waiters(self) -> None:
        waiters, self._clock_waiters = self._clock_waiters, []
        for sig in waiters:
            sig.succeed(self.clock)

    def _from_coordinator(self, frame: Frame) -> bool:
        if frame.src_pan != self.pib.macPANId:
            return False
        src = frame.src_addr
        if isinstance(src, ShortAddress):
            return src.value == self.pib.macCoordShortAddress
        return isinstance(src, ExtAddress) and src.value == self.pib.macCoordExtendedAddress

    def _on_beacon(self, frame: Frame, lqi: int, rx_start: int) -> None:
        try:
            body = decode_beacon_payload(frame.payload)
        except FrameError as exc:
            self.trace("RX.drop", reason=type(exc).__name__)
            return
        if frame.src_addr is None:
            self.trace("RX.drop", reason="BeaconWithoutSource")
            return
        self.stats.beacons_received += 1
        spec = body.superframe
        desc = PanDescriptor(addr_mode_of(frame.src_addr), frame.src_addr, frame.src_pan, self.phy.channel,
                             spec, body.gts_permit, lqi, rx_start)
        self.trace("BEACON.rx", bsn=frame.sequence_number, src=frame.src_addr, pan=f"0x{frame.src_pan:04x}",
                   start=rx_start)
        if self._scan is not None:
            self._scan.add(desc)
            return
        from_coord = self._from_coordinator(frame)
        if self._tracking and from_coord and not self.is_pan_coordinator:
            self._resync(spec, rx_start)
            self._apply_gts_descriptors(body.gts)
        if body.payload or not self.pib.macAutoRequest:
            self.user.on_beacon_notify(BeaconNotify(frame.sequence_number, desc, body.pending_short,
                                                    body.pending_ext, body.payload))
        if from_coord and self.pib.macAutoRequest and self._pending_for_me(body):
            self._poll_once()
        if self._tracking and from_coord:
            self._start_gts_sessions(rx_start)

    def _pending_for_me(self, body: BeaconPayload) -> bool:
        short = self.pib.macShortAddress
        if short < NO_SHORT_ADDR and short in body.pending_short:
            return True
        return self.pib.macExtendedAddress in body.pending_ext

    def _resync(self, spec: SuperframeSpec, rx_start: int) -> None:
        self.clock = SuperframeClock(rx_start, spec.beacon_order, spec.superframe_order, spec.final_cap_slot,
                                     self.sim.now - rx_start, self.symbol)
        self.pib.store("macBeaconOrder", spec.beacon_order)
        self.pib.store("macSuperframeOrder", spec.superframe_order)
        self._missed = 0
        if self._track_once:
            self._tracking = False
            self.sim.cancel(self._sync_timer)
        else:
            self._arm_sync(rx_start + self.clock.bi + self._guard_ticks())
            if not self.pib.macRxOnWhenIdle:
                clock = self.clock
                if clock.sd < clock.bi:
                    self.sim.schedule_at(rx_start + clock.sd, self._idle)
                self.sim.schedule_at(rx_start + clock.bi - clock.ubp, self._idle)
        self._wake_clock_waiters()

    # -- polling -------------------------------------------------------------------------

    def mlme_poll_request(self) -> Signal:
        self.trace("MLME-POLL.request", coord=self.coord_address())
        out = Signal(self.sim)

        def confirm(status: Status) -> None:
            self.trace("MLME-POLL.confirm", status=status)
            out.succeed(status)

        self._poll_once().done.add_callback(confirm)
        return out

    def _poll_once(self) -> Process:
        if self._poll_proc is None or not self._poll_proc.alive:
            self._poll_proc = self._spawn(self._poll(), "poll")
        return self._poll_proc

    def _poll(self) -> Generator:
        frame = self.build_frame(FrameType.COMMAND, dst=self.coord_address(),
                                 command_id=CommandId.DATA_REQUEST, ack=True)
        self._poll_wait = Signal(self.sim)
        status, ack = yield self.submit(frame, "poll")
        if status == Status.SUCCESS and not ack.control.frame_pending:
            status = Status.NO_DATA
        elif status == Status.SUCCESS:
            res = yield self.sim.first_of(self._poll_wait, self.ticks(self.pib.macMaxFrameTotalWaitTime))
            status = Status.NO_DATA if res is TIMEOUT else Status.SUCCESS
        self._poll_wait = None
        self._idle()
        return status

    # -- association ----------------------------------------------------------------------

    def mlme_associate_request(self, channel: int, coord_pan: int, coord_addr,
                               capability: CapabilityInfo = CapabilityInfo()) -> Signal:
        self.trace("MLME-ASSOCIATE.request", channel=channel, pan=f"0x{coord_pan:04x}", coord=coord_addr)
        out = Signal(self.sim)

        def confirm(result: AssociateConfirm) -> None:
            self.trace("MLME-ASSOCIATE.confirm", status=result.status,
                       short=f"0x{result.short_address:04x}")
            out.succeed(result)

        self._spawn(self._associate(channel, coord_pan, coord_addr, capability), "associate") \
            .done.add_callback(confirm)
        return out

    def _associate(self, channel, coord_pan, coord_addr, capability) -> Generator:
        self.phy.pib.set_attribute("phyCurrentChannel", channel)
        self.pib.store("macPANId", coord_pan)
        if isinstance(coord_addr, ShortAddress):
            self.pib.store("macCoordShortAddress", coord_addr.value)
        else:
            self.pib.store("macCoordExtendedAddress", coord_addr.value)
        if self.pib.macBeaconOrder < 15 and not self._tracking:
            self.mlme_sync_request(track=True)
        if self.pib.macBeaconOrder < 15:
            res = yield self.sim.first_of(self.wait_for_clock(), A_MAX_LOST_BEACONS * self._search_window())
            if res is TIMEOUT:
                return AssociateConfirm(Status.NO_BEACON, BROADCAST_ADDR)
        frame = self.build_frame(FrameType.COMMAND, dst=coord_addr, dst_pan=coord_pan,
                                 src=ExtAddress(self.pib.macExtendedAddress), src_pan=BROADCAST_PAN,
                                 payload=bytes([capability.to_byte()]),
                                 command_id=CommandId.ASSOCIATION_REQUEST, ack=True)
        self._assoc_wait = Signal(self.sim)
        status, _ = yield self.submit(frame, "assoc")
        if status != Status.SUCCESS:
            self._assoc_wait = None
            self.pib.store("macPANId", BROADCAST_PAN)
            return AssociateConfirm(status, BROADCAST_ADDR)
        wait = self.ticks(self.pib.macResponseWaitTime * A_BASE_SUPERFRAME_DURATION)
        res = yield self.sim.first_of(self._assoc_wait, wait)
        if res is TIMEOUT:
            poll_status = yield self._poll_once()
            res = self._assoc_wait.value if self._assoc_wait.triggered else None
            if res is None:
                self._assoc_wait = None
                self.pib.store("macPANId", BROADCAST_PAN)
                failed = poll_status if poll_status not in (Status.SUCCESS, None) else Status.NO_DATA
                return AssociateConfirm(failed, BROADCAST_ADDR)
        self._assoc_wait = None
        self._idle()
        short, status = res
        return AssociateConfirm(status, short)

    def _on_command(self, frame: Frame, lqi: int) -> None:
        cmd = frame.command_id
        if cmd == CommandId.DATA_REQUEST:
            self._extract(frame.src_addr)
        elif cmd == CommandId.ASSOCIATION_REQUEST:
            self._on_association_request(frame)
        elif cmd == CommandId.ASSOCIATION_RESPONSE:
            self._on_association_response(frame)
        elif cmd == CommandId.BEACON_REQUEST:
            if self.is_pan_coordinator and self.pib.macBeaconOrder == 15:
                self._send_beacon_on_request()
        elif cmd == CommandId.GTS_REQUEST:
            self._on_gts_request(frame)
        else:
            self.trace("RX.ignored", cmd=cmd.name if cmd is not None else None)

    def _on_association_request(self, frame: Frame) -> None:
        if not self.is_pan_coordinator or not isinstance(frame.src_addr, ExtAddress) or not frame.payload:
            return
        device = frame.src_addr.value
        cap = frame.payload[0]
        self.trace("MLME-ASSOCIATE.indication", device=frame.src_addr, capability=cap)
        self.user.on_associate_indication(AssociateIndication(device, cap))
        if self.auto_associate_response:
            short, status = self.allocate_short_address(device, cap)
            self.mlme_associate_response(device, short, status)

    def allocate_short_address(self, device: int, capability: int) -> tuple[int, Status]:
        """Sequential allocator from 0x0001; reserved and already-taken values are skipped."""
        if not self.pib.macAssociationPermit:
            return BROADCAST_ADDR, Status.PAN_ACCESS_DENIED
        if not CapabilityInfo.from_byte(capability).allocate_address:
            return NO_SHORT_ADDR, Status.SUCCESS
        if device in self._assigned:
            return self._assigned[device], Status.SUCCESS
        taken = set(self._assigned.values()) | {self.pib.macShortAddress}
        addr = self._next_short
        while addr in taken:
            addr += 1
        if addr >= NO_SHORT_ADDR:
            return BROADCAST_ADDR, Status.PAN_AT_CAPACITY
        self._next_short = addr + 1
        self._assigned[device] = addr
        return addr, Status.SUCCESS

    def mlme_associate_response(self, device: int, short: int, status: Status) -> None:
        self.trace("MLME-ASSOCIATE.response", device=ExtAddress(device), short=f"0x{short:04x}", status=status)
        frame = self.build_frame(FrameType.COMMAND, dst=ExtAddress(device),
                                 src=ExtAddress(self.pib.macExtendedAddress),
                                 payload=association_response_payload(short, ASSOC_STATUS_CODES[status]),
                                 command_id=CommandId.ASSOCIATION_RESPONSE, ack=True)
        dst = frame.dst_addr

        def done(result: Status) -> None:
            self.trace("MLME-COMM-STATUS.indication", dst=dst, status=result)
            self.user.on_comm_status(result, dst)

        failed = self._queue_indirect(frame, done)
        if failed is not None:
            done(failed)

    def _on_association_response(self, frame: Frame) -> None:
        if self._assoc_wait is None or self._assoc_wait.triggered:
            return
        try:
            short, code = parse_association_response(frame.payload)
        except FrameError:
            return
        status = ASSOC_STATUS_BY_CODE.get(code, Status.DENIED)
        if status == Status.SUCCESS:
            self.pib.store("macShortAddress", short)
            if isinstance(frame.src_addr, ExtAddress):
                self.pib.store("macCoordExtendedAddress", frame.src_addr.value)
            self.pib.store("macAssociatedPANCoord", True)
        else:
            self.pib.store("macPANId", BROADCAST_PAN)
        self._assoc_wait.succeed((short, status))
        if self._poll_wait is not None and not self._poll_wait.triggered:
            self._poll_wait.succeed(frame)

    # -- scans ----------------------------------------------------------------------------

    def mlme_scan_request(self, scan_type: ScanType, channels: int, duration: int) -> Signal:
        self.trace("MLME-SCAN.request", type=scan_type.value, channels=f"0x{channels:08x}", duration=duration)
        out = Signal(self.sim)

        def confirm(result: ScanConfirm) -> None:
            self.trace("MLME-SCAN.confirm", status=result.status, type=scan_type.value,
                       found=len(result.pan_descriptors))
            out.succeed(result)

        self._spawn(self._scan_proc(scan_type, channels, duration), "scan").done.add_callback(confirm)
        return out

    def _scan_proc(self, scan_type: ScanType, channels: int, duration: int) -> Generator:
        if not 0 <= duration <= 14 or self._scan is not None:
            return ScanConfirm(Status.INVALID_PARAMETER, scan_type, ())
        chans = tuple(c for c in range(27) if channels >> c & 1 and SUPPORTED_CHANNELS >> c & 1)
        saved_channel, saved_pan = self.phy.channel, self.pib.macPANId
        self._scan = _ScanState(scan_type)
        if scan_type != ScanType.ED:
            self.pib.store("macPANId", BROADCAST_PAN)
        energy: dict[int, int] = {}
        dwell = 0
        for ch in chans:
            self.phy.set_trx_state(TrxState.FORCE_TRX_OFF)
            self.phy.pib.set_attribute("phyCurrentChannel", ch)
            self.phy.set_trx_state(TrxState.RX_ON)
            dwell = self.ticks(A_BASE_SUPERFRAME_DURATION * (2 ** duration + 1))
            self.trace("SCAN.channel", channel=ch, dwell=dwell)
            if scan_type == ScanType.ED:
                monitor = self.medium.open_energy_monitor(self.node_id, ch)
                yield dwell
                energy[ch] = ed_level(monitor.close())
            else:
                if scan_type == ScanType.ACTIVE:
                    request = make_frame(FrameType.COMMAND, self.pib.next_dsn(), dst=ShortAddress(BROADCAST_ADDR),
                                         dst_pan=BROADCAST_PAN, command_id=CommandId.BEACON_REQUEST)
                    self.submit(request, "beacon-request", front=True, unslotted=True)
                yield dwell
            if ch in energy:
                self.trace("SCAN.channel.end", channel=ch, level=energy[ch])
            else:
                self.trace("SCAN.channel.end", channel=ch, found=len(self._scan.descriptors))
        found = tuple(self._scan.descriptors)
        self._scan = None
        self.phy.set_trx_state(TrxState.FORCE_TRX_OFF)
        self.phy.pib.set_attribute("phyCurrentChannel", saved_channel)
        self.pib.store("macPANId", saved_pan)
        self._idle()
        return ScanConfirm(Status.SUCCESS, scan_type, chans, energy, found, dwell)

    # -- GTS ------------------------------------------------------------------------------

    def mlme_gts_request(self, length: int, direction: GtsDirection, allocate: bool = True) -> Signal:
        chars = GtsCharacteristics(length, direction, allocate)
        self.trace("MLME-GTS.request", length=length, direction=direction.name, allocate=allocate)
        out = Signal(self.sim)

        def confirm(status: Status) -> None:
            self.trace("MLME-GTS.confirm", status=status, length=length, direction=direction.name)
            out.succeed(GtsConfirm(status, chars))

        self._spawn(self._gts_request(chars), "gts-request").done.add_callback(confirm)
        return out

    def _gts_request(self, chars: GtsCharacteristics) -> Generator:
        short = self.pib.macShortAddress
        if short >= NO_SHORT_ADDR:
            return Status.NO_SHORT_ADDRESS
        if not self._tracking or self.clock is None:
            return Status.NO_BEACON
        if not 1 <= chars.length <= 15:
            return Status.INVALID_PARAMETER
        frame = self.build_frame(FrameType.COMMAND, dst=None, src=ShortAddress(short),
                                 payload=bytes([chars.to_byte()]), command_id=CommandId.GTS_REQUEST, ack=True)
        sig = Signal(self.sim)
        if chars.allocate:
            self._gts_wait = (chars, sig)
        status, _ = yield self.submit(frame, "gts-request")
        if status != Status.SUCCESS:
            self._gts_wait = None
            return status
        if not chars.allocate:
            self.my_gts.pop(chars.direction, None)
            self._fail_gts_queue((short, chars.direction))
            return Status.SUCCESS
        res = yield self.sim.first_of(sig, A_GTS_DESC_PERSISTENCE_TIME * self.clock.bi)
        self._gts_wait = None
        return Status.NO_DATA if res is TIMEOUT else res

    def _apply_gts_descriptors(self, descriptors: tuple[GtsDescriptor, ...]) -> None:
        short = self.pib.macShortAddress
        for d in descriptors:
            if d.short_address != short:
                continue
            waiting = self._gts_wait
            if waiting is not None and waiting[0].direction == d.direction and not waiting[1].triggered:
                waiting[1].succeed(Status.DENIED if d.starting_slot == 0 else Status.SUCCESS)
            if d.starting_slot > 0 and self.my_gts.get(d.direction) != d:
                self.my_gts[d.direction] = d
                self.trace("GTS.assigned", direction=d.direction.name, start=d.starting_slot, length=d.length)

    def _on_gts_request(self, frame: Frame) -> None:
        if not self.is_pan_coordinator or self.gts_table is None or not isinstance(frame.src_addr, ShortAddress):
            return
        if not frame.payload:
            return
        chars = GtsCharacteristics.from_byte(frame.payload[0])
        short = frame.src_addr.value
        table = self.gts_table
        start = 0
        if chars.allocate:
            if self.pib.macGTSPermit:
                status, desc = table.allocate(short, chars.length, chars.direction)
                start = desc.starting_slot
            else:
                status = Status.DENIED
                table.deny(short, chars.length, chars.direction)
        else:
            status = Status.SUCCESS if table.deallocate(short, chars.direction) else Status.DENIED
            self._fail_gts_queue((short, chars.direction))
        self.trace("MLME-GTS.indication", device=frame.src_addr, length=chars.length,
                   direction=chars.direction.name, allocate=chars.allocate, status=status, start=start,
                   descriptors=len(table.allocated), fcs=table.final_cap_slot)
        self.user.on_gts_indication(short, chars.direction, chars.length, status)

    def _gts_descriptor(self, key: tuple[int, GtsDirection]) -> GtsDescriptor | None:
        if self.is_pan_coordinator:
            return self.gts_table.find(*key) if self.gts_table is not None else None
        if key[0] != self.pib.macShortAddress:
            return None
        return self.my_gts.get(key[1])

    def _queue_gts(self, frame: Frame, confirm: Callable[[Status], None]) -> Status | None:
        if self.is_pan_coordinator:
            if not isinstance(frame.dst_addr, ShortAddress):
                return Status.INVALID_GTS
            key = (frame.dst_addr.value, GtsDirection.RECEIVE)
        else:
            key = (self.pib.macShortAddress, GtsDirection.TRANSMIT)
        if self._gts_descriptor(key) is None:
            return Status.INVALID_GTS
        self._gts_queues.setdefault(key, deque()).append(_GtsItem(frame, encode_frame(frame), confirm))
        return None

    def _fail_gts_queue(self, key: tuple[int, GtsDirection]) -> None:
        queue = self._gts_queues.pop(key, None)
        while queue:
            queue.popleft().confirm(Status.INVALID_GTS)

    def _own_gts(self) -> list[tuple[tuple[int, GtsDirection], GtsDescriptor]]:
        if self.is_pan_coordinator:
            if self.gts_table is None:
                return []
            return [((d.short_address, d.direction), d) for d in self.gts_table.allocated
                    if d.direction == GtsDirection.RECEIVE]
        desc = self.my_gts.get(GtsDirection.TRANSMIT)
        return [((self.pib.macShortAddress, GtsDirection.TRANSMIT), desc)] if desc else []

    def _start_gts_sessions(self, sf: int) -> None:
        if self.clock is None:
            return
        for key, desc in self._own_gts():
            self.stats.gts_allocated_ticks += desc.length * self.clock.slot
            if key not in self._gts_sessions:
                self._gts_sessions.add(key)
                self._spawn(self._gts_session(key, desc, sf), "gts")
        # anything queued for a GTS that no longer exists fails
        for key in [k for k, q in self._gts_queues.items() if q and self._gts_descriptor(k) is None]:
            self._fail_gts_queue(key)

    def _gts_session(self, key: tuple[int, GtsDirection], desc: GtsDescriptor, sf: int) -> Generator:
        begin, end = self.clock.gts_window(sf, desc)
        if begin > self.sim.now:
            yield begin - self.sim.now
        queue = self._gts_queues.get(key, deque())
        turnaround = self.ticks(self.phy.timing.turnaround)
        while queue:
            item = queue[0]
            wants_ack = item.frame.control.ack_request
            air = self.phy.timing.airtime(len(item.psdu))
            need = turnaround + air + (self._ack_wait_ticks() if wants_ack else 0) + self._ifs_ticks(len(item.psdu))
            if self.sim.now + need > end or self._acking or self._beaconing:
                break
            self._gts_busy = True
            yield self.phy.set_trx_state(TrxState.TX_ON)
            if self.phy.state != TrxState.TX_ON:
                break
            item.attempts += 1
            seq = item.frame.sequence_number
            self.trace("TX", kind="GTS", dsn=seq, attempt=item.attempts, len=len(item.psdu),
                       slot_start=begin, slot_end=end)
            self.stats.frames_tx += 1
            self.stats.gts_frames += 1
            self.stats.gts_busy_ticks += air
            status = yield self.phy.data_request(item.psdu)
            acked = status == Status.SUCCESS
            if acked and wants_ack:
                self._ack_wait = (seq, Signal(self.sim))
                self.phy.set_trx_state(TrxState.RX_ON)
                acked = (yield from self._await_ack(seq)) is not None
                if not acked:
                    self.trace("ACK.timeout", dsn=seq, attempt=item.attempts)
            self._gts_busy = False
            self.stats.max_attempts = max(self.stats.max_attempts, item.attempts)
            if acked:
                queue.popleft()
                item.confirm(Status.SUCCESS)
            elif item.attempts > self.pib.macMaxFrameRetries:
                queue.popleft()
                self.stats.no_ack += 1
                item.confirm(Status.NO_ACK)
            else:
                self.stats.retries += 1
            self._idle()
            yield self._ifs_ticks(len(item.psdu))
        self._gts_busy = False
        self._gts_sessions.discard(key)
        self._idle()

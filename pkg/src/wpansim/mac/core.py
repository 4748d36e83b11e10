"""MAC data path: transaction worker, CSMA-CA, acknowledgment and retransmission, frame reception.

Each node's MAC runs one worker process that serializes CAP/unslotted
transactions.  Acknowledgments are sent by a short-lived process spawned
per received frame, and GTS transfers by a per-superframe session; the
flags ``_tx_active``, ``_acking`` and ``_beaconing`` keep these from
stepping on each other's transceiver state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Generator

from ..engine import TIMEOUT, Process, Signal, Simulator
from ..enums import (
    A_MAX_SIFS_FRAME_SIZE,
    A_UNIT_BACKOFF_PERIOD,
    BROADCAST_ADDR,
    BROADCAST_PAN,
    CCA_SYMBOLS,
    MAC_MIN_LIFS_PERIOD,
    MAC_MIN_SIFS_PERIOD,
    NO_SHORT_ADDR,
    CommandId,
    FrameType,
    Status,
    TrxState,
)
from ..frames import (
    Address,
    ExtAddress,
    Frame,
    FrameError,
    ShortAddress,
    ack_frame,
    decode_frame,
    encode_frame,
    make_frame,
)
from ..phy import Phy
from ..pib import MacPib
from ..trace import Layer, Trace
from .indirect import IndirectEntry, IndirectQueue
from .management import ManagementMixin
from .primitives import DataConfirm, DataIndication, MacUser, McpsDataRequest
from .superframe import SuperframeClock

TX_QUEUE_LIMIT = 32


@dataclass
class MacStats:
    data_requests: int = 0
    data_confirmed: int = 0
    data_failed: int = 0
    frames_tx: int = 0  # data and command MPDU transmissions, retries included
    retries: int = 0
    acks_sent: int = 0
    acks_received: int = 0
    csma_failures: int = 0
    no_ack: int = 0
    indications: int = 0
    duplicates: int = 0
    beacons_sent: int = 0
    beacons_received: int = 0
    beacons_missed: int = 0
    gts_frames: int = 0
    gts_busy_ticks: int = 0
    gts_allocated_ticks: int = 0
    max_attempts: int = 0
    confirms: dict = field(default_factory=dict)


@dataclass(eq=False)
class _Txn:
    frame: Frame
    psdu: bytes
    done: Signal
    label: str
    unslotted: bool = False
    attempts: int = 0

    @property
    def wants_ack(self) -> bool:
        return self.frame.control.ack_request


class Mac(ManagementMixin, Layer):
    LAYER = "MAC"

    def __init__(self, sim: Simulator, node_id: str, phy: Phy, pib: MacPib, *,
                 tracer: Trace | None = None, queue_limit: int = TX_QUEUE_LIMIT):
        super().__init__(sim, node_id, tracer)
        self.phy = phy
        self.pib = pib
        self.medium = phy.medium
        self.user: MacUser = MacUser()
        self.stats = MacStats()
        self.queue_limit = queue_limit
        phy.indication = self._on_pd_indication
        self._rng = sim.rng(node_id, "csma")
        self._init_state()

    def _init_state(self) -> None:
        self.clock: SuperframeClock | None = None
        self.is_pan_coordinator = False
        self._procs: set[Process] = set()
        self._queue: deque[_Txn] = deque()
        self._wake: Signal | None = None
        self._worker_busy = False
        self._tx_active = False
        self._acking = False
        self._beaconing = False
        self._ack_wait: tuple[int, Signal] | None = None
        self._poll_wait: Signal | None = None
        self._last_dsn: dict[Any, int] = {}
        self.indirect = IndirectQueue()
        self._init_management()
        self._spawn(self._worker(), "mac-worker")

    # -- helpers -------------------------------------------------------------------------

    def _spawn(self, gen: Generator, name: str) -> Process:
        proc = self.sim.process(gen, f"{self.node_id}:{name}")
        self._procs.add(proc)
        proc.done.add_callback(lambda _v: self._procs.discard(proc))
        return proc

    @property
    def symbol(self) -> int:
        return self.phy.timing.symbol_us

    def ticks(self, symbols: int) -> int:
        return symbols * self.phy.timing.symbol_us

    def _ifs_ticks(self, psdu_len: int) -> int:
        # the MPDU is the PSDU; frames up to aMaxSIFSFrameSize octets take the short gap
        return self.ticks(MAC_MIN_SIFS_PERIOD if psdu_len <= A_MAX_SIFS_FRAME_SIZE else MAC_MIN_LIFS_PERIOD)

    def _ack_wait_ticks(self) -> int:
        return self.ticks(self.pib.macAckWaitDuration)

    def own_address(self) -> Address:
        short = self.pib.macShortAddress
        if short < NO_SHORT_ADDR:
            return ShortAddress(short)
        return ExtAddress(self.pib.macExtendedAddress)

    def coord_address(self) -> Address:
        short = self.pib.macCoordShortAddress
        if short < NO_SHORT_ADDR:
            return ShortAddress(short)
        return ExtAddress(self.pib.macCoordExtendedAddress)

    def _is_own(self, addr: Address | None) -> bool:
        if isinstance(addr, ShortAddress):
            return addr.value == self.pib.macShortAddress and addr.value < NO_SHORT_ADDR
        if isinstance(addr, ExtAddress):
            return addr.value == self.pib.macExtendedAddress
        return False

    def build_frame(self, frame_type: FrameType, *, dst: Address | None, dst_pan: int | None = None,
                    src: Address | None = None, src_pan: int | None = None, payload: bytes = b"",
                    command_id: CommandId | None = None, ack: bool = False, pending: bool = False) -> Frame:
        """Frame stamped with the next DSN.  Raises FrameTooLong before the DSN is consumed."""
        pan = self.pib.macPANId
        frame = make_frame(frame_type, self.pib.macDSN, dst=dst,
                           dst_pan=(pan if dst_pan is None else dst_pan) if dst is not None else None,
                           src=self.own_address() if src is None else src,
                           src_pan=pan if src_pan is None else src_pan,
                           payload=payload, command_id=command_id, ack_request=ack, frame_pending=pending)
        encode_frame(frame)
        self.pib.next_dsn()
        return frame

    # -- transceiver policy ----------------------------------------------------------------

    def _want_rx(self) -> bool:
        if self.pib.macRxOnWhenIdle or self._ack_wait or self._poll_wait or self._scan_active:
            return True
        if self._assoc_wait is not None:
            return True
        if self._tracking and self.clock is None:
            return True  # still searching for the first beacon
        if self.clock is not None and (self._tracking or self.is_pan_coordinator):
            return self._in_active_portion(self.sim.now)
        return False

    def _in_active_portion(self, t: int) -> bool:
        c = self.clock
        sf = c.superframe_start(t)
        return t < c.active_end(sf) or t >= sf + c.bi - c.ubp

    def _idle(self) -> None:
        """Settle the transceiver in its idle state when no activity owns it."""
        if self._tx_active or self._acking or self._beaconing or self._worker_busy or self._gts_busy:
            return
        state = self.phy.state
        if state in (TrxState.BUSY_RX, TrxState.BUSY_TX):
            return
        target = TrxState.RX_ON if self._want_rx() else TrxState.TRX_OFF
        if state != target or self.phy.switching:
            self.phy.set_trx_state(target)

    def _wake_receiver(self) -> None:
        # slotted CCAs must start on the boundary: an immediate TRX_OFF->RX_ON is fine, while a
        # transceiver still turning around just makes this CCA report busy
        if self._acking or self._beaconing or self._gts_busy:
            return
        if self.phy.state in (TrxState.TRX_OFF, TrxState.TX_ON) and not self.phy.switching:
            self.phy.set_trx_state(TrxState.RX_ON)

    def _ensure_rx(self) -> Generator:
        # CCA needs the receiver; leave it alone while an ack, beacon or GTS frame owns the radio
        if self._acking or self._beaconing or self._gts_busy:
            return
        if self.phy.state in (TrxState.TRX_OFF, TrxState.TX_ON) or self.phy.switching:
            yield self.phy.set_trx_state(TrxState.RX_ON)

    # -- MCPS-DATA --------------------------------------------------------------------------

    def mcps_data_request(self, req: McpsDataRequest) -> Signal:
        opts = req.tx_options
        self.stats.data_requests += 1
        self.trace("MCPS-DATA.request", handle=req.handle, dst=req.dst_addr, len=len(req.msdu),
                   ack=opts.ack, gts=opts.gts, indirect=opts.indirect)
        out = Signal(self.sim)

        def confirm(status: Status) -> None:
            st = self.stats
            st.confirms[status.value] = st.confirms.get(status.value, 0) + 1
            if status == Status.SUCCESS:
                st.data_confirmed += 1
            else:
                st.data_failed += 1
            self.trace("MCPS-DATA.confirm", handle=req.handle, status=status)
            out.succeed(DataConfirm(req.handle, status, self.sim.now))

        broadcast = isinstance(req.dst_addr, ShortAddress) and req.dst_addr.is_broadcast
        if opts.ack and broadcast:
            confirm(Status.INVALID_PARAMETER)
            return out
        try:
            frame = self.build_frame(FrameType.DATA, dst=req.dst_addr, dst_pan=req.dst_pan,
                                     payload=req.msdu, ack=opts.ack)
        except FrameError:
            confirm(Status.FRAME_TOO_LONG)
            return out
        if opts.gts:
            status = self._queue_gts(frame, lambda st: confirm(st))
            if status is not None:
                confirm(status)
        elif opts.indirect and self._can_hold_indirect():
            status = self._queue_indirect(frame, confirm)
            if status is not None:
                confirm(status)
        else:
            sig = self.submit(frame, "data")
            sig.add_callback(lambda res: confirm(res[0]))
        return out

    def _can_hold_indirect(self) -> bool:
        return self.is_pan_coordinator

    def submit(self, frame: Frame, label: str, *, front: bool = False, unslotted: bool = False) -> Signal:
        """Queue a frame for CAP/unslotted transmission; the signal yields (status, ack frame)."""
        done = Signal(self.sim)
        if len(self._queue) >= self.queue_limit:
            done.succeed((Status.TRANSACTION_OVERFLOW, None))
            return done
        txn = _Txn(frame, encode_frame(frame), done, label, unslotted)
        if front:
            self._queue.appendleft(txn)
        else:
            self._queue.append(txn)
        if self._wake is not None and not self._wake.triggered:
            self._wake.succeed()
        return done

    # -- worker ---------------------------------------------------------------------------

    def _worker(self) -> Generator:
        while True:
            while not self._queue:
                self._wake = Signal(self.sim)
                yield self._wake
            txn = self._queue.popleft()
            self._worker_busy = True
            result = yield from self._execute(txn)
            self.stats.max_attempts = max(self.stats.max_attempts, txn.attempts)
            txn.done.succeed(result)
            gap = self._ifs_ticks(len(txn.psdu))
            self._worker_busy = False
            self._idle()
            yield gap

    def _execute(self, txn: _Txn) -> Generator:
        max_retries = self.pib.macMaxFrameRetries
        while True:
            slotted = self.clock is not None and not txn.unslotted
            if slotted:
                status = yield from self._csma_slotted(txn)
            else:
                status = yield from self._csma_unslotted()
            if status != Status.SUCCESS:
                self.stats.csma_failures += 1
                return Status.CHANNEL_ACCESS_FAILURE, None
            txn.attempts += 1
            ok = yield from self._transmit(txn, slotted)
            if not ok:
                if txn.attempts > max_retries:
                    return Status.CHANNEL_ACCESS_FAILURE, None
                continue
            if not txn.wants_ack:
                return Status.SUCCESS, None
            ack = yield from self._await_ack(txn.frame.sequence_number)
            if ack is not None:
                return Status.SUCCESS, ack
            self.trace("ACK.timeout", dsn=txn.frame.sequence_number, attempt=txn.attempts)
            if txn.attempts > max_retries:
                self.stats.no_ack += 1
                return Status.NO_ACK, None
            self.stats.retries += 1

    def _transmit(self, txn: _Txn, slotted: bool) -> Generator:
        """Send the PSDU; the PHY is already in TX_ON.  Returns False if the PHY refused."""
        frame = txn.frame
        self.trace("TX", kind=txn.label, dsn=frame.sequence_number, attempt=txn.attempts,
                   len=len(txn.psdu), slotted=slotted)
        self.stats.frames_tx += 1
        status = yield self.phy.data_request(txn.psdu)
        self._tx_active = False
        if status != Status.SUCCESS:
            self._idle()
            return False
        if txn.wants_ack:
            self._ack_wait = (frame.sequence_number, Signal(self.sim))
            self.phy.set_trx_state(TrxState.RX_ON)
        return True

    def _await_ack(self, seq: int) -> Generator:
        _, sig = self._ack_wait
        # inclusive deadline: an ack ending exactly at macAckWaitDuration still counts
        res = yield self.sim.first_of(sig, self._ack_wait_ticks() + 1)
        self._ack_wait = None
        if res is TIMEOUT:
            return None
        self.stats.acks_received += 1
        return res

    # -- CSMA-CA --------------------------------------------------------------------------

    def _turn_to_tx(self) -> Generator:
        """Switch the idle-checked transceiver to TX_ON.  False means treat the channel as busy."""
        if self._acking or self._beaconing or self._gts_busy:
            return False
        self._tx_active = True
        status = yield self.phy.set_trx_state(TrxState.TX_ON)
        if status in (Status.SUCCESS, Status.TX_ON) and self.phy.state == TrxState.TX_ON:
            return True
        self._tx_active = False
        if status == Status.BUSY_RX:
            # withdraw the deferred switch so the frame being received is not cut off
            self.phy.set_trx_state(TrxState.RX_ON)
        return False

    def _csma_unslotted(self) -> Generator:
        nb = 0
        be = self.pib.macMinBE
        ubp = self.ticks(A_UNIT_BACKOFF_PERIOD)
        while True:
            periods = self._rng.randint(0, 2 ** be - 1)
            self.trace("CSMA.backoff", nb=nb, be=be, periods=periods, slotted=False)
            if periods:
                yield periods * ubp
            yield from self._ensure_rx()
            self.trace("CSMA.cca", nb=nb, slotted=False)
            status = yield self.phy.cca()
            if status == Status.IDLE:
                ok = yield from self._turn_to_tx()
                if ok:
                    return Status.SUCCESS
            nb += 1
            be = min(be + 1, self.pib.macMaxBE)
            if nb > self.pib.macMaxCSMABackoffs:
                self.trace("CSMA.fail", nb=nb)
                return Status.CHANNEL_ACCESS_FAILURE

    def _slotted_need(self, txn: _Txn) -> int:
        need = 2 * self.ticks(A_UNIT_BACKOFF_PERIOD) + self.phy.timing.airtime(len(txn.psdu))
        if txn.wants_ack:
            need += self._ack_wait_ticks()
        return need + self._ifs_ticks(len(txn.psdu))

    def _csma_slotted(self, txn: _Txn) -> Generator:
        nb = 0
        be = min(2, self.pib.macMinBE) if self.pib.macBattLifeExt else self.pib.macMinBE
        need = self._slotted_need(txn)
        clock = self.clock
        t = clock.first_cap_boundary(self.sim.now)
        while True:
            periods = self._rng.randint(0, 2 ** be - 1)
            self.trace("CSMA.backoff", nb=nb, be=be, periods=periods, slotted=True)
            t = clock.advance_backoffs(t, periods)
            if not clock.can_complete(t, need):
                # not enough CAP left: resume in the next superframe with a fresh draw
                t = clock.next_cap_start(t)
                continue
            if t > self.sim.now:
                yield t - self.sim.now
            if self.clock is not clock:
                clock = self.clock
                if clock is None:
                    return Status.CHANNEL_ACCESS_FAILURE
            self._wake_receiver()
            cw = 2
            busy = False
            while cw:
                self.trace("CSMA.cca", nb=nb, cw=cw, slotted=True, sf=clock.superframe_start(self.sim.now))
                status = yield self.phy.cca()
                if status != Status.IDLE:
                    busy = True
                    break
                cw -= 1
                if cw:
                    t += clock.ubp
                    yield t - self.sim.now
            if not busy:
                # CCA ended CCA_SYMBOLS into the period; the turnaround fills the rest
                ok = yield from self._turn_to_tx()
                if ok:
                    return Status.SUCCESS
            nb += 1
            be = min(be + 1, self.pib.macMaxBE)
            if nb > self.pib.macMaxCSMABackoffs:
                self.trace("CSMA.fail", nb=nb)
                return Status.CHANNEL_ACCESS_FAILURE
            t = clock.first_cap_boundary(self.sim.now)

    # -- reception ------------------------------------------------------------------------

    def _accept(self, frame: Frame) -> bool:
        ftype = frame.frame_type
        pan = self.pib.macPANId
        if ftype == FrameType.ACK:
            return True
        if self._scan_active:
            return ftype == FrameType.BEACON
        if ftype == FrameType.BEACON:
            return pan == BROADCAST_PAN or frame.src_pan == pan
        if frame.dst_addr is not None:
            if frame.dst_pan not in (BROADCAST_PAN, pan):
                return False
            if isinstance(frame.dst_addr, ShortAddress):
                return frame.dst_addr.value in (BROADCAST_ADDR, self.pib.macShortAddress)
            return frame.dst_addr.value == self.pib.macExtendedAddress
        # no destination: only a PAN coordinator accepts, and only from its own PAN
        return self.is_pan_coordinator and frame.src_pan == pan

    def _on_pd_indication(self, psdu: bytes, lqi: int, rx_start: int) -> None:
        try:
            frame = decode_frame(psdu)
        except FrameError as exc:
            self.trace("RX.drop", reason=type(exc).__name__)
            return
        if self.pib.macPromiscuousMode and frame.frame_type != FrameType.ACK:
            self._indicate(frame, lqi)
            return
        if not self._accept(frame):
            return
        ftype = frame.frame_type
        if ftype == FrameType.ACK:
            self._on_ack(frame)
            return
        self.trace("RX", kind=ftype.name, dsn=frame.sequence_number, src=frame.src_addr, lqi=lqi)
        unicast = frame.dst_addr is not None and not (
            isinstance(frame.dst_addr, ShortAddress) and frame.dst_addr.is_broadcast)
        if frame.control.ack_request and ftype in (FrameType.DATA, FrameType.COMMAND) and (
                unicast or frame.dst_addr is None):
            # the pending bit reflects the queue before this request starts an extraction
            pending = (frame.command_id == CommandId.DATA_REQUEST
                       and bool(self.indirect.waiting_for(frame.src_addr)))
            self._spawn(self._send_ack(frame, pending), "ack")
        if ftype == FrameType.BEACON:
            self._on_beacon(frame, lqi, rx_start)
        elif ftype == FrameType.DATA:
            if self._is_duplicate(frame):
                self.stats.duplicates += 1
                self.trace("RX.duplicate", dsn=frame.sequence_number, src=frame.src_addr)
                return
            self._indicate(frame, lqi)
            if self._poll_wait is not None and not self._poll_wait.triggered:
                self._poll_wait.succeed(frame)
        else:
            if self._is_duplicate(frame):
                self.stats.duplicates += 1
                return
            self._on_command(frame, lqi)

    def _is_duplicate(self, frame: Frame) -> bool:
        if not frame.control.ack_request or frame.src_addr is None:
            return False
        key = frame.src_addr
        last = self._last_dsn.get(key)
        self._last_dsn[key] = frame.sequence_number
        return last == frame.sequence_number

    def _indicate(self, frame: Frame, lqi: int) -> None:
        self.stats.indications += 1
        ind = DataIndication(frame.src_pan, frame.src_addr, frame.dst_pan, frame.dst_addr,
                             frame.payload, lqi, frame.sequence_number, self.sim.now)
        self.trace("MCPS-DATA.indication", src=frame.src_addr, dsn=frame.sequence_number,
                   len=len(frame.payload), lqi=lqi)
        self.user.on_data_indication(ind)

    def _on_ack(self, frame: Frame) -> None:
        if self._ack_wait is None:
            return
        seq, sig = self._ack_wait
        if frame.sequence_number != seq:
            self.trace("ACK.mismatch", dsn=frame.sequence_number, expected=seq)
            return
        self.trace("ACK.rx", dsn=seq, pending=frame.control.frame_pending)
        if not sig.triggered:
            sig.succeed(frame)

    def _send_ack(self, frame: Frame, pending: bool) -> Generator:
        rx_end = self.sim.now
        if self._tx_active or self._acking or self._beaconing:
            self.trace("ACK.suppressed", dsn=frame.sequence_number)
            return
        self._acking = True
        psdu = encode_frame(ack_frame(frame.sequence_number, pending))
        status = yield self.phy.set_trx_state(TrxState.TX_ON)
        if status not in (Status.SUCCESS, Status.TX_ON) or self.phy.state != TrxState.TX_ON:
            if status == Status.BUSY_RX:
                self.phy.set_trx_state(TrxState.RX_ON)
            self._acking = False
            self._idle()
            return
        clock = self.clock
        if clock is not None and clock.in_cap(rx_end):
            at = clock.next_boundary(rx_end + self.ticks(self.phy.timing.turnaround))
            if at > self.sim.now:
                yield at - self.sim.now
        self.trace("TX", kind="ACK", dsn=frame.sequence_number, pending=pending, len=len(psdu),
                   slotted=clock is not None and clock.in_cap(rx_end))
        self.stats.acks_sent += 1
        yield self.phy.data_request(psdu)
        self._acking = False
        self._idle()

    # -- indirect queue -------------------------------------------------------------------

    def _indirect_unit(self) -> int:
        bo = self.pib.macBeaconOrder
        return self.ticks(960 * (2 ** bo if bo < 15 else 1))

    def _queue_indirect(self, frame: Frame, on_done) -> Status | None:
        if self.indirect.full:
            return Status.TRANSACTION_OVERFLOW
        now = self.sim.now
        expires = now + self.pib.macTransactionPersistenceTime * self._indirect_unit()
        entry = IndirectEntry(frame.dst_addr, frame, now, expires, on_done)
        entry.timer = self.sim.schedule_at(expires, self._expire_indirect, entry)
        self.indirect.add(entry)
        self.trace("INDIRECT.queued", dst=frame.dst_addr, dsn=frame.sequence_number, expires=expires)
        return None

    def _expire_indirect(self, entry: IndirectEntry) -> None:
        entry.expired = True
        if entry.in_flight:
            return
        self.indirect.remove(entry)
        self.trace("INDIRECT.expired", dst=entry.dst, dsn=entry.frame.sequence_number)
        entry.on_done(Status.TRANSACTION_EXPIRED)

    def _extract(self, requester: Address | None) -> None:
        entry = self.indirect.find(requester)
        if entry is None:
            return
        entry.in_flight = True
        more = len(self.indirect.waiting_for(requester)) > 0
        frame = entry.frame
        if frame.control.frame_pending != more:
            frame = replace(frame, control=replace(frame.control, frame_pending=more))
        sig = self.submit(frame, "indirect", front=True)

        def finished(res: tuple[Status, Any]) -> None:
            entry.in_flight = False
            entry.attempts += 1
            status = res[0]
            if status == Status.SUCCESS:
                self.sim.cancel(entry.timer)
                self.indirect.remove(entry)
                entry.on_done(Status.SUCCESS)
            elif entry.expired:
                self.indirect.remove(entry)
                entry.on_done(Status.TRANSACTION_EXPIRED)

        sig.add_callback(finished)

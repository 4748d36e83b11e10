"""Per-node PHY: transceiver state machine and the PD/PLME service primitives.

All primitives return a :class:`~wpansim.engine.Signal` that fires with
the confirm status, so MAC processes can ``yield`` on them.  Receptions
are handed upward through ``indication(psdu, lqi, rx_start)``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

from .engine import Signal, Simulator
from .enums import (
    A_MAX_PHY_PACKET_SIZE,
    CCA_SYMBOLS,
    ED_SYMBOLS,
    PhyTiming,
    RxOutcome,
    Status,
    TrxState,
)
from .medium import DEFAULT_SENSITIVITY_DBM, NOISE_FLOOR_DBM, Medium, Transmission
from .pib import PhyPib
from .trace import Layer, Trace

ED_CEILING_DBM = -20.0
LQI_SPAN_DB = 40.0


def _linear_level(dbm: float, lo: float, hi: float) -> int:
    level = math.floor(255.0 * (dbm - lo) / (hi - lo) + 0.5)
    return min(255, max(0, level))


def ed_level(dbm: float) -> int:
    """Map received energy onto 0..255 linearly over [-100, -20] dBm."""
    return _linear_level(dbm, NOISE_FLOOR_DBM, ED_CEILING_DBM)


def lqi_from_power(dbm: float, sensitivity: float) -> int:
    return _linear_level(dbm, sensitivity, sensitivity + LQI_SPAN_DB)


@dataclass
class LinkCounters:
    observed: int = 0
    delivered: int = 0
    collided: int = 0
    below_sensitivity: int = 0
    missed: int = 0


_STATE_STATUS = {
    TrxState.TRX_OFF: Status.TRX_OFF,
    TrxState.RX_ON: Status.RX_ON,
    TrxState.TX_ON: Status.TX_ON,
    TrxState.BUSY_RX: Status.BUSY_RX,
    TrxState.BUSY_TX: Status.BUSY_TX,
}


class Phy(Layer):
    LAYER = "PHY"

    def __init__(self, sim: Simulator, node_id: str, medium: Medium, pib: PhyPib | None = None, *,
                 sensitivity: float = DEFAULT_SENSITIVITY_DBM, cca_threshold: float | None = None,
                 tracer: Trace | None = None):
        super().__init__(sim, node_id, tracer)
        self.medium = medium
        self.pib = pib or PhyPib()
        self.sensitivity = sensitivity
        self.cca_threshold = sensitivity + 10.0 if cca_threshold is None else cca_threshold
        self.state = TrxState.TRX_OFF
        self.indication: Callable[[bytes, int, int], None] | None = None
        self.link_stats: dict[str, LinkCounters] = defaultdict(LinkCounters)
        self.frames_sent = 0
        self._switch = None  # (target, event handle, confirm signal)
        self._pending: TrxState | None = None
        self._rx: Transmission | None = None
        self._tx: tuple[Transmission, Signal] | None = None

    # -- parameters ----------------------------------------------------------------

    @property
    def channel(self) -> int:
        return self.pib.phyCurrentChannel

    @property
    def timing(self) -> PhyTiming:
        return self.pib.timing

    @property
    def receiving_enabled(self) -> bool:
        return self.state == TrxState.RX_ON and self._switch is None

    @property
    def switching(self) -> bool:
        return self._switch is not None

    def _sig(self, status) -> Signal:
        sig = Signal(self.sim)
        sig.succeed(status)
        return sig

    # -- PLME-SET-TRX-STATE -----------------------------------------------------------

    def set_trx_state(self, target: TrxState) -> Signal:
        self.trace("PLME-SET-TRX-STATE.request", state=target)
        if target == TrxState.FORCE_TRX_OFF:
            self._force_off()
            return self._confirm_state(Status.SUCCESS)
        if self.state == TrxState.BUSY_TX:
            self._pending = None if target == TrxState.TX_ON else target
            return self._confirm_state(Status.BUSY_TX)
        if self.state == TrxState.BUSY_RX:
            self._pending = None if target == TrxState.RX_ON else target
            return self._confirm_state(Status.BUSY_RX)
        if self._switch is not None:
            pending_target, handle, sig = self._switch
            if pending_target == target:
                return sig
            self.sim.cancel(handle)
            self._switch = None
            sig.succeed(_STATE_STATUS[target])
        if self.state == target:
            return self._confirm_state(_STATE_STATUS[target])
        delay = 0
        if {self.state, target} == {TrxState.RX_ON, TrxState.TX_ON}:
            delay = self.timing.symbols(self.timing.turnaround)
        sig = Signal(self.sim)
        if delay == 0:
            self._enter(target)
            self.trace("PLME-SET-TRX-STATE.confirm", status=Status.SUCCESS)
            sig.succeed(Status.SUCCESS)
        else:
            handle = self.sim.schedule(delay, self._finish_switch)
            self._switch = (target, handle, sig)
        return sig

    def _confirm_state(self, status: Status) -> Signal:
        self.trace("PLME-SET-TRX-STATE.confirm", status=status)
        return self._sig(status)

    def _finish_switch(self) -> None:
        target, _, sig = self._switch
        self._switch = None
        self._enter(target)
        self.trace("PLME-SET-TRX-STATE.confirm", status=Status.SUCCESS)
        sig.succeed(Status.SUCCESS)

    def _enter(self, state: TrxState) -> None:
        self.state = state
        if state == TrxState.RX_ON:
            # a frame whose first symbol arrives on this very tick is still caught
            best = None
            for tx in self.medium.active.values():
                if tx.start == self.sim.now and tx.channel == self.channel and tx.source != self.node_id:
                    p = self.medium.received_power(tx, self.node_id)
                    if p >= self.sensitivity and (best is None or p > best[1]):
                        best = (tx, p)
            if best is not None:
                self._rx = best[0]
                self.state = TrxState.BUSY_RX
                # signal_start already booked it as missed
                self.link_stats[best[0].source].missed -= 1

    def _apply_pending(self) -> None:
        target, self._pending = self._pending, None
        if target is not None and target != self.state:
            self.set_trx_state(target)

    def _force_off(self) -> None:
        if self._switch is not None:
            _, handle, sig = self._switch
            self.sim.cancel(handle)
            self._switch = None
            sig.succeed(Status.TRX_OFF)
        self._pending = None
        if self._rx is not None:
            self.link_stats[self._rx.source].missed += 1
            self._rx = None
        if self._tx is not None:
            tx, sig = self._tx
            self._tx = None
            self.state = TrxState.TRX_OFF
            self.medium.abort_transmission(tx)
            self.trace("PD-DATA.confirm", status=Status.TRX_OFF, aborted=True)
            sig.succeed(Status.TRX_OFF)
        self.state = TrxState.TRX_OFF

    # -- PLME-CCA / PLME-ED ----------------------------------------------------------------

    def cca(self, mode: int | None = None) -> Signal:
        mode = self.pib.phyCCAMode if mode is None else mode
        self.trace("PLME-CCA.request", mode=mode)
        if self.state == TrxState.TRX_OFF:
            self.trace("PLME-CCA.confirm", status=Status.TRX_OFF)
            return self._sig(Status.TRX_OFF)
        if self.state in (TrxState.TX_ON, TrxState.BUSY_TX) or self.switching:
            self.trace("PLME-CCA.confirm", status=Status.BUSY)
            return self._sig(Status.BUSY)
        sig = Signal(self.sim)
        self.sim.schedule(self.timing.symbols(CCA_SYMBOLS), self._cca_done, mode, sig)
        return sig

    def _cca_done(self, mode: int, sig: Signal) -> None:
        if self.state in (TrxState.TX_ON, TrxState.BUSY_TX, TrxState.TRX_OFF) or self.switching:
            busy = True
        else:
            window = self.timing.symbols(CCA_SYMBOLS)
            energy = self.medium.sense_energy(self.node_id, self.channel, window) >= self.cca_threshold
            carrier = self._carrier_seen(window)
            if mode == 1:
                busy = energy
            elif mode == 2:
                busy = carrier
            else:
                busy = energy and carrier
        status = Status.BUSY if busy else Status.IDLE
        self.trace("PLME-CCA.confirm", status=status)
        sig.succeed(status)

    def _carrier_seen(self, window: int) -> bool:
        now = self.sim.now
        lo = now - window
        for tx in self.medium._history:
            if (tx.channel == self.channel and tx.source != self.node_id and tx.start <= now and tx.end > lo
                    and self.medium.received_power(tx, self.node_id) >= self.sensitivity):
                return True
        return False

    def ed(self) -> Signal:
        self.trace("PLME-ED.request")
        if self.state == TrxState.TRX_OFF:
            return self._sig((Status.TRX_OFF, 0))
        if self.state in (TrxState.TX_ON, TrxState.BUSY_TX) or self.switching:
            return self._sig((Status.TX_ON, 0))
        sig = Signal(self.sim)

        def done() -> None:
            level = ed_level(self.medium.sense_energy(self.node_id, self.channel, self.timing.symbols(ED_SYMBOLS)))
            self.trace("PLME-ED.confirm", status=Status.SUCCESS, level=level)
            sig.succeed((Status.SUCCESS, level))

        self.sim.schedule(self.timing.symbols(ED_SYMBOLS), done)
        return sig

    # -- PD-DATA ----------------------------------------------------------------------

    def data_request(self, psdu: bytes) -> Signal:
        self.trace("PD-DATA.request", len=len(psdu))
        if len(psdu) > A_MAX_PHY_PACKET_SIZE:
            status = Status.FRAME_TOO_LONG
        elif self.switching:
            status = _STATE_STATUS[self.state]
        elif self.state != TrxState.TX_ON:
            status = _STATE_STATUS[self.state]
        else:
            sig = Signal(self.sim)
            self.state = TrxState.BUSY_TX
            self.frames_sent += 1
            tx = self.medium.begin_transmission(self.node_id, self.channel, self.pib.phyTransmitPower, psdu)
            self._tx = (tx, sig)
            return sig
        self.trace("PD-DATA.confirm", status=status)
        return self._sig(status)

    def transmission_done(self, tx: Transmission) -> None:
        if self._tx is None or self._tx[0] is not tx:
            return
        _, sig = self._tx
        self._tx = None
        self.state = TrxState.TX_ON
        self.trace("PD-DATA.confirm", status=Status.SUCCESS)
        sig.succeed(Status.SUCCESS)
        self._apply_pending()

    @property
    def current_rx(self) -> Transmission | None:
        """Frame being received right now, if any."""
        return self._rx

    # -- medium callbacks -------------------------------------------------------------------

    def signal_start(self, tx: Transmission, power_dbm: float) -> None:
        counters = self.link_stats[tx.source]
        counters.observed += 1
        if power_dbm < self.sensitivity:
            counters.below_sensitivity += 1
        elif self.receiving_enabled and self._rx is None:
            self._rx = tx
            self.state = TrxState.BUSY_RX
        elif self.state == TrxState.BUSY_RX:
            counters.collided += 1
        else:
            counters.missed += 1

    def signal_end(self, tx: Transmission, power_dbm: float) -> None:
        if tx is not self._rx:
            return
        self._rx = None
        self.state = TrxState.RX_ON
        counters = self.link_stats[tx.source]
        if tx.aborted:
            counters.missed += 1
            outcome = None
        else:
            outcome = self.medium.receive_outcome(self.node_id, tx)
        if outcome == RxOutcome.DELIVERED:
            counters.delivered += 1
            lqi = lqi_from_power(power_dbm, self.sensitivity)
            self.trace("PD-DATA.indication", len=len(tx.psdu), lqi=lqi, src=tx.source)
            if self.indication is not None:
                self.sim.schedule(0, self.indication, tx.psdu, lqi, tx.start)
        elif outcome == RxOutcome.COLLIDED:
            counters.collided += 1
            self.trace("RX.drop", reason=outcome.value, src=tx.source)
        self._apply_pending()

"""Superframe timing and guaranteed-time-slot bookkeeping."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..enums import (
    A_BASE_SLOT_DURATION,
    A_BASE_SUPERFRAME_DURATION,
    A_GTS_DESC_PERSISTENCE_TIME,
    A_MAX_GTS_DESCRIPTORS,
    A_MIN_CAP_LENGTH,
    A_NUM_SUPERFRAME_SLOTS,
    A_UNIT_BACKOFF_PERIOD,
    GtsDirection,
    Status,
)
from ..frames import GtsDescriptor


def beacon_interval_symbols(beacon_order: int) -> int:
    return A_BASE_SUPERFRAME_DURATION * 2 ** beacon_order


def superframe_duration_symbols(superframe_order: int) -> int:
    return A_BASE_SUPERFRAME_DURATION * 2 ** superframe_order


def slot_symbols(superframe_order: int) -> int:
    return A_BASE_SLOT_DURATION * 2 ** superframe_order


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass
class SuperframeClock:
    """Beacon-anchored timing.  ``start`` is the first symbol of a known beacon."""

    start: int
    beacon_order: int
    superframe_order: int
    final_cap_slot: int
    beacon_duration: int
    symbol: int

    @property
    def bi(self) -> int:
        return beacon_interval_symbols(self.beacon_order) * self.symbol

    @property
    def sd(self) -> int:
        return superframe_duration_symbols(self.superframe_order) * self.symbol

    @property
    def slot(self) -> int:
        return slot_symbols(self.superframe_order) * self.symbol

    @property
    def ubp(self) -> int:
        return A_UNIT_BACKOFF_PERIOD * self.symbol

    def superframe_start(self, t: int) -> int:
        if t < self.start:
            return self.start
        return self.start + (t - self.start) // self.bi * self.bi

    def cap_start(self, sf: int) -> int:
        # first backoff boundary after the beacon frame
        return sf + _ceil_div(self.beacon_duration, self.ubp) * self.ubp

    def cap_end(self, sf: int) -> int:
        return sf + (self.final_cap_slot + 1) * self.slot

    def active_end(self, sf: int) -> int:
        return sf + self.sd

    def in_cap(self, t: int) -> bool:
        sf = self.superframe_start(t)
        return self.cap_start(sf) <= t < self.cap_end(sf) and t >= self.start

    def next_boundary(self, t: int) -> int:
        sf = self.superframe_start(t)
        if t <= sf:
            return sf
        return sf + _ceil_div(t - sf, self.ubp) * self.ubp

    def next_cap_start(self, t: int) -> int:
        """Start of the CAP of the superframe following the one containing ``t``."""
        sf = self.superframe_start(t)
        if t < self.start:
            return self.cap_start(self.start)
        return self.cap_start(sf + self.bi)

    def first_cap_boundary(self, t: int) -> int:
        """Earliest backoff boundary at or after ``t`` that lies inside a CAP."""
        sf = self.superframe_start(t)
        b = max(self.next_boundary(t), self.cap_start(sf))
        if b >= self.cap_end(sf):
            return self.cap_start(sf + self.bi)
        return b

    def advance_backoffs(self, t: int, periods: int) -> int:
        """Count ``periods`` backoff periods from boundary ``t``, pausing outside the CAP."""
        t = self.first_cap_boundary(t)
        while True:
            sf = self.superframe_start(t)
            room = (self.cap_end(sf) - t) // self.ubp
            if periods <= room:
                return t + periods * self.ubp
            periods -= room
            t = self.cap_start(sf + self.bi)

    def can_complete(self, t: int, needed: int) -> bool:
        sf = self.superframe_start(t)
        return t >= self.cap_start(sf) and t + needed <= self.cap_end(sf)

    def gts_window(self, sf: int, desc: GtsDescriptor) -> tuple[int, int]:
        begin = sf + desc.starting_slot * self.slot
        return begin, begin + desc.length * self.slot


class GtsTable:
    """Coordinator-side GTS allocation, first fit from the end of the CAP downward."""

    def __init__(self, superframe_order: int):
        self.superframe_order = superframe_order
        self.allocated: list[GtsDescriptor] = []
        # descriptors waiting to be (or being) advertised: [descriptor, beacons remaining]
        self._adverts: deque[list] = deque()

    @property
    def final_cap_slot(self) -> int:
        return A_NUM_SUPERFRAME_SLOTS - 1 - sum(d.length for d in self.allocated)

    def cap_length_symbols(self, final_cap_slot: int | None = None) -> int:
        fcs = self.final_cap_slot if final_cap_slot is None else final_cap_slot
        return (fcs + 1) * slot_symbols(self.superframe_order)

    def find(self, address: int, direction: GtsDirection) -> GtsDescriptor | None:
        for d in self.allocated:
            if d.short_address == address and d.direction == direction:
                return d
        return None

    def allocate(self, address: int, length: int, direction: GtsDirection) -> tuple[Status, GtsDescriptor]:
        new_fcs = self.final_cap_slot - length
        if (len(self.allocated) >= A_MAX_GTS_DESCRIPTORS or not 1 <= length <= 15 or new_fcs < 0
                or self.find(address, direction) is not None
                or self.cap_length_symbols(new_fcs) < A_MIN_CAP_LENGTH):
            return Status.DENIED, self.deny(address, length, direction)
        desc = GtsDescriptor(address, new_fcs + 1, length, direction)
        self.allocated.append(desc)
        self._advertise(desc)
        return Status.SUCCESS, desc

    def deny(self, address: int, length: int, direction: GtsDirection) -> GtsDescriptor:
        # a starting slot of zero tells the device its request was refused
        denied = GtsDescriptor(address, 0, length, direction)
        self._advertise(denied)
        return denied

    def deallocate(self, address: int, direction: GtsDirection) -> bool:
        desc = self.find(address, direction)
        if desc is None:
            return False
        self.allocated.remove(desc)
        # repack toward the end of the superframe so the CFP stays contiguous
        slot = A_NUM_SUPERFRAME_SLOTS
        repacked = []
        for d in self.allocated:
            slot -= d.length
            moved = GtsDescriptor(d.short_address, slot, d.length, d.direction)
            if moved != d:
                self._advertise(moved)
            repacked.append(moved)
        self.allocated = repacked
        return True

    def _advertise(self, desc: GtsDescriptor) -> None:
        self._adverts.append([desc, A_GTS_DESC_PERSISTENCE_TIME])

    def beacon_descriptors(self) -> tuple[GtsDescriptor, ...]:
        """Descriptors for the next beacon; each is carried for aGTSDescPersistenceTime beacons."""
        out = []
        for entry in list(self._adverts)[:A_MAX_GTS_DESCRIPTORS]:
            out.append(entry[0])
            entry[1] -= 1
        self._adverts = deque(e for e in self._adverts if e[1] > 0)
        return tuple(out)

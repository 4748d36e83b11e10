"""Coordinator-side pending-transaction queue for indirect transfer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..enums import A_MAX_PENDING_ADDRESSES
from ..frames import Address, ExtAddress, Frame, ShortAddress

INDIRECT_CAPACITY = 8


@dataclass(eq=False)
class IndirectEntry:
    dst: Address
    frame: Frame
    created: int
    expires: int
    on_done: Any  # callable(Status)
    timer: Any = None
    in_flight: bool = False
    expired: bool = False
    attempts: int = field(default=0)


class IndirectQueue:
    def __init__(self, capacity: int = INDIRECT_CAPACITY):
        self.capacity = capacity
        self.entries: list[IndirectEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def add(self, entry: IndirectEntry) -> None:
        self.entries.append(entry)

    def remove(self, entry: IndirectEntry) -> None:
        if entry in self.entries:
            self.entries.remove(entry)

    def waiting_for(self, addr: Address | None) -> list[IndirectEntry]:
        return [e for e in self.entries if e.dst == addr and not e.in_flight]

    def find(self, addr: Address | None) -> IndirectEntry | None:
        waiting = self.waiting_for(addr)
        return waiting[0] if waiting else None

    def pending_addresses(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Distinct short and extended destinations, at most seven in total."""
        shorts: list[int] = []
        exts: list[int] = []
        for e in self.entries:
            if len(shorts) + len(exts) >= A_MAX_PENDING_ADDRESSES:
                break
            if isinstance(e.dst, ShortAddress) and e.dst.value not in shorts:
                shorts.append(e.dst.value)
            elif isinstance(e.dst, ExtAddress) and e.dst.value not in exts:
                exts.append(e.dst.value)
        return tuple(shorts), tuple(exts)

"""PHY and MAC PAN information bases.

Attributes are addressed by name or by their standard identifier.  Each
attribute carries a default, a validity check and a read-only flag; a few
MAC timing attributes are derived from the current PHY parameters instead
of being stored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, Callable

from .enums import (
    A_TURNAROUND_TIME,
    A_UNIT_BACKOFF_PERIOD,
    SUPPORTED_CHANNELS,
    Status,
    timing_for_channel,
)


class PibAttribute(IntEnum):
    phyCurrentChannel = 0x00
    phyChannelsSupported = 0x01
    phyTransmitPower = 0x02
    phyCCAMode = 0x03
    phyCurrentPage = 0x04
    phyMaxFrameDuration = 0x05
    phySHRDuration = 0x06
    phySymbolsPerOctet = 0x07
    macAckWaitDuration = 0x40
    macAssociationPermit = 0x41
    macAutoRequest = 0x42
    macBattLifeExt = 0x43
    macBattLifeExtPeriods = 0x44
    macBeaconPayload = 0x45
    macBeaconOrder = 0x47
    macBSN = 0x49
    macCoordExtendedAddress = 0x4A
    macCoordShortAddress = 0x4B
    macDSN = 0x4C
    macGTSPermit = 0x4D
    macMaxCSMABackoffs = 0x4E
    macMinBE = 0x4F
    macPANId = 0x50
    macPromiscuousMode = 0x51
    macRxOnWhenIdle = 0x52
    macShortAddress = 0x53
    macSuperframeOrder = 0x54
    macTransactionPersistenceTime = 0x55
    macAssociatedPANCoord = 0x56
    macMaxBE = 0x57
    macMaxFrameTotalWaitTime = 0x58
    macMaxFrameRetries = 0x59
    macResponseWaitTime = 0x5A
    macExtendedAddress = 0x6F  # aExtendedAddress; exposed read-only


class PibError(LookupError):
    def __init__(self, status: Status, attribute: Any = None):
        super().__init__(f"{status}: {attribute}")
        self.status = status
        self.attribute = attribute


@dataclass(frozen=True)
class AttributeSpec:
    kind: str  # "int", "bool" or "bytes"
    default: Any = None
    check: Callable[[Any, Any], bool] | None = None
    read_only: bool = False
    computed: Callable[[Any], Any] | None = None


def _span(lo: int, hi: int) -> Callable[[Any, Any], bool]:
    return lambda v, pib: lo <= v <= hi


class _Pib:
    ATTRIBUTES: dict[str, AttributeSpec] = {}

    def __init__(self) -> None:
        self._values: dict[str, Any] = {}
        self._load_defaults()

    def _load_defaults(self) -> None:
        for name, spec in self.ATTRIBUTES.items():
            if spec.computed is None:
                self._values[name] = spec.default

    @classmethod
    def resolve(cls, ident: PibAttribute | str | int) -> str:
        try:
            if isinstance(ident, str):
                name = PibAttribute[ident].name
            else:
                name = PibAttribute(ident).name
        except (KeyError, ValueError):
            raise PibError(Status.UNSUPPORTED_ATTRIBUTE, ident) from None
        if name not in cls.ATTRIBUTES:
            raise PibError(Status.UNSUPPORTED_ATTRIBUTE, ident)
        return name

    def get_attribute(self, ident: PibAttribute | str | int) -> Any:
        name = self.resolve(ident)
        spec = self.ATTRIBUTES[name]
        if spec.computed is not None:
            return spec.computed(self)
        return self._values[name]

    def set_attribute(self, ident: PibAttribute | str | int, value: Any) -> Status:
        try:
            name = self.resolve(ident)
        except PibError as exc:
            return exc.status
        spec = self.ATTRIBUTES[name]
        if spec.read_only or spec.computed is not None:
            return Status.READ_ONLY
        if not _type_ok(spec.kind, value):
            return Status.INVALID_PARAMETER
        if spec.check is not None and not spec.check(value, self):
            return Status.INVALID_PARAMETER
        self._values[name] = value
        return Status.SUCCESS

    def store(self, name: str, value: Any) -> None:
        """Internal write used by the owning layer; bypasses access rules."""
        self._values[name] = value

    def __getattr__(self, name: str) -> Any:
        attrs = type(self).ATTRIBUTES
        if name in attrs:
            spec = attrs[name]
            if spec.computed is not None:
                return spec.computed(self)
            return self.__dict__["_values"][name]
        raise AttributeError(name)

    def snapshot(self) -> dict[str, Any]:
        return {name: self.get_attribute(name) for name in self.ATTRIBUTES}


def _type_ok(kind: str, value: Any) -> bool:
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, (bytes, bytearray))


class PhyPib(_Pib):
    ATTRIBUTES = {
        "phyCurrentChannel": AttributeSpec(
            "int", 11, lambda v, pib: 0 <= v <= 26 and bool(SUPPORTED_CHANNELS >> v & 1)),
        "phyChannelsSupported": AttributeSpec("int", SUPPORTED_CHANNELS, read_only=True),
        "phyTransmitPower": AttributeSpec("int", 0, _span(-32, 31)),
        "phyCCAMode": AttributeSpec("int", 1, _span(1, 3)),
        # only channel page 0 is modeled
        "phyCurrentPage": AttributeSpec("int", 0, lambda v, pib: v == 0),
        "phyMaxFrameDuration": AttributeSpec("int", computed=lambda p: p.timing.max_frame_duration),
        "phySHRDuration": AttributeSpec("int", computed=lambda p: p.timing.shr_symbols),
        "phySymbolsPerOctet": AttributeSpec("int", computed=lambda p: p.timing.symbols_per_octet),
    }

    @property
    def timing(self):
        return timing_for_channel(self._values["phyCurrentChannel"])


def _ack_wait(pib: MacPib) -> int:
    t = pib.phy.timing
    return A_UNIT_BACKOFF_PERIOD + A_TURNAROUND_TIME + t.shr_symbols + int(-(-6 * 8 // t.bits_per_symbol))


def _max_frame_total_wait(pib: MacPib) -> int:
    min_be, max_be, max_nb = pib.macMinBE, pib.macMaxBE, pib.macMaxCSMABackoffs
    m = min(max_be - min_be, max_nb)
    periods = sum(2 ** (min_be + k) for k in range(m)) + (2 ** max_be - 1) * (max_nb - m)
    return periods * A_UNIT_BACKOFF_PERIOD + pib.phy.timing.max_frame_duration


class MacPib(_Pib):
    ATTRIBUTES = {
        "macAckWaitDuration": AttributeSpec("int", computed=_ack_wait),
        "macAssociationPermit": AttributeSpec("bool", False),
        "macAutoRequest": AttributeSpec("bool", True),
        "macBattLifeExt": AttributeSpec("bool", False),
        "macBattLifeExtPeriods": AttributeSpec("int", 6, _span(6, 41)),
        "macBeaconPayload": AttributeSpec("bytes", b"", lambda v, pib: len(v) <= 52),
        "macBeaconOrder": AttributeSpec("int", 15, _span(0, 15)),
        "macBSN": AttributeSpec("int", 0, _span(0, 0xFF)),
        "macCoordExtendedAddress": AttributeSpec("int", 0, _span(0, (1 << 64) - 1)),
        "macCoordShortAddress": AttributeSpec("int", 0xFFFF, _span(0, 0xFFFF)),
        "macDSN": AttributeSpec("int", 0, _span(0, 0xFF)),
        "macGTSPermit": AttributeSpec("bool", True),
        "macMaxCSMABackoffs": AttributeSpec("int", 4, _span(0, 5)),
        "macMinBE": AttributeSpec("int", 3, lambda v, pib: 0 <= v <= pib.macMaxBE),
        "macPANId": AttributeSpec("int", 0xFFFF, _span(0, 0xFFFF)),
        "macPromiscuousMode": AttributeSpec("bool", False),
        "macRxOnWhenIdle": AttributeSpec("bool", False),
        "macShortAddress": AttributeSpec("int", 0xFFFF, _span(0, 0xFFFF)),
        "macSuperframeOrder": AttributeSpec("int", 15, _span(0, 15)),
        "macTransactionPersistenceTime": AttributeSpec("int", 0x01F4, _span(0, 0xFFFF)),
        "macAssociatedPANCoord": AttributeSpec("bool", False),
        "macMaxBE": AttributeSpec("int", 5, lambda v, pib: 3 <= v <= 8 and v >= pib.macMinBE),
        "macMaxFrameTotalWaitTime": AttributeSpec("int", computed=_max_frame_total_wait),
        "macMaxFrameRetries": AttributeSpec("int", 3, _span(0, 7)),
        "macResponseWaitTime": AttributeSpec("int", 32, _span(2, 64)),
        "macExtendedAddress": AttributeSpec("int", 0, read_only=True),
    }

    def __init__(self, phy: PhyPib, extended_address: int = 0, rng: random.Random | None = None):
        self.__dict__["phy"] = phy
        self.__dict__["_rng"] = rng or random.Random(0)
        self.__dict__["_ext"] = extended_address
        super().__init__()

    def _load_defaults(self) -> None:
        super()._load_defaults()
        self._values["macExtendedAddress"] = self._ext
        self._values["macDSN"] = self._rng.randrange(256)
        self._values["macBSN"] = self._rng.randrange(256)

    def reset(self, set_default: bool) -> None:
        if set_default:
            self._load_defaults()

    def next_dsn(self) -> int:
        dsn = self._values["macDSN"]
        self._values["macDSN"] = (dsn + 1) & 0xFF
        return dsn

    def next_bsn(self) -> int:
        bsn = self._values["macBSN"]
        self._values["macBSN"] = (bsn + 1) & 0xFF
        return bsn

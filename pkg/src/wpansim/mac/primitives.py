"""MCPS/MLME request, confirm and indication records exchanged with the MAC user."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..enums import GtsDirection, ScanType, Status
from ..frames import Address, GtsCharacteristics, PanDescriptor


@dataclass(frozen=True)
class TxOptions:
    ack: bool = True
    gts: bool = False
    indirect: bool = False


@dataclass(frozen=True)
class McpsDataRequest:
    dst_addr: Address | None
    msdu: bytes
    tx_options: TxOptions = TxOptions()
    dst_pan: int | None = None  # defaults to macPANId
    handle: int = 0


@dataclass(frozen=True)
class DataConfirm:
    handle: int
    status: Status
    timestamp: int


@dataclass(frozen=True)
class DataIndication:
    src_pan: int | None
    src_addr: Address | None
    dst_pan: int | None
    dst_addr: Address | None
    msdu: bytes
    lqi: int
    dsn: int
    timestamp: int


@dataclass(frozen=True)
class ScanConfirm:
    status: Status
    scan_type: ScanType
    channels: tuple[int, ...]
    energy: dict = field(default_factory=dict)  # channel -> ED level
    pan_descriptors: tuple[PanDescriptor, ...] = ()
    dwell: int = 0  # per-channel dwell in ticks


@dataclass(frozen=True)
class AssociateConfirm:
    status: Status
    short_address: int


@dataclass(frozen=True)
class AssociateIndication:
    device_address: int
    capability: int


@dataclass(frozen=True)
class GtsConfirm:
    status: Status
    characteristics: GtsCharacteristics


@dataclass(frozen=True)
class BeaconNotify:
    bsn: int
    pan_descriptor: PanDescriptor
    pending_short: tuple[int, ...]
    pending_ext: tuple[int, ...]
    payload: bytes


class MacUser:
    """Upper-layer sink for MAC indications; every hook is a no-op by default."""

    def on_data_indication(self, ind: DataIndication) -> None:
        pass

    def on_beacon_notify(self, note: BeaconNotify) -> None:
        pass

    def on_sync_loss(self, reason: Status) -> None:
        pass

    def on_comm_status(self, status: Status, dst: Address | None) -> None:
        pass

    def on_associate_indication(self, ind: AssociateIndication) -> None:
        pass

    def on_gts_indication(self, address: int, direction: GtsDirection, length: int, status: Status) -> None:
        pass

"""IEEE 802.15.4 MAC sublayer."""

from .core import Mac, MacStats
from .primitives import (
    AssociateConfirm,
    AssociateIndication,
    BeaconNotify,
    DataConfirm,
    DataIndication,
    GtsConfirm,
    MacUser,
    McpsDataRequest,
    ScanConfirm,
    TxOptions,
)
from .superframe import GtsTable, SuperframeClock

__all__ = [
    "AssociateConfirm", "AssociateIndication", "BeaconNotify", "DataConfirm", "DataIndication",
    "GtsConfirm", "GtsTable", "Mac", "MacStats", "MacUser", "McpsDataRequest", "ScanConfirm",
    "SuperframeClock", "TxOptions",
]

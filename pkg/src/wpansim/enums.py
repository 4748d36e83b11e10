"""Frame, command, status and state enumerations plus MAC/PHY constants (2006 revision)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum


class FrameType(IntEnum):
    BEACON = 0
    DATA = 1
    ACK = 2
    COMMAND = 3


class AddrMode(IntEnum):
    NONE = 0
    SHORT = 2
    EXTENDED = 3


class FrameVersion(IntEnum):
    V2003 = 0
    V2006 = 1


class CommandId(IntEnum):
    ASSOCIATION_REQUEST = 0x01
    ASSOCIATION_RESPONSE = 0x02
    DISASSOCIATION_NOTIFICATION = 0x03
    DATA_REQUEST = 0x04
    PAN_ID_CONFLICT = 0x05
    ORPHAN_NOTIFICATION = 0x06
    BEACON_REQUEST = 0x07
    COORDINATOR_REALIGNMENT = 0x08
    GTS_REQUEST = 0x09


class Status(Enum):
    SUCCESS = "SUCCESS"
    # PHY
    IDLE = "IDLE"
    BUSY = "BUSY"
    TRX_OFF = "TRX_OFF"
    RX_ON = "RX_ON"
    TX_ON = "TX_ON"
    BUSY_RX = "BUSY_RX"
    BUSY_TX = "BUSY_TX"
    FORCE_TRX_OFF = "FORCE_TRX_OFF"
    # attribute access
    INVALID_PARAMETER = "INVALID_PARAMETER"
    READ_ONLY = "READ_ONLY"
    UNSUPPORTED_ATTRIBUTE = "UNSUPPORTED_ATTRIBUTE"
    # MAC
    CHANNEL_ACCESS_FAILURE = "CHANNEL_ACCESS_FAILURE"
    NO_ACK = "NO_ACK"
    NO_DATA = "NO_DATA"
    NO_BEACON = "NO_BEACON"
    NO_SHORT_ADDRESS = "NO_SHORT_ADDRESS"
    TRANSACTION_EXPIRED = "TRANSACTION_EXPIRED"
    TRANSACTION_OVERFLOW = "TRANSACTION_OVERFLOW"
    INVALID_GTS = "INVALID_GTS"
    FRAME_TOO_LONG = "FRAME_TOO_LONG"
    DENIED = "DENIED"
    BEACON_LOSS = "BEACON_LOSS"
    # association status codes
    PAN_AT_CAPACITY = "PAN_AT_CAPACITY"
    PAN_ACCESS_DENIED = "PAN_ACCESS_DENIED"

    def __str__(self) -> str:
        return self.value


# wire values for the association response status field
ASSOC_STATUS_CODES = {
    Status.SUCCESS: 0x00,
    Status.PAN_AT_CAPACITY: 0x01,
    Status.PAN_ACCESS_DENIED: 0x02,
}
ASSOC_STATUS_BY_CODE = {v: k for k, v in ASSOC_STATUS_CODES.items()}


class TrxState(Enum):
    TRX_OFF = "TRX_OFF"
    RX_ON = "RX_ON"
    TX_ON = "TX_ON"
    BUSY_RX = "BUSY_RX"
    BUSY_TX = "BUSY_TX"
    FORCE_TRX_OFF = "FORCE_TRX_OFF"

    def __str__(self) -> str:
        return self.value


class ScanType(Enum):
    ED = "ED"
    ACTIVE = "ACTIVE"
    PASSIVE = "PASSIVE"


class GtsDirection(IntEnum):
    TRANSMIT = 0  # device -> coordinator
    RECEIVE = 1  # coordinator -> device


class RxOutcome(Enum):
    DELIVERED = "Delivered"
    COLLIDED = "Collided"
    BELOW_SENSITIVITY = "BelowSensitivity"


BROADCAST_PAN = 0xFFFF
BROADCAST_ADDR = 0xFFFF
NO_SHORT_ADDR = 0xFFFE  # associated but no short address assigned
UNASSIGNED_ADDR = 0xFFFF

# PHY constants
A_MAX_PHY_PACKET_SIZE = 127
A_TURNAROUND_TIME = 12  # symbols
PHY_HEADER_BYTES = 6  # SHR (preamble + SFD) + PHR
CCA_SYMBOLS = 8
ED_SYMBOLS = 8

# MAC constants (symbols unless noted)
A_BASE_SLOT_DURATION = 60
A_NUM_SUPERFRAME_SLOTS = 16
A_BASE_SUPERFRAME_DURATION = A_BASE_SLOT_DURATION * A_NUM_SUPERFRAME_SLOTS  # 960
A_UNIT_BACKOFF_PERIOD = 20
A_MIN_CAP_LENGTH = 440
A_MAX_LOST_BEACONS = 4
A_GTS_DESC_PERSISTENCE_TIME = 4  # superframes
A_MAX_SIFS_FRAME_SIZE = 18  # octets
A_MIN_MPDU_OVERHEAD = 9
MAC_MIN_SIFS_PERIOD = 12
MAC_MIN_LIFS_PERIOD = 40
A_MAX_GTS_DESCRIPTORS = 7
A_MAX_PENDING_ADDRESSES = 7
A_RESPONSE_WAIT_FACTOR = 32  # macResponseWaitTime default, in base superframe durations
FCS_LEN = 2


@dataclass(frozen=True)
class PhyTiming:
    """Band parameters for one channel group."""

    band: str
    symbol_us: int
    bits_per_symbol: int
    shr_symbols: int
    turnaround: int = A_TURNAROUND_TIME
    cca_duration: int = CCA_SYMBOLS

    @property
    def symbols_per_octet(self) -> float:
        return 8 / self.bits_per_symbol

    def airtime_symbols(self, psdu_len: int) -> int:
        # SHR + PHR + PSDU, all whole octets
        return (PHY_HEADER_BYTES + psdu_len) * 8 // self.bits_per_symbol

    def airtime(self, psdu_len: int) -> int:
        return self.airtime_symbols(psdu_len) * self.symbol_us

    def symbols(self, n: int) -> int:
        return n * self.symbol_us

    @property
    def max_frame_duration(self) -> int:
        """phyMaxFrameDuration in symbols."""
        return self.shr_symbols + int(-(-(A_MAX_PHY_PACKET_SIZE + 1) * 8 // self.bits_per_symbol))


BAND_868 = PhyTiming("868MHz-BPSK", symbol_us=50, bits_per_symbol=1, shr_symbols=40)
BAND_915 = PhyTiming("915MHz-BPSK", symbol_us=25, bits_per_symbol=1, shr_symbols=40)
BAND_2450 = PhyTiming("2450MHz-OQPSK", symbol_us=16, bits_per_symbol=4, shr_symbols=10)

SUPPORTED_CHANNELS = 0x07FFFFFF  # page 0: channels 0..26


def timing_for_channel(channel: int) -> PhyTiming:
    if channel == 0:
        return BAND_868
    if 1 <= channel <= 10:
        return BAND_915
    if 11 <= channel <= 26:
        return BAND_2450
    raise ValueError(f"invalid channel {channel}")

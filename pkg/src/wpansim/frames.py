"""Bit-exact MAC frame codec (IEEE 802.15.4-2006 formats, no security header).

Multi-byte fields are little-endian.  Every encoded frame ends with a
two-byte FCS (CRC-16/ITU-T, init 0, LSB-first), so running the CRC over
a valid wire frame including its FCS yields 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .enums import (
    A_MAX_PHY_PACKET_SIZE,
    BROADCAST_ADDR,
    FCS_LEN,
    NO_SHORT_ADDR,
    AddrMode,
    CommandId,
    FrameType,
    FrameVersion,
    GtsDirection,
)
from .kernels import crc16


class FrameError(ValueError):
    pass


class FrameTooLong(FrameError):
    pass


class FcsMismatch(FrameError):
    pass


class Truncated(FrameError):
    pass


class ReservedAddrMode(FrameError):
    pass


class UnknownFrameType(FrameError):
    pass


class MalformedFrame(FrameError):
    pass


class SecurityNotSupported(FrameError):
    pass


def fcs(data: bytes) -> int:
    return crc16(data)


# -- addresses ----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class ShortAddress:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 0xFFFF:
            raise ValueError(f"short address out of range: {self.value:#x}")

    @property
    def is_broadcast(self) -> bool:
        return self.value == BROADCAST_ADDR

    @property
    def is_unallocated(self) -> bool:
        return self.value == NO_SHORT_ADDR

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(2, "little")

    def __str__(self) -> str:
        return f"0x{self.value:04x}"


@dataclass(frozen=True, order=True)
class ExtAddress:
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < 1 << 64:
            raise ValueError(f"EUI-64 out of range: {self.value:#x}")

    is_broadcast = False

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(8, "little")

    @classmethod
    def from_bytes(cls, raw: bytes) -> ExtAddress:
        return cls(int.from_bytes(raw, "little"))

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.value.to_bytes(8, "big"))


Address = ShortAddress | ExtAddress


def addr_mode_of(addr: Address | None) -> AddrMode:
    if addr is None:
        return AddrMode.NONE
    return AddrMode.SHORT if isinstance(addr, ShortAddress) else AddrMode.EXTENDED


# -- frame control ------------------------------------------------------------


@dataclass(frozen=True)
class FrameControl:
    frame_type: FrameType = FrameType.BEACON
    security_enabled: bool = False
    frame_pending: bool = False
    ack_request: bool = False
    pan_id_compression: bool = False
    dst_addr_mode: AddrMode = AddrMode.NONE
    frame_version: FrameVersion = FrameVersion.V2003
    src_addr_mode: AddrMode = AddrMode.NONE


def encode_frame_control(fc: FrameControl) -> int:
    return (
        int(fc.frame_type)
        | fc.security_enabled << 3
        | fc.frame_pending << 4
        | fc.ack_request << 5
        | fc.pan_id_compression << 6
        | int(fc.dst_addr_mode) << 10
        | int(fc.frame_version) << 12
        | int(fc.src_addr_mode) << 14
    )


def decode_frame_control(word: int) -> FrameControl:
    ftype = word & 0x7
    if ftype > FrameType.COMMAND:
        raise UnknownFrameType(f"frame type {ftype}")
    dst_mode = (word >> 10) & 0x3
    src_mode = (word >> 14) & 0x3
    if dst_mode == 1 or src_mode == 1:
        raise ReservedAddrMode("addressing mode 1 is reserved")
    version = (word >> 12) & 0x3
    if version > FrameVersion.V2006:
        raise MalformedFrame(f"frame version {version}")
    return FrameControl(
        frame_type=FrameType(ftype),
        security_enabled=bool(word >> 3 & 1),
        frame_pending=bool(word >> 4 & 1),
        ack_request=bool(word >> 5 & 1),
        pan_id_compression=bool(word >> 6 & 1),
        dst_addr_mode=AddrMode(dst_mode),
        frame_version=FrameVersion(version),
        src_addr_mode=AddrMode(src_mode),
    )


# -- superframe specification ---------------------------------------------------


@dataclass(frozen=True)
class SuperframeSpec:
    beacon_order: int = 0
    superframe_order: int = 0
    final_cap_slot: int = 0
    battery_life_extension: bool = False
    pan_coordinator: bool = False
    association_permit: bool = False

    def __post_init__(self) -> None:
        for name in ("beacon_order", "superframe_order", "final_cap_slot"):
            if not 0 <= getattr(self, name) <= 15:
                raise ValueError(f"{name} out of range 0..15")
        bo, so = self.beacon_order, self.superframe_order
        if so > bo and bo != 15 and so != 15:
            raise ValueError(f"superframe order {so} exceeds beacon order {bo}")


def encode_superframe_spec(s: SuperframeSpec) -> int:
    return (
        s.beacon_order
        | s.superframe_order << 4
        | s.final_cap_slot << 8
        | s.battery_life_extension << 12
        | s.pan_coordinator << 14
        | s.association_permit << 15
    )


def decode_superframe_spec(word: int) -> SuperframeSpec:
    return SuperframeSpec(
        beacon_order=word & 0xF,
        superframe_order=word >> 4 & 0xF,
        final_cap_slot=word >> 8 & 0xF,
        battery_life_extension=bool(word >> 12 & 1),
        pan_coordinator=bool(word >> 14 & 1),
        association_permit=bool(word >> 15 & 1),
    )


# -- frames -----------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    control: FrameControl
    sequence_number: int
    dst_pan: int | None = None
    dst_addr: Address | None = None
    src_pan: int | None = None
    src_addr: Address | None = None
    payload: bytes = b""
    command_id: CommandId | None = None

    @property
    def frame_type(self) -> FrameType:
        return self.control.frame_type

    def describe(self) -> str:
        parts = [f"type={self.frame_type.name}", f"seq={self.sequence_number}"]
        if self.command_id is not None:
            parts.append(f"cmd={self.command_id.name}")
        if self.dst_addr is not None:
            parts.append(f"dst={self.dst_pan:04x}/{self.dst_addr}")
        if self.src_addr is not None:
            parts.append(f"src={self.src_pan:04x}/{self.src_addr}")
        if self.control.ack_request:
            parts.append("ackreq=1")
        if self.control.frame_pending:
            parts.append("pending=1")
        parts.append(f"len={len(self.payload)}")
        return " ".join(parts)


def header_length(fc: FrameControl, with_command: bool = False) -> int:
    """MHR octets (plus the command identifier octet when requested)."""
    n = 3
    if fc.dst_addr_mode != AddrMode.NONE:
        n += 2 + (2 if fc.dst_addr_mode == AddrMode.SHORT else 8)
    if fc.src_addr_mode != AddrMode.NONE:
        if not fc.pan_id_compression:
            n += 2
        n += 2 if fc.src_addr_mode == AddrMode.SHORT else 8
    return n + (1 if with_command else 0)


def encoded_length(f: Frame) -> int:
    return header_length(f.control, f.command_id is not None) + len(f.payload) + FCS_LEN


def _check_frame(f: Frame) -> None:
    fc = f.control
    if fc.security_enabled:
        raise SecurityNotSupported("security processing is not modeled")
    if fc.dst_addr_mode != addr_mode_of(f.dst_addr) or fc.src_addr_mode != addr_mode_of(f.src_addr):
        raise MalformedFrame("address modes disagree with address fields")
    if (f.dst_addr is None) != (f.dst_pan is None):
        raise MalformedFrame("destination PAN present iff destination address present")
    if f.src_addr is None and f.src_pan is not None:
        raise MalformedFrame("source PAN without source address")
    if fc.pan_id_compression:
        if f.dst_addr is None or f.src_addr is None:
            raise MalformedFrame("PAN ID compression needs both addresses")
        if f.src_pan != f.dst_pan:
            raise MalformedFrame("PAN ID compression requires src PAN == dst PAN")
    elif f.src_addr is not None and f.src_pan is None:
        raise MalformedFrame("source PAN missing")
    if (fc.frame_type == FrameType.COMMAND) != (f.command_id is not None):
        raise MalformedFrame("command id present iff frame type is COMMAND")
    if not 0 <= f.sequence_number <= 0xFF:
        raise MalformedFrame("sequence number out of range")
    for pan in (f.dst_pan, f.src_pan):
        if pan is not None and not 0 <= pan <= 0xFFFF:
            raise MalformedFrame("PAN id out of range")


def encode_frame(f: Frame) -> bytes:
    _check_frame(f)
    length = encoded_length(f)
    if length > A_MAX_PHY_PACKET_SIZE:
        raise FrameTooLong(f"{length} octets exceeds aMaxPHYPacketSize")
    fc = f.control
    out = bytearray(struct.pack("<HB", encode_frame_control(fc), f.sequence_number))
    if f.dst_addr is not None:
        out += struct.pack("<H", f.dst_pan)
        out += f.dst_addr.to_bytes()
    if f.src_addr is not None:
        if not fc.pan_id_compression:
            out += struct.pack("<H", f.src_pan)
        out += f.src_addr.to_bytes()
    if f.command_id is not None:
        out.append(int(f.command_id))
    out += f.payload
    out += struct.pack("<H", fcs(bytes(out)))
    return bytes(out)


def _read_addr(data: bytes, pos: int, mode: AddrMode) -> tuple[Address, int]:
    if mode == AddrMode.SHORT:
        return ShortAddress(int.from_bytes(data[pos:pos + 2], "little")), pos + 2
    return ExtAddress.from_bytes(data[pos:pos + 8]), pos + 8


def decode_frame(data: bytes) -> Frame:
    data = bytes(data)
    if len(data) < 5:
        raise Truncated(f"{len(data)} octets is shorter than the minimal frame")
    if len(data) > A_MAX_PHY_PACKET_SIZE:
        raise FrameTooLong(f"{len(data)} octets")
    if fcs(data) != 0:
        raise FcsMismatch("FCS does not verify")
    body = data[:-FCS_LEN]
    fc = decode_frame_control(body[0] | body[1] << 8)
    has_cmd = fc.frame_type == FrameType.COMMAND
    if header_length(fc, has_cmd) > len(body):
        raise Truncated("header runs past end of frame")
    if fc.pan_id_compression and (fc.dst_addr_mode == AddrMode.NONE or fc.src_addr_mode == AddrMode.NONE):
        raise MalformedFrame("PAN ID compression needs both addresses")
    pos = 3
    dst_pan = dst = src_pan = src = None
    if fc.dst_addr_mode != AddrMode.NONE:
        dst_pan = int.from_bytes(body[pos:pos + 2], "little")
        dst, pos = _read_addr(body, pos + 2, fc.dst_addr_mode)
    if fc.src_addr_mode != AddrMode.NONE:
        if fc.pan_id_compression:
            src_pan = dst_pan
        else:
            src_pan = int.from_bytes(body[pos:pos + 2], "little")
            pos += 2
        src, pos = _read_addr(body, pos, fc.src_addr_mode)
    command_id = None
    if has_cmd:
        try:
            command_id = CommandId(body[pos])
        except ValueError:
            raise MalformedFrame(f"unknown command id {body[pos]:#x}") from None
        pos += 1
    return Frame(fc, body[2], dst_pan, dst, src_pan, src, body[pos:], command_id)


def make_frame(frame_type: FrameType, seq: int, *, dst_pan: int | None = None, dst: Address | None = None,
               src_pan: int | None = None, src: Address | None = None, payload: bytes = b"",
               command_id: CommandId | None = None, ack_request: bool = False,
               frame_pending: bool = False) -> Frame:
    """Build a frame, compressing the source PAN whenever it equals the destination PAN."""
    compress = dst is not None and src is not None and src_pan == dst_pan
    fc = FrameControl(
        frame_type=frame_type,
        frame_pending=frame_pending,
        ack_request=ack_request,
        pan_id_compression=compress,
        dst_addr_mode=addr_mode_of(dst),
        src_addr_mode=addr_mode_of(src),
    )
    return Frame(fc, seq & 0xFF, dst_pan if dst is not None else None, dst,
                 src_pan if src is not None else None, src, bytes(payload), command_id)


def ack_frame(seq: int, frame_pending: bool = False) -> Frame:
    return Frame(FrameControl(frame_type=FrameType.ACK, frame_pending=frame_pending), seq & 0xFF)


# -- beacon payload -------------------------------------------------------------


@dataclass(frozen=True)
class GtsDescriptor:
    short_address: int
    starting_slot: int
    length: int
    direction: GtsDirection = GtsDirection.TRANSMIT

    @property
    def end_slot(self) -> int:
        return self.starting_slot + self.length


@dataclass(frozen=True)
class BeaconPayload:
    superframe: SuperframeSpec
    gts_permit: bool = False
    gts: tuple[GtsDescriptor, ...] = ()
    pending_short: tuple[int, ...] = ()
    pending_ext: tuple[int, ...] = ()
    payload: bytes = b""


def encode_beacon_payload(b: BeaconPayload) -> bytes:
    if len(b.gts) > 7 or len(b.pending_short) + len(b.pending_ext) > 7:
        raise MalformedFrame("too many GTS descriptors or pending addresses")
    out = bytearray(struct.pack("<H", encode_superframe_spec(b.superframe)))
    out.append(len(b.gts) | b.gts_permit << 7)
    if b.gts:
        mask = 0
        for i, d in enumerate(b.gts):
            mask |= int(d.direction) << i
        out.append(mask)
        for d in b.gts:
            out += struct.pack("<HB", d.short_address, d.starting_slot | d.length << 4)
    out.append(len(b.pending_short) | len(b.pending_ext) << 4)
    for a in b.pending_short:
        out += struct.pack("<H", a)
    for a in b.pending_ext:
        out += a.to_bytes(8, "little")
    out += b.payload
    return bytes(out)


def decode_beacon_payload(data: bytes) -> BeaconPayload:
    try:
        pos = 0
        spec = decode_superframe_spec(data[0] | data[1] << 8)
        gts_spec = data[2]
        pos = 3
        count = gts_spec & 0x7
        gts = []
        if count:
            mask = data[pos]
            pos += 1
            for i in range(count):
                addr, slots = struct.unpack_from("<HB", data, pos)
                pos += 3
                gts.append(GtsDescriptor(addr, slots & 0xF, slots >> 4, GtsDirection(mask >> i & 1)))
        pend = data[pos]
        pos += 1
        n_short, n_ext = pend & 0x7, pend >> 4 & 0x7
        shorts = tuple(struct.unpack_from("<H", data, pos + 2 * i)[0] for i in range(n_short))
        pos += 2 * n_short
        exts = tuple(int.from_bytes(data[pos + 8 * i:pos + 8 * i + 8], "little") for i in range(n_ext))
        pos += 8 * n_ext
        if pos > len(data):
            raise IndexError
    except (IndexError, struct.error):
        raise Truncated("beacon payload truncated") from None
    except ValueError as exc:
        raise MalformedFrame(str(exc)) from None
    return BeaconPayload(spec, bool(gts_spec >> 7), tuple(gts), shorts, exts, bytes(data[pos:]))


# -- command payloads -------------------------------------------------------------


@dataclass(frozen=True)
class CapabilityInfo:
    alternate_pan_coordinator: bool = False
    full_function_device: bool = True
    mains_powered: bool = True
    rx_on_when_idle: bool = True
    security_capable: bool = False
    allocate_address: bool = True

    def to_byte(self) -> int:
        return (
            self.alternate_pan_coordinator
            | self.full_function_device << 1
            | self.mains_powered << 2
            | self.rx_on_when_idle << 3
            | self.security_capable << 6
            | self.allocate_address << 7
        )

    @classmethod
    def from_byte(cls, b: int) -> CapabilityInfo:
        return cls(bool(b & 1), bool(b >> 1 & 1), bool(b >> 2 & 1), bool(b >> 3 & 1),
                   bool(b >> 6 & 1), bool(b >> 7 & 1))


@dataclass(frozen=True)
class GtsCharacteristics:
    length: int
    direction: GtsDirection
    allocate: bool = True

    def to_byte(self) -> int:
        return self.length & 0xF | int(self.direction) << 4 | self.allocate << 5

    @classmethod
    def from_byte(cls, b: int) -> GtsCharacteristics:
        return cls(b & 0xF, GtsDirection(b >> 4 & 1), bool(b >> 5 & 1))


def association_response_payload(short_address: int, status_code: int) -> bytes:
    return struct.pack("<HB", short_address, status_code)


def parse_association_response(payload: bytes) -> tuple[int, int]:
    if len(payload) < 3:
        raise Truncated("association response payload")
    addr, status = struct.unpack_from("<HB", payload)
    return addr, status


# -- PAN descriptor -------------------------------------------------------------


@dataclass(frozen=True)
class PanDescriptor:
    coord_addr_mode: AddrMode
    coord_address: Address
    coord_pan_id: int
    logical_channel: int
    superframe_spec: SuperframeSpec
    gts_permit: bool
    link_quality: int
    timestamp: int = field(compare=False, default=0)

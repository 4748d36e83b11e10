"""Trace, pcap and statistics writers."""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable

from ..trace import Trace
from .stats import RunStats

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_IEEE802_15_4_WITHFCS = 195
_SNAPLEN = 65535


class OutputError(OSError):
    pass


def _write(path: str | Path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def trace_text(trace: Trace) -> str:
    return "".join(line + "\n" for line in trace.lines())


def write_trace(trace: Trace, path: str | Path) -> None:
    _write(path, trace_text(trace).encode())


def pcap_bytes(frames: Iterable) -> bytes:
    """Classic little-endian pcap, microsecond timestamps, PSDUs including FCS."""
    out = bytearray(struct.pack("<IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, _SNAPLEN, LINKTYPE_IEEE802_15_4_WITHFCS))
    for f in frames:
        sec, usec = divmod(f.time, 1_000_000)
        out += struct.pack("<IIII", sec, usec, len(f.psdu), len(f.psdu))
        out += f.psdu
    return bytes(out)


def write_pcap(frames: Iterable, path: str | Path) -> None:
    _write(path, pcap_bytes(frames))


def read_pcap(path: str | Path) -> tuple[int, list[tuple[int, bytes]]]:
    """Return (link type, [(timestamp µs, frame bytes)])."""
    data = Path(path).read_bytes()
    magic, _major, _minor, _zone, _sig, _snap, linktype = struct.unpack_from("<IHHiIII", data)
    if magic != PCAP_MAGIC:
        raise ValueError(f"{path}: not a little-endian microsecond pcap")
    pos = 24
    records = []
    while pos < len(data):
        sec, usec, incl, _orig = struct.unpack_from("<IIII", data, pos)
        pos += 16
        records.append((sec * 1_000_000 + usec, data[pos:pos + incl]))
        pos += incl
    return linktype, records


def stats_text(stats: RunStats) -> str:
    lines = []
    for key, value in stats.flat():
        if isinstance(value, float):
            value = f"{value:.6g}"
        lines.append(f"{key}={value}\n")
    return "".join(lines)


def write_stats(stats: RunStats, path: str | Path) -> None:
    if str(path).endswith(".json"):
        _write(path, (json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n").encode())
    else:
        _write(path, stats_text(stats).encode())

"""Pure-Python hot kernels; :mod:`wpansim._speedups` provides compiled twins."""

from __future__ import annotations

# CRC-16/ITU-T, x^16 + x^12 + x^5 + 1, processed LSB first (reflected 0x8408), init 0
_POLY_REFLECTED = 0x8408


def _make_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _POLY_REFLECTED if crc & 1 else crc >> 1
        table.append(crc)
    return table


CRC_TABLE = _make_table()


def crc16(data: bytes, crc: int = 0) -> int:
    table = CRC_TABLE
    for b in data:
        crc = (crc >> 8) ^ table[(crc ^ b) & 0xFF]
    return crc

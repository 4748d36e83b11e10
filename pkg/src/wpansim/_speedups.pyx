# cython: language_level=3
"""Compiled twins of :mod:`wpansim._kernels`."""

from libc.stdint cimport uint16_t, uint8_t


cdef uint16_t _TABLE[256]


cdef void _init_table():
    cdef int byte, i
    cdef uint16_t crc
    for byte in range(256):
        crc = byte
        for i in range(8):
            if crc & 1:
                crc = (crc >> 1) ^ 0x8408
            else:
                crc = crc >> 1
        _TABLE[byte] = crc


_init_table()


def crc16(const uint8_t[:] data, unsigned int crc=0):
    cdef Py_ssize_t i, n = data.shape[0]
    cdef uint16_t c = <uint16_t>crc
    with nogil:
        for i in range(n):
            c = (c >> 8) ^ _TABLE[(c ^ data[i]) & 0xFF]
    return c

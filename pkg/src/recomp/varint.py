"""LEB128-style unsigned varints and a small byte reader used by the container."""

from __future__ import annotations

import struct

import numpy as np

from .errors import CorruptionError


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError(f"cannot encode negative value {value}")
    out = bytearray()
    while value > 0x7F:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)
    return bytes(out)


def encode_varints(values) -> bytes:
    """Concatenated varints of a non-negative integer array."""
    v = np.asarray(values, dtype=np.int64).reshape(-1)
    if v.size == 0:
        return b""
    if v.min() < 0:
        raise ValueError("cannot encode negative values")
    v = v.astype(np.uint64)
    nbytes = np.ones(v.size, dtype=np.int64)
    rest = v >> np.uint64(7)
    while rest.any():
        nbytes += rest > 0
        rest >>= np.uint64(7)
    width = int(nbytes.max())
    shifts = np.arange(width, dtype=np.uint64) * np.uint64(7)
    digits = ((v[:, None] >> shifts[None, :]) & np.uint64(0x7F)).astype(np.uint8)
    cols = np.arange(width)[None, :]
    digits[cols < nbytes[:, None] - 1] |= 0x80
    return digits[cols < nbytes[:, None]].tobytes()


class ByteReader:
    """Sequential reader that raises CorruptionError (with offset) on short reads."""

    def __init__(self, data: bytes, offset: int = 0):
        self.data = bytes(data)
        self.pos = offset
        self.cluster: int | None = None

    def fail(self, message: str) -> CorruptionError:
        return CorruptionError(message, offset=self.pos, cluster=self.cluster)

    def read(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise self.fail(f"truncated data: wanted {n} bytes")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.read(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.read(2))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.read(8))[0]

    def varint(self) -> int:
        result = 0
        shift = 0
        pos = self.pos
        data = self.data
        while True:
            if pos >= len(data):
                raise self.fail("truncated varint")
            byte = data[pos]
            pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                self.pos = pos
                return result
            shift += 7
            if shift > 63:
                raise self.fail("varint too long")

    def varints(self, count: int) -> np.ndarray:
        """``count`` consecutive varints as an int64 array."""
        if count == 0:
            return np.zeros(0, dtype=np.int64)
        avail = len(self.data) - self.pos
        window = np.frombuffer(self.data, dtype=np.uint8, count=min(avail, 10 * count),
                               offset=self.pos) if avail > 0 else np.zeros(0, np.uint8)
        ends = np.flatnonzero(window < 0x80)
        if ends.size < count:
            raise self.fail(f"truncated data: expected {count} varints")
        stop = int(ends[count - 1]) + 1
        starts = np.concatenate(([0], ends[: count - 1] + 1))
        lengths = ends[:count] + 1 - starts
        if lengths.max() > 9:
            raise self.fail("varint too long")
        position = (np.arange(stop) - np.repeat(starts, lengths)).astype(np.uint64)
        parts = (window[:stop].astype(np.uint64) & np.uint64(0x7F)) << (position * np.uint64(7))
        values = np.bitwise_or.reduceat(parts, starts)
        self.pos += stop
        return values.astype(np.int64)

    def at_end(self) -> bool:
        return self.pos == len(self.data)

"""Static-model arithmetic coding.

The production path is an integer arithmetic coder with a 38-bit state
(low/high registers, pending-bit underflow handling). ``ac_interval_exact``
narrows the interval with exact rationals and serves as a reference for
small worked examples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from numba import njit

from .errors import ConfigError, CorruptionError, DataError
from .varint import ByteReader, encode_varint, encode_varints

STATE_BITS = 38
MAX_TOTAL = 1 << 24


@dataclass(frozen=True, eq=False)
class FrequencyTable:
    """Symbol counts in ascending symbol order.

    ``cumulative[i]`` is the total count of symbols before ``symbols[i]``;
    it has one extra trailing entry equal to ``total``.
    """

    symbols: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if symbols.shape != counts.shape or symbols.ndim != 1 or symbols.size == 0:
            raise DataError("frequency table needs matching non-empty symbol and count arrays")
        if (counts < 1).any():
            raise DataError("frequency counts must be at least 1")
        if symbols.size > 1 and (np.diff(symbols) <= 0).any():
            raise DataError("frequency table symbols must be strictly ascending")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def cumulative(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.counts)))

    def __len__(self):
        return int(self.symbols.size)

    def __eq__(self, other):
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        return np.array_equal(self.symbols, other.symbols) and np.array_equal(self.counts, other.counts)

    def rescaled(self, max_total: int = MAX_TOTAL) -> "FrequencyTable":
        """Halve counts (floor, minimum 1) until the total fits ``max_total``."""
        if len(self) > max_total:
            raise DataError(f"{len(self)} symbols cannot fit a total of {max_total}")
        counts = self.counts
        while counts.sum() > max_total:
            counts = np.maximum(counts // 2, 1)
        return self if counts is self.counts else FrequencyTable(self.symbols, counts)

    def to_bytes(self) -> bytes:
        pairs = np.column_stack((self.symbols, self.counts)).reshape(-1)
        return encode_varint(len(self)) + encode_varints(pairs)

    @classmethod
    def read(cls, reader: ByteReader) -> "FrequencyTable":
        n = reader.varint()
        if n == 0:
            raise reader.fail("empty frequency table")
        values = reader.varints(2 * n)
        try:
            return cls(values[0::2], values[1::2])
        except DataError as exc:
            raise reader.fail(f"invalid frequency table: {exc}") from None


@dataclass(frozen=True)
class Bitstream:
    data: bytes
    bit_len: int

    def __post_init__(self):
        if self.bit_len < 0:
            raise DataError("bit_len must be non-negative")
        if not self.bit_len <= 8 * len(self.data) < self.bit_len + 8:
            raise CorruptionError(
                f"bitstream of {len(self.data)} bytes cannot hold exactly {self.bit_len} bits")


class Interval(NamedTuple):
    low: Fraction
    high: Fraction

    @property
    def midpoint(self) -> Fraction:
        return (self.low + self.high) / 2


def build_freq_model(seq) -> FrequencyTable:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        raise DataError("cannot build a frequency model from an empty sequence")
    symbols, counts = np.unique(seq, return_counts=True)
    return FrequencyTable(symbols, counts)


def ac_interval_exact(message: Iterable, model: Mapping) -> Interval:
    """Exact interval after narrowing [0, 1) by each symbol of ``message``.

    ``model`` maps symbols to probabilities (anything ``Fraction`` accepts;
    decimal strings keep values exact). Cumulative ranges follow the
    mapping's iteration order.
    """
    probs = [(sym, Fraction(p)) for sym, p in model.items()]
    if sum(p for _, p in probs) != 1:
        raise ConfigError("model probabilities must sum to exactly 1")
    ranges = {}
    acc = Fraction(0)
    for sym, p in probs:
        ranges[sym] = (acc, acc + p)
        acc += p
    low, high = Fraction(0), Fraction(1)
    for sym in message:
        if sym not in ranges:
            raise DataError(f"symbol {sym!r} is not in the model")
        lo, hi = ranges[sym]
        width = high - low
        low, high = low + width * lo, low + width * hi
    return Interval(low, high)


def information_content(seq, model: FrequencyTable) -> float:
    """Bits needed for ``seq`` under the table the coder actually uses."""
    table = model.rescaled()
    idx = _dense_indices(seq, table)
    return float(-np.log2(table.counts[idx] / table.total).sum())


def _dense_indices(seq, model: FrequencyTable) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.int64)
    idx = np.searchsorted(model.symbols, seq)
    idx = np.minimum(idx, len(model) - 1)
    if seq.size and not np.array_equal(model.symbols[idx], seq):
        raise DataError("sequence contains symbols missing from the model")
    return idx.astype(np.int64)


def ac_encode(seq, model: FrequencyTable) -> Bitstream:
    table = model.rescaled()
    idx = _dense_indices(seq, table)
    cum = table.cumulative.astype(np.int64)
    total = cum[-1]
    freq = table.counts[idx]
    capacity = int(np.ceil(np.log2(total / freq)).sum()) + 2 * idx.size + 64
    while True:
        bits, n = _encode_kernel(idx, cum, capacity)
        if n >= 0:
            break
        capacity *= 2
    return Bitstream(np.packbits(bits[:n]).tobytes(), int(n))


def ac_decode(bits: Bitstream, model: FrequencyTable, out_len: int) -> np.ndarray:
    if 8 * len(bits.data) < bits.bit_len:
        raise CorruptionError("truncated arithmetic-coded payload")
    table = model.rescaled()
    cum = table.cumulative.astype(np.int64)
    unpacked = np.unpackbits(np.frombuffer(bits.data, dtype=np.uint8)).astype(np.int64)
    idx, bad = _decode_kernel(unpacked, bits.bit_len, cum, out_len)
    if bad >= 0:
        raise CorruptionError(f"arithmetic decoder left its interval at symbol {bad}")
    return table.symbols[idx]


def code_length_bound(seq, model: FrequencyTable, overhead: int = 32) -> float:
    return information_content(seq, model) + overhead


@njit(cache=True)
def _encode_kernel(idx, cum, capacity):
    full = np.int64(1) << STATE_BITS
    half = full >> 1
    quarter = half >> 1
    mask = full - 1
    total = cum[cum.size - 1]
    low = np.int64(0)
    high = mask
    pending = 0
    bits = np.zeros(capacity, np.uint8)
    n = 0
    for t in range(idx.size):
        s = idx[t]
        width = high - low + 1
        high = low + cum[s + 1] * width // total - 1
        low = low + cum[s] * width // total
        while ((low ^ high) & half) == 0:
            if n + pending + 2 > capacity:
                return bits, -1
            bit = np.uint8(low >> (STATE_BITS - 1))
            bits[n] = bit
            n += 1
            for _ in range(pending):
                bits[n] = bit ^ 1
                n += 1
            pending = 0
            low = (low << 1) & mask
            high = ((high << 1) & mask) | 1
        while (low & ~high & quarter) != 0:
            pending += 1
            low = (low << 1) & (mask >> 1)
            high = ((high << 1) & (mask >> 1)) | half | 1
    if n + 1 > capacity:
        return bits, -1
    # a single 1 followed by implicit zeros lands inside the final interval
    bits[n] = 1
    n += 1
    return bits, n


@njit(cache=True)
def _decode_kernel(bits, bit_len, cum, out_len):
    full = np.int64(1) << STATE_BITS
    half = full >> 1
    quarter = half >> 1
    mask = full - 1
    total = cum[cum.size - 1]
    nsym = cum.size - 1
    out = np.zeros(out_len, np.int64)
    pos = 0
    code = np.int64(0)
    for _ in range(STATE_BITS):
        b = bits[pos] if pos < bit_len else 0
        pos += 1
        code = (code << 1) | b
    low = np.int64(0)
    high = mask
    for t in range(out_len):
        if code < low or code > high:
            return out, t
        width = high - low + 1
        value = ((code - low + 1) * total - 1) // width
        if value >= total:
            return out, t
        lo = 0
        hi = nsym
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cum[mid] > value:
                hi = mid
            else:
                lo = mid
        s = lo
        out[t] = s
        high = low + cum[s + 1] * width // total - 1
        low = low + cum[s] * width // total
        while ((low ^ high) & half) == 0:
            b = bits[pos] if pos < bit_len else 0
            pos += 1
            code = ((code << 1) & mask) | b
            low = (low << 1) & mask
            high = ((high << 1) & mask) | 1
        while (low & ~high & quarter) != 0:
            b = bits[pos] if pos < bit_len else 0
            pos += 1
            code = (code & half) | ((code << 1) & (mask >> 1)) | b
            low = (low << 1) & (mask >> 1)
            high = ((high << 1) & (mask >> 1)) | half | 1
    return out, -1

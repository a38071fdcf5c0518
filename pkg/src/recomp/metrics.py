"""Empirical entropy and compression-ratio accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

BITS_PER_SYMBOL = 16


@dataclass(frozen=True)
class EntropyReport:
    bits_per_symbol: float
    alphabet_size: int
    h_max: float
    sample_count: int


def shannon_entropy(seq) -> EntropyReport:
    """Zero-order entropy from observed frequencies (no smoothing, log base 2).

    ``h_max`` is ``log2`` of the number of distinct observed symbols.
    """
    seq = np.asarray(seq)
    if seq.size == 0:
        raise DataError("entropy of an empty sequence is undefined")
    _, counts = np.unique(seq, return_counts=True)
    return entropy_from_counts(counts)


def entropy_from_counts(counts) -> EntropyReport:
    counts = np.asarray(counts, dtype=np.int64)
    counts = counts[counts > 0]
    if counts.size == 0:
        raise DataError("entropy of an empty sequence is undefined")
    n = int(counts.sum())
    p = counts / n
    h = float(-(p * np.log2(p)).sum())
    h_max = float(np.log2(counts.size))
    # float summation can overshoot the bound by an ulp or so
    h = min(max(0.0, h), h_max)
    return EntropyReport(h, int(counts.size), h_max, n)


def compression_ratio(original_bits: int, compressed_bits: int) -> float:
    if compressed_bits <= 0:
        raise DataError("compressed size must be positive")
    if original_bits <= 0:
        raise DataError("original size must be positive")
    return original_bits / compressed_bits


def original_bits(streams) -> int:
    """16 bits per input symbol."""
    return BITS_PER_SYMBOL * sum(s.origin_len for s in streams)


def weighted_mean_entropy(reports) -> float:
    """Sample-count weighted average of bits per symbol."""
    reports = list(reports)
    total = sum(r.sample_count for r in reports)
    return sum(r.bits_per_symbol * r.sample_count for r in reports) / total

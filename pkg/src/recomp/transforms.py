"""Reversible per-cluster transform chain.

interleave -> first derivative (zigzag) -> BWT -> MTF -> run length, and the
exact inverse of each stage. Symbols travel as int64 arrays; the BWT
sentinel is -1, which sorts below every data symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ConfigError, CorruptionError, DataError

SENTINEL = -1
DEFAULT_RUN_THRESHOLD = 3
MAX_SYMBOL = 0xFFFF


@dataclass(frozen=True, eq=False)
class InterleavedSeq:
    symbols: np.ndarray
    rows: int
    cols: int


@dataclass(frozen=True, eq=False)
class DeltaSeq:
    anchor: int
    deltas: np.ndarray  # zigzag-mapped


@dataclass(frozen=True, eq=False)
class BwtBlock:
    last_column: np.ndarray
    primary_index: int


@dataclass(frozen=True, eq=False)
class MtfSeq:
    indices: np.ndarray
    alphabet: np.ndarray


@dataclass(frozen=True, eq=False)
class RleBlock:
    mode_flag: int
    payload: np.ndarray
    marker: int
    run_threshold: int


@dataclass(frozen=True, eq=False)
class StageTrace:
    """Every intermediate of one forward pass over a cluster grid."""

    interleaved: InterleavedSeq
    delta: DeltaSeq
    bwt: BwtBlock | None
    mtf: MtfSeq | None
    rle: RleBlock | None


def _int64(seq) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(seq, dtype=np.int64))


# ------------------------------------------------------------------ interleave


def interleave(matrix) -> InterleavedSeq:
    """Column-major flattening: all rows' first symbols, then all second, ..."""
    grid = np.asarray(matrix.data if hasattr(matrix, "data") else matrix)
    if grid.ndim != 2 or grid.size == 0:
        raise DataError("interleave needs a non-empty 2-D grid")
    m, n = grid.shape
    return InterleavedSeq(_int64(grid.T.reshape(-1)), m, n)


def deinterleave(seq: InterleavedSeq) -> np.ndarray:
    symbols = np.asarray(seq.symbols)
    if symbols.size != seq.rows * seq.cols:
        raise CorruptionError(
            f"interleaved length {symbols.size} does not match {seq.rows}x{seq.cols}")
    return symbols.reshape(seq.cols, seq.rows).T.copy()


# ------------------------------------------------------------------ derivative


def zigzag(values) -> np.ndarray:
    v = _int64(values)
    return (v << 1) ^ (v >> 63)


def unzigzag(values) -> np.ndarray:
    v = _int64(values)
    return (v >> 1) ^ -(v & 1)


def first_derivative(seq) -> DeltaSeq:
    seq = _int64(seq)
    if seq.size == 0:
        raise DataError("first_derivative needs at least one symbol")
    return DeltaSeq(int(seq[0]), zigzag(np.diff(seq)))


def inverse_derivative(d: DeltaSeq) -> np.ndarray:
    out = np.empty(d.deltas.size + 1, dtype=np.int64)
    out[0] = d.anchor
    np.cumsum(unzigzag(d.deltas), out=out[1:])
    out[1:] += d.anchor
    if out.min() < 0 or out.max() > MAX_SYMBOL:
        raise CorruptionError("reconstructed symbol outside [0, 65535]")
    return out


# ------------------------------------------------------------------ BWT


def suffix_array(text) -> np.ndarray:
    """Suffix array by prefix doubling.

    ``text`` must end with a unique smallest symbol, so suffix order equals
    rotation order.
    """
    text = _int64(text)
    n = text.size
    _, rank = np.unique(text, return_inverse=True)
    rank = rank.astype(np.int64).reshape(-1)
    order = np.argsort(rank, kind="stable")
    h = 1
    while rank[order[-1]] != n - 1:
        second = np.zeros(n, dtype=np.int64)
        second[: n - h] = rank[h:] + 1
        key = rank * (n + 1) + second
        order = np.argsort(key)
        sorted_key = key[order]
        fresh = np.empty(n, dtype=np.int64)
        fresh[order[0]] = 0
        fresh[order[1:]] = np.cumsum(sorted_key[1:] != sorted_key[:-1])
        rank = fresh
        h *= 2
    return order


def bwt_forward(seq) -> BwtBlock:
    seq = _int64(seq)
    if seq.size == 0:
        raise DataError("bwt_forward needs a non-empty sequence")
    if (seq == SENTINEL).any():
        raise DataError("input contains the reserved sentinel value")
    text = np.append(seq, SENTINEL)
    sa = suffix_array(text)
    last = text[sa - 1]  # sa - 1 == -1 wraps to the sentinel
    primary = int(np.flatnonzero(sa == 0)[0])
    return BwtBlock(last, primary)


def bwt_inverse(block: BwtBlock) -> np.ndarray:
    last = _int64(block.last_column)
    n = last.size
    hits = np.flatnonzero(last == SENTINEL)
    if hits.size != 1:
        raise CorruptionError(f"BWT block holds {hits.size} sentinels, expected 1")
    if not 0 <= block.primary_index < n or last[block.primary_index] != SENTINEL:
        raise CorruptionError(f"BWT primary index {block.primary_index} is inconsistent")
    order = np.argsort(last, kind="stable")
    lf = np.empty(n, dtype=np.int64)
    lf[order] = np.arange(n)
    rows = _kernels.lf_walk(lf, block.primary_index)
    text = last[rows]
    return text[:-1].copy()


# ------------------------------------------------------------------ MTF


def mtf_forward(seq) -> MtfSeq:
    seq = _int64(seq)
    alphabet, codes = np.unique(seq, return_inverse=True)
    codes = _int64(codes.reshape(-1))
    return MtfSeq(_kernels.mtf_encode(codes, alphabet.size), alphabet)


def mtf_inverse(m: MtfSeq) -> np.ndarray:
    alphabet = _int64(m.alphabet)
    if alphabet.size > 1 and (np.diff(alphabet) <= 0).any():
        raise CorruptionError("MTF alphabet is not strictly ascending")
    codes, bad = _kernels.mtf_decode(_int64(m.indices), alphabet.size)
    if bad >= 0:
        raise CorruptionError(f"MTF index at position {bad} exceeds alphabet size {alphabet.size}")
    return alphabet[codes]


# ------------------------------------------------------------------ run length


def token_count(tokens) -> int:
    """Default size measure for the dynamic gate: serialized token count."""
    return int(np.asarray(tokens).size)


def rle_encode_dynamic(seq, run_threshold: int = DEFAULT_RUN_THRESHOLD,
                       alphabet_size: int | None = None,
                       cost: Callable[[np.ndarray], int] | None = None) -> RleBlock:
    """Run-encode long runs, but only keep the result if it is strictly smaller.

    Runs of at least ``run_threshold`` equal symbols become
    ``marker, symbol, count...`` with the count as base-128 digits and
    ``marker = alphabet_size``. ``cost`` measures a token sequence; by
    default the token count.
    """
    if run_threshold < 2:
        raise ConfigError("dynamic run_threshold must be at least 2")
    seq = _int64(seq)
    marker = _marker(seq, alphabet_size)
    cost = cost or token_count
    encoded = _kernels.rle_encode(seq, run_threshold, marker)
    if cost(encoded) < cost(seq):
        return RleBlock(1, encoded, marker, run_threshold)
    return RleBlock(0, seq, marker, run_threshold)


def rle_encode_static(seq, alphabet_size: int | None = None) -> RleBlock:
    """Replace every run, including single symbols, by a run token."""
    seq = _int64(seq)
    marker = _marker(seq, alphabet_size)
    return RleBlock(1, _kernels.rle_encode(seq, 1, marker), marker, 1)


def _marker(seq, alphabet_size):
    if alphabet_size is None:
        return int(seq.max()) + 1 if seq.size else 0
    if seq.size and (seq.min() < 0 or seq.max() >= alphabet_size):
        raise DataError("RLE input symbol outside the declared alphabet")
    return int(alphabet_size)


def rle_decode(block: RleBlock, expected_len: int | None = None) -> np.ndarray:
    payload = _int64(block.payload)
    if block.mode_flag == 0:
        if expected_len is not None and payload.size != expected_len:
            raise CorruptionError("passthrough RLE block has the wrong length")
        return payload.copy()
    if block.mode_flag != 1:
        raise CorruptionError(f"unknown RLE mode flag {block.mode_flag}")
    if expected_len is None:
        expected_len = _decoded_length(payload, block.marker)
    out, bad = _kernels.rle_decode(payload, block.marker, block.run_threshold, expected_len)
    if bad >= 0:
        raise CorruptionError(f"malformed run token at payload position {bad}")
    return out


def _decoded_length(payload, marker) -> int:
    total = 0
    i = 0
    n = payload.size
    while i < n:
        if payload[i] != marker:
            total += 1
            i += 1
            continue
        i += 2
        count, shift = 0, 0
        while i < n:
            d = int(payload[i])
            i += 1
            count |= (d & 127) << shift
            shift += 7
            if d < 128:
                break
        total += count
    return total


# ------------------------------------------------------------------ chain


def apply_chain(grid, rle_mode: str = "dynamic", run_threshold: int = DEFAULT_RUN_THRESHOLD,
                cost: Callable[[np.ndarray], int] | None = None) -> StageTrace:
    """Run the full forward chain over one cluster's rows."""
    inter = interleave(grid)
    delta = first_derivative(inter.symbols)
    if delta.deltas.size == 0:
        return StageTrace(inter, delta, None, None, None)
    bwt = bwt_forward(delta.deltas)
    mtf = mtf_forward(bwt.last_column)
    if rle_mode == "dynamic":
        rle = rle_encode_dynamic(mtf.indices, run_threshold, mtf.alphabet.size, cost)
    elif rle_mode == "static":
        rle = rle_encode_static(mtf.indices, mtf.alphabet.size)
    else:
        raise ConfigError(f"unknown rle mode {rle_mode!r}")
    return StageTrace(inter, delta, bwt, mtf, rle)


def undo_chain(rows: int, cols: int, anchor: int, primary_index: int | None = None,
               alphabet=None, rle: RleBlock | None = None) -> np.ndarray:
    """Rebuild a cluster grid from the side information of :func:`apply_chain`."""
    length = rows * cols
    if length == 1:
        deltas = np.zeros(0, dtype=np.int64)
    else:
        indices = rle_decode(rle, expected_len=length)
        last = mtf_inverse(MtfSeq(indices, alphabet))
        deltas = bwt_inverse(BwtBlock(last, primary_index))
    symbols = inverse_derivative(DeltaSeq(anchor, deltas))
    return deinterleave(InterleavedSeq(symbols, rows, cols))

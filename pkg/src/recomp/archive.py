"""End-to-end compress/decompress and the ``.smrc`` container.

Layout (little-endian, varints are unsigned LEB128)::

    "SMRC"  u8 version (=1)
    config  varint k, u8 method (0 kmeans, 1 random), u8 rle (0 static,
            1 dynamic), varint run_threshold, varint block_len, u64 seed
    varint  width (columns of the block matrix)
    varint  stream count, then per stream: varint id, varint origin_len
    varint  cluster index of every block row, in row order
    u32     CRC-32 of every byte above
    per cluster, in index order, only if it has members:
        u16     anchor (first interleaved symbol)
        if members * width > 1:
            varint  BWT primary index
            varint  MTF alphabet size A, varint alphabet[0] + 1, then
                    varint gaps alphabet[i] - alphabet[i-1]
            varint  token_count * 2 + rle_flag
            frequency table: varint entries, (varint symbol, varint count)...
            varint  payload bit length, payload bytes
        u32     CRC-32 of the cluster record

Rows are the streams split into ``block_len`` chunks (an empty stream
contributes one empty row), in stream order, padded with 0 to ``width``.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import clustering as cl
from .entropy_coder import Bitstream, FrequencyTable, ac_decode, ac_encode, build_freq_model
from .errors import ConfigError, CorruptionError, DataError, RecompError
from .metrics import compression_ratio, original_bits
from .stream_model import CompressedStream, split_blocks
from .transforms import RleBlock, StageTrace, apply_chain, undo_chain
from .varint import ByteReader, encode_varint, encode_varints

MAGIC = b"SMRC"
VERSION = 1
CLUSTER_METHODS = ("kmeans", "random")
RLE_MODES = ("static", "dynamic")


@dataclass(frozen=True)
class CodecConfig:
    k: int = 8
    cluster_method: str = "kmeans"
    rle_mode: str = "dynamic"
    run_threshold: int = 3
    block_len: int = 1500
    seed: int = 0

    def __post_init__(self):
        if self.cluster_method == "rand":
            object.__setattr__(self, "cluster_method", "random")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.block_len < 2:
            raise ConfigError("block_len must be at least 2")
        if self.cluster_method not in CLUSTER_METHODS:
            raise ConfigError(f"unknown cluster method {self.cluster_method!r}")
        if self.rle_mode not in RLE_MODES:
            raise ConfigError(f"unknown rle mode {self.rle_mode!r}")
        if self.run_threshold < 2:
            raise ConfigError("run_threshold must be at least 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits")

    @property
    def effective_threshold(self) -> int:
        return self.run_threshold if self.rle_mode == "dynamic" else 1

    def describe(self) -> str:
        return (f"k={self.k} cluster={self.cluster_method} rle={self.rle_mode} "
                f"threshold={self.run_threshold} block_len={self.block_len} seed={self.seed}")


@dataclass(frozen=True, eq=False)
class ClusterRecord:
    members: np.ndarray
    anchor: int = 0
    primary_index: int = 0
    alphabet: np.ndarray | None = None
    rle_flag: int = 0
    token_count: int = 0
    table: FrequencyTable | None = None
    payload: Bitstream | None = None
    offset: int | None = field(default=None, compare=False)

    @property
    def has_payload(self) -> bool:
        return self.payload is not None


@dataclass(frozen=True, eq=False)
class Archive:
    config: CodecConfig
    width: int
    directory: tuple
    assignment: np.ndarray
    clusters: tuple

    @property
    def row_count(self) -> int:
        return int(self.assignment.size)

    def __eq__(self, other):
        if not isinstance(other, Archive):
            return NotImplemented
        return serialize(self) == serialize(other)


# ------------------------------------------------------------------ rows


def _block_rows(streams, block_len):
    rows = []
    for s in streams:
        rows.extend(split_blocks(s, block_len))
    return rows


def _row_matrix(rows, width):
    data = np.zeros((len(rows), width), dtype=np.uint16)
    for i, r in enumerate(rows):
        data[i, : r.size] = r
    return data


def _rows_per_stream(origin_len, block_len):
    return max(1, -(-origin_len // block_len))


def cluster_rows(data: np.ndarray, config: CodecConfig) -> cl.Clustering:
    rows = data.shape[0]
    if config.k > rows:
        raise ConfigError(f"k={config.k} exceeds the {rows} block rows available")
    if config.cluster_method == "kmeans":
        return cl.kmeans(data, config.k, seed=config.seed)
    return cl.random_partition(rows, config.k, config.seed)


def block_matrix(streams, block_len: int) -> np.ndarray:
    """Rows of every stream split into blocks, zero-padded to a common width."""
    streams = list(streams)
    if not streams:
        raise DataError("no streams to compress")
    rows = _block_rows(streams, block_len)
    return _row_matrix(rows, max(1, max(r.size for r in rows)))


def prepare(streams, config: CodecConfig):
    """Block matrix and clustering shared by compress and stats."""
    streams = list(streams)
    data = block_matrix(streams, config.block_len)
    return streams, data, cluster_rows(data, config)


# ------------------------------------------------------------------ compress


class _CodedSection:
    """Entropy-codes token sequences and remembers the result per array."""

    def __init__(self):
        self._memo = {}

    def encode(self, tokens):
        key = id(tokens)
        hit = self._memo.get(key)
        if hit is not None and hit[0] is tokens:
            return hit[1]
        table = build_freq_model(tokens)
        bits = ac_encode(tokens, table)
        size = 8 * (len(table.to_bytes()) + len(encode_varint(bits.bit_len)) + len(bits.data))
        self._memo[key] = (tokens, (table, bits, size))
        return table, bits, size

    def cost(self, tokens) -> int:
        return self.encode(tokens)[2]


def trace_clusters(streams, config: CodecConfig):
    """Forward traces of every non-empty cluster, for statistics."""
    streams, data, clustering = prepare(streams, config)
    out = []
    for j in range(config.k):
        members = clustering.members(j)
        if members.size:
            out.append((j, members, apply_chain(data[members], config.rle_mode,
                                                config.effective_threshold)))
    return out


def compress(streams, config: CodecConfig = CodecConfig()) -> Archive:
    streams, data, clustering = prepare(streams, config)
    width = data.shape[1]
    records = []
    for j in range(config.k):
        members = clustering.members(j)
        try:
            records.append(_compress_cluster(data[members], members, config))
        except RecompError as exc:
            raise type(exc)(f"cluster {j}: {exc}") from exc
    directory = tuple((s.id, s.origin_len) for s in streams)
    return Archive(config, width, directory, clustering.assignment.astype(np.int64), tuple(records))


def _compress_cluster(grid, members, config) -> ClusterRecord:
    if members.size == 0:
        return ClusterRecord(members)
    coder = _CodedSection()
    trace: StageTrace = apply_chain(grid, config.rle_mode, config.effective_threshold,
                                    cost=coder.cost)
    if trace.bwt is None:
        return ClusterRecord(members, trace.delta.anchor)
    tokens = trace.rle.payload
    table, bits, _ = coder.encode(tokens)
    return ClusterRecord(members, trace.delta.anchor, trace.bwt.primary_index,
                         trace.mtf.alphabet, trace.rle.mode_flag, int(tokens.size), table, bits)


# ------------------------------------------------------------------ decompress


def decode_cluster(archive: Archive, j: int) -> np.ndarray:
    """Grid of cluster ``j``'s rows, decoded without touching other clusters."""
    rec = archive.clusters[j]
    rows = rec.members.size
    if rows == 0:
        return np.zeros((0, archive.width), dtype=np.int64)
    try:
        if not rec.has_payload:
            if rows * archive.width != 1:
                raise CorruptionError("cluster record is missing its payload")
            return undo_chain(rows, archive.width, rec.anchor)
        tokens = ac_decode(rec.payload, rec.table, rec.token_count)
        rle = RleBlock(rec.rle_flag, tokens, rec.alphabet.size, archive.config.effective_threshold)
        return undo_chain(rows, archive.width, rec.anchor, rec.primary_index, rec.alphabet, rle)
    except CorruptionError as exc:
        raise CorruptionError(str(exc), offset=rec.offset, cluster=j) from exc


def decompress(archive: Archive) -> list[CompressedStream]:
    data = np.zeros((archive.row_count, archive.width), dtype=np.int64)
    for j, rec in enumerate(archive.clusters):
        if rec.members.size:
            data[rec.members] = decode_cluster(archive, j)
    block_len = archive.config.block_len
    streams = []
    row = 0
    for sid, length in archive.directory:
        n_rows = _rows_per_stream(length, block_len)
        pieces = [data[row + b, : min(block_len, length - b * block_len)] for b in range(n_rows)]
        streams.append(CompressedStream(sid, np.concatenate(pieces)))
        row += n_rows
    return streams


# ------------------------------------------------------------------ container


def serialize(archive: Archive) -> bytes:
    c = archive.config
    out = bytearray(MAGIC)
    out.append(VERSION)
    out += encode_varint(c.k)
    out.append(CLUSTER_METHODS.index(c.cluster_method))
    out.append(RLE_MODES.index(c.rle_mode))
    out += encode_varint(c.run_threshold)
    out += encode_varint(c.block_len)
    out += struct.pack("<Q", c.seed)
    out += encode_varint(archive.width)
    out += encode_varint(len(archive.directory))
    out += encode_varints(np.array(archive.directory, dtype=np.int64).reshape(-1))
    out += encode_varints(archive.assignment)
    out += struct.pack("<I", zlib.crc32(out))
    for rec in archive.clusters:
        if rec.members.size:
            record = _cluster_bytes(rec)
            out += record + struct.pack("<I", zlib.crc32(record))
    return bytes(out)


def _cluster_bytes(rec: ClusterRecord) -> bytes:
    out = bytearray(struct.pack("<H", rec.anchor))
    if rec.has_payload:
        out += encode_varint(rec.primary_index)
        out += encode_varint(rec.alphabet.size)
        out += encode_varint(int(rec.alphabet[0]) + 1)
        out += encode_varints(np.diff(rec.alphabet))
        out += encode_varint(rec.token_count * 2 + rec.rle_flag)
        out += rec.table.to_bytes()
        out += encode_varint(rec.payload.bit_len)
        out += rec.payload.data
    return bytes(out)


def _check_crc(r: ByteReader, start: int, what: str) -> None:
    expected = zlib.crc32(r.data[start:r.pos])
    pos = r.pos
    if struct.unpack("<I", r.read(4))[0] != expected:
        r.pos = pos
        raise r.fail(f"{what} checksum mismatch")


def deserialize(blob: bytes) -> Archive:
    if blob[:4] != MAGIC:
        raise CorruptionError("not a recomp archive", offset=0)
    r = ByteReader(blob, 4)
    version = r.u8()
    if version != VERSION:
        raise CorruptionError(f"unsupported archive version {version}", offset=4)
    try:
        k = r.varint()
        method = r.u8()
        rle = r.u8()
        if method >= len(CLUSTER_METHODS) or rle >= len(RLE_MODES):
            raise r.fail("unknown cluster method or rle mode")
        config = CodecConfig(k, CLUSTER_METHODS[method], RLE_MODES[rle],
                             r.varint(), r.varint(), r.u64())
    except ConfigError as exc:
        raise r.fail(f"invalid config: {exc}") from None
    width = r.varint()
    if width < 1 or width > config.block_len:
        raise r.fail(f"invalid matrix width {width}")
    count = r.varint()
    if count == 0:
        raise r.fail("archive holds no streams")
    pairs = r.varints(2 * count).reshape(-1, 2)
    lengths = pairs[:, 1]
    if (np.minimum(lengths, config.block_len) > width).any():
        raise r.fail("stream blocks are wider than the matrix")
    directory = tuple((int(sid), int(length)) for sid, length in pairs)
    total_rows = int(np.maximum(1, -(-lengths // config.block_len)).sum())
    assignment = r.varints(total_rows)
    _check_crc(r, 0, "header")
    if assignment.size and assignment.max() >= k:
        raise r.fail("row assigned to a cluster index >= k")
    clusters = []
    for j in range(k):
        members = np.flatnonzero(assignment == j)
        r.cluster = j
        clusters.append(_read_cluster(r, members, width))
    r.cluster = None
    if not r.at_end():
        raise r.fail("trailing bytes after the last cluster")
    return Archive(config, width, directory, assignment, tuple(clusters))


def _read_cluster(r: ByteReader, members, width) -> ClusterRecord:
    start = r.pos
    if members.size == 0:
        return ClusterRecord(members, offset=start)
    anchor = r.u16()
    if members.size * width == 1:
        _check_crc(r, start, "cluster record")
        return ClusterRecord(members, anchor, offset=start)
    primary = r.varint()
    size = r.varint()
    if size == 0:
        raise r.fail("empty MTF alphabet")
    first = r.varint() - 1
    gaps = r.varints(size - 1)
    if gaps.size and gaps.min() < 1:
        raise r.fail("MTF alphabet is not strictly ascending")
    alphabet = np.concatenate(([first], first + np.cumsum(gaps))).astype(np.int64)
    packed = r.varint()
    table = FrequencyTable.read(r)
    if table.total != packed >> 1:
        raise r.fail("frequency table total does not match the token count")
    bit_len = r.varint()
    payload = r.read(-(-bit_len // 8))
    _check_crc(r, start, "cluster record")
    return ClusterRecord(members, anchor, primary, alphabet, packed & 1, packed >> 1,
                         table, Bitstream(payload, bit_len), offset=start)


# ------------------------------------------------------------------ accounting


def size_report(archive: Archive, streams=None) -> dict:
    """Sizes in bits, with and without container side information."""
    total = 8 * len(serialize(archive))
    payload = sum(rec.payload.bit_len for rec in archive.clusters if rec.has_payload)
    report = {
        "total_bits": total,
        "payload_bits": payload,
        "side_bits": total - payload,
        "cluster_bits": [rec.payload.bit_len if rec.has_payload else 0 for rec in archive.clusters],
    }
    if streams is not None:
        orig = original_bits(streams)
        report["original_bits"] = orig
        report["cr"] = compression_ratio(orig, total)
        report["cr_payload"] = compression_ratio(orig, payload) if payload else float("inf")
    return report

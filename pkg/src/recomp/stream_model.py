"""Stream ingestion, synthetic stream generation and block alignment.

A stream is an ordered sequence of unsigned 16-bit symbols. Two on-disk
forms are supported:

* CSV: decimal integers, either one stream per column of a single file or
  one stream per file (a single column of values).
* raw16: ``b"SMS1"``, a little-endian ``uint32`` stream count, then for each
  stream a ``uint32`` length ``L`` followed by ``L`` little-endian ``uint16``
  words.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError

RAW16_MAGIC = b"SMS1"
DEFAULT_BLOCK_LEN = 1500
MAX_SYMBOL = 0xFFFF


@dataclass(frozen=True, eq=False)
class CompressedStream:
    """One incoming (already compressed) stream of 16-bit symbols."""

    id: int
    symbols: np.ndarray

    def __post_init__(self):
        if self.id < 0:
            raise DataError(f"stream id must be non-negative, got {self.id}")
        arr = np.asarray(self.symbols)
        if arr.ndim != 1:
            raise DataError("stream symbols must be one-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() > MAX_SYMBOL):
            raise DataError(f"stream {self.id} has symbols outside [0, 65535]")
        arr = arr.astype(np.uint16, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)

    @property
    def origin_len(self) -> int:
        return int(self.symbols.size)

    def __eq__(self, other):
        if not isinstance(other, CompressedStream):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.symbols, other.symbols)

    def __repr__(self):
        return f"CompressedStream(id={self.id}, origin_len={self.origin_len})"


@dataclass(frozen=True, eq=False)
class StreamMatrix:
    """Fixed-width block view of a batch of streams (rows = streams)."""

    data: np.ndarray
    lengths: np.ndarray
    pad_symbol: int = 0

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    def row(self, i: int) -> np.ndarray:
        """Row ``i`` with its padding stripped."""
        return self.data[i, : self.lengths[i]]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic clustered-stream generator.

    Archetypes are reflected random walks whose steps are uniform in
    ``[-max_step, max_step]``. Each stream copies one archetype and adds
    i.i.d. uniform noise bounded by ``round(noise_level * max_step)``.
    """

    num_streams: int = 56
    block_len: int = DEFAULT_BLOCK_LEN
    num_archetypes: int = 8
    noise_level: float = 0.05
    seed: int = 0
    max_step: int = 1024

    def validate(self) -> None:
        if self.num_archetypes < 1:
            raise ConfigError("num_archetypes must be at least 1")
        if self.num_streams < 1:
            raise ConfigError("num_streams must be at least 1")
        if self.num_archetypes > self.num_streams:
            raise ConfigError("num_archetypes cannot exceed num_streams")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ConfigError("noise_level must lie in [0, 1]")
        if self.block_len < 1:
            raise ConfigError("block_len must be positive")
        if self.max_step < 0:
            raise ConfigError("max_step must be non-negative")


# --------------------------------------------------------------------------
# ingestion


def load_streams(path, format: str = "raw16", *, header: bool = False,
                 layout: str = "column", columns: Sequence[int] | None = None
                 ) -> list[CompressedStream]:
    """Read streams from ``path``.

    Args:
        path: file (or, for ``layout="file"``, a directory of CSV files).
        format: ``"csv"`` or ``"raw16"``.
        header: skip the first non-comment CSV line.
        layout: ``"column"`` (one stream per CSV column) or ``"file"``
            (one stream per CSV file).
        columns: optional subset of 0-based CSV columns to ingest, e.g. to
            skip a timestamp column.

    Returns:
        Streams with ids assigned in encounter order from 0.
    """
    path = Path(path)
    if format == "raw16":
        return read_raw16(path.read_bytes())
    if format != "csv":
        raise ConfigError(f"unknown stream format {format!r}")
    if layout == "column":
        return _csv_columns(path.read_text(encoding="utf-8"), header, columns, str(path))
    if layout == "file":
        files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
        streams = []
        for f in files:
            cols = _csv_columns(f.read_text(encoding="utf-8"), header,
                                columns if columns is not None else [0], str(f))
            streams.extend(cols)
        if not streams:
            raise DataError("no streams")
        return [CompressedStream(i, s.symbols) for i, s in enumerate(streams)]
    raise ConfigError(f"unknown csv layout {layout!r}")


def _parse_cell(text: str, where: str, row: int, col: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise DataError(f"{where}: malformed cell {text!r} at row {row}, column {col}") from None
    if not 0 <= value <= MAX_SYMBOL:
        raise DataError(f"{where}: value {value} out of range [0, 65535] at row {row}, column {col}")
    return value


def _csv_columns(text: str, header: bool, columns, where: str) -> list[CompressedStream]:
    rows = []
    for lineno, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not cells or (cells[0].lstrip().startswith("#")):
            continue
        rows.append((lineno, [c.strip() for c in cells]))
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise DataError("no streams")
    width = max(len(cells) for _, cells in rows)
    wanted = list(range(width)) if columns is None else list(columns)
    for c in wanted:
        if not 0 <= c < width:
            raise DataError(f"{where}: column {c} not present")
    values: list[list[int]] = [[] for _ in wanted]
    ended = [False] * len(wanted)
    for lineno, cells in rows:
        for j, c in enumerate(wanted):
            cell = cells[c] if c < len(cells) else ""
            if cell == "":
                ended[j] = True
                continue
            if ended[j]:
                raise DataError(f"{where}: gap in column {c + 1} before row {lineno}")
            values[j].append(_parse_cell(cell, where, lineno, c + 1))
    streams = [CompressedStream(i, np.array(v, dtype=np.uint16)) for i, v in enumerate(values)]
    if not any(s.origin_len for s in streams):
        raise DataError("no streams")
    return streams


def read_raw16(data: bytes) -> list[CompressedStream]:
    """Decode the raw16 framing."""
    if len(data) == 0:
        raise DataError("no streams")
    if data[:4] != RAW16_MAGIC:
        raise DataError("not a raw16 stream file (bad magic)")
    if len(data) < 8:
        raise DataError("raw16 file truncated in header")
    (count,) = struct.unpack_from("<I", data, 4)
    if count == 0:
        raise DataError("no streams")
    pos = 8
    streams = []
    for i in range(count):
        if pos + 4 > len(data):
            raise DataError(f"raw16 file truncated before stream {i}")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        end = pos + 2 * length
        if end > len(data):
            raise DataError(f"raw16 file truncated inside stream {i}")
        words = np.frombuffer(data, dtype="<u2", count=length, offset=pos)
        streams.append(CompressedStream(i, words))
        pos = end
    if pos != len(data):
        raise DataError(f"{len(data) - pos} trailing bytes after last stream")
    return streams


def write_raw16(streams: Iterable[CompressedStream]) -> bytes:
    streams = list(streams)
    parts = [RAW16_MAGIC, struct.pack("<I", len(streams))]
    for s in streams:
        parts.append(struct.pack("<I", s.origin_len))
        parts.append(s.symbols.astype("<u2").tobytes())
    return b"".join(parts)


def write_csv(streams: Iterable[CompressedStream], comment: str | None = None,
              header: bool = True) -> str:
    """One stream per column; short columns are left empty at the bottom."""
    streams = list(streams)
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    writer = csv.writer(out, lineterminator="\n")
    if header:
        writer.writerow([f"stream_{s.id}" for s in streams])
    longest = max((s.origin_len for s in streams), default=0)
    for r in range(longest):
        writer.writerow([int(s.symbols[r]) if r < s.origin_len else "" for s in streams])
    return out.getvalue()


# --------------------------------------------------------------------------
# synthetic data


def _reflect(values: np.ndarray) -> np.ndarray:
    period = 2 * MAX_SYMBOL
    v = np.mod(values, period)
    return np.where(v > MAX_SYMBOL, period - v, v)


def generate_labeled(spec: SyntheticSpec) -> tuple[list[CompressedStream], np.ndarray]:
    """Synthetic streams plus the archetype label of each stream."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.block_len
    starts = rng.integers(0, MAX_SYMBOL + 1, size=(spec.num_archetypes, 1))
    steps = rng.integers(-spec.max_step, spec.max_step + 1, size=(spec.num_archetypes, n))
    steps[:, 0] = 0
    archetypes = _reflect(starts + np.cumsum(steps, axis=1))

    labels = rng.permutation(np.arange(spec.num_streams) % spec.num_archetypes)
    width = int(round(spec.noise_level * spec.max_step))
    noise = rng.integers(-width, width + 1, size=(spec.num_streams, n))
    data = np.clip(archetypes[labels] + noise, 0, MAX_SYMBOL)
    streams = [CompressedStream(i, data[i]) for i in range(spec.num_streams)]
    return streams, labels


def generate_synthetic(spec: SyntheticSpec) -> list[CompressedStream]:
    """Noisy copies of ``spec.num_archetypes`` random-walk archetypes."""
    return generate_labeled(spec)[0]


# --------------------------------------------------------------------------
# block alignment


def pad_to_matrix(streams: Sequence[CompressedStream], block_len: int,
                  pad_symbol: int = 0) -> StreamMatrix:
    if block_len < 1:
        raise ConfigError("block_len must be positive")
    if not 0 <= pad_symbol <= MAX_SYMBOL:
        raise ConfigError("pad_symbol must be a 16-bit value")
    data = np.full((len(streams), block_len), pad_symbol, dtype=np.uint16)
    lengths = np.zeros(len(streams), dtype=np.int64)
    for i, s in enumerate(streams):
        if s.origin_len > block_len:
            raise DataError(
                f"stream {s.id} has {s.origin_len} symbols, longer than block_len "
                f"{block_len}; split it into blocks first")
        data[i, : s.origin_len] = s.symbols
        lengths[i] = s.origin_len
    data.flags.writeable = False
    lengths.flags.writeable = False
    return StreamMatrix(data, lengths, pad_symbol)


def unpad(matrix: StreamMatrix) -> list[np.ndarray]:
    return [matrix.row(i).copy() for i in range(matrix.rows)]


def split_blocks(stream: CompressedStream, block_len: int) -> list[np.ndarray]:
    """Consecutive ``block_len`` chunks; an empty stream yields one empty block."""
    n = stream.origin_len
    if n == 0:
        return [stream.symbols[:0]]
    return [stream.symbols[i:i + block_len] for i in range(0, n, block_len)]

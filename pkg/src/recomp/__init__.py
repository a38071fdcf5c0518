"""Lossless re-compression of batches of already-compressed 16-bit symbol streams.

Similar streams are grouped with k-means, each group is interleaved and
passed through delta, BWT, move-to-front and run-length stages, and the
result is arithmetic coded into an ``.smrc`` archive.
"""

from .archive import Archive, CodecConfig, compress, decompress, deserialize, serialize
from .errors import ConfigError, CorruptionError, DataError, RecompError
from .stream_model import CompressedStream, SyntheticSpec, generate_synthetic, load_streams

__all__ = [
    "Archive", "CodecConfig", "CompressedStream", "ConfigError", "CorruptionError",
    "DataError", "RecompError", "SyntheticSpec", "compress", "decompress", "deserialize",
    "generate_synthetic", "load_streams", "serialize",
]
__version__ = "0.1.0"

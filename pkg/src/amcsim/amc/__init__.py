from .compression import CompressedEntry, CompressionError, Mode, compress, decompress
from .prefetcher import AmcCache, AmcConfig, AmcConfigError, AmcPrefetcher, Binder, TargetRecorder
from .storage import IndexEntry, IndexIdentifier, MetadataStore

__all__ = [
    "AmcCache",
    "AmcConfig",
    "AmcConfigError",
    "AmcPrefetcher",
    "Binder",
    "CompressedEntry",
    "CompressionError",
    "IndexEntry",
    "IndexIdentifier",
    "MetadataStore",
    "Mode",
    "TargetRecorder",
    "compress",
    "decompress",
]

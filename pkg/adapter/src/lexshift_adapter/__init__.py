"""Model-runtime adapter for the lexshift exchange formats."""

from .formats import AdapterError, CorpusRecord, read_corpus_records
from .runtime import AdapterConfig, ExtractReport, extract, substitutes

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "CorpusRecord",
    "ExtractReport",
    "extract",
    "read_corpus_records",
    "substitutes",
]

__version__ = "0.1.0"

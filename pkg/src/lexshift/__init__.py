"""Lexical-replacement analysis of contextualized embeddings and graded
lexical semantic change scoring.

The package is organized around a small exchange contract: corpora of
word-usage instances (JSONL), replacement lexicons (TSV), and per-layer
pooled target-word vectors (binary store + JSON manifest). Everything
else — controlled replacement generation, distance tables, exemplar
clustering, the four change scorers, and the word-in-context harness —
is pure computation over those inputs.
"""

from .corpus import (
    Corpus,
    Period,
    PoS,
    ReplacementClass,
    UsageInstance,
    load_corpus,
    merge_corpora,
    pair_with_origin,
    write_corpus,
)
from .embeddings import EmbeddingManifest, EmbeddingStore, build_store, lookup, read_store, write_store
from .errors import DataError, ToolkitError, ValidationError
from .lexicon import LexiconEntry, ReplacementLexicon, load_lexicon, sample_per_synset

__all__ = [
    "Corpus",
    "DataError",
    "EmbeddingManifest",
    "EmbeddingStore",
    "LexiconEntry",
    "Period",
    "PoS",
    "ReplacementClass",
    "ReplacementLexicon",
    "ToolkitError",
    "UsageInstance",
    "ValidationError",
    "build_store",
    "load_corpus",
    "load_lexicon",
    "lookup",
    "merge_corpora",
    "pair_with_origin",
    "read_store",
    "sample_per_synset",
    "write_corpus",
    "write_store",
]

__version__ = "0.1.0"

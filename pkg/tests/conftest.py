"""Shared fixture builders: tiny corpora, lexicons, and vector stores."""

from __future__ import annotations

import math

import numpy as np
import pytest

from lexshift.corpus import Period, PoS, UsageInstance
from lexshift.embeddings import EmbeddingStore, build_store


def usage(
    uid: str,
    lemma: str = "rock",
    pos: PoS = PoS.NOUN,
    period: Period | None = None,
    sense_id: str | None = None,
    filler: str = "yesterday",
) -> UsageInstance:
    """One well-formed original instance with the lemma mid-sentence."""
    prefix = "we saw the "
    text = f"{prefix}{lemma} {filler} ."
    return UsageInstance(
        uid=uid,
        lemma=lemma,
        pos=pos,
        text=text,
        target_span=(len(prefix), len(prefix) + len(lemma)),
        period=period,
        sense_id=sense_id,
    )


def vector_at_distance(distance: float) -> np.ndarray:
    """A unit vector whose cosine distance from (1, 0) is ``distance``."""
    angle = math.acos(1.0 - distance)
    return np.array([math.cos(angle), math.sin(angle)], dtype=np.float32)


def store_from(vectors: dict[tuple[str, int], np.ndarray], num_layers: int = 1, dim: int | None = None) -> EmbeddingStore:
    if dim is None:
        dim = len(next(iter(vectors.values())))
    return build_store("fixture", num_layers, dim, vectors)


@pytest.fixture
def blob_points() -> np.ndarray:
    """Three tight, well-separated blobs of 10 points each (sigma 0.01)."""
    rng = np.random.default_rng(42)
    centers = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    return np.vstack([c + 0.01 * rng.standard_normal((10, 2)) for c in centers])

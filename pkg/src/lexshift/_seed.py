"""Deterministic derivation of per-item random streams from a single seed.

Sampling decisions are keyed by stable string tokens (uids, lemmas,
period tags) instead of iteration order, so parallel and serial runs of
the same operation draw identical samples.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, *tokens: str) -> int:
    """Derive a 64-bit sub-seed from ``seed`` and a stable token path."""
    key = int(seed).to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b("\x1f".join(tokens).encode("utf-8"), key=key, digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def substream(seed: int, *tokens: str) -> np.random.Generator:
    """A numpy Generator whose state depends only on ``seed`` and ``tokens``."""
    return np.random.default_rng(derive_seed(seed, *tokens))

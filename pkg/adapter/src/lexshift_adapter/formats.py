"""File formats shared with the analysis toolkit.

The adapter talks to the toolkit only through files: it reads the corpus
JSONL (uid, lemma, pos, text, target_span plus optional provenance keys)
and emits the embedding exchange format — a JSON manifest next to a
record-framed binary file of little-endian float32 vectors:

    [u16 uid-length][uid bytes, UTF-8][u16 layer][dim x f32]

Substitute lists go out as JSONL: {"uid": ..., "substitutes": [...]}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class AdapterError(Exception):
    """Raised for malformed inputs or unusable model configurations."""


_REQUIRED_KEYS = ("uid", "lemma", "pos", "text", "target_span")
_OPTIONAL_KEYS = ("period", "sense_id", "origin_uid", "replacement_class", "replacement_lemma")


@dataclass(frozen=True)
class CorpusRecord:
    uid: str
    text: str
    span: tuple[int, int]


def read_corpus_records(path: str | Path) -> list[CorpusRecord]:
    """The fields the adapter needs from each corpus instance, in file order."""
    path = Path(path)
    if not path.exists():
        raise AdapterError(f"corpus file not found: {path}")
    records = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AdapterError(f"{path} line {lineno}: {exc}") from None
            missing = [k for k in _REQUIRED_KEYS if k not in raw]
            if missing:
                raise AdapterError(f"{path} line {lineno}: missing keys {', '.join(missing)}")
            unknown = [k for k in raw if k not in _REQUIRED_KEYS and k not in _OPTIONAL_KEYS]
            if unknown:
                raise AdapterError(f"{path} line {lineno}: unknown keys {', '.join(sorted(unknown))}")
            span = raw["target_span"]
            if not (isinstance(span, list) and len(span) == 2):
                raise AdapterError(f"{path} line {lineno}: target_span must be a two-element array")
            start, end = span
            if not (0 <= start < end <= len(raw["text"])):
                raise AdapterError(f"{path} line {lineno}: span out of bounds")
            if raw["uid"] in seen:
                raise AdapterError(f"{path} line {lineno}: duplicate uid {raw['uid']!r}")
            seen.add(raw["uid"])
            records.append(CorpusRecord(uid=raw["uid"], text=raw["text"], span=(start, end)))
    return records


class StoreWriter:
    """Streams (uid, layer, vector) records into the exchange format."""

    def __init__(self, manifest_path: str | Path, data_path: str | Path,
                 model_id: str, num_layers: int, dim: int, layer_zero_included: bool):
        self.manifest_path = Path(manifest_path)
        self.data_path = Path(data_path)
        self.model_id = model_id
        self.num_layers = num_layers
        self.dim = dim
        self.layer_zero_included = layer_zero_included
        self.count = 0
        self._handle = None

    def __enter__(self):
        self._handle = self.data_path.open("wb")
        return self

    def write(self, uid: str, layer: int, vector: np.ndarray) -> None:
        uid_bytes = uid.encode("utf-8")
        if len(uid_bytes) > 0xFFFF:
            raise AdapterError(f"uid too long for the binary format: {uid!r}")
        payload = np.ascontiguousarray(vector, dtype="<f4")
        if payload.shape != (self.dim,):
            raise AdapterError(f"vector for {uid!r} has shape {payload.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(payload)):
            raise AdapterError(f"non-finite vector for uid {uid!r} at layer {layer}")
        self._handle.write(struct.pack("<H", len(uid_bytes)))
        self._handle.write(uid_bytes)
        self._handle.write(struct.pack("<H", layer))
        self._handle.write(payload.tobytes())
        self.count += 1

    def __exit__(self, exc_type, exc, tb):
        self._handle.close()
        if exc_type is None:
            manifest = {
                "model_id": self.model_id,
                "num_layers": self.num_layers,
                "dim": self.dim,
                "count": self.count,
                "layer_zero_included": self.layer_zero_included,
            }
            self.manifest_path.write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        return False


def write_substitutes(rows: Sequence[tuple[str, list[str]]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for uid, substitutes in rows:
            handle.write(json.dumps({"uid": uid, "substitutes": substitutes}, ensure_ascii=False))
            handle.write("\n")

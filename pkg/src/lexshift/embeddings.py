"""Exchange format for pooled target-word vectors.

The numeric core never touches a model runtime; producers export one
pooled vector per (instance, layer) into this format and everything
downstream reads it back. The binary layout is record-framed so stores
stream without an index:

    [u16 uid-length][uid bytes, UTF-8][u16 layer][dim x f32 little-endian]

A JSON manifest pins the producing model, layer count, dimensionality and
record count. A JSONL debug format (selected by the ``.jsonl`` extension
of the data path) holds the same records as plain text.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ValidationError

_MANIFEST_KEYS = ("model_id", "num_layers", "dim", "count", "layer_zero_included")


@dataclass(frozen=True)
class EmbeddingManifest:
    model_id: str
    num_layers: int
    dim: int
    count: int
    layer_zero_included: bool = False

    def __post_init__(self) -> None:
        if self.num_layers < 1:
            raise ValidationError("manifest num_layers must be >= 1")
        if self.dim < 1:
            raise ValidationError("manifest dim must be >= 1")
        if self.count < 0:
            raise ValidationError("manifest count must be >= 0")

    @property
    def layers(self) -> tuple[int, ...]:
        first = 0 if self.layer_zero_included else 1
        return tuple(range(first, self.num_layers + 1))


class EmbeddingStore:
    """Immutable map from (uid, layer) to a pooled float32 vector.

    Every uid must carry the full layer set declared by the manifest;
    partial coverage is rejected so lookups are total for present uids.
    """

    def __init__(self, manifest: EmbeddingManifest, records):
        self.manifest = manifest
        self._vectors: dict[tuple[str, int], np.ndarray] = {}
        expected_layers = set(manifest.layers)
        for uid, layer, vector in records:
            key = (uid, layer)
            if key in self._vectors:
                raise ValidationError(f"duplicate record for uid {uid!r} layer {layer}")
            if layer not in expected_layers:
                raise ValidationError(
                    f"uid {uid!r}: layer {layer} outside the manifest's layer "
                    f"range {manifest.layers[0]}..{manifest.layers[-1]}"
                )
            try:
                vector = np.asarray(vector, dtype=np.float32)
            except (TypeError, ValueError):
                raise ValidationError(f"uid {uid!r} layer {layer}: non-numeric vector") from None
            if vector.ndim != 1 or vector.shape[0] != manifest.dim:
                raise ValidationError(
                    f"uid {uid!r} layer {layer}: vector length {vector.size} != manifest dim {manifest.dim}"
                )
            if not np.all(np.isfinite(vector)):
                raise ValidationError(f"uid {uid!r} layer {layer}: non-finite vector entry")
            vector.setflags(write=False)
            self._vectors[key] = vector
        if len(self._vectors) != manifest.count:
            raise ValidationError(
                f"manifest count {manifest.count} != {len(self._vectors)} records read"
            )
        coverage: dict[str, set[int]] = {}
        for uid, layer in self._vectors:
            coverage.setdefault(uid, set()).add(layer)
        for uid, layers in coverage.items():
            if layers != expected_layers:
                missing = sorted(expected_layers - layers)
                raise ValidationError(
                    f"uid {uid!r} has partial layer coverage; missing layers {missing}"
                )

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._vectors

    @property
    def uids(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(uid for uid, _ in self._vectors))

    def items(self):
        return self._vectors.items()


def lookup(store: EmbeddingStore, uid: str, layer: int) -> np.ndarray:
    """The stored vector for (uid, layer); read-only, never a copy."""
    layers = store.manifest.layers
    if layer not in layers:
        raise DataError(
            f"layer {layer} out of range; store holds layers {layers[0]}..{layers[-1]}"
        )
    try:
        return store._vectors[(uid, layer)]
    except KeyError:
        raise DataError(f"no embedding for uid {uid!r} at layer {layer}") from None


def _read_manifest(manifest_path: Path) -> EmbeddingManifest:
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {manifest_path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"manifest {manifest_path}: expected a JSON object")
    missing = [k for k in _MANIFEST_KEYS if k not in raw]
    if missing:
        raise ValidationError(f"manifest {manifest_path}: missing keys {', '.join(missing)}")
    unknown = [k for k in raw if k not in _MANIFEST_KEYS]
    if unknown:
        raise ValidationError(f"manifest {manifest_path}: unknown keys {', '.join(sorted(unknown))}")
    return EmbeddingManifest(
        model_id=raw["model_id"],
        num_layers=raw["num_layers"],
        dim=raw["dim"],
        count=raw["count"],
        layer_zero_included=raw["layer_zero_included"],
    )


def _iter_binary_records(data_path: Path, dim: int):
    record_tail = 2 + 4 * dim  # u16 layer + payload
    with data_path.open("rb") as handle:
        offset = 0
        while True:
            header = handle.read(2)
            if not header:
                return
            if len(header) != 2:
                raise ValidationError(f"{data_path}: truncated record header at byte {offset}")
            (uid_len,) = struct.unpack("<H", header)
            body = handle.read(uid_len + record_tail)
            if len(body) != uid_len + record_tail:
                raise ValidationError(f"{data_path}: truncated record at byte {offset}")
            uid = body[:uid_len].decode("utf-8")
            (layer,) = struct.unpack_from("<H", body, uid_len)
            vector = np.frombuffer(body, dtype="<f4", count=dim, offset=uid_len + 2)
            yield uid, layer, vector
            offset += 2 + uid_len + record_tail


def _iter_jsonl_records(data_path: Path):
    with data_path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{data_path} line {lineno}: {exc}") from None
            if set(raw) != {"uid", "layer", "vector"}:
                raise ValidationError(
                    f"{data_path} line {lineno}: expected exactly uid, layer, vector"
                )
            yield raw["uid"], raw["layer"], raw["vector"]


def read_store(manifest_path: str | Path, data_path: str | Path) -> EmbeddingStore:
    """Read and fully validate a store; lookups afterwards are O(1)."""
    manifest_path = Path(manifest_path)
    data_path = Path(data_path)
    for p in (manifest_path, data_path):
        if not p.exists():
            raise ValidationError(f"embedding file not found: {p}")
    manifest = _read_manifest(manifest_path)
    if data_path.suffix == ".jsonl":
        records = _iter_jsonl_records(data_path)
    else:
        records = _iter_binary_records(data_path, manifest.dim)
    return EmbeddingStore(manifest, records)


def write_store(store: EmbeddingStore, manifest_path: str | Path, data_path: str | Path) -> None:
    """Write a store; binary payloads round-trip bit-exactly."""
    manifest_path = Path(manifest_path)
    data_path = Path(data_path)
    m = store.manifest
    manifest_path.write_text(
        json.dumps(
            {
                "model_id": m.model_id,
                "num_layers": m.num_layers,
                "dim": m.dim,
                "count": m.count,
                "layer_zero_included": m.layer_zero_included,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    if data_path.suffix == ".jsonl":
        with data_path.open("w", encoding="utf-8", newline="\n") as handle:
            for (uid, layer), vector in store.items():
                record = {"uid": uid, "layer": layer, "vector": [float(v) for v in vector]}
                handle.write(json.dumps(record))
                handle.write("\n")
        return
    with data_path.open("wb") as handle:
        for (uid, layer), vector in store.items():
            uid_bytes = uid.encode("utf-8")
            if len(uid_bytes) > 0xFFFF:
                raise ValidationError(f"uid too long for the binary format: {uid!r}")
            if layer > 0xFFFF:
                raise ValidationError(f"layer {layer} too large for the binary format")
            handle.write(struct.pack("<H", len(uid_bytes)))
            handle.write(uid_bytes)
            handle.write(struct.pack("<H", layer))
            handle.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())


def build_store(
    model_id: str,
    num_layers: int,
    dim: int,
    vectors: dict[tuple[str, int], "np.ndarray"],
    layer_zero_included: bool = False,
) -> EmbeddingStore:
    """Assemble an in-memory store from a (uid, layer) -> vector mapping."""
    manifest = EmbeddingManifest(
        model_id=model_id,
        num_layers=num_layers,
        dim=dim,
        count=len(vectors),
        layer_zero_included=layer_zero_included,
    )
    return EmbeddingStore(manifest, ((uid, layer, vec) for (uid, layer), vec in vectors.items()))

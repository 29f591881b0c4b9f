"""Elementary measures shared by every scorer.

The self-embedding distance of an (original, replaced) instance pair is
the cosine distance between their pooled target-word vectors at one
layer. Per-layer class averages are only comparable after dividing by a
baseline class's average at the same layer, because contextual embedding
spaces grow increasingly anisotropic with depth; normalization therefore
exists for cross-layer tables, while all downstream change scores consume
the raw distances.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import PoS, ReplacementClass, UsageInstance
from .embeddings import EmbeddingStore, lookup
from .errors import DataError


def cosine_distance(u, v) -> float:
    """1 - <u,v> / (|u||v|), in [0, 2]; symmetric and scale-invariant."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise DataError(f"cosine_distance: length mismatch ({u.shape} vs {v.shape})")
    if u.size < 1:
        raise DataError("cosine_distance: empty vectors")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine_distance: zero-norm input")
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    return min(max(d, 0.0), 2.0)


@dataclass(frozen=True)
class SedRecord:
    """One pair's distance at one layer, tagged for aggregation."""

    original_uid: str
    replaced_uid: str
    layer: int
    pos: PoS
    replacement_class: ReplacementClass
    distance: float


def compute_sed(
    pairs: Sequence[tuple[UsageInstance, UsageInstance]],
    store: EmbeddingStore,
) -> list[SedRecord]:
    """Distance of every (original, replaced) pair at every stored layer.

    Output is ordered by (replaced uid, layer). A pair whose embeddings
    are missing raises DataError naming the uid.
    """
    records: list[SedRecord] = []
    for original, replaced in sorted(pairs, key=lambda p: p[1].uid):
        if replaced.replacement_class is None:
            raise DataError(f"instance {replaced.uid!r} is not a replaced instance")
        for layer in store.manifest.layers:
            distance = cosine_distance(
                lookup(store, original.uid, layer), lookup(store, replaced.uid, layer)
            )
            records.append(
                SedRecord(
                    original_uid=original.uid,
                    replaced_uid=replaced.uid,
                    layer=layer,
                    pos=original.pos,
                    replacement_class=replaced.replacement_class,
                    distance=distance,
                )
            )
    return records


@dataclass(frozen=True)
class SedCell:
    n: int
    mean: float
    normalized: float


class SedTable:
    """Mean distance per (layer, replacement class, PoS) cell.

    Cells pool all records (micro average). ``normalized`` divides each
    cell by the baseline class's cell at the same layer (and PoS, when
    per-PoS baselines were requested), so the baseline class itself is
    exactly 1.0 everywhere.
    """

    def __init__(self, cells: dict, baseline_class: ReplacementClass, per_pos_baseline: bool):
        self.cells: dict[tuple[int, ReplacementClass, Optional[PoS]], SedCell] = cells
        self.baseline_class = baseline_class
        self.per_pos_baseline = per_pos_baseline

    def to_csv(self) -> str:
        buf = io.StringIO()
        scope = "layer,pos" if self.per_pos_baseline else "layer"
        buf.write("# aggregation: micro (all records pooled per cell); ")
        buf.write(f"baseline: {self.baseline_class.value} per ({scope})\n")
        buf.write("layer,class,pos,n,mean_sed,normalized_mean_sed\n")
        for (layer, klass, pos) in sorted(
            self.cells, key=lambda k: (k[0], k[1].value, k[2].value if k[2] else "")
        ):
            cell = self.cells[(layer, klass, pos)]
            pos_label = pos.value if pos is not None else "all"
            buf.write(
                f"{layer},{klass.value},{pos_label},{cell.n},{cell.mean!r},{cell.normalized!r}\n"
            )
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def aggregate_and_normalize(
    records: Sequence[SedRecord],
    baseline_class: ReplacementClass = ReplacementClass.SYNTHETIC,
    per_pos_baseline: bool = True,
) -> SedTable:
    """Aggregate records into a table and normalize by the baseline class.

    With ``per_pos_baseline`` the baseline is the (layer, pos) cell of
    ``baseline_class``; otherwise records are pooled over PoS and the
    baseline is per layer. Missing or zero baseline cells are an error.
    """
    if not records:
        raise DataError("no records to aggregate")
    sums: dict[tuple[int, ReplacementClass, Optional[PoS]], list[float]] = {}
    for rec in records:
        pos = rec.pos if per_pos_baseline else None
        sums.setdefault((rec.layer, rec.replacement_class, pos), []).append(rec.distance)
    means = {key: (len(v), float(np.mean(v))) for key, v in sums.items()}
    cells: dict[tuple[int, ReplacementClass, Optional[PoS]], SedCell] = {}
    for (layer, klass, pos), (n, mean) in means.items():
        base = means.get((layer, baseline_class, pos))
        if base is None:
            where = f"layer {layer}" + (f", pos {pos.value}" if pos else "")
            raise DataError(f"empty baseline cell for class {baseline_class.value} at {where}")
        if base[1] <= 0.0:
            raise DataError(
                f"baseline mean for class {baseline_class.value} at layer {layer} is not positive"
            )
        cells[(layer, klass, pos)] = SedCell(n=n, mean=mean, normalized=mean / base[1])
    return SedTable(cells, baseline_class, per_pos_baseline)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of average ranks, in [-1, 1].

    Constant input is an error rather than NaN so degenerate evaluations
    fail loudly.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DataError("spearman_rho: inputs must be equal-length 1-d sequences")
    if x.size < 2:
        raise DataError("spearman_rho: need at least 2 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DataError("spearman_rho: constant input has no defined rank correlation")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.dot(rx, ry) / np.sqrt(np.dot(rx, rx) * np.dot(ry, ry)))
    return min(max(rho, -1.0), 1.0)


def jaccard_distance(a, b) -> float:
    """1 - |a & b| / |a | b|; 0 iff the sets are equal."""
    a = set(a)
    b = set(b)
    union = a | b
    if not union:
        raise DataError("jaccard_distance: both sets empty")
    return 1.0 - len(a & b) / len(union)


def f1_scores(predictions: Sequence[bool], labels: Sequence[bool]) -> tuple[float, float]:
    """(positive-class F1, macro F1) with the 0/0 := 0 convention."""
    if len(predictions) != len(labels) or not labels:
        raise DataError("f1_scores: predictions and labels must be equal-length and non-empty")

    def f1_for(positive: bool) -> float:
        tp = sum(1 for p, l in zip(predictions, labels) if p == positive and l == positive)
        fp = sum(1 for p, l in zip(predictions, labels) if p == positive and l != positive)
        fn = sum(1 for p, l in zip(predictions, labels) if p != positive and l == positive)
        denom = 2 * tp + fp + fn
        return 2 * tp / denom if denom else 0.0

    f1_positive = f1_for(True)
    macro = (f1_positive + f1_for(False)) / 2.0
    return f1_positive, macro

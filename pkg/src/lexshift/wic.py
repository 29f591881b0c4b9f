"""Word-in-context harness: threshold classifiers tuned by F1.

A pair of usages of the same lemma is classified as "same meaning" when
the cosine similarity of the two target-word vectors reaches a threshold.
Thresholds are tuned per PoS (and per layer) on a development split by
exhaustively scoring the midpoints between consecutive distinct
similarities, then applied unchanged to the other splits. Judgments on a
1-4 relatedness scale can be binarized into pairs: clearly related pairs
(mean above 3.5) become positives, clearly unrelated ones (below 1.5)
negatives, and the uncertain middle is dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace as dc_replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .corpus import PoS
from .embeddings import EmbeddingStore, lookup
from .errors import DataError, ValidationError
from .metrics import cosine_distance, f1_scores


class Split(str, Enum):
    DEV = "dev"
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class WicPair:
    uid1: str
    uid2: str
    lemma: str
    pos: PoS
    split: Split
    label: bool
    similarity: Optional[float] = None

    def __post_init__(self) -> None:
        if self.uid1 == self.uid2:
            raise ValidationError(f"pair ({self.uid1!r}, {self.uid2!r}): uids must differ")
        if self.similarity is not None and not (-1.0 - 1e-9 <= self.similarity <= 1.0 + 1e-9):
            raise ValidationError(f"pair ({self.uid1!r}, {self.uid2!r}): similarity outside [-1, 1]")


@dataclass(frozen=True)
class ThresholdClassifier:
    threshold: float
    layer: int
    pos: Optional[PoS]
    tuned_f1: float

    def classify(self, similarity: float) -> bool:
        return similarity >= self.threshold


@dataclass(frozen=True)
class DwugJudgment:
    uid1: str
    uid2: str
    lemma: str
    pos: PoS
    mean_rating: float


def fill_similarities(
    pairs: Sequence[WicPair], store: EmbeddingStore, layer: int
) -> list[WicPair]:
    """Pairs with similarity = 1 - cosine distance of the two vectors."""
    out = []
    for pair in pairs:
        sim = 1.0 - cosine_distance(
            lookup(store, pair.uid1, layer), lookup(store, pair.uid2, layer)
        )
        out.append(dc_replace(pair, similarity=min(max(sim, -1.0), 1.0)))
    return out


def _require_similarity(pairs: Sequence[WicPair]) -> None:
    for pair in pairs:
        if pair.similarity is None:
            raise DataError(f"pair ({pair.uid1!r}, {pair.uid2!r}) has no similarity; fill it first")


def tune_threshold(
    dev_pairs: Sequence[WicPair], layer: int, pos: Optional[PoS] = None
) -> ThresholdClassifier:
    """The threshold maximizing positive-class F1 on the dev pairs.

    Candidates are the midpoints of consecutive distinct similarities
    plus -inf/+inf sentinels; among maximizers the smallest threshold is
    returned, so the result is deterministic and invariant to monotone
    rescaling within the gaps.
    """
    if not dev_pairs:
        raise DataError("tune_threshold: empty dev set")
    _require_similarity(dev_pairs)
    labels = [p.label for p in dev_pairs]
    if all(labels) or not any(labels):
        raise DataError("tune_threshold: dev set needs both a positive and a negative pair")
    sims = [p.similarity for p in dev_pairs]
    distinct = sorted(set(sims))
    candidates = [-math.inf]
    candidates.extend((a + b) / 2.0 for a, b in zip(distinct, distinct[1:]))
    candidates.append(math.inf)
    best_threshold = None
    best_f1 = -1.0
    for threshold in candidates:
        predictions = [s >= threshold for s in sims]
        f1, _ = f1_scores(predictions, labels)
        if f1 > best_f1:
            best_f1 = f1
            best_threshold = threshold
    return ThresholdClassifier(threshold=best_threshold, layer=layer, pos=pos, tuned_f1=best_f1)


def evaluate(pairs: Sequence[WicPair], classifier: ThresholdClassifier) -> tuple[float, float]:
    """(positive F1, macro F1) of the classifier on the given pairs."""
    if not pairs:
        raise DataError("evaluate: no pairs")
    _require_similarity(pairs)
    predictions = [classifier.classify(p.similarity) for p in pairs]
    return f1_scores(predictions, [p.label for p in pairs])


def convert_dwug(
    judgments: Sequence[DwugJudgment], split: Split = Split.TEST
) -> tuple[list[WicPair], int]:
    """Binarize 1-4 relatedness judgments into labeled pairs.

    Mean rating above 3.5 becomes a positive, below 1.5 a negative;
    everything in between (boundaries included) is dropped. Returns the
    pairs and the drop count.
    """
    pairs: list[WicPair] = []
    dropped = 0
    for j in judgments:
        if not (1.0 <= j.mean_rating <= 4.0):
            raise ValidationError(
                f"judgment ({j.uid1!r}, {j.uid2!r}): rating {j.mean_rating} outside [1, 4]"
            )
        if j.mean_rating > 3.5:
            label = True
        elif j.mean_rating < 1.5:
            label = False
        else:
            dropped += 1
            continue
        pairs.append(
            WicPair(uid1=j.uid1, uid2=j.uid2, lemma=j.lemma, pos=j.pos, split=split, label=label)
        )
    return pairs, dropped


_PAIR_KEYS = {"uid1", "uid2", "lemma", "pos", "split", "label"}


def load_wic_pairs(path: str | Path) -> list[WicPair]:
    """Read pairs from JSONL with keys uid1, uid2, lemma, pos, split, label."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pairs file not found: {path}")
    pairs = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path} line {lineno}: {exc}") from None
            if set(raw) != _PAIR_KEYS:
                raise ValidationError(
                    f"{path} line {lineno}: expected exactly keys {', '.join(sorted(_PAIR_KEYS))}"
                )
            if not isinstance(raw["label"], bool):
                raise ValidationError(f"{path} line {lineno}: label must be a boolean")
            try:
                pairs.append(
                    WicPair(
                        uid1=raw["uid1"],
                        uid2=raw["uid2"],
                        lemma=raw["lemma"],
                        pos=PoS(raw["pos"]),
                        split=Split(raw["split"]),
                        label=raw["label"],
                    )
                )
            except ValueError as exc:
                raise ValidationError(f"{path} line {lineno}: {exc}") from None
            except ValidationError as exc:
                raise ValidationError(f"{path} line {lineno}: {exc}") from None
    return pairs


def write_wic_pairs(pairs: Sequence[WicPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for p in pairs:
            record = {
                "uid1": p.uid1,
                "uid2": p.uid2,
                "lemma": p.lemma,
                "pos": p.pos.value,
                "split": p.split.value,
                "label": p.label,
            }
            handle.write(json.dumps(record, ensure_ascii=False))
            handle.write("\n")


def load_dwug_judgments(path: str | Path) -> list[DwugJudgment]:
    """Read judgments from TSV: uid1, uid2, lemma, pos, mean_rating."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"judgments file not found: {path}")
    judgments = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValidationError(f"{path} line {lineno}: expected 5 columns, got {len(cols)}")
            try:
                pos = PoS(cols[3])
            except ValueError:
                raise ValidationError(f"{path} line {lineno}: invalid pos {cols[3]!r}") from None
            try:
                rating = float(cols[4])
            except ValueError:
                raise ValidationError(f"{path} line {lineno}: invalid rating {cols[4]!r}") from None
            judgments.append(
                DwugJudgment(uid1=cols[0], uid2=cols[1], lemma=cols[2], pos=pos, mean_rating=rating)
            )
    return judgments

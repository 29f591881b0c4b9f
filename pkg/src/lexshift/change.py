"""Graded change scorers: prototype distance, cluster divergence,
replacement profiles, and substitute-overlap distance.

All four methods share the convention that larger scores mean more
change. The prototype method reports the cosine *distance* between the
per-period mean vectors (the literature often quotes the similarity; the
rank correlation magnitude is unaffected). The replacement method tracks,
for each candidate replacement of a target, how much its average
substitution distance moves between the two periods, and averages the
top-k movers; the per-replacement table is the interpretable output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import AbstractSet, Mapping, Optional, Sequence

import numpy as np

from ._seed import substream
from .cluster import ApParams, affinity_propagation, cluster_distributions, jsd
from .corpus import Corpus, Period, UsageInstance
from .embeddings import EmbeddingStore, lookup
from .errors import DataError, ValidationError
from .metrics import cosine_distance, spearman_rho


class ScoreMethod(str, Enum):
    PRT = "prt"
    JSD = "jsd"
    REPLACEMENT = "replacement"
    SUBSTITUTION = "substitution"


@dataclass(frozen=True)
class ChangeScore:
    lemma: str
    method: ScoreMethod
    layer: int
    k: Optional[int]
    score: float

    def __post_init__(self) -> None:
        if self.method is ScoreMethod.REPLACEMENT and self.k is None:
            raise ValidationError("replacement-method scores carry the k they were computed at")


@dataclass(frozen=True)
class ProfileEntry:
    replacement: str
    awd_t1: float
    awd_t2: float

    @property
    def td(self) -> float:
        return abs(self.awd_t1 - self.awd_t2)


@dataclass(frozen=True)
class ReplacementProfile:
    """Per-replacement period averages for one target, ranked by movement.

    Entries are sorted by td descending, ties broken by replacement lemma
    ascending. The sentence samples used for the averages are recorded so
    that their stability across replacements can be audited.
    """

    lemma: str
    layer: int
    entries: tuple[ProfileEntry, ...]
    sample_uids_t1: tuple[str, ...]
    sample_uids_t2: tuple[str, ...]

    def tds(self) -> tuple[float, ...]:
        return tuple(e.td for e in self.entries)

    def to_tsv(self) -> str:
        lines = ["replacement\tawd_t1\tawd_t2\ttd\trank"]
        for rank, e in enumerate(self.entries, start=1):
            lines.append(f"{e.replacement}\t{e.awd_t1!r}\t{e.awd_t2!r}\t{e.td!r}\t{rank}")
        return "\n".join(lines) + "\n"


def prt_score(embs_t1: Sequence, embs_t2: Sequence) -> float:
    """Cosine distance between the per-period mean vectors, in [0, 2]."""
    if len(embs_t1) == 0 or len(embs_t2) == 0:
        raise DataError("prt_score: both periods need at least one embedding")
    mean_t1 = np.mean(np.asarray(embs_t1, dtype=np.float64), axis=0)
    mean_t2 = np.mean(np.asarray(embs_t2, dtype=np.float64), axis=0)
    return cosine_distance(mean_t1, mean_t2)


def jsd_score(embs_t1: Sequence, embs_t2: Sequence, params: ApParams = ApParams()) -> float:
    """Divergence of the two periods' distributions over joint clusters.

    Clusters the concatenation of both periods' vectors once, tags each
    point with its period, and measures the divergence between the two
    per-period cluster distributions.
    """
    score, _ = jsd_score_details(embs_t1, embs_t2, params)
    return score


def jsd_score_details(
    embs_t1: Sequence, embs_t2: Sequence, params: ApParams = ApParams()
) -> tuple[float, int]:
    """Like ``jsd_score`` but also reports the number of clusters found."""
    if len(embs_t1) == 0 or len(embs_t2) == 0:
        raise DataError("jsd_score: both periods need at least one embedding")
    points = np.vstack([np.asarray(embs_t1, dtype=np.float64), np.asarray(embs_t2, dtype=np.float64)])
    result = affinity_propagation(points, params)
    periods = [Period.T1] * len(embs_t1) + [Period.T2] * len(embs_t2)
    p, q = cluster_distributions(result, periods)
    return jsd(p, q), result.n_clusters


def _replaced_index(corpus: Corpus) -> dict[tuple[str, str], str]:
    """(origin uid, replacement lemma) -> replaced uid, first by uid wins."""
    index: dict[tuple[str, str], str] = {}
    for inst in sorted(corpus, key=lambda i: i.uid):
        if inst.origin_uid is None:
            continue
        index.setdefault((inst.origin_uid, inst.replacement_lemma), inst.uid)
    return index


def replacement_profile(
    lemma: str,
    replacements: Sequence[str],
    corpus: Corpus,
    store: EmbeddingStore,
    layer: int,
    max_sentences: int = 200,
    seed: int = 0,
) -> ReplacementProfile:
    """Per-period average substitution distance for each replacement.

    For each period one sentence sample is drawn (at most
    ``max_sentences``, seeded) from the target's usages that have a
    replaced variant for *every* requested replacement, so the sample is
    identical across replacements. The per-replacement average distance
    is taken over that sample; entries are ranked by the absolute
    between-period difference.
    """
    if not replacements:
        raise DataError(f"no replacements supplied for target {lemma!r}")
    if len(set(replacements)) != len(replacements):
        raise ValidationError(f"duplicate replacement lemmas for target {lemma!r}")
    index = _replaced_index(corpus)
    samples: dict[Period, list[UsageInstance]] = {}
    for period in (Period.T1, Period.T2):
        eligible = [
            inst
            for inst in corpus
            if inst.lemma == lemma
            and not inst.is_replaced
            and inst.period is period
            and all((inst.uid, r) in index for r in replacements)
        ]
        if not eligible:
            raise DataError(
                f"target {lemma!r} has no usable sentences in period {period.value} "
                "(every sampled sentence needs a variant for every replacement)"
            )
        eligible.sort(key=lambda i: i.uid)
        if len(eligible) > max_sentences:
            rng = substream(seed, "sentence_sample", lemma, period.value)
            chosen = sorted(int(c) for c in rng.choice(len(eligible), size=max_sentences, replace=False))
            eligible = [eligible[i] for i in chosen]
        samples[period] = eligible

    entries = []
    for r in replacements:
        awd = {}
        for period, sample in samples.items():
            distances = [
                cosine_distance(
                    lookup(store, inst.uid, layer),
                    lookup(store, index[(inst.uid, r)], layer),
                )
                for inst in sample
            ]
            awd[period] = float(np.mean(distances))
        entries.append(ProfileEntry(replacement=r, awd_t1=awd[Period.T1], awd_t2=awd[Period.T2]))
    entries.sort(key=lambda e: (-e.td, e.replacement))
    return ReplacementProfile(
        lemma=lemma,
        layer=layer,
        entries=tuple(entries),
        sample_uids_t1=tuple(i.uid for i in samples[Period.T1]),
        sample_uids_t2=tuple(i.uid for i in samples[Period.T2]),
    )


def lsc_replacement(profile: ReplacementProfile, k: int) -> float:
    """Mean of the k largest between-period differences."""
    m = len(profile.entries)
    if not (1 <= k <= m):
        raise DataError(f"k must lie in [1, {m}], got {k}")
    return float(np.mean([e.td for e in profile.entries[:k]]))


def substitution_score(
    subs_t1: Mapping[str, AbstractSet[str]],
    subs_t2: Mapping[str, AbstractSet[str]],
    max_pairs: int,
    seed: int = 0,
) -> float:
    """Average substitute-set distance over cross-period usage pairs.

    Uses the overlap distance (1 - |intersection| / |union|) between the
    substitute sets of every (t1 usage, t2 usage) pair, or of a seeded
    uniform sample of ``max_pairs`` pairs when the full cross product is
    larger.
    """
    if not subs_t1 or not subs_t2:
        raise DataError("substitution_score: both periods need at least one usage")
    if max_pairs < 1:
        raise ValidationError("max_pairs must be >= 1")
    for uid, subs in list(subs_t1.items()) + list(subs_t2.items()):
        if not subs:
            raise DataError(f"empty substitute set for uid {uid!r}")
    uids1 = sorted(subs_t1)
    uids2 = sorted(subs_t2)
    total = len(uids1) * len(uids2)
    if total <= max_pairs:
        pair_indices = range(total)
    else:
        rng = substream(seed, "substitution_pairs")
        pair_indices = sorted(int(c) for c in rng.choice(total, size=max_pairs, replace=False))
    distances = []
    for flat in pair_indices:
        a = subs_t1[uids1[flat // len(uids2)]]
        b = subs_t2[uids2[flat % len(uids2)]]
        union = len(a | b)
        distances.append(1.0 - len(a & b) / union)
    return float(np.mean(distances))


def rank_and_correlate(
    scores: Sequence[ChangeScore], gold: Sequence[tuple[str, float]]
) -> float:
    """Spearman correlation between scores and gold, aligned by lemma."""
    by_lemma: dict[str, float] = {}
    for s in scores:
        if s.lemma in by_lemma:
            raise ValidationError(f"multiple scores for lemma {s.lemma!r}; pass one setting at a time")
        by_lemma[s.lemma] = s.score
    gold_by_lemma = dict(gold)
    if len(gold_by_lemma) != len(gold):
        raise ValidationError("duplicate lemma in gold")
    missing_scores = sorted(set(gold_by_lemma) - set(by_lemma))
    missing_gold = sorted(set(by_lemma) - set(gold_by_lemma))
    if missing_scores or missing_gold:
        parts = []
        if missing_scores:
            parts.append(f"unscored gold lemmas: {', '.join(missing_scores)}")
        if missing_gold:
            parts.append(f"lemmas without gold: {', '.join(missing_gold)}")
        raise DataError("; ".join(parts))
    lemmas = sorted(by_lemma)
    return spearman_rho([by_lemma[l] for l in lemmas], [gold_by_lemma[l] for l in lemmas])


def write_scores(scores: Sequence[ChangeScore], path: str | Path, errors: Sequence[tuple[str, str]] = ()) -> None:
    """ChangeScore TSV: lemma, method, layer, k, score, error.

    Targets that could not be scored appear as rows with an empty score
    and the error message in the last column.
    """
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("lemma\tmethod\tlayer\tk\tscore\terror\n")
        for s in scores:
            k = "" if s.k is None else str(s.k)
            handle.write(f"{s.lemma}\t{s.method.value}\t{s.layer}\t{k}\t{s.score!r}\t\n")
        for lemma, message in errors:
            handle.write(f"{lemma}\t\t\t\t\t{message}\n")


def load_scores(path: str | Path) -> list[ChangeScore]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"scores file not found: {path}")
    scores: list[ChangeScore] = []
    with path.open("r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if header[:5] != ["lemma", "method", "layer", "k", "score"]:
            raise ValidationError(f"{path}: unrecognized scores header")
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 5:
                raise ValidationError(f"{path} line {lineno}: expected at least 5 columns")
            if cols[4] == "":  # error row
                continue
            scores.append(
                ChangeScore(
                    lemma=cols[0],
                    method=ScoreMethod(cols[1]),
                    layer=int(cols[2]),
                    k=int(cols[3]) if cols[3] else None,
                    score=float(cols[4]),
                )
            )
    return scores


def load_substitutes(path: str | Path) -> dict[str, frozenset[str]]:
    """Read per-usage substitute sets: JSONL of {uid, substitutes}."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"substitutes file not found: {path}")
    out: dict[str, frozenset[str]] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path} line {lineno}: {exc}") from None
            if set(raw) != {"uid", "substitutes"} or not isinstance(raw["substitutes"], list):
                raise ValidationError(f"{path} line {lineno}: expected uid and substitutes list")
            if raw["uid"] in out:
                raise ValidationError(f"{path} line {lineno}: duplicate uid {raw['uid']!r}")
            out[raw["uid"]] = frozenset(raw["substitutes"])
    return out

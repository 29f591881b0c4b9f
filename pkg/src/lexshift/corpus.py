"""Canonical data model and JSONL I/O for word-usage instances.

A usage instance is one occurrence of a target word inside a sentence,
addressed by character offsets. Instances produced by substituting a
replacement word into an existing sentence keep a provenance link
(``origin_uid``) to the instance they were derived from; the surrounding
context must be byte-identical between the two. Corpora are immutable
after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .errors import ValidationError


class PoS(str, Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"


class Period(str, Enum):
    T1 = "T1"
    T2 = "T2"


class ReplacementClass(str, Enum):
    """The five substitution classes, ordered from most to least related.

    Hypernym replacements exist only for nouns and verbs; the other
    classes apply to every part of speech.
    """

    SYNONYM = "synonym"
    ANTONYM = "antonym"
    HYPERNYM = "hypernym"
    RANDOM = "random"
    SYNTHETIC = "synthetic"


# PoS classes for which hypernym replacements are defined.
HYPERNYM_POS = frozenset({PoS.NOUN, PoS.VERB})

_REQUIRED_KEYS = ("uid", "lemma", "pos", "text", "target_span")
_OPTIONAL_KEYS = ("period", "sense_id", "origin_uid", "replacement_class", "replacement_lemma")


@dataclass(frozen=True)
class UsageInstance:
    """One occurrence of a target word in a sentence.

    ``target_span`` is a half-open character range into ``text``. When the
    instance was manufactured by substitution, ``origin_uid`` names the
    source instance, ``replacement_class`` the substitution class, and
    ``replacement_lemma`` the word that now occupies the span; the three
    fields are present together or not at all.
    """

    uid: str
    lemma: str
    pos: PoS
    text: str
    target_span: tuple[int, int]
    period: Optional[Period] = None
    sense_id: Optional[str] = None
    origin_uid: Optional[str] = None
    replacement_class: Optional[ReplacementClass] = None
    replacement_lemma: Optional[str] = None

    def __post_init__(self) -> None:
        start, end = self.target_span
        if not (0 <= start < end <= len(self.text)):
            raise ValidationError(
                f"instance {self.uid!r}: span [{start}, {end}) out of bounds "
                f"for text of length {len(self.text)}"
            )
        provenance = (self.origin_uid, self.replacement_class, self.replacement_lemma)
        if any(v is not None for v in provenance) and not all(v is not None for v in provenance):
            raise ValidationError(
                f"instance {self.uid!r}: origin_uid, replacement_class and "
                "replacement_lemma must be set together"
            )
        if self.replacement_class is ReplacementClass.HYPERNYM and self.pos not in HYPERNYM_POS:
            raise ValidationError(
                f"instance {self.uid!r}: hypernym replacements are only defined "
                f"for nouns and verbs, not {self.pos.value}"
            )

    @property
    def span_text(self) -> str:
        start, end = self.target_span
        return self.text[start:end]

    @property
    def is_replaced(self) -> bool:
        return self.origin_uid is not None


class Corpus:
    """An ordered, immutable collection of usage instances.

    Uids are unique, iteration order equals construction order, and each
    ``origin_uid`` must resolve within the corpus unless
    ``external_origins`` is set (scoring corpora may reference donor
    instances that live in a sibling file).
    """

    def __init__(self, instances: Iterable[UsageInstance], external_origins: bool = False):
        self._instances: tuple[UsageInstance, ...] = tuple(instances)
        self._by_uid: dict[str, UsageInstance] = {}
        for inst in self._instances:
            if inst.uid in self._by_uid:
                raise ValidationError(f"duplicate uid {inst.uid!r}")
            self._by_uid[inst.uid] = inst
        self._by_lemma_pos: dict[tuple[str, PoS], list[UsageInstance]] = {}
        self._by_period: dict[Period, list[UsageInstance]] = {}
        for inst in self._instances:
            self._by_lemma_pos.setdefault((inst.lemma, inst.pos), []).append(inst)
            if inst.period is not None:
                self._by_period.setdefault(inst.period, []).append(inst)
        self._check_origins(external_origins)

    def _check_origins(self, external_origins: bool) -> None:
        for inst in self._instances:
            if inst.origin_uid is None:
                continue
            origin = self._by_uid.get(inst.origin_uid)
            if origin is None:
                if external_origins:
                    continue
                raise ValidationError(
                    f"instance {inst.uid!r}: origin_uid {inst.origin_uid!r} "
                    "does not resolve within the corpus"
                )
            r_start, r_end = inst.target_span
            o_start, o_end = origin.target_span
            if inst.text[:r_start] != origin.text[:o_start] or inst.text[r_end:] != origin.text[o_end:]:
                raise ValidationError(
                    f"instance {inst.uid!r}: context differs from its origin "
                    f"{origin.uid!r} outside the target span"
                )

    def __len__(self) -> int:
        return len(self._instances)

    def __iter__(self) -> Iterator[UsageInstance]:
        return iter(self._instances)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self._instances == other._instances

    @property
    def instances(self) -> tuple[UsageInstance, ...]:
        return self._instances

    def __contains__(self, uid: str) -> bool:
        return uid in self._by_uid

    def get(self, uid: str) -> UsageInstance:
        try:
            return self._by_uid[uid]
        except KeyError:
            raise ValidationError(f"no instance with uid {uid!r}") from None

    def by_lemma_pos(self, lemma: str, pos: PoS) -> tuple[UsageInstance, ...]:
        return tuple(self._by_lemma_pos.get((lemma, pos), ()))

    def by_lemma(self, lemma: str) -> tuple[UsageInstance, ...]:
        return tuple(i for i in self._instances if i.lemma == lemma)

    def by_period(self, period: Period) -> tuple[UsageInstance, ...]:
        return tuple(self._by_period.get(period, ()))

    def lemma_pos_keys(self) -> tuple[tuple[str, PoS], ...]:
        return tuple(sorted(self._by_lemma_pos, key=lambda k: (k[0], k[1].value)))

    def lemmas(self) -> tuple[str, ...]:
        return tuple(sorted({i.lemma for i in self._instances}))


def _parse_enum(enum_cls, value, field: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ValidationError(f"invalid {field} {value!r}; expected one of: {allowed}") from None


def _instance_from_record(record: dict) -> UsageInstance:
    if not isinstance(record, dict):
        raise ValidationError("record is not a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in record]
    if missing:
        raise ValidationError(f"missing required keys: {', '.join(missing)}")
    unknown = [k for k in record if k not in _REQUIRED_KEYS and k not in _OPTIONAL_KEYS]
    if unknown:
        raise ValidationError(f"unknown keys: {', '.join(sorted(unknown))}")
    span = record["target_span"]
    if not (isinstance(span, list) and len(span) == 2 and all(isinstance(v, int) for v in span)):
        raise ValidationError("target_span must be a two-element integer array")
    for key in ("uid", "lemma", "text"):
        if not isinstance(record[key], str):
            raise ValidationError(f"{key} must be a string")
    start, end = span
    text = record["text"]
    if not (0 <= start < end <= len(text)):
        raise ValidationError("span out of bounds")
    optional_strs = {}
    for key in ("sense_id", "origin_uid", "replacement_lemma"):
        value = record.get(key)
        if value is not None and not isinstance(value, str):
            raise ValidationError(f"{key} must be a string")
        optional_strs[key] = value
    period = record.get("period")
    return UsageInstance(
        uid=record["uid"],
        lemma=record["lemma"],
        pos=_parse_enum(PoS, record["pos"], "pos"),
        text=text,
        target_span=(start, end),
        period=None if period is None else _parse_enum(Period, period, "period"),
        sense_id=optional_strs["sense_id"],
        origin_uid=optional_strs["origin_uid"],
        replacement_class=(
            None
            if record.get("replacement_class") is None
            else _parse_enum(ReplacementClass, record["replacement_class"], "replacement_class")
        ),
        replacement_lemma=optional_strs["replacement_lemma"],
    )


def load_corpus(path: str | Path, format: str = "jsonl", external_origins: bool = False) -> Corpus:
    """Load a corpus from a JSONL file, one instance per line.

    Raises ValidationError with the offending line number on any
    malformed record, duplicate uid, out-of-bounds span, or (unless
    ``external_origins``) dangling origin reference.
    """
    if format != "jsonl":
        raise ValidationError(f"unsupported corpus format {format!r}")
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file not found: {path}")
    instances = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"parse error at line {lineno}: {exc}") from None
            try:
                instances.append(_instance_from_record(record))
            except ValidationError as exc:
                raise ValidationError(f"{exc} at line {lineno}") from None
    return Corpus(instances, external_origins=external_origins)


def instance_to_record(inst: UsageInstance) -> dict:
    record: dict = {
        "uid": inst.uid,
        "lemma": inst.lemma,
        "pos": inst.pos.value,
        "text": inst.text,
        "target_span": list(inst.target_span),
    }
    if inst.period is not None:
        record["period"] = inst.period.value
    if inst.sense_id is not None:
        record["sense_id"] = inst.sense_id
    if inst.origin_uid is not None:
        record["origin_uid"] = inst.origin_uid
        record["replacement_class"] = inst.replacement_class.value
        record["replacement_lemma"] = inst.replacement_lemma
    return record


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL; ``load_corpus`` restores it field-for-field."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for inst in corpus:
            handle.write(json.dumps(instance_to_record(inst), ensure_ascii=False))
            handle.write("\n")


def pair_with_origin(corpus: Corpus) -> list[tuple[UsageInstance, UsageInstance]]:
    """All (original, replaced) pairs, sorted by the replaced instance's uid.

    Originals without derived instances are omitted. Requires every
    origin reference to resolve, so corpora built with external origins
    must be merged with their donors first.
    """
    pairs = []
    for inst in corpus:
        if inst.origin_uid is None:
            continue
        if inst.origin_uid not in corpus:
            raise ValidationError(
                f"instance {inst.uid!r}: origin {inst.origin_uid!r} not present; "
                "pairing requires a self-contained corpus"
            )
        pairs.append((corpus.get(inst.origin_uid), inst))
    pairs.sort(key=lambda pair: pair[1].uid)
    return pairs


def merge_corpora(corpora: Sequence[Corpus], external_origins: bool = False) -> Corpus:
    """Concatenate corpora into one; uids must stay globally unique."""
    merged: list[UsageInstance] = []
    for corpus in corpora:
        merged.extend(corpus)
    return Corpus(merged, external_origins=external_origins)

"""Replacement lexicons and sense-aware corpus sampling.

Lexicons are ingested from checked-in TSV files rather than queried from
a live lexical database, which keeps runs reproducible. An entry maps a
(lemma, pos, sense) key to one replacement word of a given class; entries
with an empty sense field are per-lemma and match any sense, which is how
the change-scoring lexicons are keyed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ._seed import substream
from .corpus import HYPERNYM_POS, Corpus, PoS, ReplacementClass
from .errors import ValidationError

_LEXICON_CLASSES = (ReplacementClass.SYNONYM, ReplacementClass.ANTONYM, ReplacementClass.HYPERNYM)


@dataclass(frozen=True)
class LexiconEntry:
    lemma: str
    pos: PoS
    sense_id: Optional[str]
    klass: ReplacementClass
    replacement_lemma: str

    def __post_init__(self) -> None:
        if self.replacement_lemma == self.lemma:
            raise ValidationError(
                f"entry for {self.lemma!r}: replacement must differ from the target lemma"
            )
        if self.klass not in _LEXICON_CLASSES:
            raise ValidationError(
                f"entry for {self.lemma!r}: class {self.klass.value!r} cannot be "
                "listed in a lexicon (random and synthetic are generated)"
            )
        if self.klass is ReplacementClass.HYPERNYM and self.pos not in HYPERNYM_POS:
            raise ValidationError(
                f"entry for {self.lemma!r}: hypernym entries are only defined for "
                f"nouns and verbs, not {self.pos.value}"
            )

    def sort_key(self):
        return (self.lemma, self.pos.value, self.sense_id or "", self.klass.value, self.replacement_lemma)


class ReplacementLexicon:
    """Deduplicated lexicon entries plus the vocabulary used as a random pool.

    The vocabulary collects every (lemma, pos) seen on either side of an
    entry; random replacements are drawn from it with PoS agreement.
    """

    def __init__(self, entries):
        unique = sorted(set(entries), key=LexiconEntry.sort_key)
        self._entries: tuple[LexiconEntry, ...] = tuple(unique)
        self._by_key: dict[tuple[str, PoS, Optional[str], ReplacementClass], list[str]] = {}
        vocab: set[tuple[str, PoS]] = set()
        for entry in self._entries:
            key = (entry.lemma, entry.pos, entry.sense_id, entry.klass)
            self._by_key.setdefault(key, []).append(entry.replacement_lemma)
            vocab.add((entry.lemma, entry.pos))
            vocab.add((entry.replacement_lemma, entry.pos))
        self._vocabulary: tuple[tuple[str, PoS], ...] = tuple(sorted(vocab, key=lambda v: (v[0], v[1].value)))

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def vocabulary(self) -> tuple[tuple[str, PoS], ...]:
        return self._vocabulary

    def find(
        self,
        lemma: str,
        pos: PoS,
        sense_id: Optional[str],
        klass: ReplacementClass,
    ) -> tuple[str, ...]:
        """Candidate replacement lemmas for a key, sorted.

        Sense-keyed entries are consulted first when the caller supplies a
        sense; per-lemma (sense-less) entries match any sense.
        """
        candidates: list[str] = []
        if sense_id is not None:
            candidates.extend(self._by_key.get((lemma, pos, sense_id, klass), ()))
        candidates.extend(self._by_key.get((lemma, pos, None, klass), ()))
        return tuple(sorted(dict.fromkeys(candidates)))

    def random_pool(self, pos: PoS, exclude: str) -> tuple[str, ...]:
        """Vocabulary lemmas of the given PoS, minus the excluded target."""
        return tuple(lemma for lemma, p in self._vocabulary if p is pos and lemma != exclude)

    def replacements_for(self, lemma: str, pos: PoS) -> tuple[str, ...]:
        """Every replacement listed for (lemma, pos) across senses and classes."""
        out = {
            e.replacement_lemma
            for e in self._entries
            if e.lemma == lemma and e.pos is pos
        }
        return tuple(sorted(out))


def load_lexicon(path: str | Path) -> ReplacementLexicon:
    """Load a TSV lexicon: lemma, pos, sense_id (may be empty), class, replacement.

    No header; lines starting with '#' are comments. Duplicate rows are
    deduplicated. Malformed rows raise ValidationError with the line number.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"lexicon file not found: {path}")
    entries = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            columns = line.split("\t")
            if len(columns) != 5:
                raise ValidationError(
                    f"lexicon line {lineno}: expected 5 tab-separated columns, got {len(columns)}"
                )
            lemma, pos_raw, sense_raw, class_raw, replacement = columns
            try:
                pos = PoS(pos_raw)
            except ValueError:
                raise ValidationError(f"lexicon line {lineno}: invalid pos {pos_raw!r}") from None
            try:
                klass = ReplacementClass(class_raw)
            except ValueError:
                raise ValidationError(f"lexicon line {lineno}: invalid class {class_raw!r}") from None
            try:
                entries.append(
                    LexiconEntry(
                        lemma=lemma,
                        pos=pos,
                        sense_id=sense_raw or None,
                        klass=klass,
                        replacement_lemma=replacement,
                    )
                )
            except ValidationError as exc:
                raise ValidationError(f"lexicon line {lineno}: {exc}") from None
    return ReplacementLexicon(entries)


def sample_per_synset(corpus: Corpus, max_per_synset: int = 10, seed: int = 0) -> Corpus:
    """Cap the number of instances retained per sense to ``max_per_synset``.

    Prevents high-frequency senses from dominating the evaluation set.
    Instances are chosen uniformly without replacement using a stream
    keyed by the sense id, so the result is independent of corpus order
    and idempotent: re-sampling an already-capped corpus returns it
    unchanged.
    """
    if max_per_synset < 1:
        raise ValidationError("max_per_synset must be >= 1")
    groups: dict[str, list[str]] = {}
    for inst in corpus:
        if inst.sense_id is None:
            raise ValidationError(f"instance {inst.uid!r} has no sense_id; cannot sample per synset")
        groups.setdefault(inst.sense_id, []).append(inst.uid)
    keep: set[str] = set()
    for sense_id in sorted(groups):
        uids = groups[sense_id]
        if len(uids) <= max_per_synset:
            keep.update(uids)
        else:
            rng = substream(seed, "sample_per_synset", sense_id)
            chosen = rng.choice(len(uids), size=max_per_synset, replace=False)
            keep.update(uids[i] for i in chosen)
    return Corpus(inst for inst in corpus if inst.uid in keep)

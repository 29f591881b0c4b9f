"""Controlled lexical substitution and graded artificial change injection.

``apply_replacements`` swaps each target occurrence for related words of
the requested classes while holding the sentence context byte-identical,
producing the (original, replaced) pairs the distance analysis consumes.
``inject_graded_change`` manufactures a two-period benchmark with a known
amount of change per target by planting the target lemma into sentences
that belong to other targets.

All randomness is drawn from per-item streams keyed by uid or lemma, so
results are independent of iteration order and identical across reruns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path
from typing import Iterable, Sequence

from ._seed import substream
from .corpus import (
    HYPERNYM_POS,
    Corpus,
    Period,
    PoS,
    ReplacementClass,
    UsageInstance,
)
from .errors import DataError, ValidationError
from .lexicon import ReplacementLexicon


@dataclass(frozen=True)
class InjectionSpec:
    """Requested proportion of planted usages for one benchmark target."""

    lemma: str
    pos: PoS
    rate: float
    pool_policy: str = "other_targets"

    def __post_init__(self) -> None:
        if not (0.0 <= self.rate <= 1.0):
            raise ValidationError(f"injection rate for {self.lemma!r} must lie in [0, 1]")
        if self.pool_policy != "other_targets":
            raise ValidationError(f"unknown pool policy {self.pool_policy!r}")


@dataclass(frozen=True)
class GradedGold:
    """Realized injected proportion for one target; the benchmark's truth."""

    lemma: str
    gold_change: float


def _substitute(inst: UsageInstance, replacement: str) -> tuple[str, tuple[int, int]]:
    """Swap the target span for ``replacement``, preserving the context.

    The replacement is inserted as-is except when the replaced span was
    sentence-initial and capitalized, in which case the first letter is
    uppercased to keep the orthographic disturbance minimal.
    """
    start, end = inst.target_span
    surface = replacement
    if start == 0 and inst.text[0].isupper():
        surface = surface[:1].upper() + surface[1:]
    new_text = inst.text[:start] + surface + inst.text[end:]
    return new_text, (start, start + len(surface))


def _derive(
    inst: UsageInstance, klass: ReplacementClass, replacement: str, uid_suffix: str | None = None
) -> UsageInstance:
    new_text, new_span = _substitute(inst, replacement)
    return UsageInstance(
        uid=f"{inst.uid}__{uid_suffix or klass.value}",
        lemma=inst.lemma,
        pos=inst.pos,
        text=new_text,
        target_span=new_span,
        period=inst.period,
        sense_id=inst.sense_id,
        origin_uid=inst.uid,
        replacement_class=klass,
        replacement_lemma=replacement,
    )


def apply_replacements(
    corpus: Corpus,
    lexicon: ReplacementLexicon,
    classes: Iterable[ReplacementClass],
    synthetic_token: str,
    seed: int,
    per_entry: bool = False,
) -> Corpus:
    """Emit one replaced instance per original and requested class.

    The returned corpus contains the originals followed by the generated
    instances, so provenance links resolve. Classes without an available
    replacement for an instance are skipped silently (use
    ``summarize_replacements`` for the counts); an empty random pool for
    a PoS is an error.

    With ``per_entry`` the lexicon classes emit one instance per listed
    candidate instead of only the first, which is how the corpus for a
    top-k replacement sweep over a full candidate set is produced; random
    and synthetic still emit one instance each.
    """
    requested = [k for k in ReplacementClass if k in set(classes)]
    if not synthetic_token:
        raise ValidationError("synthetic_token must be non-empty")
    out: list[UsageInstance] = list(corpus)
    for inst in corpus:
        if inst.is_replaced:
            continue
        for klass in requested:
            if klass is ReplacementClass.SYNTHETIC:
                out.append(_derive(inst, klass, synthetic_token))
            elif klass is ReplacementClass.RANDOM:
                pool = lexicon.random_pool(inst.pos, exclude=inst.lemma)
                if not pool:
                    raise DataError(f"empty random-replacement pool for pos {inst.pos.value}")
                rng = substream(seed, "random_replacement", inst.uid)
                out.append(_derive(inst, klass, pool[int(rng.integers(len(pool)))]))
            else:
                if klass is ReplacementClass.HYPERNYM and inst.pos not in HYPERNYM_POS:
                    continue
                candidates = lexicon.find(inst.lemma, inst.pos, inst.sense_id, klass)
                if not candidates:
                    continue
                if per_entry:
                    for replacement in candidates:
                        out.append(
                            _derive(inst, klass, replacement, uid_suffix=f"{klass.value}__{replacement}")
                        )
                else:
                    out.append(_derive(inst, klass, candidates[0]))
    return Corpus(out)


def summarize_replacements(
    corpus: Corpus, classes: Iterable[ReplacementClass]
) -> dict[tuple[ReplacementClass, PoS], dict[str, int]]:
    """Generated/skipped counts per (class, PoS) for a replaced corpus.

    ``skipped`` counts originals with no generated instance of the class,
    so it stays meaningful when per-entry generation emits several
    instances per original.
    """
    requested = [k for k in ReplacementClass if k in set(classes)]
    originals: dict[PoS, set[str]] = {}
    generated: dict[tuple[ReplacementClass, PoS], int] = {}
    covered: dict[tuple[ReplacementClass, PoS], set[str]] = {}
    for inst in corpus:
        if inst.is_replaced:
            key = (inst.replacement_class, inst.pos)
            generated[key] = generated.get(key, 0) + 1
            covered.setdefault(key, set()).add(inst.origin_uid)
        else:
            originals.setdefault(inst.pos, set()).add(inst.uid)
    summary = {}
    for klass in requested:
        for pos, uids in originals.items():
            key = (klass, pos)
            summary[key] = {
                "generated": generated.get(key, 0),
                "skipped": len(uids - covered.get(key, set())),
            }
    return summary


def inject_graded_change(
    pool: Corpus,
    specs: Sequence[InjectionSpec],
    split_seed: int,
) -> tuple[Corpus, Corpus, list[GradedGold]]:
    """Build an artificial two-period benchmark from single-period data.

    Genuine usages of each spec target are split half and half between
    the first and second sub-corpus (the extra one goes to the first),
    re-tagged as periods T1 and T2. Then ``floor(rate * n)`` extra
    second-period instances are manufactured per target, where ``n`` is
    the target's genuine second-period count, by substituting the target
    lemma into sentences of other targets. The gold change value is the
    realized injected proportion. The second corpus references donor
    instances that stay in the pool, so it carries external origins.
    """
    for inst in pool:
        if inst.period is not Period.T2:
            raise ValidationError(f"pool instance {inst.uid!r} is not tagged period T2")
        if inst.is_replaced:
            raise ValidationError(f"pool instance {inst.uid!r} is already a replaced instance")
    if len({inst.lemma for inst in pool}) < 2:
        raise ValidationError("pool must contain at least 2 distinct target lemmas")
    seen: set[tuple[str, PoS]] = set()
    for spec in specs:
        if (spec.lemma, spec.pos) in seen:
            raise ValidationError(f"duplicate injection spec for {spec.lemma!r}")
        seen.add((spec.lemma, spec.pos))
        if not pool.by_lemma_pos(spec.lemma, spec.pos):
            raise ValidationError(f"spec target {spec.lemma!r}/{spec.pos.value} not present in pool")

    c1: list[UsageInstance] = []
    c2: list[UsageInstance] = []
    gold: list[GradedGold] = []
    for spec in specs:
        usages = pool.by_lemma_pos(spec.lemma, spec.pos)
        order = substream(split_seed, "split", spec.lemma, spec.pos.value).permutation(len(usages))
        n_c1 = math.ceil(len(usages) / 2)
        c1_uids = {usages[i].uid for i in order[:n_c1]}
        genuine_c2 = [u for u in usages if u.uid not in c1_uids]
        c1.extend(dc_replace(u, period=Period.T1) for u in usages if u.uid in c1_uids)
        c2.extend(genuine_c2)

        n_inject = math.floor(spec.rate * len(genuine_c2))
        if len(genuine_c2) == 0:
            raise DataError(
                f"target {spec.lemma!r} has no second-period usages after the split; "
                "need at least 2 genuine usages"
            )
        if n_inject > 0:
            donors = [inst for inst in pool if inst.lemma != spec.lemma]
            if not donors:
                raise DataError(f"no donor sentences available for target {spec.lemma!r}")
            if n_inject > len(donors):
                raise DataError(
                    f"target {spec.lemma!r} needs {n_inject} donor sentences "
                    f"but only {len(donors)} are available"
                )
            rng = substream(split_seed, "inject", spec.lemma, spec.pos.value)
            chosen = rng.choice(len(donors), size=n_inject, replace=False)
            for i in sorted(int(c) for c in chosen):
                donor = donors[i]
                new_text, new_span = _substitute(donor, spec.lemma)
                c2.append(
                    UsageInstance(
                        uid=f"{spec.lemma}__injected__{donor.uid}",
                        lemma=spec.lemma,
                        pos=spec.pos,
                        text=new_text,
                        target_span=new_span,
                        period=Period.T2,
                        origin_uid=donor.uid,
                        replacement_class=ReplacementClass.RANDOM,
                        replacement_lemma=spec.lemma,
                    )
                )
        gold.append(
            GradedGold(
                lemma=spec.lemma,
                gold_change=n_inject / (n_inject + len(genuine_c2)),
            )
        )
    return (
        Corpus(c1),
        Corpus(c2, external_origins=True),
        gold,
    )


def write_gold(gold: Sequence[GradedGold], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for entry in gold:
            handle.write(f"{entry.lemma}\t{entry.gold_change!r}\n")


def load_gold(path: str | Path) -> list[tuple[str, float]]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"gold file not found: {path}")
    rows: list[tuple[str, float]] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            columns = line.split("\t")
            if len(columns) != 2:
                raise ValidationError(f"gold line {lineno}: expected 2 columns")
            try:
                rows.append((columns[0], float(columns[1])))
            except ValueError:
                raise ValidationError(f"gold line {lineno}: invalid number {columns[1]!r}") from None
    return rows

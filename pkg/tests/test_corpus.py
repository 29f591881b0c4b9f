"""Corpus model, JSONL round-trips, and provenance pairing."""

from __future__ import annotations

import json

import pytest

from conftest import usage
from lexshift.corpus import (
    Corpus,
    Period,
    PoS,
    ReplacementClass,
    UsageInstance,
    load_corpus,
    merge_corpora,
    pair_with_origin,
    write_corpus,
)
from lexshift.errors import ValidationError


def _write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def _record(uid, **overrides):
    base = {
        "uid": uid,
        "lemma": "rock",
        "pos": "noun",
        "text": "we saw the rock yesterday .",
        "target_span": [11, 15],
    }
    base.update(overrides)
    return base


class TestLoadCorpus:
    def test_file_order_preserved(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record("a"), _record("b"), _record("c")])
        corpus = load_corpus(path)
        assert [inst.uid for inst in corpus] == ["a", "b", "c"]

    def test_round_trip_identity(self, tmp_path):
        instances = [
            usage("a", "rock", period=Period.T1, sense_id="rock%1"),
            usage("b", "stone", pos=PoS.NOUN, period=Period.T2),
        ]
        replaced = UsageInstance(
            uid="a__synonym",
            lemma="rock",
            pos=PoS.NOUN,
            text="we saw the stone yesterday .",
            target_span=(11, 16),
            period=Period.T1,
            sense_id="rock%1",
            origin_uid="a",
            replacement_class=ReplacementClass.SYNONYM,
            replacement_lemma="stone",
        )
        corpus = Corpus(instances + [replaced])
        path = tmp_path / "c.jsonl"
        write_corpus(corpus, path)
        assert load_corpus(path) == corpus

    def test_span_out_of_bounds_reports_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record("a"), _record("b", target_span=[11, 99])])
        with pytest.raises(ValidationError, match="span out of bounds at line 2"):
            load_corpus(path)

    def test_dangling_origin_is_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(
            path,
            [
                _record("a"),
                _record(
                    "b",
                    origin_uid="zz",
                    replacement_class="synonym",
                    replacement_lemma="rock",
                    lemma="stone",
                ),
            ],
        )
        with pytest.raises(ValidationError, match="zz"):
            load_corpus(path)
        # but tolerated when the corpus is declared externally-referenced
        corpus = load_corpus(path, external_origins=True)
        assert len(corpus) == 2

    def test_duplicate_uid_is_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record("a"), _record("a")])
        with pytest.raises(ValidationError, match="duplicate uid"):
            load_corpus(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record("a", extra=1)])
        with pytest.raises(ValidationError, match="unknown keys: extra"):
            load_corpus(path)

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"uid": "a"\nnot json\n', encoding="utf-8")
        with pytest.raises(ValidationError, match="line 1"):
            load_corpus(path)

    def test_partial_replacement_fields_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_lines(path, [_record("a", origin_uid="a")])
        with pytest.raises(ValidationError, match="set together"):
            load_corpus(path)

    def test_context_mismatch_with_origin_rejected(self):
        original = usage("a", "rock")
        tampered = UsageInstance(
            uid="a__synonym",
            lemma="rock",
            pos=PoS.NOUN,
            text="we saw THE stone yesterday .",
            target_span=(11, 16),
            origin_uid="a",
            replacement_class=ReplacementClass.SYNONYM,
            replacement_lemma="stone",
        )
        with pytest.raises(ValidationError, match="context differs"):
            Corpus([original, tampered])

    def test_hypernym_requires_noun_or_verb(self):
        with pytest.raises(ValidationError, match="hypernym"):
            UsageInstance(
                uid="x__hypernym",
                lemma="quickly",
                pos=PoS.ADVERB,
                text="he ran fast today .",
                target_span=(7, 11),
                origin_uid="x",
                replacement_class=ReplacementClass.HYPERNYM,
                replacement_lemma="fast",
            )


class TestPairWithOrigin:
    def test_two_replacements_of_one_original(self):
        o1 = usage("o1", "rock")
        r1 = UsageInstance(
            uid="r1",
            lemma="rock",
            pos=PoS.NOUN,
            text="we saw the stone yesterday .",
            target_span=(11, 16),
            origin_uid="o1",
            replacement_class=ReplacementClass.SYNONYM,
            replacement_lemma="stone",
        )
        r2 = UsageInstance(
            uid="r2",
            lemma="rock",
            pos=PoS.NOUN,
            text="we saw the eld yesterday .",
            target_span=(11, 14),
            origin_uid="o1",
            replacement_class=ReplacementClass.RANDOM,
            replacement_lemma="eld",
        )
        pairs = pair_with_origin(Corpus([o1, r1, r2]))
        assert [(a.uid, b.uid) for a, b in pairs] == [("o1", "r1"), ("o1", "r2")]

    def test_no_replacements_gives_empty(self):
        assert pair_with_origin(Corpus([usage("a"), usage("b", "stone")])) == []

    def test_pair_count_equals_replaced_count_at_benchmark_size(self):
        # mirrors the size of the published noun evaluation set: 1277 pairs
        instances = []
        for i in range(1277):
            original = usage(f"o{i}", "rock")
            instances.append(original)
            instances.append(
                UsageInstance(
                    uid=f"o{i}__synonym",
                    lemma="rock",
                    pos=PoS.NOUN,
                    text="we saw the stone yesterday .",
                    target_span=(11, 16),
                    origin_uid=f"o{i}",
                    replacement_class=ReplacementClass.SYNONYM,
                    replacement_lemma="stone",
                )
            )
        corpus = Corpus(instances)
        pairs = pair_with_origin(corpus)
        assert len(pairs) == 1277
        assert len(pairs) == sum(1 for inst in corpus if inst.is_replaced)


class TestCorpusIndexes:
    def test_lookup_by_lemma_pos_and_period(self):
        instances = [
            usage("a", "rock", period=Period.T1),
            usage("b", "rock", period=Period.T2),
            usage("c", "run", pos=PoS.VERB, period=Period.T2),
        ]
        corpus = Corpus(instances)
        assert [i.uid for i in corpus.by_lemma_pos("rock", PoS.NOUN)] == ["a", "b"]
        assert [i.uid for i in corpus.by_period(Period.T2)] == ["b", "c"]
        assert corpus.lemmas() == ("rock", "run")

    def test_merge_rejects_uid_collision(self):
        c1 = Corpus([usage("a")])
        c2 = Corpus([usage("a", "stone")])
        with pytest.raises(ValidationError, match="duplicate uid"):
            merge_corpora([c1, c2])

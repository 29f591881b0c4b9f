"""Replacement generation and graded change injection."""

from __future__ import annotations

import pytest

from conftest import usage
from lexshift.corpus import Corpus, Period, PoS, ReplacementClass, UsageInstance
from lexshift.errors import DataError, ValidationError
from lexshift.lexicon import LexiconEntry, ReplacementLexicon
from lexshift.replace import (
    GradedGold,
    InjectionSpec,
    apply_replacements,
    inject_graded_change,
    summarize_replacements,
)

SENTENCE = "moments of regret and sadness and guilty relief ."
SADNESS_SPAN = (22, 29)


def _sadness_instance(uid="s0"):
    return UsageInstance(
        uid=uid,
        lemma="sadness",
        pos=PoS.NOUN,
        text=SENTENCE,
        target_span=SADNESS_SPAN,
        sense_id="sadness%1",
    )


def _lexicon(*entries):
    return ReplacementLexicon(list(entries))


class TestApplyReplacements:
    def test_synonym_substitution(self):
        lexicon = _lexicon(
            LexiconEntry("sadness", PoS.NOUN, "sadness%1", ReplacementClass.SYNONYM, "unhappiness")
        )
        corpus = apply_replacements(
            Corpus([_sadness_instance()]), lexicon, {ReplacementClass.SYNONYM}, "[SYNT]", seed=1
        )
        replaced = [i for i in corpus if i.is_replaced]
        assert len(replaced) == 1
        assert replaced[0].text == "moments of regret and unhappiness and guilty relief ."
        assert replaced[0].span_text == "unhappiness"
        assert replaced[0].replacement_lemma == "unhappiness"

    def test_random_substitution_from_pool(self):
        # a pool that contains only "eld" besides the target itself
        lexicon = _lexicon(
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.SYNONYM, "eld")
        )
        corpus = apply_replacements(
            Corpus([_sadness_instance()]), lexicon, {ReplacementClass.RANDOM}, "[SYNT]", seed=9
        )
        replaced = [i for i in corpus if i.is_replaced]
        assert replaced[0].text == "moments of regret and eld and guilty relief ."
        assert replaced[0].replacement_class is ReplacementClass.RANDOM

    def test_synthetic_token_inserted_verbatim(self):
        lexicon = _lexicon()
        corpus = apply_replacements(
            Corpus([_sadness_instance()]), lexicon, {ReplacementClass.SYNTHETIC}, "[SYNT]", seed=1
        )
        replaced = [i for i in corpus if i.is_replaced]
        assert replaced[0].text == "moments of regret and [SYNT] and guilty relief ."
        assert replaced[0].replacement_lemma == "[SYNT]"

    def test_context_preserved_around_span(self):
        lexicon = _lexicon(
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.SYNONYM, "unhappiness")
        )
        corpus = apply_replacements(
            Corpus([_sadness_instance()]),
            lexicon,
            set(ReplacementClass),
            "[SYNT]",
            seed=3,
        )
        original = corpus.get("s0")
        o_start, o_end = original.target_span
        for inst in corpus:
            if not inst.is_replaced:
                continue
            r_start, r_end = inst.target_span
            assert inst.text[:r_start] == original.text[:o_start]
            assert inst.text[r_end:] == original.text[o_end:]

    def test_sentence_initial_capitalization(self):
        inst = UsageInstance(
            uid="cap",
            lemma="sadness",
            pos=PoS.NOUN,
            text="Sadness filled the room .",
            target_span=(0, 7),
        )
        lexicon = _lexicon(
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.SYNONYM, "unhappiness")
        )
        corpus = apply_replacements(Corpus([inst]), lexicon, {ReplacementClass.SYNONYM}, "[SYNT]", 1)
        replaced = [i for i in corpus if i.is_replaced][0]
        assert replaced.text == "Unhappiness filled the room ."

    def test_hypernym_skipped_for_adverbs(self):
        inst = usage("adv0", "quickly", pos=PoS.ADVERB)
        lexicon = _lexicon(
            LexiconEntry("quickly", PoS.ADVERB, None, ReplacementClass.SYNONYM, "fast")
        )
        corpus = apply_replacements(
            Corpus([inst]),
            lexicon,
            {ReplacementClass.SYNONYM, ReplacementClass.HYPERNYM},
            "[SYNT]",
            seed=1,
        )
        summary = summarize_replacements(
            corpus, {ReplacementClass.SYNONYM, ReplacementClass.HYPERNYM}
        )
        assert summary[(ReplacementClass.SYNONYM, PoS.ADVERB)] == {"generated": 1, "skipped": 0}
        assert summary[(ReplacementClass.HYPERNYM, PoS.ADVERB)] == {"generated": 0, "skipped": 1}

    def test_missing_lexicon_entry_skips_instance(self):
        lexicon = _lexicon(
            LexiconEntry("other", PoS.NOUN, None, ReplacementClass.SYNONYM, "word")
        )
        corpus = apply_replacements(
            Corpus([_sadness_instance()]), lexicon, {ReplacementClass.SYNONYM}, "[SYNT]", 1
        )
        assert sum(1 for i in corpus if i.is_replaced) == 0

    def test_empty_random_pool_is_error(self):
        lexicon = _lexicon()
        with pytest.raises(DataError, match="random-replacement pool"):
            apply_replacements(
                Corpus([_sadness_instance()]), lexicon, {ReplacementClass.RANDOM}, "[SYNT]", 1
            )

    def test_deterministic_for_fixed_seed(self):
        instances = [usage(f"u{i}", "rock", sense_id="s") for i in range(20)]
        lexicon = _lexicon(
            LexiconEntry("rock", PoS.NOUN, None, ReplacementClass.SYNONYM, "stone"),
            LexiconEntry("rock", PoS.NOUN, None, ReplacementClass.ANTONYM, "cloud"),
            LexiconEntry("pebble", PoS.NOUN, None, ReplacementClass.SYNONYM, "grain"),
        )
        first = apply_replacements(Corpus(instances), lexicon, set(ReplacementClass), "[SYNT]", 77)
        second = apply_replacements(Corpus(instances), lexicon, set(ReplacementClass), "[SYNT]", 77)
        assert first == second
        other_seed = apply_replacements(Corpus(instances), lexicon, set(ReplacementClass), "[SYNT]", 78)
        randoms_77 = [i.replacement_lemma for i in first if i.replacement_class is ReplacementClass.RANDOM]
        randoms_78 = [i.replacement_lemma for i in other_seed if i.replacement_class is ReplacementClass.RANDOM]
        assert randoms_77 != randoms_78  # pool is big enough that seeds diverge

    def test_per_entry_emits_every_candidate(self):
        lexicon = _lexicon(
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.SYNONYM, "unhappiness"),
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.SYNONYM, "sorrow"),
            LexiconEntry("sadness", PoS.NOUN, None, ReplacementClass.HYPERNYM, "feeling"),
        )
        corpus = apply_replacements(
            Corpus([_sadness_instance()]),
            lexicon,
            {ReplacementClass.SYNONYM, ReplacementClass.HYPERNYM},
            "[SYNT]",
            seed=1,
            per_entry=True,
        )
        replaced = [i for i in corpus if i.is_replaced]
        assert sorted(i.replacement_lemma for i in replaced) == ["feeling", "sorrow", "unhappiness"]
        summary = summarize_replacements(corpus, {ReplacementClass.SYNONYM, ReplacementClass.HYPERNYM})
        assert summary[(ReplacementClass.SYNONYM, PoS.NOUN)] == {"generated": 2, "skipped": 0}
        # default mode keeps one instance per class
        single = apply_replacements(
            Corpus([_sadness_instance()]), lexicon, {ReplacementClass.SYNONYM}, "[SYNT]", seed=1
        )
        assert sum(1 for i in single if i.is_replaced) == 1

    def test_output_size_sums_available_classes(self):
        instances = [usage(f"u{i}", "rock", sense_id="s") for i in range(5)]
        lexicon = _lexicon(
            LexiconEntry("rock", PoS.NOUN, None, ReplacementClass.SYNONYM, "stone"),
            LexiconEntry("rock", PoS.NOUN, None, ReplacementClass.HYPERNYM, "object"),
        )
        corpus = apply_replacements(
            Corpus(instances),
            lexicon,
            {ReplacementClass.SYNONYM, ReplacementClass.HYPERNYM, ReplacementClass.SYNTHETIC},
            "[SYNT]",
            seed=5,
        )
        assert sum(1 for i in corpus if i.is_replaced) == 5 * 3


def _pool(n_per_target=10, lemmas=("alpha", "beta", "gamma")):
    instances = []
    for lemma in lemmas:
        for i in range(n_per_target):
            instances.append(usage(f"{lemma}-{i}", lemma, period=Period.T2))
    return Corpus(instances)


class TestInjectGradedChange:
    def test_rate_zero_keeps_only_genuine(self):
        pool = _pool()
        specs = [InjectionSpec("alpha", PoS.NOUN, 0.0), InjectionSpec("beta", PoS.NOUN, 0.0)]
        c1, c2, gold = inject_graded_change(pool, specs, split_seed=1)
        assert all(not inst.is_replaced for inst in c2)
        assert gold == [GradedGold("alpha", 0.0), GradedGold("beta", 0.0)]

    def test_counting_oracle_rate_half(self):
        # 200 genuine usages split 100/100, so rate 0.5 injects 50 into c2
        pool = _pool(n_per_target=200, lemmas=("alpha", "beta"))
        specs = [InjectionSpec("alpha", PoS.NOUN, 0.5)]
        c1, c2, gold = inject_graded_change(pool, specs, split_seed=3)
        genuine = [i for i in c2 if i.lemma == "alpha" and not i.is_replaced]
        injected = [i for i in c2 if i.lemma == "alpha" and i.is_replaced]
        assert len(genuine) == 100
        assert len(injected) == 50
        assert gold[0].gold_change == pytest.approx(50 / 150)

    def test_disjoint_and_deterministic(self):
        pool = _pool()
        specs = [InjectionSpec("alpha", PoS.NOUN, 0.4), InjectionSpec("beta", PoS.NOUN, 0.8)]
        c1a, c2a, golda = inject_graded_change(pool, specs, split_seed=11)
        c1b, c2b, goldb = inject_graded_change(pool, specs, split_seed=11)
        assert c1a == c1b and c2a == c2b and golda == goldb
        assert {i.uid for i in c1a}.isdisjoint({i.uid for i in c2a})

    def test_periods_retagged(self):
        pool = _pool()
        specs = [InjectionSpec("alpha", PoS.NOUN, 0.5)]
        c1, c2, _ = inject_graded_change(pool, specs, split_seed=2)
        assert all(i.period is Period.T1 for i in c1)
        assert all(i.period is Period.T2 for i in c2)

    def test_injected_instances_carry_provenance(self):
        pool = _pool()
        specs = [InjectionSpec("alpha", PoS.NOUN, 0.9)]
        _, c2, _ = inject_graded_change(pool, specs, split_seed=5)
        injected = [i for i in c2 if i.is_replaced]
        assert injected
        for inst in injected:
            assert inst.replacement_class is ReplacementClass.RANDOM
            assert inst.replacement_lemma == "alpha"
            assert inst.lemma == "alpha"
            assert inst.span_text == "alpha"
            donor = pool.get(inst.origin_uid)
            assert donor.lemma != "alpha"

    def test_gold_equals_realized_proportion(self):
        pool = _pool(n_per_target=13, lemmas=("alpha", "beta", "gamma", "delta"))
        rates = {"alpha": 0.0, "beta": 0.3, "gamma": 0.65, "delta": 1.0}
        specs = [InjectionSpec(lemma, PoS.NOUN, rate) for lemma, rate in rates.items()]
        _, c2, gold = inject_graded_change(pool, specs, split_seed=8)
        for entry in gold:
            genuine = sum(1 for i in c2 if i.lemma == entry.lemma and not i.is_replaced)
            injected = sum(1 for i in c2 if i.lemma == entry.lemma and i.is_replaced)
            assert entry.gold_change == injected / (injected + genuine)

    def test_spec_target_missing_is_error(self):
        with pytest.raises(ValidationError, match="not present"):
            inject_graded_change(_pool(), [InjectionSpec("missing", PoS.NOUN, 0.1)], 1)

    def test_single_lemma_pool_rejected(self):
        pool = Corpus([usage(f"a{i}", "alpha", period=Period.T2) for i in range(4)])
        with pytest.raises(ValidationError, match="2 distinct"):
            inject_graded_change(pool, [InjectionSpec("alpha", PoS.NOUN, 0.5)], 1)

    def test_rate_above_donor_capacity_is_error(self):
        pool = Corpus(
            [usage(f"a{i}", "alpha", period=Period.T2) for i in range(40)]
            + [usage("b0", "beta", period=Period.T2)]
        )
        with pytest.raises(DataError, match="donor"):
            inject_graded_change(pool, [InjectionSpec("alpha", PoS.NOUN, 1.0)], 1)

    def test_rate_outside_unit_interval_rejected(self):
        with pytest.raises(ValidationError, match="rate"):
            InjectionSpec("alpha", PoS.NOUN, 1.5)

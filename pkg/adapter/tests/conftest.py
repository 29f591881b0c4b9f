"""Builds a tiny randomly initialized masked-LM checkpoint offline.

The hub is not reachable from CI, so the adapter is exercised against a
miniature model with a hand-written WordPiece vocabulary; it drives the
exact same runtime code paths (fast-tokenizer offsets, hidden states,
token registration, masked-LM head) as a published checkpoint would.
"""

from __future__ import annotations

import json

import pytest
import torch

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "cat", "sat", "on", "mat", "rock", "music", "stone", "roll",
    "listen", "##ing", "play", "##er", "we", "saw", "to", "a", ".",
]

NUM_LAYERS = 2
HIDDEN = 16
MAX_POSITIONS = 64


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

    vocab_dir = tmp_path_factory.mktemp("vocab")
    (vocab_dir / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast.from_pretrained(str(vocab_dir))

    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=HIDDEN,
        num_hidden_layers=NUM_LAYERS,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=MAX_POSITIONS,
    )
    torch.manual_seed(1234)
    model = BertForMaskedLM(config)
    out = tmp_path_factory.mktemp("tiny-model")
    model.save_pretrained(str(out))
    tokenizer.save_pretrained(str(out))
    return str(out)


def corpus_line(uid: str, text: str, span: tuple[int, int], lemma: str = "w") -> str:
    return json.dumps(
        {"uid": uid, "lemma": lemma, "pos": "noun", "text": text, "target_span": list(span)}
    )


@pytest.fixture
def ten_sentence_corpus(tmp_path):
    """Ten usages mixing single- and multi-sub-token targets."""
    lines = [
        corpus_line("u0", "the cat sat on the mat .", (4, 7), "cat"),
        corpus_line("u1", "we saw the rock .", (11, 15), "rock"),
        corpus_line("u2", "the player sat on a mat .", (4, 10), "player"),
        corpus_line("u3", "listening to music .", (0, 9), "listening"),
        corpus_line("u4", "the music sat on the mat .", (4, 9), "music"),
        corpus_line("u5", "we saw a stone .", (9, 14), "stone"),
        corpus_line("u6", "the cat sat listening to music .", (12, 21), "listening"),
        corpus_line("u7", "a player saw the cat .", (2, 8), "player"),
        corpus_line("u8", "the stone sat on the rock .", (21, 25), "rock"),
        corpus_line("u9", "we listen to the music .", (3, 9), "listen"),
    ]
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path

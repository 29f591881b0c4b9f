"""The one component that touches a model runtime.

``extract`` produces one pooled vector per (instance, layer): the mean of
the hidden states of the sub-tokens covering the target span, aligned via
the fast tokenizer's character offset mapping. Instances whose span cuts
through a sub-token, or whose encoded sentence exceeds the model's input
length, are skipped and counted rather than approximated.

A configurable synthetic token can be registered in the vocabulary before
encoding; its embedding row uses the runtime's default initializer for
new tokens (seeded for reproducibility), which the manifest records as
part of the model id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .formats import AdapterError, CorpusRecord, StoreWriter, read_corpus_records, write_substitutes

_NEW_TOKEN_INIT_SEED = 0


@dataclass
class AdapterConfig:
    model: str
    device: str = "cpu"
    batch_size: int = 16
    include_layer_zero: bool = False
    synthetic_token: str | None = None
    top_n: int = 10

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise AdapterError("top_n must be >= 1")
        if self.batch_size < 1:
            raise AdapterError("batch_size must be >= 1")


@dataclass
class ExtractReport:
    written_instances: int = 0
    written_records: int = 0
    skipped_alignment: list[str] = field(default_factory=list)
    skipped_length: list[str] = field(default_factory=list)


def _quiet_transformers():
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()


def _load_tokenizer(config: AdapterConfig, register_synthetic: bool):
    from tokenizers import AddedToken
    from transformers import AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(config.model)
    if not tokenizer.is_fast:
        raise AdapterError("a fast tokenizer with an offset mapping is required")
    added = 0
    if register_synthetic and config.synthetic_token:
        if tokenizer.convert_tokens_to_ids(config.synthetic_token) != tokenizer.unk_token_id:
            raise AdapterError(
                f"synthetic token {config.synthetic_token!r} already exists in the vocabulary"
            )
        added = tokenizer.add_tokens(
            [AddedToken(config.synthetic_token, normalized=False, lstrip=False, rstrip=False)]
        )
    return tokenizer, added


def _target_token_indices(offsets, span):
    """Encoded positions whose characters lie fully inside the span.

    Returns None when the span boundary cuts through a sub-token, which
    callers treat as an alignment failure.
    """
    start, end = span
    inside = []
    for index, (a, b) in enumerate(offsets):
        if a == b:  # specials and padding
            continue
        if b <= start or a >= end:
            continue
        if a >= start and b <= end:
            inside.append(index)
        else:
            return None
    return inside if inside else None


def extract(
    corpus_path: str | Path,
    config: AdapterConfig,
    manifest_path: str | Path,
    data_path: str | Path,
) -> ExtractReport:
    """Encode a corpus and write the embedding exchange files."""
    _quiet_transformers()
    from transformers import AutoModel

    records = read_corpus_records(corpus_path)
    tokenizer, added = _load_tokenizer(config, register_synthetic=True)
    model = AutoModel.from_pretrained(config.model)
    if added:
        torch.manual_seed(_NEW_TOKEN_INIT_SEED)
        model.resize_token_embeddings(len(tokenizer))
    model.to(config.device)
    model.eval()

    num_layers = model.config.num_hidden_layers
    dim = model.config.hidden_size
    max_length = model.config.max_position_embeddings
    layers = list(range(0 if config.include_layer_zero else 1, num_layers + 1))
    model_id = config.model
    if config.synthetic_token:
        model_id += f"+synthetic:{config.synthetic_token}@default-init(seed={_NEW_TOKEN_INIT_SEED})"

    report = ExtractReport()
    with StoreWriter(
        manifest_path,
        data_path,
        model_id=model_id,
        num_layers=num_layers,
        dim=dim,
        layer_zero_included=config.include_layer_zero,
    ) as writer:
        for batch_start in range(0, len(records), config.batch_size):
            batch = records[batch_start : batch_start + config.batch_size]
            prepared: list[tuple[CorpusRecord, list[int], list[int]]] = []
            for record in batch:
                encoding = tokenizer(record.text, return_offsets_mapping=True)
                if len(encoding["input_ids"]) > max_length:
                    report.skipped_length.append(record.uid)
                    continue
                indices = _target_token_indices(encoding["offset_mapping"], record.span)
                if indices is None:
                    report.skipped_alignment.append(record.uid)
                    continue
                prepared.append((record, encoding["input_ids"], indices))
            if not prepared:
                continue
            width = max(len(ids) for _, ids, _ in prepared)
            pad_id = tokenizer.pad_token_id if tokenizer.pad_token_id is not None else 0
            input_ids = torch.full((len(prepared), width), pad_id, dtype=torch.long)
            attention = torch.zeros((len(prepared), width), dtype=torch.long)
            for row, (_, ids, _) in enumerate(prepared):
                input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                attention[row, : len(ids)] = 1
            with torch.no_grad():
                output = model(
                    input_ids=input_ids.to(config.device),
                    attention_mask=attention.to(config.device),
                    output_hidden_states=True,
                )
            for row, (record, _, indices) in enumerate(prepared):
                for layer in layers:
                    states = output.hidden_states[layer][row, indices, :]
                    pooled = states.mean(dim=0).cpu().numpy().astype(np.float32)
                    writer.write(record.uid, layer, pooled)
                report.written_instances += 1
        report.written_records = writer.count
    return report


def _masked_lm(config: AdapterConfig):
    from transformers import AutoModelForMaskedLM

    model, info = AutoModelForMaskedLM.from_pretrained(config.model, output_loading_info=True)
    head_missing = [k for k in info.get("missing_keys", ()) if "predictions" in k or "lm_head" in k]
    if head_missing:
        raise AdapterError(
            f"model {config.model!r} lacks a masked-LM head (uninitialized: {sorted(head_missing)})"
        )
    model.to(config.device)
    model.eval()
    return model


def substitutes(
    corpus_path: str | Path,
    config: AdapterConfig,
    out_path: str | Path,
) -> int:
    """Mask each target span and emit the top-n filtered predictions.

    Special tokens and sub-word continuation pieces are filtered out;
    the remaining candidates are kept in descending probability order.
    Returns the number of instances written.
    """
    _quiet_transformers()
    records = read_corpus_records(corpus_path)
    tokenizer, _ = _load_tokenizer(config, register_synthetic=False)
    if tokenizer.mask_token is None:
        raise AdapterError("the tokenizer defines no mask token; masked-LM decoding is unavailable")
    model = _masked_lm(config)
    max_length = model.config.max_position_embeddings
    special_ids = set(tokenizer.all_special_ids)

    rows: list[tuple[str, list[str]]] = []
    for record in records:
        start, end = record.span
        masked = record.text[:start] + tokenizer.mask_token + record.text[end:]
        encoding = tokenizer(masked, return_tensors="pt")
        if encoding["input_ids"].shape[1] > max_length:
            continue
        mask_positions = (encoding["input_ids"][0] == tokenizer.mask_token_id).nonzero()
        if len(mask_positions) != 1:
            raise AdapterError(f"uid {record.uid!r}: expected exactly one mask position")
        with torch.no_grad():
            logits = model(
                input_ids=encoding["input_ids"].to(config.device),
                attention_mask=encoding["attention_mask"].to(config.device),
            ).logits[0, int(mask_positions[0, 0])]
        order = np.argsort(-logits.cpu().numpy(), kind="stable")
        chosen: list[str] = []
        for token_id in order:
            if len(chosen) == config.top_n:
                break
            if int(token_id) in special_ids:
                continue
            token = tokenizer.convert_ids_to_tokens(int(token_id))
            if token.startswith("##"):
                continue
            chosen.append(token)
        rows.append((record.uid, chosen))
    write_substitutes(rows, out_path)
    return len(rows)

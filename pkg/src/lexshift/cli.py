"""Command-line pipeline: replace, sed, lsc, synth, wic, correlate.

Every subcommand reads its inputs from flags or from a declarative JSON
config file (flags win), writes plot-ready CSV/TSV plus a resolved copy
of the configuration into the output directory, and is fully
reproducible: identical config and inputs give byte-identical outputs.
Exit codes: 0 success, 1 validation error, 2 runtime data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import change, metrics, replace, wic
from .cluster import ApParams
from .corpus import (
    Corpus,
    Period,
    PoS,
    ReplacementClass,
    load_corpus,
    merge_corpora,
    pair_with_origin,
    write_corpus,
)
from .embeddings import EmbeddingStore, lookup, read_store
from .errors import DataError, ToolkitError, ValidationError
from .lexicon import load_lexicon

_REQUIRED = object()


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route them through the
    # ValidationError path so bad flags report exit code 1 like any other
    # malformed configuration.
    def error(self, message):
        raise ValidationError(message)


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Merge CLI flags over the config file over built-in defaults."""
    config = {}
    if getattr(args, "config", None):
        config_path = Path(args.config)
        if not config_path.exists():
            raise ValidationError(f"config file not found: {config_path}")
        try:
            config = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {config_path}: {exc}") from None
        if not isinstance(config, dict):
            raise ValidationError(f"config file {config_path}: expected a JSON object")
        unknown = sorted(set(config) - set(defaults))
        if unknown:
            raise ValidationError(f"config file {config_path}: unknown keys {', '.join(unknown)}")
    resolved = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = config.get(key, None)
        if value is None:
            value = default
        if value is _REQUIRED:
            raise ValidationError(f"missing required option --{key.replace('_', '-')}")
        resolved[key] = value
    return resolved


def _out_dir(resolved: dict) -> Path:
    out = Path(resolved["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_resolved_config(resolved: dict, command: str, out: Path) -> None:
    payload = {"command": command}
    for key, value in resolved.items():
        payload[key] = str(value) if isinstance(value, Path) else value
    (out / "resolved_config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parse_classes(raw: str) -> list[ReplacementClass]:
    classes = []
    for name in raw.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            classes.append(ReplacementClass(name))
        except ValueError:
            raise ValidationError(f"unknown replacement class {name!r}") from None
    if not classes:
        raise ValidationError("no replacement classes requested")
    return classes


def _parse_layers(raw: str, store: EmbeddingStore) -> list[int]:
    available = store.manifest.layers
    if raw == "all":
        return list(available)
    layers = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            layer = int(part)
        except ValueError:
            raise ValidationError(f"invalid layer {part!r}") from None
        if layer not in available:
            raise ValidationError(
                f"layer {layer} not in store (layers {available[0]}..{available[-1]})"
            )
        layers.append(layer)
    if not layers:
        raise ValidationError("no layers selected")
    return layers


def _load_store(resolved: dict) -> EmbeddingStore:
    return read_store(resolved["manifest"], resolved["data"])


def _ap_params(resolved: dict) -> ApParams:
    return ApParams(
        damping=float(resolved["damping"]),
        max_iter=int(resolved["max_iter"]),
        convergence_iter=int(resolved["convergence_iter"]),
        preference=None if resolved["preference"] in (None, "median") else float(resolved["preference"]),
        similarity=resolved["ap_similarity"],
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_replace(args) -> int:
    defaults = {
        "corpus": _REQUIRED,
        "lexicon": _REQUIRED,
        "classes": "synonym,antonym,hypernym,random,synthetic",
        "synthetic_token": "[SYNT]",
        "per_entry": False,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    classes = _parse_classes(resolved["classes"])
    corpus = load_corpus(resolved["corpus"])
    lexicon = load_lexicon(resolved["lexicon"])
    result = replace.apply_replacements(
        corpus,
        lexicon,
        classes,
        resolved["synthetic_token"],
        int(resolved["seed"]),
        per_entry=bool(resolved["per_entry"]),
    )
    write_corpus(result, out / "replaced.jsonl")
    summary = replace.summarize_replacements(result, classes)
    with (out / "replace_summary.tsv").open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("class\tpos\tgenerated\tskipped\n")
        for (klass, pos), counts in sorted(summary.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
            handle.write(f"{klass.value}\t{pos.value}\t{counts['generated']}\t{counts['skipped']}\n")
    _write_resolved_config(resolved, "replace", out)
    total = sum(c["generated"] for c in summary.values())
    print(f"wrote {len(result)} instances ({total} replaced) to {out / 'replaced.jsonl'}")
    for (klass, pos), counts in sorted(summary.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        print(f"  {klass.value}/{pos.value}: generated={counts['generated']} skipped={counts['skipped']}")
    return 0


def cmd_sed(args) -> int:
    defaults = {
        "corpus": _REQUIRED,
        "manifest": _REQUIRED,
        "data": _REQUIRED,
        "baseline": ReplacementClass.SYNTHETIC.value,
        "pool_pos": False,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    try:
        baseline = ReplacementClass(resolved["baseline"])
    except ValueError:
        raise ValidationError(f"unknown baseline class {resolved['baseline']!r}") from None
    corpus = load_corpus(resolved["corpus"])
    store = _load_store(resolved)
    pairs = pair_with_origin(corpus)
    if not pairs:
        raise DataError("corpus contains no replaced instances to measure")
    records = metrics.compute_sed(pairs, store)
    table = metrics.aggregate_and_normalize(
        records, baseline_class=baseline, per_pos_baseline=not resolved["pool_pos"]
    )
    table.write_csv(out / "sed.csv")
    _write_resolved_config(resolved, "sed", out)
    print(f"wrote {len(table.cells)} cells over {len(records)} records to {out / 'sed.csv'}")
    return 0


def _load_merged_corpus(paths: Sequence[str]) -> Corpus:
    corpora = [load_corpus(p, external_origins=True) for p in paths]
    return merge_corpora(corpora, external_origins=True)


def _period_vectors(corpus: Corpus, lemma: str, store, layer: int):
    vectors = {Period.T1: [], Period.T2: []}
    for inst in corpus:
        if inst.lemma != lemma or inst.period is None:
            continue
        vectors[inst.period].append(lookup(store, inst.uid, layer))
    return vectors


def cmd_lsc(args) -> int:
    defaults = {
        "method": _REQUIRED,
        "corpus": _REQUIRED,
        "manifest": None,
        "data": None,
        "layers": "all",
        "targets": None,
        "gold": None,
        "substitutes": None,
        "max_pairs": 100000,
        "max_sentences": 200,
        "k_min": 1,
        "k_max": None,
        "damping": 0.5,
        "max_iter": 200,
        "convergence_iter": 15,
        "preference": "median",
        "ap_similarity": "negative_squared_euclidean",
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    try:
        method = change.ScoreMethod(resolved["method"])
    except ValueError:
        raise ValidationError(f"unknown method {resolved['method']!r}") from None
    corpus_paths = resolved["corpus"] if isinstance(resolved["corpus"], list) else [resolved["corpus"]]
    corpus = _load_merged_corpus(corpus_paths)
    targets = (
        [t.strip() for t in resolved["targets"].split(",") if t.strip()]
        if resolved["targets"]
        else list(corpus.lemmas())
    )
    scores: list[change.ChangeScore] = []
    errors: list[tuple[str, str]] = []

    if method in (change.ScoreMethod.PRT, change.ScoreMethod.JSD):
        if not resolved["manifest"] or not resolved["data"]:
            raise ValidationError("--manifest and --data are required for embedding-based methods")
        store = _load_store(resolved)
        layers = _parse_layers(resolved["layers"], store)
        params = _ap_params(resolved)
        for lemma in targets:
            try:
                for layer in layers:
                    vectors = _period_vectors(corpus, lemma, store, layer)
                    if method is change.ScoreMethod.PRT:
                        score = change.prt_score(vectors[Period.T1], vectors[Period.T2])
                        scores.append(change.ChangeScore(lemma, method, layer, None, score))
                    else:
                        score, n_clusters = change.jsd_score_details(
                            vectors[Period.T1], vectors[Period.T2], params
                        )
                        scores.append(change.ChangeScore(lemma, method, layer, None, score))
                        print(f"jsd {lemma} layer={layer}: n_clusters={n_clusters}")
            except DataError as exc:
                errors.append((lemma, str(exc)))
    elif method is change.ScoreMethod.REPLACEMENT:
        if not resolved["manifest"] or not resolved["data"]:
            raise ValidationError("--manifest and --data are required for embedding-based methods")
        store = _load_store(resolved)
        if resolved["layers"] == "all":
            layer = store.manifest.layers[-1]
        else:
            layers = _parse_layers(resolved["layers"], store)
            if len(layers) != 1:
                raise ValidationError("the replacement method scores one layer at a time")
            layer = layers[0]
        profiles_dir = out / "profiles"
        profiles_dir.mkdir(exist_ok=True)
        per_k: dict[int, list[change.ChangeScore]] = {}
        for lemma in targets:
            rho = sorted(
                {
                    inst.replacement_lemma
                    for inst in corpus
                    if inst.is_replaced and inst.lemma == lemma
                }
            )
            try:
                if not rho:
                    raise DataError(f"no replaced variants for target {lemma!r} in the corpus")
                profile = change.replacement_profile(
                    lemma,
                    rho,
                    corpus,
                    store,
                    layer,
                    max_sentences=int(resolved["max_sentences"]),
                    seed=int(resolved["seed"]),
                )
            except DataError as exc:
                errors.append((lemma, str(exc)))
                continue
            safe = lemma.replace("/", "_")
            (profiles_dir / f"{safe}.tsv").write_text(profile.to_tsv(), encoding="utf-8")
            k_max = int(resolved["k_max"]) if resolved["k_max"] else len(profile.entries)
            k_max = min(k_max, len(profile.entries))
            for k in range(int(resolved["k_min"]), k_max + 1):
                score = change.lsc_replacement(profile, k)
                entry = change.ChangeScore(lemma, method, layer, k, score)
                scores.append(entry)
                per_k.setdefault(k, []).append(entry)
        if per_k:
            ks = sorted(per_k)
            with (out / "sweep.tsv").open("w", encoding="utf-8", newline="\n") as handle:
                handle.write("lemma\t" + "\t".join(f"k={k}" for k in ks) + "\n")
                lemmas_done = sorted({s.lemma for s in scores})
                by_lemma_k = {(s.lemma, s.k): s.score for s in scores}
                for lemma in lemmas_done:
                    cells = [
                        (repr(by_lemma_k[(lemma, k)]) if (lemma, k) in by_lemma_k else "")
                        for k in ks
                    ]
                    handle.write(lemma + "\t" + "\t".join(cells) + "\n")
    else:  # substitution
        if not resolved["substitutes"]:
            raise ValidationError("--substitutes is required for the substitution method")
        substitutes = change.load_substitutes(resolved["substitutes"])
        for lemma in targets:
            try:
                per_period: dict[Period, dict[str, frozenset]] = {Period.T1: {}, Period.T2: {}}
                for inst in corpus:
                    if inst.lemma != lemma or inst.is_replaced or inst.period is None:
                        continue
                    if inst.uid not in substitutes:
                        raise DataError(f"no substitutes for uid {inst.uid!r}")
                    per_period[inst.period][inst.uid] = substitutes[inst.uid]
                score = change.substitution_score(
                    per_period[Period.T1],
                    per_period[Period.T2],
                    max_pairs=int(resolved["max_pairs"]),
                    seed=int(resolved["seed"]),
                )
                scores.append(change.ChangeScore(lemma, method, 0, None, score))
            except DataError as exc:
                errors.append((lemma, str(exc)))

    change.write_scores(scores, out / "scores.tsv", errors=errors)
    if resolved["gold"]:
        gold = replace.load_gold(resolved["gold"])
        _write_correlations(scores, gold, out / "correlations.tsv")
    _write_resolved_config(resolved, "lsc", out)
    print(f"scored {len({s.lemma for s in scores})} targets, {len(errors)} errors -> {out / 'scores.tsv'}")
    return 0


def _write_correlations(scores, gold, path: Path) -> None:
    groups: dict[tuple, list] = {}
    for s in scores:
        groups.setdefault((s.method.value, s.layer, s.k), []).append(s)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write("method\tlayer\tk\tn\tspearman\n")
        for (method, layer, k), group in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] if kv[0][2] is not None else -1)
        ):
            rho = change.rank_and_correlate(group, gold)
            k_cell = "" if k is None else str(k)
            handle.write(f"{method}\t{layer}\t{k_cell}\t{len(group)}\t{rho!r}\n")
            suffix = f" k={k}" if k is not None else ""
            print(f"spearman {method} layer={layer}{suffix}: {rho:.4f}")


def cmd_synth(args) -> int:
    defaults = {
        "pool": _REQUIRED,
        "specs": _REQUIRED,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    pool = load_corpus(resolved["pool"])
    specs = _load_specs(resolved["specs"])
    c1, c2, gold = replace.inject_graded_change(pool, specs, int(resolved["seed"]))
    write_corpus(c1, out / "c1.jsonl")
    write_corpus(c2, out / "c2.jsonl")
    replace.write_gold(gold, out / "gold.tsv")
    _write_resolved_config(resolved, "synth", out)
    print(f"wrote c1 ({len(c1)}), c2 ({len(c2)}), gold ({len(gold)} targets) to {out}")
    return 0


def _load_specs(path: str) -> list[replace.InjectionSpec]:
    spec_path = Path(path)
    if not spec_path.exists():
        raise ValidationError(f"specs file not found: {spec_path}")
    specs = []
    with spec_path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValidationError(f"specs line {lineno}: expected lemma, pos, rate")
            try:
                pos = PoS(cols[1])
            except ValueError:
                raise ValidationError(f"specs line {lineno}: invalid pos {cols[1]!r}") from None
            try:
                rate = float(cols[2])
            except ValueError:
                raise ValidationError(f"specs line {lineno}: invalid rate {cols[2]!r}") from None
            specs.append(replace.InjectionSpec(lemma=cols[0], pos=pos, rate=rate))
    return specs


def cmd_wic_sweep(args) -> int:
    defaults = {
        "pairs": _REQUIRED,
        "manifest": _REQUIRED,
        "data": _REQUIRED,
        "layers": "all",
        "pos": None,
        "benchmark": None,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    pairs = wic.load_wic_pairs(resolved["pairs"])
    if not pairs:
        raise DataError("pairs file holds no pairs")
    store = _load_store(resolved)
    layers = _parse_layers(resolved["layers"], store)
    benchmark = resolved["benchmark"] or Path(resolved["pairs"]).stem
    if resolved["pos"]:
        pos_values = []
        for part in resolved["pos"].split(","):
            try:
                pos_values.append(PoS(part.strip()))
            except ValueError:
                raise ValidationError(f"invalid pos {part!r}") from None
    else:
        pos_values = sorted({p.pos for p in pairs}, key=lambda p: p.value)
    eval_splits = [
        s for s in (wic.Split.TRAIN, wic.Split.TEST) if any(p.split is s for p in pairs)
    ]
    lines = ["benchmark,pos,layer,split,f1,macro_f1,threshold"]
    for pos in pos_values:
        pos_pairs = [p for p in pairs if p.pos is pos]
        dev = [p for p in pos_pairs if p.split is wic.Split.DEV]
        if not dev:
            if resolved["pos"]:
                raise DataError(f"no dev pairs for pos {pos.value}")
            print(f"skipping pos {pos.value}: no dev pairs", file=sys.stderr)
            continue
        for layer in layers:
            filled = wic.fill_similarities(pos_pairs, store, layer)
            classifier = wic.tune_threshold(
                [p for p in filled if p.split is wic.Split.DEV], layer, pos
            )
            for split in eval_splits:
                subset = [p for p in filled if p.split is split]
                if subset:
                    f1, macro = wic.evaluate(subset, classifier)
                    f1_cell, macro_cell = repr(f1), repr(macro)
                else:
                    f1_cell = macro_cell = ""
                lines.append(
                    f"{benchmark},{pos.value},{layer},{split.value},"
                    f"{f1_cell},{macro_cell},{classifier.threshold!r}"
                )
    (out / "wic_results.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_resolved_config(resolved, "wic sweep", out)
    print(f"wrote {len(lines) - 1} result rows to {out / 'wic_results.csv'}")
    return 0


def cmd_wic_convert_dwug(args) -> int:
    defaults = {
        "judgments": _REQUIRED,
        "split": wic.Split.TEST.value,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    judgments = wic.load_dwug_judgments(resolved["judgments"])
    try:
        split = wic.Split(resolved["split"])
    except ValueError:
        raise ValidationError(f"invalid split {resolved['split']!r}") from None
    pairs, dropped = wic.convert_dwug(judgments, split=split)
    wic.write_wic_pairs(pairs, out / "wic_pairs.jsonl")
    _write_resolved_config(resolved, "wic convert-dwug", out)
    print(f"converted {len(pairs)} pairs, dropped {dropped} -> {out / 'wic_pairs.jsonl'}")
    return 0


def cmd_correlate(args) -> int:
    defaults = {
        "scores": _REQUIRED,
        "gold": _REQUIRED,
        "seed": _REQUIRED,
        "out_dir": _REQUIRED,
    }
    resolved = _resolve(args, defaults)
    out = _out_dir(resolved)
    scores = change.load_scores(resolved["scores"])
    if not scores:
        raise DataError("scores file holds no scored rows")
    gold = replace.load_gold(resolved["gold"])
    _write_correlations(scores, gold, out / "correlations.tsv")
    _write_resolved_config(resolved, "correlate", out)
    print(f"wrote correlations to {out / 'correlations.tsv'}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def _add_common(parser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, help="seed for all randomness (required)")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexshift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replace", help="generate replaced instances per class")
    p.add_argument("--corpus")
    p.add_argument("--lexicon")
    p.add_argument("--classes", help="comma-separated replacement classes")
    p.add_argument("--synthetic-token", dest="synthetic_token")
    p.add_argument("--per-entry", dest="per_entry", action="store_const", const=True,
                   help="emit one instance per lexicon candidate, not just the first "
                        "(feeds the top-k replacement sweep)")
    _add_common(p)
    p.set_defaults(func=cmd_replace)

    p = sub.add_parser("sed", help="per-layer distance table for replaced corpora")
    p.add_argument("--corpus")
    p.add_argument("--manifest")
    p.add_argument("--data")
    p.add_argument("--baseline", help="baseline replacement class for normalization")
    p.add_argument("--pool-pos", dest="pool_pos", action="store_const", const=True,
                   help="pool PoS values instead of per-(layer,pos) baselines")
    _add_common(p)
    p.set_defaults(func=cmd_sed)

    p = sub.add_parser("lsc", help="graded change scores")
    p.add_argument("--method", choices=[m.value for m in change.ScoreMethod])
    p.add_argument("--corpus", action="append", help="corpus JSONL; repeat to merge")
    p.add_argument("--manifest")
    p.add_argument("--data")
    p.add_argument("--layers", help="'all', or comma-separated layer numbers")
    p.add_argument("--targets", help="comma-separated target lemmas (default: all)")
    p.add_argument("--gold", help="gold TSV (lemma, change) for correlation")
    p.add_argument("--substitutes", help="substitutes JSONL for method=substitution")
    p.add_argument("--max-pairs", dest="max_pairs", type=int)
    p.add_argument("--max-sentences", dest="max_sentences", type=int)
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--damping", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--convergence-iter", dest="convergence_iter", type=int)
    p.add_argument("--preference", help="'median' or a fixed number")
    p.add_argument("--ap-similarity", dest="ap_similarity",
                   choices=["negative_squared_euclidean", "cosine"])
    _add_common(p)
    p.set_defaults(func=cmd_lsc)

    p = sub.add_parser("synth", help="build an artificial two-period benchmark")
    p.add_argument("--pool", help="single-period corpus JSONL (period T2)")
    p.add_argument("--specs", help="TSV: lemma, pos, injection rate")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p_wic = sub.add_parser("wic", help="word-in-context harness")
    wic_sub = p_wic.add_subparsers(dest="wic_command", required=True)

    p = wic_sub.add_parser("sweep", help="tune and evaluate threshold classifiers")
    p.add_argument("--pairs")
    p.add_argument("--manifest")
    p.add_argument("--data")
    p.add_argument("--layers")
    p.add_argument("--pos", help="restrict to comma-separated PoS values")
    p.add_argument("--benchmark", help="benchmark name for the results table")
    _add_common(p)
    p.set_defaults(func=cmd_wic_sweep)

    p = wic_sub.add_parser("convert-dwug", help="binarize 1-4 judgments into pairs")
    p.add_argument("--judgments")
    p.add_argument("--split", choices=[s.value for s in wic.Split])
    _add_common(p)
    p.set_defaults(func=cmd_wic_convert_dwug)

    p = sub.add_parser("correlate", help="Spearman correlation of scores against gold")
    p.add_argument("--scores")
    p.add_argument("--gold")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

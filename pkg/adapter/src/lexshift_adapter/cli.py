"""Adapter command line: extract embeddings or generate substitutes.

Reads corpus JSONL, writes the binary embedding exchange format (plus
JSON manifest) or a substitutes JSONL. Exit codes: 0 success, 1 bad
configuration or input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .formats import AdapterError
from .runtime import AdapterConfig, extract, substitutes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexshift-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="per-layer pooled target-word vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="model identifier or local path")
    p.add_argument("--manifest", required=True, help="output manifest JSON path")
    p.add_argument("--data", required=True, help="output binary data path")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--synthetic-token", default=None,
                   help="register this token in the vocabulary before encoding")
    p.add_argument("--include-layer-zero", action="store_true",
                   help="also export the input embedding layer as layer 0")

    p = sub.add_parser("substitutes", help="masked-LM top-n substitutes per usage")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output substitutes JSONL path")
    p.add_argument("--device", default="cpu")
    p.add_argument("--top-n", type=int, default=10)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            config = AdapterConfig(
                model=args.model,
                device=args.device,
                batch_size=args.batch_size,
                include_layer_zero=args.include_layer_zero,
                synthetic_token=args.synthetic_token,
            )
            report = extract(args.corpus, config, args.manifest, args.data)
            print(
                f"wrote {report.written_records} records for {report.written_instances} instances"
            )
            if report.skipped_alignment:
                print(
                    f"skipped {len(report.skipped_alignment)} instances with sub-token "
                    f"misaligned spans: {', '.join(report.skipped_alignment)}"
                )
            if report.skipped_length:
                print(
                    f"skipped {len(report.skipped_length)} instances over the model's "
                    f"input length: {', '.join(report.skipped_length)}"
                )
        else:
            config = AdapterConfig(model=args.model, device=args.device, top_n=args.top_n)
            written = substitutes(args.corpus, config, args.out)
            print(f"wrote substitutes for {written} instances to {args.out}")
        return 0
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: semkit-extract."""

from __future__ import annotations

import argparse
import sys

from .extract import (
    ExtractionManifest,
    extract_answer_embeddings,
    extract_features,
    extract_matrix,
)
from .formats import ExtractionError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semkit-extract",
        description="Dump embeddings, weight matrices, or final-layer features "
        "from a transformer checkpoint into semkit interchange files",
    )
    parser.add_argument("--model", required=True, help="checkpoint directory or file")
    parser.add_argument(
        "--tokenizer", help="tokenizer location (defaults to --model)"
    )
    parser.add_argument("--dataset", help="JSON Lines dataset (for embeddings/features)")
    parser.add_argument(
        "--what",
        required=True,
        help="embeddings | matrix:<tensor or adapter prefix> | features",
    )
    parser.add_argument("--out", required=True, help="output SEMB/SMAT path")
    parser.add_argument(
        "--include-special-tokens",
        action="store_true",
        help="keep BOS/EOS tokens when embedding answer strings (default: drop)",
    )
    return parser


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    manifest = ExtractionManifest(
        model=args.model,
        tokenizer=args.tokenizer or args.model,
        selector=args.what,
        dataset=args.dataset,
        output=args.out,
        include_special_tokens=args.include_special_tokens,
    )
    try:
        if args.what == "embeddings":
            extract_answer_embeddings(manifest)
        elif args.what.startswith("matrix:"):
            extract_matrix(manifest, args.what.split(":", 1)[1])
        elif args.what == "features":
            extract_features(manifest)
        else:
            build_parser().error(f"unknown --what selector {args.what!r}")
    except ExtractionError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except OSError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(list(sys.argv[1:] if argv is None else argv))

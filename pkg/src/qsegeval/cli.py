"""``qsegeval`` command line: one subcommand per harness pipeline.

Exit codes: 0 success, 1 bad input (validation, format, missing file), 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .corpus import FormatError, ValidationError
from .harness import COMMANDS, load_config_file, make_config


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--metrics", help="comma list, e.g. nDCG@5,MAP@10,MRR@10")
    p.add_argument("-v", "--verbose", action="store_true")


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus")
    p.add_argument("--index", help="index file written by `qsegeval index`")
    p.add_argument("--k1", type=float)
    p.add_argument("--b", type=float)


def _inputs(p: argparse.ArgumentParser, judgments=True, segmentations=True) -> None:
    p.add_argument("--queries")
    if segmentations:
        p.add_argument("--segmentations")
        p.add_argument("--strategies", help="comma list; default: all in the file")
        p.add_argument("--max-segments", dest="max_segments", type=int)
    if judgments:
        p.add_argument("--judgments")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsegeval",
                                     description="Evaluate query segmentations by retrieval.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save a positional index")
    _common(p)
    p.add_argument("--corpus")
    p.add_argument("--index", help="output path (default: <out-dir>/index.json)")

    p = sub.add_parser("evaluate", help="QVRS grid, details, significance and multiword reports")
    _common(p)
    _inputs(p)
    _engine_flags(p)
    p.add_argument("--with-bqv", dest="with_bqv", action="store_const", const=True)
    p.add_argument("--with-unsegmented", dest="include_unsegmented",
                   action="store_const", const=True,
                   help="add the all-unquoted baseline as an extra strategy column")
    p.add_argument("--max-length", dest="max_length", type=int)
    p.add_argument("--reference", help="strategy id for a companion matching report")
    p.add_argument("--reference-file", dest="reference_file")

    p = sub.add_parser("bqv", help="best quoted versions over all partitions")
    _common(p)
    _inputs(p, segmentations=False)
    _engine_flags(p)
    p.add_argument("--max-length", dest="max_length", type=int)

    p = sub.add_parser("match", help="matching metrics against a reference, plus Kendall tau")
    _common(p)
    _inputs(p)
    _engine_flags(p)
    p.add_argument("--reference", help="strategy id (from the segmentations or reference file)")
    p.add_argument("--reference-file", dest="reference_file",
                   help="extra segmentations file, e.g. bqv_segmentations.tsv")
    p.add_argument("--with-unsegmented", dest="include_unsegmented",
                   action="store_const", const=True,
                   help="add the all-unquoted baseline as an extra strategy column")

    p = sub.add_parser("iaa", help="inter-annotator agreement tables")
    _common(p)
    p.add_argument("--queries")
    p.add_argument("--segmentations", help="one strategy id per annotator")
    p.add_argument("--annotators", help="comma list of annotator ids (default: all)")
    p.add_argument("--judgments")

    p = sub.add_parser("segment", help="run the PMI or PMI+Wiki segmenter over a query file")
    _common(p)
    p.add_argument("--queries")
    p.add_argument("--train-log", dest="train_log", help="query log, one query per line")
    p.add_argument("--ngrams", help="unigram/bigram count file instead of a log")
    p.add_argument("--threshold", type=float)
    p.add_argument("--dev-segmentations", dest="dev_segmentations")
    p.add_argument("--dev-reference", dest="dev_reference",
                   help="strategy id of the dev reference used for tuning")
    p.add_argument("--titles", help="Wikipedia titles, one per line; enables phase 2")
    p.add_argument("--strategy-id", dest="strategy_id")

    p = sub.add_parser("pool", help="pool results of every quoted version through an adapter")
    _common(p)
    _inputs(p, judgments=False)
    p.add_argument("--adapter", help="local:<corpus.jsonl> or module:callable")
    p.add_argument("--depth", type=int)
    return parser


_NOT_SETTINGS = {"command", "config", "verbose"}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items() if k not in _NOT_SETTINGS}
        config = make_config(file_values, overrides)
        written = COMMANDS[args.command](config)
    except (ValidationError, FormatError, FileNotFoundError) as exc:
        print(f"qsegeval {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # report, don't dump a traceback on users
        logging.getLogger(__name__).debug("runtime failure", exc_info=True)
        print(f"qsegeval {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Write a synthetic collection (queries, segmentations, corpus, judgments) to a directory."""
from __future__ import annotations

import argparse
from pathlib import Path

from qsegeval.corpus import write_corpus, write_judgments, write_queries, write_segmentations
from qsegeval.synthetic import make_collection


def write_collection(coll, out: Path) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / fname for name, fname in (
        ("queries", "queries.tsv"), ("segmentations", "segmentations.tsv"),
        ("corpus", "corpus.jsonl"), ("judgments", "judgments.tsv"))}
    write_queries(coll.queries.values(), paths["queries"])
    write_segmentations(coll.segmentations, paths["segmentations"])
    write_corpus(coll.pool.values(), paths["corpus"])
    write_judgments(coll.judgments, paths["judgments"])
    return paths


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--docs", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    coll = make_collection(args.queries, args.docs, seed=args.seed)
    for name, path in write_collection(coll, args.out).items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()

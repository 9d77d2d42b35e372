"""Run every CLI subcommand over a small synthetic collection and print the text reports."""
from __future__ import annotations

import argparse
from pathlib import Path

from qsegeval.cli import main as qsegeval
from qsegeval.synthetic import make_collection

from make_synthetic import write_collection


def run(*argv: str) -> None:
    print("$ qsegeval", " ".join(argv))
    if qsegeval(list(argv)) != 0:
        raise SystemExit(f"qsegeval {argv[0]} failed")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = {k: str(v) for k, v in write_collection(make_collection(seed=args.seed), args.out / "in").items()}
    out = str(args.out / "out")
    data = ["--queries", p["queries"], "--segmentations", p["segmentations"]]
    engine = ["--index", str(args.out / "out" / "index.json")]
    log = args.out / "in" / "log.txt"
    log.write_text("\n".join(line.split("\t")[1] for line in open(p["queries"])) + "\n")

    run("index", "--corpus", p["corpus"], "--out-dir", out)
    run("evaluate", *data, *engine, "--judgments", p["judgments"], "--out-dir", out,
        "--with-unsegmented", "--with-bqv", "--reference", "gold")
    run("bqv", "--queries", p["queries"], *engine, "--judgments", p["judgments"], "--out-dir", out)
    run("match", *data, *engine, "--judgments", p["judgments"], "--out-dir", out,
        "--reference", "BQV_BF[nDCG@5]", "--reference-file", out + "/bqv_segmentations.tsv")
    run("iaa", *data, "--judgments", p["judgments"], "--out-dir", out)
    run("segment", "--queries", p["queries"], "--train-log", str(log), "--out-dir", out,
        "--dev-segmentations", p["segmentations"], "--dev-reference", "gold")
    for name in ("qvrs.txt", "significance.txt", "bqv.txt", "matching.txt", "iaa.txt"):
        print(f"\n== {name}\n" + (args.out / "out" / name).read_text())


if __name__ == "__main__":
    main()

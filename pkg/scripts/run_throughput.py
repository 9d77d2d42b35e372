"""Time `evaluate` on a large synthetic collection and check that two runs are byte-identical."""
from __future__ import annotations

import argparse
import filecmp
import tempfile
import time
from pathlib import Path

from qsegeval import harness
from qsegeval.synthetic import make_collection

from make_synthetic import write_collection


def run_once(paths: dict[str, Path], out: Path, metrics: str) -> tuple[float, list[Path]]:
    cfg = harness.make_config({}, {**{k: str(v) for k, v in paths.items()},
                                   "out_dir": str(out), "metrics": metrics})
    start = time.perf_counter()
    written = harness.cmd_evaluate(cfg)
    return time.perf_counter() - start, written


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--queries", type=int, default=500)
    ap.add_argument("--docs", type=int, default=14000)
    ap.add_argument("--metrics", default="nDCG@5,MAP@10,MRR@10")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        paths = write_collection(make_collection(args.queries, args.docs, seed=args.seed),
                                 root / "in")
        t1, first = run_once(paths, root / "run1", args.metrics)
        t2, second = run_once(paths, root / "run2", args.metrics)
        same = all(filecmp.cmp(a, b, shallow=False) for a, b in zip(first, second))
        print(f"run 1: {t1:.1f}s  run 2: {t2:.1f}s  byte-identical: {same}")


if __name__ == "__main__":
    main()

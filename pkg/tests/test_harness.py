import json
import logging

import pytest

from qsegeval import harness
from qsegeval.cli import main
from qsegeval.corpus import (ValidationError, write_corpus, write_judgments, write_queries,
                             write_segmentations)
from qsegeval.engine import PositionalIndex, build_index
from qsegeval.irmetrics import MetricSpec
from qsegeval.oracle import bqv_many, qvrs_many
from qsegeval.synthetic import make_collection


def dump(coll, root, strategies=None):
    root.mkdir(parents=True, exist_ok=True)
    segs = [s for s in coll.segmentations if strategies is None or s.strategy_id in strategies]
    write_queries(coll.queries.values(), root / "queries.tsv")
    write_segmentations(segs, root / "segs.tsv")
    write_corpus(coll.pool.values(), root / "corpus.jsonl")
    write_judgments(coll.judgments, root / "judgments.tsv")
    return {"queries": str(root / "queries.tsv"), "segmentations": str(root / "segs.tsv"),
            "corpus": str(root / "corpus.jsonl"), "judgments": str(root / "judgments.tsv")}


@pytest.fixture(scope="module")
def small():
    return make_collection(n_queries=8, n_docs=60, seed=11)


@pytest.fixture
def files(small, tmp_path):
    return dump(small, tmp_path / "in", strategies={"gold", "split"})


def config(files, tmp_path, **kw):
    return harness.make_config({}, {**files, "out_dir": str(tmp_path / "out"), **kw})


class TestConfig:
    def test_flags_win_over_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nmetrics = ndcg@3, map@3\nk1 = 2.0\nout-dir = a\n")
        cfg = harness.make_config(harness.load_config_file(path), {"out_dir": "b", "k1": None})
        assert cfg.out_dir == "b"
        assert cfg.k1 == 2.0
        assert [m.name for m in cfg.metrics] == ["nDCG@3", "MAP@3"]

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown setting"):
            harness.make_config({"colour": "red"})

    def test_missing_path(self, tmp_path):
        cfg = harness.make_config({}, {"queries": str(tmp_path / "nope.tsv")})
        with pytest.raises(ValidationError, match="no such file"):
            cfg.require("queries")

    def test_bad_k(self):
        with pytest.raises(ValidationError):
            harness.make_config({"metrics": "ndcg@0"})


class TestIndex:
    def test_loadable_and_idempotent(self, files, tmp_path):
        cfg = config(files, tmp_path, index=str(tmp_path / "a.json"))
        harness.cmd_index(cfg)
        first = (tmp_path / "a.json").read_bytes()
        harness.cmd_index(cfg)
        assert (tmp_path / "a.json").read_bytes() == first
        assert PositionalIndex.load(tmp_path / "a.json").doc_count == 60

    def test_three_docs(self, tmp_path):
        (tmp_path / "c.jsonl").write_text("".join(
            json.dumps({"doc_id": f"d{i}", "url": "u", "title": "", "body": "x y"}) + "\n"
            for i in range(3)))
        cfg = harness.make_config({}, {"corpus": str(tmp_path / "c.jsonl"),
                                       "out_dir": str(tmp_path / "o")})
        (path,) = harness.cmd_index(cfg)
        assert PositionalIndex.load(path).doc_count == 3

    def test_missing_corpus(self, tmp_path):
        assert main(["index", "--corpus", str(tmp_path / "none.jsonl")]) == 1


class TestEvaluate:
    def test_two_strategy_grid(self, files, tmp_path):
        harness.cmd_evaluate(config(files, tmp_path, metrics="ndcg@5"))
        text = (tmp_path / "out" / "qvrs.txt").read_text()
        header = next(line for line in text.splitlines() if line.startswith("Metric"))
        assert header.split() == ["Metric", "gold", "split"]
        records = [json.loads(line) for line in (tmp_path / "out" / "qvrs.jsonl").open()]
        assert {r["strategy"] for r in records} == {"gold", "split"}

    def test_values_match_library(self, small, files, tmp_path):
        harness.cmd_evaluate(config(files, tmp_path, metrics="map@10"))
        records = {r["strategy"]: r["qvrs"]
                   for r in map(json.loads, (tmp_path / "out" / "qvrs.jsonl").open())}
        segs = {s.qid: s for s in small.segmentations if s.strategy_id == "gold"}
        m = MetricSpec("MAP", 10)
        assert records["gold"] == qvrs_many(small.queries, segs, build_index(small.pool),
                                            small.judgments, [m])[m].qvrs

    def test_reference_is_itself(self, files, tmp_path):
        harness.cmd_evaluate(config(files, tmp_path, metrics="ndcg@5", reference="gold"))
        text = (tmp_path / "out" / "matching.txt").read_text()
        row = next(line for line in text.splitlines() if line.startswith("Qry-Acc"))
        assert row.split()[1] == "1.0000"

    def test_no_judgment_overlap(self, files, tmp_path, caplog):
        (tmp_path / "j.tsv").write_text("other\tdoc\tA\t2\n")
        with caplog.at_level(logging.WARNING):
            harness.cmd_evaluate(config(files, tmp_path, metrics="ndcg@5",
                                        judgments=str(tmp_path / "j.tsv")))
        assert "no judgments" in caplog.text
        records = [json.loads(line) for line in (tmp_path / "out" / "qvrs.jsonl").open()]
        assert all(r["qvrs"] == 0 for r in records)

    def test_outputs_and_bqv_column(self, files, tmp_path):
        written = harness.cmd_evaluate(config(files, tmp_path, metrics="ndcg@5",
                                              with_bqv="true", include_unsegmented="yes"))
        names = {p.name for p in written}
        assert {"qvrs.txt", "qvrs.jsonl", "details.jsonl", "significance.txt",
                "significance.jsonl", "multiword.txt", "multiword.jsonl"} <= names
        header = next(line for line in (tmp_path / "out" / "qvrs.txt").read_text().splitlines()
                      if line.startswith("Metric"))
        assert header.split() == ["Metric", "unsegmented", "gold", "split", "BQV_BF"]

    def test_deterministic(self, files, tmp_path):
        cfg_a = config(files, tmp_path / "a", metrics="ndcg@5,mrr@10")
        cfg_b = config(files, tmp_path / "b", metrics="ndcg@5,mrr@10")
        for a, b in zip(harness.cmd_evaluate(cfg_a), harness.cmd_evaluate(cfg_b)):
            assert a.read_bytes() == b.read_bytes()


class TestBqv:
    def test_matches_library_and_bounds_strategies(self, small, files, tmp_path):
        harness.cmd_bqv(config(files, tmp_path, metrics="ndcg@5"))
        m = MetricSpec("nDCG", 5)
        index = build_index(small.pool)
        reports, skipped = bqv_many(small.queries, index, small.judgments, [m])
        lines = (tmp_path / "out" / "bqv_segmentations.tsv").read_text().splitlines()
        assert len(lines) == len(small.queries) and not skipped
        for qid, res in reports[m].per_query.items():
            assert f"{qid}\tBQV_BF[nDCG@5]\t" in "\n".join(lines)
        for name in ("gold", "split"):
            segs = {s.qid: s for s in small.segmentations if s.strategy_id == name}
            assert reports[m].qvrs >= qvrs_many(small.queries, segs, index, small.judgments,
                                                [m])[m].qvrs

    def test_one_word_queries(self, tmp_path):
        (tmp_path / "q.tsv").write_text("q1\talpha\nq2\tbeta\n")
        (tmp_path / "c.jsonl").write_text(
            json.dumps({"doc_id": "d", "url": "u", "title": "", "body": "alpha"}) + "\n")
        (tmp_path / "j.tsv").write_text("q1\td\tA\t2\n")
        cfg = harness.make_config({}, {"queries": str(tmp_path / "q.tsv"),
                                       "corpus": str(tmp_path / "c.jsonl"),
                                       "judgments": str(tmp_path / "j.tsv"),
                                       "metrics": "mrr@5", "out_dir": str(tmp_path / "o")})
        harness.cmd_bqv(cfg)
        rows = [json.loads(line) for line in (tmp_path / "o" / "bqv.jsonl").open()]
        assert [r["best_version"] for r in rows] == ["alpha", "beta"]

    def test_skipped_count(self, files, tmp_path):
        harness.cmd_bqv(config(files, tmp_path, metrics="ndcg@5", max_length=5))
        text = (tmp_path / "out" / "bqv.txt").read_text()
        assert "queries skipped:" in text
        skipped = int(text.split("queries skipped:")[1].split()[0])
        assert skipped > 0


class TestMatch:
    def test_reference_itself_and_two_strategy_tau(self, files, tmp_path):
        harness.cmd_match(config(files, tmp_path, reference="gold", metrics="ndcg@5"))
        rows = [json.loads(line) for line in (tmp_path / "out" / "matching.jsonl").open()]
        gold = next(r for r in rows if r.get("strategy") == "gold")
        assert all(gold[n] == 1.0 for n in ("Qry-Acc", "Seg-Prec", "Seg-Rec", "Seg-F", "Seg-Acc"))
        # only one strategy left besides the reference: no tau table
        assert not any("kendall_tau" in r for r in rows)

    def test_tau_against_bqv_reference(self, small, tmp_path):
        files = dump(small, tmp_path / "in", strategies={"gold", "split", "joined"})
        harness.cmd_bqv(config(files, tmp_path, metrics="ndcg@5"))
        bqv = str(tmp_path / "out" / "bqv_segmentations.tsv")
        harness.cmd_match(config(files, tmp_path, metrics="ndcg@5", reference="BQV_BF[nDCG@5]",
                                 reference_file=bqv))
        rows = [json.loads(line) for line in (tmp_path / "out" / "matching.jsonl").open()]
        taus = [r["kendall_tau"] for r in rows if "kendall_tau" in r]
        assert len(taus) == 5
        assert all(-1 <= t <= 1 or t != t for t in taus)

    def test_unknown_reference(self, files, tmp_path):
        with pytest.raises(ValidationError, match="unknown reference"):
            harness.cmd_match(config(files, tmp_path, reference="nobody"))


class TestIaaAndSegment:
    def test_iaa_tables(self, small, tmp_path):
        files = dump(small, tmp_path / "in", strategies={"gold", "split", "joined"})
        harness.cmd_iaa(config(files, tmp_path))
        text = (tmp_path / "out" / "iaa.txt").read_text()
        assert "ref=gold" in text and "Mean" in text and "Rel. judg." in text

    def test_iaa_single_annotator(self, small, tmp_path):
        files = dump(small, tmp_path / "in", strategies={"gold"})
        with pytest.raises(ValidationError):
            harness.cmd_iaa(config(files, tmp_path, judgments=None))

    def test_segment_with_tuning(self, small, files, tmp_path):
        log = tmp_path / "log.txt"
        log.write_text("\n".join(q.text for q in small.queries.values()) * 3)
        cfg = config(files, tmp_path, train_log=str(log), dev_segmentations=files["segmentations"],
                     dev_reference="gold")
        (path,) = harness.cmd_segment(cfg)
        lines = path.read_text().splitlines()
        assert len(lines) == len(small.queries)
        assert all(line.split("\t")[1] == "PMI" for line in lines)


class TestCli:
    def test_evaluate_exit_zero(self, files, tmp_path, capsys):
        rc = main(["evaluate", "--queries", files["queries"], "--segmentations",
                   files["segmentations"], "--judgments", files["judgments"], "--corpus",
                   files["corpus"], "--metrics", "ndcg@5", "--out-dir", str(tmp_path / "o")])
        assert rc == 0
        assert "qvrs.txt" in capsys.readouterr().out

    def test_validation_exit_one(self, files, tmp_path):
        assert main(["match", "--queries", files["queries"], "--segmentations",
                     files["segmentations"], "--reference", "nobody",
                     "--out-dir", str(tmp_path / "o")]) == 1

    def test_runtime_exit_two(self, files, tmp_path, monkeypatch):
        def broken(config):
            raise RuntimeError("disk full")

        monkeypatch.setitem(harness.COMMANDS, "index", broken)
        assert main(["index", "--corpus", files["corpus"], "--out-dir", str(tmp_path / "o")]) == 2

    def test_config_file(self, files, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("".join(f"{k} = {v}\n" for k, v in files.items()) + "metrics = mrr@5\n")
        assert main(["evaluate", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "qvrs.txt").read_text().splitlines()[4].startswith("MRR@5")

    def test_pool_local(self, files, tmp_path):
        assert main(["pool", "--queries", files["queries"], "--segmentations",
                     files["segmentations"], "--adapter", "local:" + files["corpus"],
                     "--out-dir", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "pool.jsonl").stat().st_size > 0

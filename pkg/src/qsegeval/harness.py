"""Experiment pipelines behind the command-line subcommands.

Every ``cmd_*`` function takes a :class:`RunConfig`, writes its reports into
``config.out_dir`` and returns the paths it wrote. Output order always follows
input order, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import dataclasses
import importlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import matchmetrics as mm
from .corpus import (JudgmentSet, QuerySet, Segmentation, ValidationError,
                     group_by_strategy, load_corpus, load_judgments, load_queries,
                     load_segmentations, read_lines, tokenize, write_corpus,
                     write_segmentations)
from .engine import EngineParams, LocalEngine, PositionalIndex, build_index
from .irmetrics import DEFAULT_METRICS, MetricSpec
from .oracle import (BQV_STRATEGY, build_pool, bqv_many, multiword_distribution,
                     paired_t_test, qvrs_many)
from .quotegen import DEFAULT_LENGTH_CAP, DEFAULT_SEGMENT_CAP, render, version_segmentation
from .reports import fmt, grid, write_jsonl, write_text
from .segmenters import (load_ngram_counts, load_titles, pmi_phase1, segment_pmi,
                         stem_tokens, train_pmi, tune_pmi_threshold, wiki_boost,
                         wiki_segmenter)

log = logging.getLogger(__name__)

UNSEGMENTED = "unsegmented"
PATH_FIELDS = ("queries", "segmentations", "corpus", "judgments", "titles", "index",
               "reference_file", "train_log", "ngrams", "dev_segmentations")


@dataclass
class RunConfig:
    queries: str | None = None
    segmentations: str | None = None
    corpus: str | None = None
    judgments: str | None = None
    titles: str | None = None
    index: str | None = None
    out_dir: str = "out"
    metrics: tuple[MetricSpec, ...] = DEFAULT_METRICS
    k1: float = 1.2
    b: float = 0.75
    max_segments: int = DEFAULT_SEGMENT_CAP
    max_length: int = DEFAULT_LENGTH_CAP
    strategies: tuple[str, ...] = ()
    include_unsegmented: bool = False
    with_bqv: bool = False
    reference: str | None = None
    reference_file: str | None = None
    annotators: tuple[str, ...] = ()
    depth: int = 10
    adapter: str | None = None
    train_log: str | None = None
    ngrams: str | None = None
    threshold: float | None = None
    dev_segmentations: str | None = None
    dev_reference: str | None = None
    strategy_id: str | None = None

    @property
    def engine_params(self) -> EngineParams:
        return EngineParams(self.k1, self.b)

    def require(self, *names: str) -> None:
        """Check that the named settings are present and that paths exist."""
        for name in names:
            value = getattr(self, name)
            if value in (None, "", ()):
                raise ValidationError(f"missing required setting {name!r}")
        for name in PATH_FIELDS:
            value = getattr(self, name)
            if value and name != "index" and not Path(value).exists():
                raise ValidationError(f"{name}: no such file {value!r}")
        if any(m.k < 1 for m in self.metrics):
            raise ValidationError("metric cutoffs must be >= 1")

    def output(self, name: str) -> Path:
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / name


_CONVERTERS = {
    "metrics": lambda v: tuple(MetricSpec.parse(x) for x in _split_list(v)),
    "strategies": lambda v: tuple(_split_list(v)),
    "annotators": lambda v: tuple(_split_list(v)),
    "include_unsegmented": lambda v: _parse_bool(v),
    "with_bqv": lambda v: _parse_bool(v),
    "k1": float, "b": float, "threshold": float,
    "max_segments": int, "max_length": int, "depth": int,
}


def _split_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [x.strip() for x in str(value).split(",") if x.strip()]


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {value!r}")


def load_config_file(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    values = {}
    for lineno, line in enumerate(read_lines(path), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def make_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a config from file values, then flag overrides (flags win)."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    merged = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                raise ValidationError(f"unknown setting {key!r}")
            merged[key] = _CONVERTERS.get(key, lambda v: v)(value)
    return RunConfig(**merged)


# -- loading helpers --------------------------------------------------------

def _load_engine(config: RunConfig) -> LocalEngine:
    if config.index and Path(config.index).exists():
        index = PositionalIndex.load(config.index)
    elif config.corpus:
        index = build_index(load_corpus(config.corpus))
    else:
        raise ValidationError("need an index file or a corpus to search")
    return LocalEngine(index, config.engine_params)


def _load_strategies(config: RunConfig, queries: QuerySet) -> dict[str, dict[str, Segmentation]]:
    by_strategy = group_by_strategy(load_segmentations(config.segmentations, queries))
    if config.strategies:
        unknown = [s for s in config.strategies if s not in by_strategy]
        if unknown:
            raise ValidationError(f"unknown strategies {unknown}")
        by_strategy = {s: by_strategy[s] for s in config.strategies}
    return by_strategy


def _with_unsegmented(config: RunConfig, queries: QuerySet, by_strategy: dict) -> dict:
    if not config.include_unsegmented or UNSEGMENTED in by_strategy:
        return by_strategy
    unseg = {qid: Segmentation.unsegmented(q, UNSEGMENTED) for qid, q in queries.items()}
    return {UNSEGMENTED: unseg, **by_strategy}


def _warn_on_judgment_overlap(queries: QuerySet, judgments: JudgmentSet) -> None:
    if not any(judgments.for_query(qid) for qid in queries):
        log.warning("no judgments for any query in the test set; every metric will be 0")


# -- index ------------------------------------------------------------------

def cmd_index(config: RunConfig) -> list[Path]:
    config.require("corpus")
    index = build_index(load_corpus(config.corpus))
    path = Path(config.index) if config.index else config.output("index.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    index.save(path)
    log.info("indexed %d documents into %s", index.doc_count, path)
    return [path]


# -- evaluate ---------------------------------------------------------------

def _qvrs_table(config, reports) -> str:
    strategies = list(reports)
    cells = {(m.name, s): reports[s][m].qvrs for s in strategies for m in config.metrics}
    return grid("QVRS (mean oracle score)", [m.name for m in config.metrics], strategies,
                cells, corner="Metric")


def _significance(config, reports) -> tuple[str, list[dict]]:
    strategies = [s for s in reports if s != BQV_STRATEGY]
    text, records = [], []
    for m in config.metrics:
        cells = {}
        for a in strategies:
            for b in strategies:
                if a == b:
                    continue
                res = paired_t_test(reports[a][m].scores(), reports[b][m].scores())
                cells[a, b] = fmt(res.p) + ("*" if res.significant else "")
                if a < b:
                    records.append({"metric": m.name, "a": a, "b": b, "t": res.t,
                                    "p": res.p, "significant": res.significant})
        text.append(grid(f"Paired t-test p-values, {m.name} (* p < 0.05)",
                         strategies, strategies, cells, corner="A \\ B"))
    return "\n".join(text), records


def _multiword(by_strategy) -> tuple[str, list[dict]]:
    dists = {s: multiword_distribution(segs.values()) for s, segs in by_strategy.items()}
    buckets = sorted({k for d in dists.values() for k in d})
    cells = {(str(k), s): d.get(k, 0.0) for s, d in dists.items() for k in buckets}
    text = grid("Fraction of queries by number of multiword segments",
                [str(k) for k in buckets], list(dists), cells, corner="#multiword")
    records = [{"strategy": s, "multiword_segments": k, "fraction": f}
               for s, d in dists.items() for k, f in d.items()]
    return text, records


def _match_grid(title, scores: dict[str, mm.MatchScores]) -> str:
    cells = {(name, s): value for s, ms in scores.items() for name, value in ms.as_dict().items()}
    return grid(title, list(mm.METRIC_NAMES), list(scores), cells, corner="Metric")


def evaluate_strategies(config: RunConfig, queries, by_strategy, engine, judgments) -> dict:
    """``strategy -> metric -> QvrsReport`` (BQV_BF column appended when requested)."""
    reports = {}
    for name, segs in by_strategy.items():
        log.info("evaluating %s", name)
        reports[name] = qvrs_many(queries, segs, engine, judgments, config.metrics, name,
                                  config.max_segments)
    if config.with_bqv:
        bqv, skipped = bqv_many(queries, engine, judgments, config.metrics, config.max_length)
        if skipped:
            log.warning("BQV_BF skipped %d queries over the length cap", len(skipped))
        reports[BQV_STRATEGY] = bqv
    return reports


def cmd_evaluate(config: RunConfig) -> list[Path]:
    config.require("queries", "segmentations", "judgments")
    queries = load_queries(config.queries)
    by_strategy = _with_unsegmented(config, queries, _load_strategies(config, queries))
    judgments = load_judgments(config.judgments)
    _warn_on_judgment_overlap(queries, judgments)
    engine = _load_engine(config)
    reports = evaluate_strategies(config, queries, by_strategy, engine, judgments)

    written = []
    path = config.output("qvrs.txt")
    write_text(_qvrs_table(config, reports), path)
    written.append(path)

    path = config.output("qvrs.jsonl")
    write_jsonl(({"strategy": s, "metric": m.name, "qvrs": r.qvrs, "queries": len(r.per_query)}
                 for s, per_metric in reports.items() for m, r in per_metric.items()), path)
    written.append(path)

    path = config.output("details.jsonl")
    write_jsonl(({"strategy": s, "metric": m.name, "qid": qid,
                  "best_version": render(res.best_version), "best_score": res.best_score,
                  "min_version": render(res.min_version), "min_score": res.min_score,
                  "versions": len(res.per_version_scores)}
                 for s, per_metric in reports.items() for m, r in per_metric.items()
                 for qid, res in r.per_query.items()), path)
    written.append(path)

    if len([s for s in reports if s != BQV_STRATEGY]) >= 2 and len(queries) >= 2:
        text, records = _significance(config, reports)
        for name, payload in (("significance.txt", text), ("significance.jsonl", records)):
            path = config.output(name)
            write_text(payload, path) if name.endswith(".txt") else write_jsonl(payload, path)
            written.append(path)

    text, records = _multiword(by_strategy)
    write_text(text, config.output("multiword.txt"))
    write_jsonl(records, config.output("multiword.jsonl"))
    written += [config.output("multiword.txt"), config.output("multiword.jsonl")]

    if config.reference:
        reference = _resolve_reference(config, queries, by_strategy)
        scores = {s: mm.match_scores(segs, reference) for s, segs in by_strategy.items()}
        path = config.output("matching.txt")
        write_text(_match_grid(f"Matching metrics against {config.reference}", scores), path)
        written.append(path)
    return written


# -- bqv --------------------------------------------------------------------

def bqv_strategy_id(metric: MetricSpec) -> str:
    return f"{BQV_STRATEGY}[{metric.name}]"


def cmd_bqv(config: RunConfig) -> list[Path]:
    config.require("queries", "judgments")
    queries = load_queries(config.queries)
    judgments = load_judgments(config.judgments)
    _warn_on_judgment_overlap(queries, judgments)
    engine = _load_engine(config)
    reports, skipped = bqv_many(queries, engine, judgments, config.metrics, config.max_length)

    cells = {(m.name, BQV_STRATEGY): r.qvrs for m, r in reports.items()}
    text = grid("Best quoted versions by brute force", [m.name for m in config.metrics],
                [BQV_STRATEGY], cells, corner="Metric")
    text += f"queries evaluated: {len(queries) - len(skipped)}\nqueries skipped: {len(skipped)}\n"
    paths = [config.output("bqv.txt"), config.output("bqv.jsonl"),
             config.output("bqv_segmentations.tsv")]
    write_text(text, paths[0])
    write_jsonl(({"metric": m.name, "qid": qid, "best_version": render(res.best_version),
                  "best_score": res.best_score, "versions": len(res.per_version_scores)}
                 for m, r in reports.items() for qid, res in r.per_query.items()), paths[1])
    write_segmentations((version_segmentation(res.best_version, bqv_strategy_id(m))
                         for m, r in reports.items() for res in r.per_query.values()), paths[2])
    return paths


# -- match ------------------------------------------------------------------

def _resolve_reference(config: RunConfig, queries, by_strategy) -> dict[str, Segmentation]:
    if config.reference_file:
        extra = group_by_strategy(load_segmentations(config.reference_file, queries))
        if config.reference in extra:
            return extra[config.reference]
    if config.reference in by_strategy:
        return by_strategy[config.reference]
    raise ValidationError(f"unknown reference {config.reference!r}")


def cmd_match(config: RunConfig) -> list[Path]:
    config.require("queries", "segmentations", "reference")
    queries = load_queries(config.queries)
    by_strategy = _with_unsegmented(config, queries, _load_strategies(config, queries))
    reference = _resolve_reference(config, queries, by_strategy)
    scores = {s: mm.match_scores(segs, reference) for s, segs in by_strategy.items()}
    text = _match_grid(f"Matching metrics against {config.reference}", scores)
    records = [{"strategy": s, "reference": config.reference, **ms.as_dict()}
               for s, ms in scores.items()]
    paths = [config.output("matching.txt"), config.output("matching.jsonl")]

    if config.judgments and (config.index or config.corpus):
        judgments = load_judgments(config.judgments)
        engine = _load_engine(config)
        ranked = {s: segs for s, segs in by_strategy.items() if s != config.reference}
        if len(ranked) >= 2:
            ir = {s: qvrs_many(queries, segs, engine, judgments, config.metrics, s,
                               config.max_segments)
                  for s, segs in ranked.items()}
            cells = {}
            for m in config.metrics:
                ir_scores = {s: ir[s][m].qvrs for s in ranked}
                for name in mm.METRIC_NAMES:
                    match_scores = {s: scores[s].as_dict()[name] for s in ranked}
                    tau = mm.kendall_tau(ir_scores, match_scores)
                    cells[m.name, name] = tau
                    records.append({"ir_metric": m.name, "matching_metric": name,
                                    "kendall_tau": tau})
            text += "\n" + grid("Kendall tau between IR and matching rankings",
                                [m.name for m in config.metrics], list(mm.METRIC_NAMES),
                                cells, corner="IR metric")
        else:
            log.warning("fewer than 2 strategies besides the reference; no Kendall table")
    write_text(text, paths[0])
    write_jsonl(records, paths[1])
    return paths


# -- iaa --------------------------------------------------------------------

def cmd_iaa(config: RunConfig) -> list[Path]:
    if not config.segmentations and not config.judgments:
        raise ValidationError("iaa needs segmentations and/or judgments")
    config.require()
    text, records = "", []
    if config.segmentations:
        config.require("queries")
        queries = load_queries(config.queries)
        by_strategy = group_by_strategy(load_segmentations(config.segmentations, queries))
        names = list(config.annotators) or list(by_strategy)
        unknown = [n for n in names if n not in by_strategy]
        if unknown:
            raise ValidationError(f"unknown annotators {unknown}")
        table = mm.iaa_segmentation({n: by_strategy[n] for n in names})
        cols = [f"ref={n}" if n != "Mean" else n for n in table]
        cells = {(metric, col): value for col, ms in zip(cols, table.values())
                 for metric, value in ms.as_dict().items()}
        text += grid("Segmentation agreement (others scored against each reference)",
                     list(mm.METRIC_NAMES), cols, cells, corner="Feature")
        records += [{"kind": "segmentation", "reference": n, **ms.as_dict()}
                    for n, ms in table.items()]
    if config.judgments:
        agreement = mm.iaa_judgments(load_judgments(config.judgments))
        cols = [f"{a}-{b}" for a, b in agreement]
        values = list(agreement.values())
        cells = {("Rel. judg.", c): v for c, v in zip(cols, values)}
        if values:
            cells["Rel. judg.", "Mean"] = sum(values) / len(values)
        text += ("\n" if text else "") + grid(
            "Relevance judgment agreement (only 0 vs 2 disagrees)",
            ["Rel. judg."], [*cols, "Mean"], cells, corner="Feature")
        records += [{"kind": "judgment", "pair": f"{a}-{b}", "agreement": v}
                    for (a, b), v in agreement.items()]
    paths = [config.output("iaa.txt"), config.output("iaa.jsonl")]
    write_text(text, paths[0])
    write_jsonl(records, paths[1])
    return paths


# -- segment ----------------------------------------------------------------

def _train_model(config: RunConfig, stemmed: bool):
    if config.ngrams:
        return load_ngram_counts(config.ngrams)
    if not config.train_log:
        raise ValidationError("segment needs train_log or ngrams")
    streams = [tokenize(line) for line in read_lines(config.train_log)]
    streams = [s for s in streams if s]
    if stemmed:
        streams = [list(stem_tokens(s)) for s in streams]
    return train_pmi(streams)


def cmd_segment(config: RunConfig) -> list[Path]:
    config.require("queries")
    queries = load_queries(config.queries)
    wiki = bool(config.titles)
    model = _train_model(config, stemmed=wiki)
    if config.threshold is not None:
        threshold = config.threshold
    elif config.dev_segmentations and config.dev_reference:
        dev = [s for s in load_segmentations(config.dev_segmentations, queries)
               if s.strategy_id == config.dev_reference]
        if not dev:
            raise ValidationError(f"no dev segmentations for {config.dev_reference!r}")
        dev_queries = [queries[s.qid] for s in dev]
        if wiki:
            dev_queries = [dataclasses.replace(q, tokens=stem_tokens(q.tokens))
                           for q in dev_queries]
            dev = [dataclasses.replace(s, tokens=stem_tokens(s.tokens)) for s in dev]
        threshold = tune_pmi_threshold(model, dev_queries, {s.qid: s for s in dev})
        log.info("tuned PMI threshold: %s", threshold)
    else:
        threshold = 0.0
    model = dataclasses.replace(model, threshold=threshold)

    if wiki:
        strategy = config.strategy_id or "PMI+Wiki"
        if not config.train_log:
            raise ValidationError("the Wikipedia refinement needs a train_log query log")
        log_queries = [stem_tokens(tokenize(line)) for line in read_lines(config.train_log)]
        qprime = [Segmentation(f"log{i}", "phase1", toks, model.boundaries(toks))
                  for i, toks in enumerate(log_queries) if toks]
        table = wiki_boost(qprime, load_titles(config.titles), pmi_phase1(model))
        segment = wiki_segmenter(model, table, strategy)
    else:
        strategy = config.strategy_id or "PMI"
        segment = lambda q: segment_pmi(model, q, strategy)
    path = config.output(f"{strategy}.segmentations.tsv")
    write_segmentations((segment(q) for q in queries.values()), path)
    return [path]


# -- pool -------------------------------------------------------------------

def load_adapter(spec: str):
    """``local:<corpus.jsonl>`` or ``package.module:callable``; returns (adapter, lookup)."""
    if spec.startswith("local:"):
        pool = load_corpus(spec[len("local:"):])
        return LocalEngine(build_index(pool), pool=pool).documents, None
    module_name, sep, attr = spec.partition(":")
    if not sep:
        raise ValidationError(f"adapter must be local:<path> or module:callable, got {spec!r}")
    try:
        target = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as exc:
        raise ValidationError(f"cannot load adapter {spec!r}: {exc}") from None
    return target, None


def cmd_pool(config: RunConfig) -> list[Path]:
    config.require("queries", "segmentations", "adapter")
    queries = load_queries(config.queries)
    segs = [s for segs in _load_strategies(config, queries).values() for s in segs.values()]
    adapter, lookup = load_adapter(config.adapter)
    pool = build_pool(queries, segs, adapter, config.depth, lookup, config.max_segments)
    path = config.output("pool.jsonl")
    write_corpus(pool.values(), path)
    log.info("pooled %d unique documents", len(pool))
    return [path]


COMMANDS = {
    "index": cmd_index,
    "evaluate": cmd_evaluate,
    "bqv": cmd_bqv,
    "match": cmd_match,
    "iaa": cmd_iaa,
    "segment": cmd_segment,
    "pool": cmd_pool,
}

"""Oracle scores over quoted versions, QVRS aggregation and the analyses built on them."""
from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

from scipy import stats

from .corpus import (Document, DocumentPool, JudgmentSet, Query, QuerySet,
                     Segmentation, ValidationError)
from .engine import LocalEngine
from .irmetrics import MetricSpec, evaluate
from .quotegen import (DEFAULT_LENGTH_CAP, DEFAULT_SEGMENT_CAP, QuotedVersion,
                       enumerate_all_partitions, generate_versions, render)

log = logging.getLogger(__name__)

BQV_STRATEGY = "BQV_BF"
ALPHA = 0.05


@dataclass(frozen=True)
class OracleResult:
    qid: str
    strategy_id: str
    metric: MetricSpec
    best_version: QuotedVersion
    best_score: float
    per_version_scores: Mapping[QuotedVersion, float]
    min_score: float

    @property
    def min_version(self) -> QuotedVersion:
        return min(self.per_version_scores,
                   key=lambda v: (self.per_version_scores[v], v.bitmask))


@dataclass(frozen=True)
class QvrsReport:
    strategy_id: str
    metric: MetricSpec
    qvrs: float
    per_query: Mapping[str, OracleResult]

    def scores(self) -> list[float]:
        return [r.best_score for r in self.per_query.values()]


def _engine(index) -> LocalEngine:
    return index if isinstance(index, LocalEngine) else LocalEngine(index)


def score_versions(qid: str, versions: Sequence[QuotedVersion], index,
                   judgments: JudgmentSet,
                   metrics: Sequence[MetricSpec]) -> dict[MetricSpec, dict[QuotedVersion, float]]:
    """Score every version under every metric, searching each version once."""
    engine = _engine(index)
    depth = max(m.k for m in metrics)
    out: dict[MetricSpec, dict[QuotedVersion, float]] = {m: {} for m in metrics}
    for v in versions:
        ranked = engine.search(v, depth).doc_ids
        for m in metrics:
            out[m][v] = evaluate(m, qid, ranked, judgments)
    return out


def select_oracle(qid: str, strategy_id: str, metric: MetricSpec,
                  scores: Mapping[QuotedVersion, float]) -> OracleResult:
    """Pick the best version; ties go to fewer quoted clauses, then the lower bitmask."""
    if not scores:
        raise ValidationError(f"no versions to score for {qid!r}")
    best = min(scores, key=lambda v: (-scores[v], v.n_quoted, v.bitmask))
    return OracleResult(qid, strategy_id, metric, best, scores[best], dict(scores),
                        min(scores.values()))


def oracle_score(query: Query, seg: Segmentation, index, judgments: JudgmentSet,
                 metric: MetricSpec, max_segments: int = DEFAULT_SEGMENT_CAP) -> OracleResult:
    versions = generate_versions(seg, query, max_segments)
    scores = score_versions(query.qid, versions, index, judgments, [metric])[metric]
    return select_oracle(query.qid, seg.strategy_id, metric, scores)


def bqv_brute_force(query: Query, index, judgments: JudgmentSet, metric: MetricSpec,
                    max_length: int = DEFAULT_LENGTH_CAP) -> OracleResult:
    """Oracle over every contiguous partition of the query, independent of any segmenter."""
    versions = enumerate_all_partitions(query, max_length)
    scores = score_versions(query.qid, versions, index, judgments, [metric])[metric]
    return select_oracle(query.qid, BQV_STRATEGY, metric, scores)


def _check_coverage(queries: QuerySet, segs: Mapping[str, Segmentation], strategy: str):
    missing = [qid for qid in queries if qid not in segs]
    if missing:
        raise ValidationError(
            f"strategy {strategy!r} has no segmentation for {len(missing)} "
            f"queries: {', '.join(missing)}")


def qvrs_many(queries: QuerySet, segs: Mapping[str, Segmentation], index,
              judgments: JudgmentSet, metrics: Sequence[MetricSpec],
              strategy_id: str | None = None,
              max_segments: int = DEFAULT_SEGMENT_CAP) -> dict[MetricSpec, QvrsReport]:
    """QVRS for one strategy under several metrics, sharing the searches."""
    if not queries:
        raise ValidationError("empty query set")
    if strategy_id is None:
        strategy_id = next(iter(segs.values())).strategy_id if segs else "?"
    _check_coverage(queries, segs, strategy_id)
    engine = _engine(index)
    per_query: dict[MetricSpec, dict[str, OracleResult]] = {m: {} for m in metrics}
    for qid, query in queries.items():
        versions = generate_versions(segs[qid], query, max_segments)
        scored = score_versions(qid, versions, engine, judgments, metrics)
        for m in metrics:
            per_query[m][qid] = select_oracle(qid, strategy_id, m, scored[m])
    return {m: QvrsReport(strategy_id, m, _mean(r.best_score for r in per_query[m].values()),
                          per_query[m])
            for m in metrics}


def qvrs(queries: QuerySet, segs: Mapping[str, Segmentation], index,
         judgments: JudgmentSet, metric: MetricSpec, strategy_id: str | None = None,
         max_segments: int = DEFAULT_SEGMENT_CAP) -> QvrsReport:
    """Mean oracle score of one strategy over the query set."""
    return qvrs_many(queries, segs, index, judgments, [metric], strategy_id,
                     max_segments)[metric]


def bqv_many(queries: QuerySet, index, judgments: JudgmentSet,
             metrics: Sequence[MetricSpec],
             max_length: int = DEFAULT_LENGTH_CAP) -> tuple[dict[MetricSpec, QvrsReport], list[str]]:
    """Brute-force QVRS; queries over the length cap are skipped and returned."""
    engine = _engine(index)
    per_query: dict[MetricSpec, dict[str, OracleResult]] = {m: {} for m in metrics}
    skipped = []
    for qid, query in queries.items():
        try:
            versions = enumerate_all_partitions(query, max_length)
        except ValidationError as exc:
            log.warning("skipping %s: %s", qid, exc)
            skipped.append(qid)
            continue
        scored = score_versions(qid, versions, engine, judgments, metrics)
        for m in metrics:
            per_query[m][qid] = select_oracle(qid, BQV_STRATEGY, m, scored[m])
    reports = {m: QvrsReport(BQV_STRATEGY, m,
                             _mean(r.best_score for r in per_query[m].values()),
                             per_query[m])
               for m in metrics}
    return reports, skipped


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else 0.0


PoolAdapter = Callable[[str, int], Sequence["Document | str"]]


def build_pool(queries: QuerySet, segmentations: Iterable[Segmentation],
               adapter: PoolAdapter, depth: int = 10,
               lookup: Mapping[str, Document] | None = None,
               max_segments: int = DEFAULT_SEGMENT_CAP) -> DocumentPool:
    """Union of the top-``depth`` results of every quoted version of every
    strategy's segmentation, deduplicated by URL.

    The adapter receives a rendered version string and the depth. It may return
    :class:`Document` objects, or doc ids that are resolved through ``lookup``.
    Adapter failures are logged and skipped.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    issued = set()
    by_url: dict[str, Document] = {}
    ids: set[str] = set()
    for seg in segmentations:
        query = queries.get(seg.qid)
        if query is None:
            raise ValidationError(f"unknown qid {seg.qid!r}")
        for v in generate_versions(seg, query, max_segments):
            text = render(v)
            if text in issued:
                continue
            issued.add(text)
            try:
                results = list(adapter(text, depth))[:depth]
            except Exception as exc:  # live engines fail in arbitrary ways
                log.warning("adapter failed for %r: %s", text, exc)
                continue
            for item in results:
                doc = item
                if isinstance(item, str):
                    if lookup is None or item not in lookup:
                        log.warning("cannot resolve result %r for %r", item, text)
                        continue
                    doc = lookup[item]
                if doc.url in by_url:
                    continue
                if doc.doc_id in ids:
                    log.warning("doc_id %r reused for a different URL %r; dropped",
                                doc.doc_id, doc.url)
                    continue
                by_url[doc.url] = doc
                ids.add(doc.doc_id)
    return DocumentPool(by_url.values())


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool

    def __iter__(self):
        return iter((self.t, self.p, self.significant))


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float],
                  alpha: float = ALPHA) -> TTestResult:
    """Two-sided paired t-test on per-query scores."""
    if len(scores_a) != len(scores_b):
        raise ValidationError(f"paired samples differ in length: {len(scores_a)} vs {len(scores_b)}")
    n = len(scores_a)
    if n < 2:
        raise ValidationError("paired t-test needs at least 2 pairs")
    diffs = [a - b for a, b in zip(scores_a, scores_b)]
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False)
        return TTestResult(math.copysign(math.inf, mean), 0.0, True)
    t = mean / math.sqrt(var / n)
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return TTestResult(t, p, p < alpha)


def multiword_distribution(segs: Iterable[Segmentation]) -> dict[int, float]:
    """Fraction of queries having each number of multiword segments."""
    counts = Counter(sum(len(s) >= 2 for s in seg.segments()) for seg in segs)
    total = sum(counts.values())
    return {m: counts[m] / total for m in sorted(counts)}

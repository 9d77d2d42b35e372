"""Cutoff IR metrics over a ranked list, judged against averaged graded ratings.

DCG follows the discount used throughout the framework: the rank-1 gain is
undiscounted and rank ``j >= 2`` is divided by ``log2(j)``, so ranks 1 and 2
carry equal weight.
"""
from __future__ import annotations

import math
import re
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from .corpus import JudgmentSet, ValidationError

KINDS = ("nDCG", "MAP", "MRR")


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    k: int
    map_threshold: Real = 1
    mrr_threshold: Real = 2
    normalize_dcg: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown metric kind {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise ValidationError(f"metric cutoff must be >= 1, got {self.k}")
        for t in (self.map_threshold, self.mrr_threshold):
            if not 0 < t <= 2:
                raise ValidationError(f"relevance threshold {t} outside (0, 2]")

    @property
    def name(self) -> str:
        kind = self.kind if self.kind != "nDCG" or self.normalize_dcg else "DCG"
        return f"{kind}@{self.k}"

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, text: str, **kwargs) -> "MetricSpec":
        """Parse names like ``ndcg@10``, ``MAP@5`` or ``dcg@5`` (unnormalized)."""
        m = re.fullmatch(r"\s*([A-Za-z]+)\s*@\s*(\d+)\s*", text)
        if not m:
            raise ValidationError(f"cannot parse metric {text!r}; expected e.g. ndcg@10")
        kind, k = m.group(1).lower(), int(m.group(2))
        if kind == "dcg":
            kwargs["normalize_dcg"] = False
            kind = "ndcg"
        names = {"ndcg": "nDCG", "map": "MAP", "mrr": "MRR"}
        if kind not in names:
            raise ValidationError(f"unknown metric {m.group(1)!r}")
        return cls(names[kind], k, **kwargs)


DEFAULT_METRICS = tuple(MetricSpec(kind, k) for kind in KINDS for k in (5, 10))


def _check_k(k: int) -> None:
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")


def _discounted(gains: Sequence[Real], k: int) -> float:
    total = 0.0
    for j, g in enumerate(gains[:k], 1):
        if g:
            total += float(g) if j == 1 else float(g) / math.log2(j)
    return total


def dcg_at_k(qid: str, ranked: Sequence[str], judgments: JudgmentSet, k: int) -> float:
    _check_k(k)
    return _discounted([judgments.rating(qid, d) for d in ranked], k)


def ndcg_at_k(qid: str, ranked: Sequence[str], judgments: JudgmentSet, k: int) -> float:
    _check_k(k)
    ideal_gains = sorted(judgments.for_query(qid).values(), reverse=True)
    ideal = _discounted(ideal_gains, k)
    if ideal == 0:
        return 0.0
    return dcg_at_k(qid, ranked, judgments, k) / ideal


def map_at_k(qid: str, ranked: Sequence[str], judgments: JudgmentSet, k: int,
             threshold: Real = 1) -> float:
    """Average precision at ``k``, normalized by ``min(#relevant, k)``."""
    _check_k(k)
    n_relevant = sum(r >= threshold for r in judgments.for_query(qid).values())
    denom = min(n_relevant, k)
    if denom == 0:
        return 0.0
    hits = 0
    total = Fraction(0)
    for j, d in enumerate(ranked[:k], 1):
        if judgments.rating(qid, d) >= threshold:
            hits += 1
            total += Fraction(hits, j)
    return float(total / denom)


def mrr_at_k(qid: str, ranked: Sequence[str], judgments: JudgmentSet, k: int,
             threshold: Real = 2) -> float:
    _check_k(k)
    for j, d in enumerate(ranked[:k], 1):
        if judgments.rating(qid, d) >= threshold:
            return 1.0 / j
    return 0.0


def evaluate(metric: MetricSpec, qid: str, ranked: Sequence[str],
             judgments: JudgmentSet) -> float:
    if metric.kind == "nDCG":
        fn = ndcg_at_k if metric.normalize_dcg else dcg_at_k
        return fn(qid, ranked, judgments, metric.k)
    if metric.kind == "MAP":
        return map_at_k(qid, ranked, judgments, metric.k, metric.map_threshold)
    return mrr_at_k(qid, ranked, judgments, metric.k, metric.mrr_threshold)

"""Matching metrics between a segmentation and a reference, rank correlation and
inter-annotator agreement.

Segment overlap means identity of token spans. Per-query values are averaged
over queries; the F-score is the harmonic mean of the averaged precision and
recall. Metric values are exact :class:`~fractions.Fraction` objects.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, fields
from fractions import Fraction
from itertools import combinations

from .corpus import JudgmentSet, Segmentation, ValidationError

log = logging.getLogger(__name__)

Segmentations = Mapping[str, Segmentation]  # qid -> Segmentation

METRIC_NAMES = ("Qry-Acc", "Seg-Prec", "Seg-Rec", "Seg-F", "Seg-Acc")


def harmonic_mean(a, b):
    return 0 * a if a + b == 0 else 2 * a * b / (a + b)


@dataclass(frozen=True)
class MatchScores:
    qry_acc: Fraction
    seg_prec: Fraction
    seg_rec: Fraction
    seg_f: Fraction
    seg_acc: Fraction

    @classmethod
    def from_parts(cls, qry_acc, seg_prec, seg_rec, seg_acc) -> "MatchScores":
        return cls(qry_acc, seg_prec, seg_rec, harmonic_mean(seg_prec, seg_rec), seg_acc)

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(METRIC_NAMES, (getattr(self, f.name) for f in fields(self))))

    @classmethod
    def mean(cls, rows: Sequence["MatchScores"]) -> "MatchScores":
        n = len(rows)
        avg = lambda name: sum((getattr(r, name) for r in rows), Fraction(0)) / n
        return cls.from_parts(avg("qry_acc"), avg("seg_prec"), avg("seg_rec"), avg("seg_acc"))


def _pairs(output: Segmentations, reference: Segmentations):
    if set(output) != set(reference):
        missing = sorted(set(reference) - set(output))
        extra = sorted(set(output) - set(reference))
        raise ValidationError(f"qid coverage mismatch: missing {missing}, extra {extra}")
    if not reference:
        raise ValidationError("no queries to compare")
    for qid, ref in reference.items():
        out = output[qid]
        if out.tokens != ref.tokens:
            raise ValidationError(f"segmentations of {qid!r} cover different tokens")
        yield out, ref


def query_accuracy(out: Segmentation, ref: Segmentation) -> Fraction:
    return Fraction(int(out.boundaries == ref.boundaries))


def query_overlap(out: Segmentation, ref: Segmentation) -> int:
    return len(set(out.spans()) & set(ref.spans()))


def query_precision(out: Segmentation, ref: Segmentation) -> Fraction:
    return Fraction(query_overlap(out, ref), len(out))


def query_recall(out: Segmentation, ref: Segmentation) -> Fraction:
    return Fraction(query_overlap(out, ref), len(ref))


def query_seg_accuracy(out: Segmentation, ref: Segmentation) -> Fraction:
    positions = out.length - 1
    if positions == 0:
        return Fraction(1)
    agree = sum((i in out.boundaries) == (i in ref.boundaries) for i in range(1, positions + 1))
    return Fraction(agree, positions)


def _macro(fn, output: Segmentations, reference: Segmentations) -> Fraction:
    values = [fn(o, r) for o, r in _pairs(output, reference)]
    return sum(values, Fraction(0)) / len(values)


def qry_acc(output: Segmentations, reference: Segmentations) -> Fraction:
    return _macro(query_accuracy, output, reference)


def seg_prec(output: Segmentations, reference: Segmentations) -> Fraction:
    return _macro(query_precision, output, reference)


def seg_rec(output: Segmentations, reference: Segmentations) -> Fraction:
    return _macro(query_recall, output, reference)


def seg_f(output: Segmentations, reference: Segmentations) -> Fraction:
    return harmonic_mean(seg_prec(output, reference), seg_rec(output, reference))


def seg_acc(output: Segmentations, reference: Segmentations) -> Fraction:
    return _macro(query_seg_accuracy, output, reference)


def match_scores(output: Segmentations, reference: Segmentations) -> MatchScores:
    return MatchScores.from_parts(qry_acc(output, reference), seg_prec(output, reference),
                                  seg_rec(output, reference), seg_acc(output, reference))


def _as_scores(ranking) -> dict:
    """Score map, or an ordered list turned into descending scores."""
    if isinstance(ranking, Mapping):
        return dict(ranking)
    items = list(ranking)
    if len(set(items)) != len(items):
        raise ValidationError("ranking lists repeated items")
    return {item: -i for i, item in enumerate(items)}


def kendall_tau(ranking_a, ranking_b) -> float:
    """Kendall rank correlation, tau-b when either side has ties.

    Each argument is either an ordered list (best first) or a mapping from item
    to score (higher is better). Returns NaN when one side is entirely tied.
    """
    a, b = _as_scores(ranking_a), _as_scores(ranking_b)
    if set(a) != set(b):
        raise ValidationError("rankings cover different items")
    if len(a) < 2:
        raise ValidationError("kendall tau needs at least 2 items")
    items = sorted(a, key=str)
    concordant = discordant = ties_a = ties_b = 0
    for x, y in combinations(items, 2):
        da = (a[x] > a[y]) - (a[x] < a[y])
        db = (b[x] > b[y]) - (b[x] < b[y])
        if da == 0:
            ties_a += 1
        if db == 0:
            ties_b += 1
        if da * db > 0:
            concordant += 1
        elif da * db < 0:
            discordant += 1
    n0 = len(items) * (len(items) - 1) // 2
    if ties_a == 0 and ties_b == 0:
        return (concordant - discordant) / n0
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0:
        return math.nan
    return (concordant - discordant) / denom


def iaa_segmentation(annotations: Mapping[str, Segmentations]) -> dict[str, MatchScores]:
    """Agreement with each annotator taken as reference in turn.

    The value for reference ``A`` is the mean of the other annotators' scores
    against ``A``. The ``"Mean"`` entry averages over references.
    """
    if len(annotations) < 2:
        raise ValidationError("inter-annotator agreement needs at least 2 annotators")
    table = {}
    for ref_name, ref in annotations.items():
        rows = [match_scores(out, ref) for name, out in annotations.items() if name != ref_name]
        table[ref_name] = MatchScores.mean(rows)
    table["Mean"] = MatchScores.mean(list(table.values()))
    return table


DISAGREEMENTS = {(0, 2), (2, 0)}


def iaa_judgments(judgments: JudgmentSet) -> dict[tuple[str, str], Fraction]:
    """Pairwise agreement on relevance ratings; only 0-vs-2 counts as disagreement."""
    by_annotator: dict[str, dict[tuple[str, str], int]] = {}
    for (qid, doc_id, annotator), r in judgments.per_annotator.items():
        by_annotator.setdefault(annotator, {})[qid, doc_id] = r
    names = sorted(by_annotator)
    if len(names) < 2:
        raise ValidationError("judgment agreement needs at least 2 annotators")
    out = {}
    for x, y in combinations(names, 2):
        shared = by_annotator[x].keys() & by_annotator[y].keys()
        if not shared:
            log.warning("annotators %s and %s share no judged pairs; omitted", x, y)
            continue
        bad = sum((by_annotator[x][k], by_annotator[y][k]) in DISAGREEMENTS for k in shared)
        out[x, y] = 1 - Fraction(bad, len(shared))
    return out

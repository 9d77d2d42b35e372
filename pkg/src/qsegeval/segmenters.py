"""Reference segmenters: thresholded PMI and the Wikipedia-title join refinement.

The refinement works in two phases. Phase 1 is any segmenter (PMI by default)
run over a query log ``Q'``. :func:`wiki_boost` segments each Wikipedia title
with the same phase-1 segmenter and scores it by PMI of its units, with n-gram
frequencies taken from ``Q'``. :func:`seg_phase2` then joins adjacent phase-1
segments of a query so that the product of group scores is maximal.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .corpus import Query, Segmentation, ValidationError, read_lines, tokenize
from .matchmetrics import seg_f

log = logging.getLogger(__name__)

# Reference thresholds reported for Web n-grams and query logs; they depend on
# the original corpora and are kept for documentation only.
PMI_W_THRESHOLD = 8.141
PMI_Q_THRESHOLD = 0.156

Tokens = tuple[str, ...]


@dataclass(frozen=True)
class PmiModel:
    unigram_counts: Mapping[str, int]
    bigram_counts: Mapping[tuple[str, str], int]
    total_unigrams: int
    total_bigrams: int
    threshold: float = 0.0

    def pmi(self, a: str, b: str) -> float:
        """log2 p(a,b) / (p(a) p(b)); -inf for unseen pairs."""
        ab = self.bigram_counts.get((a, b), 0)
        ca = self.unigram_counts.get(a, 0)
        cb = self.unigram_counts.get(b, 0)
        if not (ab and ca and cb):
            return -math.inf
        return math.log2((ab / self.total_bigrams)
                         / ((ca / self.total_unigrams) * (cb / self.total_unigrams)))

    def boundaries(self, tokens: Sequence[str], threshold: float | None = None) -> frozenset[int]:
        t = self.threshold if threshold is None else threshold
        return frozenset(i for i in range(1, len(tokens))
                         if self.pmi(tokens[i - 1], tokens[i]) < t)


def train_pmi(corpus: Iterable[Sequence[str]], threshold: float = 0.0) -> PmiModel:
    """Count unigrams and within-stream adjacent bigrams."""
    unigrams: Counter = Counter()
    bigrams: Counter = Counter()
    for tokens in corpus:
        unigrams.update(tokens)
        bigrams.update(zip(tokens, tokens[1:]))
    if not unigrams:
        raise ValidationError("cannot train PMI on an empty corpus")
    return PmiModel(dict(unigrams), dict(bigrams), sum(unigrams.values()),
                    sum(bigrams.values()), threshold)


def load_ngram_counts(path, threshold: float = 0.0) -> PmiModel:
    """Precomputed ``token<TAB>count`` and ``token<TAB>token<TAB>count`` records."""
    unigrams: dict[str, int] = {}
    bigrams: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(read_lines(path), 1):
        fields = line.split("\t")
        try:
            count = int(fields[-1])
        except ValueError:
            raise ValidationError(f"{path}: record {lineno}: bad count {fields[-1]!r}") from None
        if len(fields) == 2:
            unigrams[fields[0]] = unigrams.get(fields[0], 0) + count
        elif len(fields) == 3:
            key = (fields[0], fields[1])
            bigrams[key] = bigrams.get(key, 0) + count
        else:
            raise ValidationError(f"{path}: record {lineno}: expected 2 or 3 fields")
    if not unigrams:
        raise ValidationError(f"{path}: no unigram counts")
    return PmiModel(unigrams, bigrams, sum(unigrams.values()), sum(bigrams.values()), threshold)


def segment_pmi(model: PmiModel, query: Query, strategy_id: str = "PMI") -> Segmentation:
    """Split between adjacent words whose PMI falls below the model threshold."""
    return Segmentation(query.qid, strategy_id, query.tokens, model.boundaries(query.tokens))


def threshold_grid(model: PmiModel, dev_queries: Sequence[Query],
                   dev_reference: Mapping[str, Segmentation]) -> list[tuple[float, Fraction]]:
    """Seg-F against the dev reference for every candidate threshold, ascending.

    Candidates are every distinct adjacent-pair PMI in the dev queries plus
    both infinities.
    """
    if not dev_queries:
        raise ValidationError("empty development set")
    pair_pmi = {q.qid: [model.pmi(a, b) for a, b in zip(q.tokens, q.tokens[1:])]
                for q in dev_queries}
    candidates = sorted({v for vals in pair_pmi.values() for v in vals} | {-math.inf, math.inf})
    missing = [q.qid for q in dev_queries if q.qid not in dev_reference]
    if missing:
        raise ValidationError(f"no dev reference for {missing}")
    reference = {q.qid: dev_reference[q.qid] for q in dev_queries}
    grid = []
    for t in candidates:
        output = {q.qid: Segmentation(q.qid, "dev", q.tokens,
                                      frozenset(i for i, v in enumerate(pair_pmi[q.qid], 1)
                                                if v < t))
                  for q in dev_queries}
        grid.append((t, seg_f(output, reference)))
    return grid


def tune_pmi_threshold(model: PmiModel, dev_queries: Sequence[Query],
                       dev_reference: Mapping[str, Segmentation]) -> float:
    """The threshold maximizing dev-set Seg-F; ties go to the smaller threshold."""
    best_t, best_f = None, Fraction(-1)
    for t, f in threshold_grid(model, dev_queries, dev_reference):
        if f > best_f:
            best_t, best_f = t, f
    return best_t


def stem(token: str) -> str:
    """Minimal suffix stripping: -ing, -ed, plural -es and -s."""
    if len(token) > 5 and token.endswith("ing"):
        return token[:-3]
    if len(token) > 4 and token.endswith("ed"):
        return token[:-2]
    if len(token) > 4 and token.endswith(("ches", "shes", "sses", "xes", "zes")):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def stem_tokens(tokens: Iterable[str]) -> Tokens:
    return tuple(stem(t) for t in tokens)


def load_titles(path) -> list[Tokens]:
    """Titles file: one raw title per line; keeps multiword titles, stemmed."""
    titles = []
    for line in read_lines(path):
        tokens = tokenize(line)
        if len(tokens) >= 2 and line.isascii():
            titles.append(stem_tokens(tokens))
    return titles


Phase1 = Callable[[Sequence[str]], Sequence[Tokens]]


def pmi_phase1(model: PmiModel) -> Phase1:
    """A phase-1 segmenter: token sequence -> list of segments."""
    def segment(tokens: Sequence[str]) -> list[Tokens]:
        tokens = tuple(tokens)
        cuts = [0, *sorted(model.boundaries(tokens)), len(tokens)]
        return [tokens[a:b] for a, b in zip(cuts, cuts[1:])]
    return segment


@dataclass(frozen=True)
class WikiScoreTable:
    """Scores of phase-1-segmented titles, keyed by their segment tuples (stemmed)."""

    scores: Mapping[tuple[Tokens, ...], float]
    unigram_scores: Mapping[str, float] = field(default_factory=dict)
    skipped: int = 0
    dropped: int = 0

    def lookup(self, segments: Sequence[Sequence[str]]) -> float | None:
        return self.scores.get(tuple(stem_tokens(s) for s in segments))


class _NgramCounts:
    """Contiguous token n-gram frequencies over a segmented query log."""

    def __init__(self, streams: Sequence[Tokens]):
        self.streams = streams
        self.counts: dict[int, Counter] = {}
        self.slots: dict[int, int] = {}

    def _ensure(self, n: int) -> None:
        if n not in self.counts:
            self.counts[n] = Counter(s[i:i + n] for s in self.streams
                                     for i in range(len(s) - n + 1))
            self.slots[n] = sum(max(0, len(s) - n + 1) for s in self.streams)

    def prob(self, gram: Tokens) -> float:
        n = len(gram)
        self._ensure(n)
        if not self.slots[n]:
            return 0.0
        return self.counts[n][gram] / self.slots[n]


def _unit_pmi(counts: _NgramCounts, left: Tokens, right: Tokens) -> float | None:
    """PMI of two adjacent units; None when a unit never occurs."""
    pl, pr = counts.prob(left), counts.prob(right)
    if not pl or not pr:
        return None
    joint = counts.prob(left + right)
    if not joint:
        return -math.inf
    return math.log2(joint / (pl * pr))


def wiki_boost(qprime: Iterable[Segmentation], titles: Iterable[Sequence[str]],
               phase1: Phase1) -> WikiScoreTable:
    """Score Wikipedia titles by unit PMI over the segmented log ``qprime``.

    An n-segment title scores the larger of PMI(first n-1 segments, last
    segment) and PMI(first segment, last n-1 segments). Titles that phase 1
    leaves whole, or whose units never occur in ``qprime``, are skipped;
    titles with non-positive score are dropped. Unigram scores are occurrence
    probabilities in ``qprime``.
    """
    streams = [stem_tokens(s.tokens) for s in qprime]
    counts = _NgramCounts(streams)
    scores: dict[tuple[Tokens, ...], float] = {}
    skipped = dropped = 0
    for title in titles:
        segments = tuple(stem_tokens(s) for s in phase1(stem_tokens(title)))
        if segments in scores:
            continue
        if len(segments) < 2:
            skipped += 1
            continue
        head = tuple(t for s in segments[:-1] for t in s)
        tail = tuple(t for s in segments[1:] for t in s)
        candidates = [_unit_pmi(counts, head, segments[-1]),
                      _unit_pmi(counts, segments[0], tail)]
        candidates = [c for c in candidates if c is not None]
        if not candidates:
            skipped += 1
            continue
        score = max(candidates)
        if score > 0:
            scores[segments] = score
        else:
            dropped += 1
    unigram_counts = Counter(t for s in streams for t in s)
    total = sum(unigram_counts.values())
    unigram_scores = {u: c / total for u, c in unigram_counts.items()} if total else {}
    if skipped:
        log.info("wiki_boost skipped %d titles", skipped)
    return WikiScoreTable(scores, unigram_scores, skipped, dropped)


def _group_score(table: WikiScoreTable, segments: Sequence[Tokens]) -> Fraction | None:
    found = table.lookup(segments)
    if found is not None and found > 0:
        return Fraction(found)
    return Fraction(1) if len(segments) == 1 else None


def seg_phase2(qprime: Segmentation, table: WikiScoreTable,
               strategy_id: str | None = None) -> Segmentation:
    """Join adjacent phase-1 segments to maximize the product of group scores.

    A group of phase-1 segments scores its table entry; a lone segment without
    an entry scores 1; a multi-segment group without an entry is not allowed.
    Non-positive entries count as absent.
    Ties prefer fewer groups, then the longest leftmost group. Products are
    compared exactly.
    """
    segs = qprime.segments()
    m = len(segs)
    # best[i]: (product, group count, group lengths) for segments i..m-1
    best: list[tuple[Fraction, int, tuple[int, ...]] | None] = [None] * (m + 1)
    best[m] = (Fraction(1), 0, ())
    for i in range(m - 1, -1, -1):
        for j in range(m, i, -1):
            if best[j] is None:
                continue
            s = _group_score(table, segs[i:j])
            if s is None:
                continue
            prod, count, lengths = best[j]
            cand = (s * prod, count + 1, (j - i,) + lengths)
            cur = best[i]
            if cur is None or (cand[0], -cand[1], cand[2]) > (cur[0], -cur[1], cur[2]):
                best[i] = cand
    groups: list[Tokens] = []
    pos = 0
    for size in best[0][2]:
        groups.append(tuple(t for s in segs[pos:pos + size] for t in s))
        pos += size
    return Segmentation.from_segments(qprime.qid, strategy_id or qprime.strategy_id, groups)


def wiki_segmenter(model: PmiModel, table: WikiScoreTable,
                   strategy_id: str = "PMI+Wiki") -> Callable[[Query], Segmentation]:
    """Phase 1 (PMI over stemmed tokens) followed by phase 2 over ``table``."""
    def segment(query: Query) -> Segmentation:
        phase1 = Segmentation(query.qid, strategy_id, query.tokens,
                              model.boundaries(stem_tokens(query.tokens)))
        return seg_phase2(phase1, table, strategy_id)
    return segment

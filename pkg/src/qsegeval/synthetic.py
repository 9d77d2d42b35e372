"""Synthetic test collections with planted multiword units.

Each query is built from "units" (multiword phrases and single words). For
every query a handful of documents is planted: some contain every phrase
intact (rated 2), some contain one phrase intact with the rest scrambled
(rated 1) and some contain all query words with every phrase broken (rated 0).
Quoting the right phrases therefore separates relevant from non-relevant
documents, which is the effect the oracle is meant to measure.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import (Document, DocumentPool, JudgmentSet, Query, QuerySet,
                     Segmentation)

_ONSETS = "b c d f g h j k l m n p r t v w z".split()
_VOWELS = "a e i o u".split()
ANNOTATORS = ("R1", "R2", "R3")
STRATEGIES = ("gold", "split", "joined", "shifted")


@dataclass
class SyntheticCollection:
    queries: QuerySet
    segmentations: list[Segmentation]
    pool: DocumentPool
    judgments: JudgmentSet
    units: dict[str, list[tuple[str, ...]]]


def make_vocabulary(size: int, rng: random.Random) -> list[str]:
    syllables = [o + v for o in _ONSETS for v in _VOWELS]
    words = set()
    while len(words) < size:
        n = rng.choice((2, 2, 3))
        # trailing "x" keeps words clear of the suffix stemmer
        words.add("".join(rng.choice(syllables) for _ in range(n)) + "x")
    return sorted(words)


def _scramble(unit: tuple[str, ...], rng: random.Random, filler: list[str]) -> list[str]:
    """The unit's words with contiguity broken: reversed, or separated by filler."""
    if rng.random() < 0.5:
        return list(reversed(unit))
    out = []
    for w in unit:
        out.extend([w, rng.choice(filler)])
    return out


def _layout(pieces: list[list[str]], filler: list[str], length: int,
            rng: random.Random) -> list[str]:
    """Interleave word groups with filler words up to about ``length`` tokens."""
    rng.shuffle(pieces)
    out = []
    for p in pieces:
        out.extend(rng.choice(filler) for _ in range(rng.randint(1, 4)))
        out.extend(p)
    while len(out) < length:
        out.insert(rng.randrange(len(out) + 1), rng.choice(filler))
    return out


def _noisy(rating: int, rng: random.Random, noise: float) -> int:
    if rng.random() < noise:
        rating += rng.choice((-1, 1))
    return min(2, max(0, rating))


def _variants(units: list[tuple[str, ...]], rng: random.Random) -> dict[str, list[tuple[str, ...]]]:
    split = []
    for u in units:
        if len(u) > 1 and rng.random() < 0.5:
            cut = rng.randint(1, len(u) - 1)
            split.extend([u[:cut], u[cut:]])
        else:
            split.append(u)
    joined = [units[0]]
    for u in units[1:]:
        if rng.random() < 0.3:
            joined[-1] = joined[-1] + u
        else:
            joined.append(u)
    tokens = [t for u in units for t in u]
    gold_cuts = set()
    pos = 0
    for u in units[:-1]:
        pos += len(u)
        gold_cuts.add(pos)
    shifted_cuts = set()
    for c in gold_cuts:
        c2 = c + rng.choice((-1, 0, 0, 1))
        if 1 <= c2 < len(tokens):
            shifted_cuts.add(c2)
    cuts = [0, *sorted(shifted_cuts), len(tokens)]
    shifted = [tuple(tokens[a:b]) for a, b in zip(cuts, cuts[1:])]
    return {"gold": units, "split": split, "joined": joined, "shifted": shifted}


def make_collection(n_queries: int = 50, n_docs: int = 300, docs_per_query: int = 6,
                    vocab_size: int = 2000, n_phrases: int | None = None,
                    doc_length: int = 40, noise: float = 0.1,
                    seed: int = 0) -> SyntheticCollection:
    """Generate queries, four segmentation strategies, a document pool and judgments.

    ``n_docs`` is a target; planted documents are always generated, and
    filler documents top the pool up when ``n_docs`` exceeds them.
    """
    rng = random.Random(seed)
    vocab = make_vocabulary(vocab_size, rng)
    n_phrases = n_phrases or max(10, n_queries)
    phrase_words = vocab[: vocab_size // 2]
    filler = vocab[vocab_size // 2:]
    phrases = sorted({tuple(rng.sample(phrase_words, rng.choice((2, 2, 3))))
                      for _ in range(n_phrases)})

    queries, segs, docs = [], [], []
    ratings: dict[tuple[str, str, str], int] = {}
    units_by_q = {}
    for qi in range(n_queries):
        qid = f"q{qi + 1:04d}"
        while True:
            units = [rng.choice(phrases) for _ in range(rng.choice((2, 2, 3)))]
            units += [(rng.choice(phrase_words),) for _ in range(rng.randint(0, 2))]
            rng.shuffle(units)
            tokens = [t for u in units for t in u]
            if 5 <= len(tokens) <= 8 and len(set(tokens)) == len(tokens):
                break
        units_by_q[qid] = units
        query = Query.from_text(qid, " ".join(tokens))
        queries.append(query)
        for name, parts in _variants(units, rng).items():
            segs.append(Segmentation.from_segments(qid, name, parts))

        multi = [u for u in units if len(u) > 1]
        singles = [list(u) for u in units if len(u) == 1]
        for di in range(docs_per_query):
            kind = di % 3  # 0: all intact, 1: one intact, 2: none intact
            keep = {0: set(range(len(multi))), 1: {rng.randrange(len(multi))}, 2: set()}[kind]
            pieces = [list(u) if i in keep else _scramble(u, rng, filler)
                      for i, u in enumerate(multi)] + [list(s) for s in singles]
            words = _layout(pieces, filler, doc_length, rng)
            doc_id = f"{qid}-d{di:02d}"
            docs.append(Document(doc_id, f"http://synthetic.test/{doc_id}",
                                 " ".join(words[:3]), " ".join(words[3:])))
            base = {0: 2, 1: 1, 2: 0}[kind]
            for a in ANNOTATORS:
                ratings[qid, doc_id, a] = _noisy(base, rng, noise)

    query_words = [t for q in queries for t in q.tokens]
    di = 0
    while len(docs) < n_docs:
        words = [rng.choice(filler) for _ in range(doc_length)]
        for _ in range(rng.randint(0, 3)):
            words[rng.randrange(len(words))] = rng.choice(query_words)
        doc_id = f"f{di:06d}"
        docs.append(Document(doc_id, f"http://synthetic.test/{doc_id}",
                             " ".join(words[:3]), " ".join(words[3:])))
        di += 1

    segs.sort(key=lambda s: STRATEGIES.index(s.strategy_id))
    return SyntheticCollection(QuerySet(queries), segs, DocumentPool(docs),
                               JudgmentSet(ratings), units_by_q)

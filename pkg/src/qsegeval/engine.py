"""Positional inverted index supporting term and exact-phrase clauses.

Matching is disjunctive: a document is retrieved when it matches at least one
clause. Each clause is weighted with Okapi BM25; a quoted phrase is scored as a
single pseudo-term whose frequency is its occurrence count and whose document
frequency is the number of documents containing it. The clause sum is scaled by
the fraction of clauses matched.
"""
from __future__ import annotations

import heapq
import json
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

from .corpus import Document, DocumentPool, ValidationError, tokenize
from .quotegen import Clause, QuotedVersion, parse

# token -> doc_id -> 1-based positions, strictly increasing
Postings = dict[str, dict[str, tuple[int, ...]]]

# Adapter contract: rendered quoted-version string and depth in, doc_ids out.
EngineAdapter = Callable[[str, int], Sequence[str]]


@dataclass(frozen=True)
class EngineParams:
    k1: float = 1.2
    b: float = 0.75


@dataclass(frozen=True)
class RankedList:
    entries: tuple[tuple[str, float], ...]
    depth: int

    @property
    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class PositionalIndex:
    def __init__(self, postings: Postings, doc_lengths: dict[str, int]):
        self.postings = postings
        self.doc_lengths = doc_lengths
        self.doc_count = len(doc_lengths)
        total = sum(doc_lengths.values())
        self.avg_doc_length = total / self.doc_count if self.doc_count else 0.0

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.doc_lengths

    def to_json(self) -> str:
        """Deterministic serialization: identical indexes give identical text."""
        payload = {
            "format": "qsegeval-positional-index/1",
            "doc_lengths": [[d, n] for d, n in self.doc_lengths.items()],
            "postings": {t: [[d, list(p)] for d, p in self.postings[t].items()]
                         for t in sorted(self.postings)},
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "PositionalIndex":
        payload = json.loads(text)
        if payload.get("format") != "qsegeval-positional-index/1":
            raise ValidationError("not a qsegeval index file")
        doc_lengths = {d: n for d, n in payload["doc_lengths"]}
        postings = {t: {d: tuple(p) for d, p in plist}
                    for t, plist in payload["postings"].items()}
        return cls(postings, doc_lengths)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "PositionalIndex":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def build_index(pool: DocumentPool) -> PositionalIndex:
    if len(pool) == 0:
        raise ValidationError("cannot index an empty document pool")
    postings: dict[str, dict[str, list[int]]] = {}
    doc_lengths = {}
    for doc_id, doc in pool.items():
        tokens = tokenize(doc.text)
        doc_lengths[doc_id] = len(tokens)
        for pos, tok in enumerate(tokens, 1):
            postings.setdefault(tok, {}).setdefault(doc_id, []).append(pos)
    frozen = {t: {d: tuple(p) for d, p in docs.items()} for t, docs in postings.items()}
    return PositionalIndex(frozen, doc_lengths)


def _phrase_counts(index: PositionalIndex, phrase: Sequence[str],
                   restrict: str | None = None) -> dict[str, int]:
    """doc_id -> number of ordered contiguous occurrences of ``phrase``."""
    lists = []
    for tok in phrase:
        plist = index.postings.get(tok)
        if not plist:
            return {}
        lists.append(plist)
    if restrict is not None:
        candidates = [restrict] if all(restrict in p for p in lists) else []
    else:
        smallest = min(lists, key=len)
        candidates = [d for d in smallest if all(d in p for p in lists)]
    out = {}
    for doc_id in candidates:
        starts = set(lists[0][doc_id])
        for offset, plist in enumerate(lists[1:], 1):
            starts &= {p - offset for p in plist[doc_id]}
            if not starts:
                break
        if starts:
            out[doc_id] = len(starts)
    return out


def phrase_occurs(index: PositionalIndex, doc_id: str,
                  phrase: Sequence[str]) -> tuple[bool, int]:
    """Whether ``phrase`` occurs contiguously and in order in the document, and how often."""
    if not phrase:
        raise ValidationError("empty phrase")
    if doc_id not in index:
        raise KeyError(f"unknown doc_id {doc_id!r}")
    n = _phrase_counts(index, phrase, restrict=doc_id).get(doc_id, 0)
    return n > 0, n


def clause_matches(index: PositionalIndex, clause: Clause) -> dict[str, int]:
    """doc_id -> clause frequency (term frequency or phrase occurrence count)."""
    if clause.quoted:
        return _phrase_counts(index, clause.tokens)
    (term,) = clause.tokens
    return {d: len(p) for d, p in index.postings.get(term, {}).items()}


def bm25_weight(tf: int, df: int, doc_len: int, n_docs: int, avg_len: float,
                params: EngineParams) -> float:
    idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
    norm = params.k1 * (1.0 - params.b + params.b * doc_len / avg_len) if avg_len else params.k1
    return idf * tf * (params.k1 + 1.0) / (tf + norm)


def search(index: PositionalIndex, version: QuotedVersion, depth: int,
           params: EngineParams = EngineParams()) -> RankedList:
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    if not version.clauses:
        raise ValidationError("empty query version")
    total = len(version.clauses)
    sums: dict[str, float] = {}
    matched: dict[str, int] = {}
    for clause in version.clauses:
        hits = clause_matches(index, clause)
        df = len(hits)
        for doc_id, tf in hits.items():
            w = bm25_weight(tf, df, index.doc_lengths[doc_id], index.doc_count,
                            index.avg_doc_length, params)
            sums[doc_id] = sums.get(doc_id, 0.0) + w
            matched[doc_id] = matched.get(doc_id, 0) + 1
    scored = ((matched[d] / total * s, d) for d, s in sums.items())
    top = heapq.nsmallest(depth, scored, key=lambda e: (-e[0], e[1]))
    return RankedList(tuple((d, s) for s, d in top), depth)


class LocalEngine:
    """The built-in index behind the adapter contract, with a result cache.

    Calling the engine with a rendered version string returns ranked doc_ids;
    :meth:`search` takes a :class:`QuotedVersion` directly.
    """

    def __init__(self, index: PositionalIndex, params: EngineParams = EngineParams(),
                 pool: Mapping[str, Document] | None = None, cache_size: int = 65536):
        self.index = index
        self.params = params
        self.pool = pool
        self._search = lru_cache(maxsize=cache_size)(self._uncached)

    def _uncached(self, clauses: tuple[Clause, ...], depth: int) -> RankedList:
        return search(self.index, QuotedVersion("", clauses), depth, self.params)

    def search(self, version: QuotedVersion, depth: int) -> RankedList:
        return self._search(version.clauses, depth)

    def __call__(self, query: str, depth: int) -> list[str]:
        return self.search(parse(query), depth).doc_ids

    def documents(self, query: str, depth: int) -> list[Document]:
        """Ranked :class:`Document` objects; requires the engine to hold its pool."""
        if self.pool is None:
            raise ValidationError("engine was built without its document pool")
        return [self.pool[d] for d in self(query, depth)]

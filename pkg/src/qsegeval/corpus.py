"""Data model and file ingestion for queries, segmentations, documents and judgments.

All readers share :func:`tokenize`, so query tokens, segment tokens and index
tokens line up exactly.
"""
from __future__ import annotations

import json
import re
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

SEGMENT_SEPARATOR = " | "
RATINGS = (0, 1, 2)

_TOKEN_RE = re.compile(r"[^\W_]+")


class FormatError(ValueError):
    """A record in an input file could not be parsed."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class ValidationError(ValueError):
    """Input is well formed but inconsistent with the data it refers to."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every maximal run of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Query:
    qid: str
    raw_text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, qid: str, text: str) -> "Query":
        tokens = tuple(tokenize(text))
        if not tokens:
            raise ValidationError(f"query {qid!r} has no tokens")
        return cls(qid, text, tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


class QuerySet(Mapping):
    """Ordered, read-only ``qid -> Query`` mapping."""

    def __init__(self, queries: Iterable[Query] = ()):
        self._by_id: dict[str, Query] = {}
        for q in queries:
            if q.qid in self._by_id:
                raise ValidationError(f"duplicate qid {q.qid!r}")
            self._by_id[q.qid] = q

    def __getitem__(self, qid: str) -> Query:
        return self._by_id[qid]

    def __iter__(self) -> Iterator[str]:
        return iter(self._by_id)

    def __len__(self) -> int:
        return len(self._by_id)

    def __repr__(self) -> str:
        return f"QuerySet({len(self)} queries)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuerySet):
            return NotImplemented
        return list(self._by_id.items()) == list(other._by_id.items())

    __hash__ = None


@dataclass(frozen=True)
class Segmentation:
    """One strategy's split of a query.

    ``boundaries`` holds 1-based positions ``i`` in ``[1, l-1]``: a boundary at
    ``i`` splits between token ``i`` and token ``i + 1``.
    """

    qid: str
    strategy_id: str
    tokens: tuple[str, ...]
    boundaries: frozenset[int]

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise ValidationError(f"segmentation of {self.qid!r} has no tokens")
        bad = [b for b in self.boundaries if not 1 <= b <= n - 1]
        if bad:
            raise ValidationError(
                f"boundaries {sorted(bad)} outside [1, {n - 1}] for {self.qid!r}")

    @classmethod
    def from_segments(cls, qid: str, strategy_id: str,
                      segments: Sequence[Sequence[str]]) -> "Segmentation":
        tokens: list[str] = []
        boundaries = set()
        for seg in segments:
            if not seg:
                raise ValidationError(f"empty segment in {qid!r}/{strategy_id!r}")
            if tokens:
                boundaries.add(len(tokens))
            tokens.extend(seg)
        return cls(qid, strategy_id, tuple(tokens), frozenset(boundaries))

    @classmethod
    def unsegmented(cls, query: Query, strategy_id: str = "unsegmented") -> "Segmentation":
        """Every word its own segment: the plain query with nothing to quote."""
        return cls(query.qid, strategy_id, query.tokens,
                   frozenset(range(1, len(query.tokens))))

    @property
    def length(self) -> int:
        return len(self.tokens)

    def spans(self) -> list[tuple[int, int]]:
        """Half-open 0-based token spans of the segments, left to right."""
        cuts = [0, *sorted(self.boundaries), len(self.tokens)]
        return list(zip(cuts, cuts[1:]))

    def segments(self) -> list[tuple[str, ...]]:
        return [self.tokens[a:b] for a, b in self.spans()]

    def __len__(self) -> int:
        return len(self.boundaries) + 1

    def render(self) -> str:
        return SEGMENT_SEPARATOR.join(" ".join(s) for s in self.segments())


# A large query log segmented by one phase-1 segmenter.
SegmentedCorpus = list[Segmentation]


@dataclass(frozen=True)
class Document:
    doc_id: str
    url: str
    title: str
    body: str

    @property
    def text(self) -> str:
        return f"{self.title} {self.body}" if self.title else self.body


class DocumentPool(Mapping):
    """Ordered, read-only ``doc_id -> Document`` mapping."""

    def __init__(self, docs: Iterable[Document] = ()):
        self._by_id: dict[str, Document] = {}
        for d in docs:
            if d.doc_id in self._by_id:
                raise ValidationError(f"duplicate doc_id {d.doc_id!r}")
            self._by_id[d.doc_id] = d

    def __getitem__(self, doc_id: str) -> Document:
        return self._by_id[doc_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._by_id)

    def __len__(self) -> int:
        return len(self._by_id)

    def __repr__(self) -> str:
        return f"DocumentPool({len(self)} documents)"


@dataclass(frozen=True)
class JudgmentSet:
    """Graded relevance judgments.

    ``averaged`` ratings are exact :class:`~fractions.Fraction` values so that
    relevance thresholds such as ``>= 1`` or ``>= 2`` compare exactly.
    """

    per_annotator: Mapping[tuple[str, str, str], int]
    averaged: Mapping[tuple[str, str], Fraction] = field(init=False)
    _by_query: Mapping[str, Mapping[str, Fraction]] = field(init=False, repr=False)

    def __post_init__(self):
        grouped: dict[tuple[str, str], list[int]] = defaultdict(list)
        for (qid, doc_id, _), rating in self.per_annotator.items():
            if rating not in RATINGS:
                raise ValidationError(f"rating {rating!r} not in {RATINGS}")
            grouped[qid, doc_id].append(rating)
        averaged = {key: Fraction(sum(v), len(v)) for key, v in grouped.items()}
        by_query: dict[str, dict[str, Fraction]] = defaultdict(dict)
        for (qid, doc_id), r in averaged.items():
            by_query[qid][doc_id] = r
        object.__setattr__(self, "averaged", averaged)
        object.__setattr__(self, "_by_query", dict(by_query))

    def rating(self, qid: str, doc_id: str) -> Fraction:
        """Averaged rating; unjudged pairs count as irrelevant."""
        return self._by_query.get(qid, {}).get(doc_id, Fraction(0))

    def for_query(self, qid: str) -> Mapping[str, Fraction]:
        return self._by_query.get(qid, {})

    @property
    def annotators(self) -> list[str]:
        return sorted({a for _, _, a in self.per_annotator})

    def __len__(self) -> int:
        return len(self.averaged)


def _lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def load_queries(path) -> QuerySet:
    """Read ``qid<TAB>text`` lines."""
    queries = []
    seen = set()
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) != 2:
            raise FormatError(path, lineno, f"expected 2 tab-separated fields, got {len(fields)}")
        qid, text = fields
        if qid in seen:
            raise FormatError(path, lineno, f"duplicate qid {qid!r}")
        seen.add(qid)
        try:
            queries.append(Query.from_text(qid, text))
        except ValidationError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    return QuerySet(queries)


def load_segmentations(path, queries: QuerySet) -> list[Segmentation]:
    """Read ``qid<TAB>strategy<TAB>seg1 | seg2 | ...`` lines, validated against ``queries``."""
    segs = []
    seen = set()
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
        qid, strategy, text = fields
        if qid not in queries:
            raise ValidationError(f"{path}:{lineno}: unknown qid {qid!r}")
        if (qid, strategy) in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate segmentation for {qid!r}/{strategy!r}")
        seen.add((qid, strategy))
        pieces = [tokenize(p) for p in text.split(SEGMENT_SEPARATOR)]
        if any(not p for p in pieces):
            raise ValidationError(f"{path}:{lineno}: empty segment")
        seg = Segmentation.from_segments(qid, strategy, pieces)
        if seg.tokens != queries[qid].tokens:
            raise ValidationError(
                f"{path}:{lineno}: segments {seg.render()!r} do not reconstruct "
                f"query {queries[qid].text!r}")
        segs.append(seg)
    return segs


def group_by_strategy(segs: Iterable[Segmentation]) -> dict[str, dict[str, Segmentation]]:
    """``strategy -> qid -> Segmentation``, strategies in first-seen order."""
    out: dict[str, dict[str, Segmentation]] = {}
    for s in segs:
        out.setdefault(s.strategy_id, {})[s.qid] = s
    return out


_DOC_FIELDS = ("doc_id", "url", "title", "body")


def load_corpus(path) -> DocumentPool:
    """Read one JSON object per line with string fields doc_id, url, title, body."""
    docs = []
    seen = set()
    for lineno, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(path, lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise FormatError(path, lineno, "expected a JSON object")
        for name in _DOC_FIELDS:
            if not isinstance(obj.get(name), str):
                raise FormatError(path, lineno, f"missing or non-string field {name!r}")
        if obj["doc_id"] in seen:
            raise FormatError(path, lineno, f"duplicate doc_id {obj['doc_id']!r}")
        seen.add(obj["doc_id"])
        docs.append(Document(*(obj[n] for n in _DOC_FIELDS)))
    return DocumentPool(docs)


def load_judgments(path) -> JudgmentSet:
    """Read ``qid<TAB>doc_id<TAB>annotator<TAB>{0|1|2}`` lines."""
    ratings: dict[tuple[str, str, str], int] = {}
    for lineno, line in _lines(path):
        fields = line.split("\t")
        if len(fields) != 4:
            raise FormatError(path, lineno, f"expected 4 tab-separated fields, got {len(fields)}")
        qid, doc_id, annotator, raw = fields
        if raw.strip() not in ("0", "1", "2"):
            raise FormatError(path, lineno, f"rating {raw!r} not in {{0,1,2}}")
        key = (qid, doc_id, annotator)
        if key in ratings:
            raise FormatError(path, lineno, f"duplicate judgment {key}")
        ratings[key] = int(raw)
    return JudgmentSet(ratings)


def write_queries(queries: Iterable[Query], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in queries:
            fh.write(f"{q.qid}\t{q.raw_text}\n")


def write_segmentations(segs: Iterable[Segmentation], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in segs:
            fh.write(f"{s.qid}\t{s.strategy_id}\t{s.render()}\n")


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in docs:
            fh.write(json.dumps({n: getattr(d, n) for n in _DOC_FIELDS}) + "\n")


def write_judgments(judgments: JudgmentSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (qid, doc_id, annotator), r in judgments.per_annotator.items():
            fh.write(f"{qid}\t{doc_id}\t{annotator}\t{r}\n")


def read_lines(path: str | Path) -> list[str]:
    """Non-empty lines of a UTF-8 text file."""
    return [line for _, line in _lines(path)]

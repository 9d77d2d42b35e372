"""Quoted versions of a segmented query.

A quoted version is stored in canonical form: every unquoted token is its own
clause and only multiword clauses carry quotes. Two versions that an engine
would read identically (``"harry potter" "game"`` and ``"harry potter" game``)
therefore compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from collections.abc import Sequence

from .corpus import Query, Segmentation, ValidationError, tokenize

DEFAULT_SEGMENT_CAP = 16
DEFAULT_LENGTH_CAP = 12


@dataclass(frozen=True)
class Clause:
    tokens: tuple[str, ...]
    quoted: bool = False

    def render(self) -> str:
        text = " ".join(self.tokens)
        return f'"{text}"' if self.quoted else text


@dataclass(frozen=True)
class QuotedVersion:
    qid: str
    clauses: tuple[Clause, ...]
    # Generation-time quote mask; not part of identity.
    bitmask: int = field(default=0, compare=False)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(t for c in self.clauses for t in c.tokens)

    @property
    def n_quoted(self) -> int:
        return sum(c.quoted for c in self.clauses)

    def phrases(self) -> list[tuple[str, ...]]:
        return [c.tokens for c in self.clauses if c.quoted]

    def __str__(self) -> str:
        return render(self)


def canonical_clauses(blocks: Sequence[tuple[Sequence[str], bool]]) -> tuple[Clause, ...]:
    """Canonicalize ``(tokens, quoted)`` blocks.

    Unquoted blocks are split into single-term clauses and quotes on
    single-token blocks are dropped.
    """
    out = []
    for tokens, quoted in blocks:
        if not tokens:
            raise ValidationError("empty clause")
        if quoted and len(tokens) > 1:
            out.append(Clause(tuple(tokens), True))
        else:
            out.extend(Clause((t,)) for t in tokens)
    return tuple(out)


def _check_cap(value: int, cap: int, what: str, flag: str) -> None:
    if value > cap:
        raise ValidationError(
            f"{what} {value} exceeds cap {cap}; raise {flag} to enumerate "
            f"{2 ** value} candidate versions")


def generate_versions(seg: Segmentation, query: Query,
                      max_segments: int = DEFAULT_SEGMENT_CAP) -> list[QuotedVersion]:
    """All distinct quoted versions of ``query`` under ``seg``, by ascending bitmask.

    Bit ``n - j`` of the bitmask (``j`` 1-based) quotes segment ``j``, so
    bitmask 1 quotes only the last segment. Duplicates keep the lowest mask.
    """
    if seg.qid != query.qid or seg.tokens != query.tokens:
        raise ValidationError(f"segmentation {seg.qid!r}/{seg.strategy_id!r} "
                              f"does not belong to query {query.qid!r}")
    segments = seg.segments()
    n = len(segments)
    _check_cap(n, max_segments, "segment count", "max_segments")
    seen = set()
    versions = []
    for mask in range(2 ** n):
        blocks = [(s, bool(mask >> (n - 1 - j) & 1)) for j, s in enumerate(segments)]
        clauses = canonical_clauses(blocks)
        if clauses in seen:
            continue
        seen.add(clauses)
        versions.append(QuotedVersion(query.qid, clauses, mask))
    return versions


def enumerate_all_partitions(query: Query,
                             max_length: int = DEFAULT_LENGTH_CAP) -> list[QuotedVersion]:
    """Every contiguous partition of the query with all multiword blocks quoted.

    The bitmask has one bit per gap between adjacent tokens (first gap is the
    most significant bit); a set bit joins the two tokens into one quoted block.
    Canonical versions and partitions are in bijection, so there are exactly
    ``2 ** (l - 1)`` results.
    """
    tokens = query.tokens
    l = len(tokens)
    _check_cap(l, max_length, "query length", "max_length")
    gaps = l - 1
    versions = []
    for mask in range(2 ** gaps):
        blocks = []
        start = 0
        for g in range(gaps):
            if not mask >> (gaps - 1 - g) & 1:
                blocks.append((tokens[start:g + 1], True))
                start = g + 1
        blocks.append((tokens[start:], True))
        versions.append(QuotedVersion(query.qid, canonical_clauses(blocks), mask))
    return versions


def version_segmentation(version: QuotedVersion, strategy_id: str) -> Segmentation:
    """The segmentation whose segments are the version's clauses."""
    return Segmentation.from_segments(version.qid, strategy_id,
                                      [c.tokens for c in version.clauses])


def render(version: QuotedVersion) -> str:
    return " ".join(c.render() for c in version.clauses)


def parse(text: str, qid: str = "") -> QuotedVersion:
    """Inverse of :func:`render`: double-quoted runs become phrase clauses.

    Text inside and outside quotes goes through the shared tokenizer; quotes
    must be balanced.
    """
    blocks = []
    parts = text.split('"')
    if len(parts) % 2 == 0:
        raise ValidationError(f"unbalanced quotes in {text!r}")
    for i, part in enumerate(parts):
        words = tokenize(part)
        if i % 2:
            if not words:
                raise ValidationError(f"empty phrase in {text!r}")
            blocks.append((words, True))
        elif words:
            blocks.append((words, False))
    if not blocks:
        raise ValidationError("empty query version")
    return QuotedVersion(qid, canonical_clauses(blocks))

import math

import pytest
from hypothesis import given, settings, strategies as st

from qsegeval.corpus import Document, DocumentPool, ValidationError
from qsegeval.engine import (EngineParams, LocalEngine, PositionalIndex, build_index,
                             phrase_occurs, search)
from qsegeval.quotegen import parse

from reference_impl import linear_scan_search


def pool_of(*texts):
    return DocumentPool(Document(f"D{i}", f"u{i}", "", t) for i, t in enumerate(texts, 1))


class TestBuildIndex:
    def test_positions(self):
        index = build_index(pool_of("a b a"))
        assert index.postings["a"] == {"D1": (1, 3)}
        assert index.postings["b"] == {"D1": (2,)}

    def test_shared_token(self):
        index = build_index(pool_of("x y", "y z"))
        assert set(index.postings["y"]) == {"D1", "D2"}

    def test_empty_pool(self):
        with pytest.raises(ValidationError):
            build_index(DocumentPool())

    def test_json_round_trip(self):
        index = build_index(pool_of("a b a", "c"))
        again = PositionalIndex.from_json(index.to_json())
        assert again.postings == index.postings
        assert again.doc_lengths == index.doc_lengths
        assert again.to_json() == index.to_json()


class TestPhraseOccurs:
    def test_contiguous(self):
        assert phrase_occurs(build_index(pool_of("new york city")), "D1", ["new", "york"]) == (True, 1)

    def test_order_matters(self):
        assert phrase_occurs(build_index(pool_of("york new")), "D1", ["new", "york"]) == (False, 0)

    def test_counts_each_occurrence(self):
        assert phrase_occurs(build_index(pool_of("a b a b")), "D1", ["a", "b"]) == (True, 2)

    def test_unknown_doc(self):
        with pytest.raises(KeyError):
            phrase_occurs(build_index(pool_of("a")), "nope", ["a"])

    def test_overlapping_occurrences(self):
        assert phrase_occurs(build_index(pool_of("a a a")), "D1", ["a", "a"]) == (True, 2)


def _bm25(tf, df, dl, n, avgdl, k1=1.2, b=0.75):
    return math.log(1 + (n - df + 0.5) / (df + 0.5)) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))


class TestSearch:
    def test_single_phrase_clause(self):
        index = build_index(pool_of("a b", "b a", "a x b"))
        assert search(index, parse('"a b"'), 10).doc_ids == ["D1"]

    def test_worked_example(self):
        index = build_index(pool_of("a b c", "c", "b a c"))
        ranked = search(index, parse('"a b" c'), 10)
        assert ranked.doc_ids == ["D1", "D2", "D3"]
        avgdl = 7 / 3
        expected = {
            # D1 matches both clauses: coordination 2/2
            "D1": _bm25(1, 1, 3, 3, avgdl) + _bm25(1, 3, 3, 3, avgdl),
            # D2, D3 match only c: coordination 1/2
            "D2": 0.5 * _bm25(1, 3, 1, 3, avgdl),
            "D3": 0.5 * _bm25(1, 3, 3, 3, avgdl),
        }
        for doc_id, score in ranked:
            assert score == pytest.approx(expected[doc_id], rel=1e-12)

    def test_depth_one(self):
        index = build_index(pool_of("a b c", "c", "b a c"))
        assert len(search(index, parse("c"), 1)) == 1

    def test_ties_by_doc_id(self):
        index = build_index(pool_of("z q", "z q", "z q"))
        assert search(index, parse("z"), 10).doc_ids == ["D1", "D2", "D3"]

    def test_bad_depth(self):
        with pytest.raises(ValidationError):
            search(build_index(pool_of("a")), parse("a"), 0)

    def test_adapter_contract(self):
        pool = pool_of("a b c", "c", "b a c")
        engine = LocalEngine(build_index(pool), pool=pool)
        assert engine('"a b" c', 2) == ["D1", "D2"]
        # shortest document wins a single-term query
        assert [d.doc_id for d in engine.documents("c", 1)] == ["D2"]

    def test_params_change_scores(self):
        index = build_index(pool_of("a b c d e f", "a"))
        flat = search(index, parse("a"), 10, EngineParams(b=0.0)).entries
        assert flat[0][1] == pytest.approx(flat[1][1])


# -- properties -------------------------------------------------------------

vocab = st.sampled_from("abcde")
doc_texts = st.lists(st.lists(vocab, min_size=1, max_size=12).map(" ".join), min_size=1, max_size=8)
query_texts = st.lists(st.lists(vocab, min_size=1, max_size=3), min_size=1, max_size=3).map(
    lambda blocks: " ".join('"' + " ".join(b) + '"' if len(b) > 1 else b[0] for b in blocks))


@given(doc_texts, query_texts, st.integers(1, 10))
def test_matches_linear_scan(texts, query, depth):
    docs = {f"D{i}": t for i, t in enumerate(texts)}
    index = build_index(DocumentPool(Document(d, d, "", t) for d, t in docs.items()))
    got = search(index, parse(query), depth)
    want, scores = linear_scan_search(docs, query, depth)
    assert got.doc_ids == want
    for d, s in got:
        assert s == pytest.approx(scores[d], rel=1e-12)


@given(doc_texts, query_texts)
def test_deterministic(texts, query):
    pool = DocumentPool(Document(f"D{i}", "u", "", t) for i, t in enumerate(texts))
    assert search(build_index(pool), parse(query), 5) == search(build_index(pool), parse(query), 5)


def candidates(index, text):
    return set(search(index, parse(text), index.doc_count).doc_ids)


def unquote(text, i):
    """Drop the quotes of the i-th quoted clause."""
    parts = text.split('"')
    return '"'.join(parts[:2 * i + 1]) + parts[2 * i + 1] + '"'.join(parts[2 * i + 2:])


@settings(max_examples=300)
@given(doc_texts, query_texts)
def test_quoting_monotone(texts, query):
    index = build_index(DocumentPool(Document(f"D{i}", "u", "", t) for i, t in enumerate(texts)))
    for i in range(query.count('"') // 2):
        assert candidates(index, query) <= candidates(index, unquote(query, i))


@given(doc_texts, query_texts)
def test_scores_sorted_and_nonnegative(texts, query):
    index = build_index(DocumentPool(Document(f"D{i}", "u", "", t) for i, t in enumerate(texts)))
    entries = search(index, parse(query), 10).entries
    keys = [(-s, d) for d, s in entries]
    assert keys == sorted(keys)
    assert all(s > 0 for _, s in entries)


def test_matching_every_clause_beats_matching_fewer():
    # same length, same term statistics except the one missing clause
    index = build_index(pool_of("a b x y", "a q x y", "a b x q"))
    scores = dict(search(index, parse("a b y"), 10).entries)
    assert scores["D1"] > scores["D2"]
    assert scores["D1"] > scores["D3"]

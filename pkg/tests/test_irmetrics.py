import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from qsegeval.corpus import JudgmentSet, ValidationError
from qsegeval.irmetrics import (DEFAULT_METRICS, MetricSpec, dcg_at_k, evaluate, map_at_k,
                                mrr_at_k, ndcg_at_k)

import reference_impl as ref


def judged(*ratings, qid="q"):
    """Docs d1..dn with the given single-annotator ratings."""
    return JudgmentSet({(qid, f"d{i}", "A"): r for i, r in enumerate(ratings, 1)})


DOCS = ["d1", "d2", "d3", "d4", "d5"]


class TestDcg:
    def test_two_one_zero(self):
        assert dcg_at_k("q", DOCS[:3], judged(2, 1, 0), 3) == 3.0

    def test_all_zero(self):
        assert dcg_at_k("q", DOCS[:3], judged(0, 0, 0), 3) == 0.0

    def test_first_term_only(self):
        assert dcg_at_k("q", DOCS[:3], judged(2, 2, 2), 1) == 2.0

    def test_empty_list(self):
        assert dcg_at_k("q", [], judged(2), 5) == 0.0

    def test_bad_k(self):
        with pytest.raises(ValidationError):
            dcg_at_k("q", DOCS, judged(2), 0)


class TestNdcg:
    def test_ideal_order(self):
        assert ndcg_at_k("q", DOCS[:3], judged(2, 1, 0), 3) == 1.0

    def test_ranks_one_and_two_weigh_equally(self):
        assert ndcg_at_k("q", ["d1", "d2"], judged(0, 2), 2) == 1.0

    def test_no_relevant(self):
        assert ndcg_at_k("q", DOCS[:2], judged(0, 0), 5) == 0.0

    def test_unjudged_docs_count_zero(self):
        js = judged(2, 1)
        assert ndcg_at_k("q", ["x", "d1", "d2"], js, 3) == pytest.approx(
            (2 + 1 / math.log2(3)) / 3)


class TestMap:
    def test_ranks_one_and_three(self):
        js = judged(2, 0, 1, 0, 0)
        assert map_at_k("q", DOCS, js, 5) == pytest.approx(5 / 6, abs=1e-12)

    def test_none_in_top_k(self):
        assert map_at_k("q", ["d1", "d2"], judged(0, 0, 2), 2) == 0.0

    def test_all_relevant(self):
        assert map_at_k("q", DOCS[:3], judged(1, 2, 1, 2, 2), 3) == 1.0

    def test_averaged_rating_threshold(self):
        # mean of 1 and 0 is 1/2: below the >= 1 threshold
        js = JudgmentSet({("q", "d1", "A"): 1, ("q", "d1", "B"): 0,
                          ("q", "d2", "A"): 1, ("q", "d2", "B"): 1})
        assert map_at_k("q", ["d1", "d2"], js, 2) == 0.5


class TestMrr:
    def test_rank_two(self):
        assert mrr_at_k("q", DOCS[:3], judged(1, 2, 2), 3) == 0.5

    def test_rank_one(self):
        assert mrr_at_k("q", DOCS[:3], judged(2, 0, 0), 3) == 1.0

    def test_none(self):
        assert mrr_at_k("q", DOCS[:3], judged(1, 1, 0, 2), 3) == 0.0

    def test_needs_unanimous_two(self):
        js = JudgmentSet({("q", "d1", "A"): 2, ("q", "d1", "B"): 1})
        assert mrr_at_k("q", ["d1"], js, 1) == 0.0
        assert mrr_at_k("q", ["d1"], js, 1, threshold=Fraction(3, 2)) == 1.0


class TestMetricSpec:
    def test_names_and_parse(self):
        assert [m.name for m in DEFAULT_METRICS] == [
            "nDCG@5", "nDCG@10", "MAP@5", "MAP@10", "MRR@5", "MRR@10"]
        assert MetricSpec.parse("ndcg@10") == MetricSpec("nDCG", 10)
        assert MetricSpec.parse("dcg@3").name == "DCG@3"

    @pytest.mark.parametrize("bad", ["ndcg", "foo@3", "map@0"])
    def test_rejects(self, bad):
        with pytest.raises(ValidationError):
            MetricSpec.parse(bad)

    def test_threshold_range(self):
        with pytest.raises(ValidationError):
            MetricSpec("MAP", 5, map_threshold=0)

    def test_evaluate_dispatch(self):
        js = judged(0, 2)
        assert evaluate(MetricSpec("nDCG", 2, normalize_dcg=False), "q", ["d1", "d2"], js) == 2.0
        assert evaluate(MetricSpec("MRR", 2), "q", ["d1", "d2"], js) == 0.5


# -- properties -------------------------------------------------------------

ratings = st.lists(st.sampled_from((0, 1, 2)), min_size=1, max_size=10)


@st.composite
def ranked_case(draw):
    rs = draw(ratings)
    js = judged(*rs)
    docs = [f"d{i}" for i in range(1, len(rs) + 1)] + ["x1", "x2"]
    ranked = draw(st.permutations(docs))[:draw(st.integers(0, len(docs)))]
    return rs, js, ranked, draw(st.integers(1, 12))


@given(ranked_case())
def test_agrees_with_reference(case):
    rs, js, ranked, k = case
    ratings_map = {f"d{i}": r for i, r in enumerate(rs, 1)}
    assert ndcg_at_k("q", ranked, js, k) == pytest.approx(ref.ndcg(ranked, ratings_map, k))
    assert map_at_k("q", ranked, js, k) == pytest.approx(ref.average_precision(ranked, ratings_map, k))
    assert mrr_at_k("q", ranked, js, k) == ref.reciprocal_rank(ranked, ratings_map, k)


@given(ranked_case())
def test_ranges(case):
    _, js, ranked, k = case
    for fn in (ndcg_at_k, map_at_k, mrr_at_k):
        assert 0.0 <= fn("q", ranked, js, k) <= 1.0 + 1e-12


@given(ranked_case())
def test_dcg_monotone_in_k(case):
    _, js, ranked, k = case
    assert dcg_at_k("q", ranked, js, k) <= dcg_at_k("q", ranked, js, k + 1)


@given(ranked_case())
def test_adjacent_swap_below_rank_one(case):
    _, js, ranked, _ = case
    k = len(ranked)
    # upper is the 0-based index of the upper item; rank >= 2 means upper >= 1
    for upper in range(1, len(ranked) - 1):
        a, b = ranked[upper], ranked[upper + 1]
        if js.rating("q", a) < js.rating("q", b):
            swapped = list(ranked)
            swapped[upper], swapped[upper + 1] = b, a
            assert dcg_at_k("q", swapped, js, k) >= dcg_at_k("q", ranked, js, k)


@given(ranked_case())
def test_rank_one_two_swap_is_neutral(case):
    _, js, ranked, _ = case
    assume(len(ranked) >= 2)
    swapped = [ranked[1], ranked[0], *ranked[2:]]
    assert dcg_at_k("q", swapped, js, len(ranked)) == pytest.approx(
        dcg_at_k("q", ranked, js, len(ranked)))


@given(st.lists(st.sampled_from(DOCS), unique=True), st.integers(1, 10))
def test_judgment_free_query(ranked, k):
    js = judged(2, 2, qid="other")
    assert map_at_k("q", ranked, js, k) == mrr_at_k("q", ranked, js, k) == 0.0

import pytest
from hypothesis import given
from hypothesis import strategies as st

from peergrade import aggregation as agg
from peergrade.errors import InvalidRecordError
from peergrade.weighting import (
    MISSING_RECORD,
    EngagementRecord,
    PerformanceRecord,
    WeightScheme,
    engagement_weight,
    performance_weight,
    weights_for_raters,
)


def perf(scores, total=7, sid="s"):
    return PerformanceRecord(sid, {f"q{i}": s for i, s in enumerate(scores)}, total)


@pytest.mark.parametrize("done, expected", [(7, 1.0), (0, 0.0), (5, 0.7142857142857143)])
def test_engagement_weight(done, expected):
    assert engagement_weight(EngagementRecord("s", done, 7)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("done, total", [(8, 7), (-1, 7), (0, 0)])
def test_engagement_invalid(done, total):
    with pytest.raises(InvalidRecordError):
        engagement_weight(EngagementRecord("s", done, total))


@pytest.mark.parametrize("scores, expected", [
    ([100] * 7, 1.0),
    ([80, 90, 100, 70, 60, 50, 40], 0.70),
    ([100, 100, 100, 100], 0.5714285714285714),
])
def test_performance_weight(scores, expected):
    assert performance_weight(perf(scores)) == pytest.approx(expected, rel=1e-15)


def test_performance_attempted_only_switch():
    assert performance_weight(perf([100, 100, 100, 100]), attempted_only=True) == 1.0
    assert performance_weight(perf([]), attempted_only=True) == 0.0


@pytest.mark.parametrize("record", [
    perf([101]),
    perf([-5]),
    perf([50] * 8),
    perf([50], total=0),
])
def test_performance_invalid(record):
    with pytest.raises(InvalidRecordError):
        performance_weight(record)


def test_weights_for_raters():
    eng = {"a": EngagementRecord("a", 7, 7), "b": EngagementRecord("b", 0, 7)}
    quizzes = {"b": perf([80, 90, 100, 70, 60, 50, 40], sid="b")}
    assert weights_for_raters(["a", "b", "c"], WeightScheme.NONE) == ([1.0, 1.0, 1.0], [])
    assert weights_for_raters(["a", "b"], WeightScheme.ENGAGEMENT, eng, quizzes) == ([1.0, 0.0], [])
    w, diag = weights_for_raters(["a", "b"], WeightScheme.PERFORMANCE, eng, quizzes)
    assert w == pytest.approx([0.0, 0.70])
    assert diag == [("a", MISSING_RECORD)]


@given(st.integers(1, 30), st.data())
def test_engagement_monotone_and_bounded(total, data):
    a = data.draw(st.integers(0, total))
    b = data.draw(st.integers(a, total))
    wa = engagement_weight(EngagementRecord("s", a, total))
    wb = engagement_weight(EngagementRecord("s", b, total))
    assert 0.0 <= wa <= wb <= 1.0


@given(st.lists(st.floats(0, 100), min_size=1, max_size=7), st.data())
def test_performance_monotone_and_bounded(scores, data):
    i = data.draw(st.integers(0, len(scores) - 1))
    raised = list(scores)
    raised[i] = data.draw(st.floats(scores[i], 100))
    lo, hi = performance_weight(perf(scores)), performance_weight(perf(raised))
    assert 0.0 <= lo <= hi <= 1.0


@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=6))
def test_none_scheme_matches_unweighted(xs):
    ids = [f"r{i}" for i in range(len(xs))]
    w, _ = weights_for_raters(ids, WeightScheme.NONE)
    for plain, weighted in [(agg.arithmetic_mean, agg.weighted_arithmetic_mean),
                            (agg.geometric_mean, agg.weighted_geometric_mean),
                            (agg.harmonic_mean, agg.weighted_harmonic_mean),
                            (agg.median, agg.weighted_median)]:
        assert weighted(xs, w) == pytest.approx(plain(xs), rel=1e-12)

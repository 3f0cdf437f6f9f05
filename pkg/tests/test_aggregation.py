import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from peergrade import aggregation as agg
from peergrade.aggregation import AggregationMethod as M
from peergrade.errors import (
    AllZeroWeightsError,
    EmptySampleError,
    InvalidGradeError,
    LengthMismatchError,
    ZeroObservationError,
)

UNWEIGHTED = [agg.arithmetic_mean, agg.geometric_mean, agg.harmonic_mean, agg.median]
WEIGHTED = [agg.weighted_arithmetic_mean, agg.weighted_geometric_mean,
            agg.weighted_harmonic_mean, agg.weighted_median]
PAIRS = list(zip(UNWEIGHTED, WEIGHTED))

grades = st.floats(min_value=0.1, max_value=10.0, allow_nan=False)
# exact zeros or normal-range weights; subnormals underflow to 0 when rescaled
weights = st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1.0))


@st.composite
def weighted_samples(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    xs = draw(st.lists(grades, min_size=n, max_size=n))
    ws = draw(st.lists(weights, min_size=n, max_size=n))
    if not any(w > 0 for w in ws):
        ws[draw(st.integers(0, n - 1))] = draw(st.floats(0.01, 1.0))
    return xs, ws


@pytest.mark.parametrize("sample, expected", [
    ([2, 4, 6], 4),
    ([7.5], 7.5),
    ([2.1, 3.3, 7.2], 4.2),
])
def test_arithmetic_mean(sample, expected):
    assert agg.arithmetic_mean(sample) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("sample, expected", [([5, 5, 5], 5), ([0, 8], 0), ([4, 9], 6)])
def test_geometric_mean(sample, expected):
    assert agg.geometric_mean(sample) == pytest.approx(expected, rel=1e-15)


def test_geometric_mean_zero_is_exact():
    assert agg.geometric_mean([0, 8]) == 0.0


@pytest.mark.parametrize("sample, expected", [([5, 5, 5], 5), ([2, 6], 3)])
def test_harmonic_mean(sample, expected):
    assert agg.harmonic_mean(sample) == pytest.approx(expected, rel=1e-15)


def test_harmonic_mean_rejects_zero():
    with pytest.raises(ZeroObservationError):
        agg.harmonic_mean([4, 0])


@pytest.mark.parametrize("sample, expected", [([3, 9, 5], 5), ([2, 4, 6, 8], 5), ([7], 7)])
def test_median(sample, expected):
    assert agg.median(sample) == expected


@pytest.mark.parametrize("func", UNWEIGHTED)
def test_empty_sample(func):
    with pytest.raises(EmptySampleError):
        func([])


@pytest.mark.parametrize("bad", [math.nan, math.inf, -1.0])
def test_invalid_grade(bad):
    with pytest.raises(InvalidGradeError):
        agg.arithmetic_mean([1.0, bad])


@pytest.mark.parametrize("xs, ws, expected", [
    ([2, 10], [1, 3], 8),
    ([2, 4, 6], [0.5, 0.5, 0.5], 4),
    ([3, 9], [1, 0], 3),
])
def test_weighted_arithmetic_mean(xs, ws, expected):
    assert agg.weighted_arithmetic_mean(xs, ws) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("xs, ws, expected", [
    ([2, 8], [1, 1], 4),
    ([2, 8], [3, 1], 2.8284271247461903),
    ([5, 5, 5], [0.2, 0.3, 0.5], 5),
])
def test_weighted_geometric_mean(xs, ws, expected):
    assert agg.weighted_geometric_mean(xs, ws) == pytest.approx(expected, rel=1e-15)


def test_weighted_geometric_mean_zero_grade():
    assert agg.weighted_geometric_mean([0, 8], [1, 1]) == 0.0
    # a zero grade without weight is discarded
    assert agg.weighted_geometric_mean([0, 8], [0, 1]) == 8.0


@pytest.mark.parametrize("xs, ws, expected", [
    ([2, 6], [1, 1], 3),
    ([2, 6], [1, 3], 4),
    ([5, 5], [7, 0.1], 5),
])
def test_weighted_harmonic_mean(xs, ws, expected):
    assert agg.weighted_harmonic_mean(xs, ws) == pytest.approx(expected, rel=1e-15)


def test_weighted_harmonic_mean_zero_grade():
    with pytest.raises(ZeroObservationError):
        agg.weighted_harmonic_mean([0, 8], [1, 1])
    assert agg.weighted_harmonic_mean([0, 8], [0, 1]) == 8.0


@pytest.mark.parametrize("xs, ws, expected", [
    ([1, 2, 3], [1, 1, 4], 3),
    ([1, 3], [1, 1], 2),
    ([0.5, 7], [0, 1], 7),
    ([4.0], [0.3], 4.0),
    ([6, 2, 9, 4], [1, 1, 1, 1], 5),
])
def test_weighted_median(xs, ws, expected):
    assert agg.weighted_median(xs, ws) == expected


@pytest.mark.parametrize("func", WEIGHTED)
def test_weighted_errors(func):
    with pytest.raises(LengthMismatchError):
        func([1, 2], [1])
    with pytest.raises(AllZeroWeightsError):
        func([1, 2], [0, 0])
    with pytest.raises(ValueError):
        func([1, 2], [1, -1])


def test_aggregate_dispatch():
    res = agg.aggregate([2, 4, 6], M.MEDIAN)
    assert (res.value, res.weighted, res.diagnostics) == (4, False, ())
    res = agg.aggregate([2, 10], M.ARITHMETIC_MEAN, [1, 3])
    assert (res.value, res.weighted) == (8, True)


def test_aggregate_all_zero_fallback():
    res = agg.aggregate([2, 10], M.MEDIAN, [0, 0])
    assert res.value == 6
    assert res.diagnostics == (agg.UNWEIGHTED_FALLBACK,)
    assert not res.weighted


def test_aggregate_flags_discarded_weights():
    res = agg.aggregate([3, 9, 4], M.ARITHMETIC_MEAN, [1, 0, 1])
    assert res.diagnostics == (agg.ZERO_WEIGHTS_DISCARDED,)


def test_aggregate_propagates_other_errors():
    with pytest.raises(ZeroObservationError):
        agg.aggregate([0, 8], M.HARMONIC_MEAN)
    with pytest.raises(LengthMismatchError):
        agg.aggregate([1, 2], M.MEDIAN, [1])


def test_method_parse():
    assert M.parse("median") is M.MEDIAN
    assert M.parse("gm") is M.GEOMETRIC_MEAN
    with pytest.raises(ValueError):
        M.parse("trimmed")


# -- properties ----------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(weighted_samples())
def test_bounds(sample):
    xs, ws = sample
    lo, hi = min(xs), max(xs)
    for f in UNWEIGHTED:
        assert lo <= f(xs) <= hi
    kept = [x for x, w in zip(xs, ws) if w > 0]
    for f in WEIGHTED:
        assert min(kept) <= f(xs, ws) <= max(kept)


@settings(max_examples=300, deadline=None)
@given(st.lists(grades, min_size=1, max_size=10))
def test_mean_inequality(xs):
    h, g, a = agg.harmonic_mean(xs), agg.geometric_mean(xs), agg.arithmetic_mean(xs)
    assert h <= g + 1e-12
    assert g <= a + 1e-12


@settings(max_examples=300, deadline=None)
@given(st.lists(grades, min_size=1, max_size=10), st.floats(0.01, 100.0))
def test_equal_weight_reduction(xs, c):
    for plain, weighted in PAIRS:
        assert weighted(xs, [c] * len(xs)) == pytest.approx(plain(xs), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(weighted_samples(), st.floats(0.01, 100.0))
def test_weight_scale_invariance(sample, c):
    xs, ws = sample
    for f in WEIGHTED:
        assert f(xs, [c * w for w in ws]) == pytest.approx(f(xs, ws), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(weighted_samples(), st.randoms(use_true_random=False))
def test_permutation_invariance(sample, rnd):
    xs, ws = sample
    order = list(range(len(xs)))
    rnd.shuffle(order)
    pxs, pws = [xs[i] for i in order], [ws[i] for i in order]
    for f in UNWEIGHTED:
        assert f(pxs) == pytest.approx(f(xs), rel=1e-12)
    for f in WEIGHTED:
        assert f(pxs, pws) == pytest.approx(f(xs, ws), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(weighted_samples(), st.data())
def test_monotone_in_each_grade(sample, data):
    xs, ws = sample
    ws = [w if w > 0 else 0.5 for w in ws]
    i = data.draw(st.integers(0, len(xs) - 1))
    bumped = list(xs)
    bumped[i] = min(10.0, xs[i] + data.draw(st.floats(0.0, 5.0)))
    for plain, weighted in PAIRS:
        assert plain(bumped) >= plain(xs) - 1e-12
        assert weighted(bumped, ws) >= weighted(xs, ws) - 1e-12


@settings(max_examples=300, deadline=None)
@given(weighted_samples())
def test_zero_weight_discard(sample):
    xs, ws = sample
    kept_x = [x for x, w in zip(xs, ws) if w > 0]
    kept_w = [w for w in ws if w > 0]
    for f in WEIGHTED:
        assert f(xs, ws) == pytest.approx(f(kept_x, kept_w), rel=1e-12)


def test_oracle_equivalence_seeded():
    rng = random.Random(20240611)
    for _ in range(300):
        n = rng.randint(1, 10)
        xs = [rng.uniform(0.1, 10.0) for _ in range(n)]
        ws = [rng.random() for _ in range(n)]
        assert agg.arithmetic_mean(xs) == pytest.approx(oracles.am(xs), rel=1e-9)
        assert agg.geometric_mean(xs) == pytest.approx(oracles.gm(xs), rel=1e-9)
        assert agg.harmonic_mean(xs) == pytest.approx(oracles.hm(xs), rel=1e-9)
        assert agg.median(xs) == pytest.approx(oracles.md(xs), rel=1e-9)
        assert agg.weighted_arithmetic_mean(xs, ws) == pytest.approx(oracles.wam(xs, ws), rel=1e-9)
        assert agg.weighted_geometric_mean(xs, ws) == pytest.approx(oracles.wgm(xs, ws), rel=1e-9)
        assert agg.weighted_harmonic_mean(xs, ws) == pytest.approx(oracles.whm(xs, ws), rel=1e-9)
        assert agg.weighted_median(xs, ws) == pytest.approx(oracles.wmd(xs, ws), rel=1e-9)


def test_weighted_median_exact_half_with_ties_in_grade():
    # cumulative weight hits the half exactly on a run of equal grades
    assert agg.weighted_median([5, 5, 7, 7], [1, 1, 1, 1]) == 6
    assert agg.weighted_median([5, 5, 5, 7], [1, 1, 1, 3]) == 6

"""Unweighted and weighted aggregation of a set of peer grades.

Four location measures (arithmetic, geometric and harmonic means, median) each
come in an unweighted and a weighted form.  All arithmetic is done in binary64;
sums go through :func:`math.fsum` so results do not depend on input order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import (
    AllZeroWeightsError,
    EmptySampleError,
    InvalidGradeError,
    InvalidWeightError,
    LengthMismatchError,
    ZeroObservationError,
)

ZERO_WEIGHTS_DISCARDED = "ZERO_WEIGHTS_DISCARDED"
UNWEIGHTED_FALLBACK = "UNWEIGHTED_FALLBACK"


class AggregationMethod(enum.Enum):
    ARITHMETIC_MEAN = "ARITHMETIC_MEAN"
    GEOMETRIC_MEAN = "GEOMETRIC_MEAN"
    HARMONIC_MEAN = "HARMONIC_MEAN"
    MEDIAN = "MEDIAN"

    @classmethod
    def parse(cls, text: str) -> "AggregationMethod":
        key = text.strip().upper().replace("-", "_")
        aliases = {"AM": "ARITHMETIC_MEAN", "MEAN": "ARITHMETIC_MEAN",
                   "GM": "GEOMETRIC_MEAN", "HM": "HARMONIC_MEAN", "MD": "MEDIAN"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown aggregation method: {text!r}") from None


@dataclass(frozen=True)
class AggregateResult:
    value: float
    method: AggregationMethod
    weighted: bool
    diagnostics: tuple[str, ...] = field(default=())


def _check_sample(sample: Sequence[float]) -> list[float]:
    xs = [float(x) for x in sample]
    if not xs:
        raise EmptySampleError("cannot aggregate an empty sample")
    for x in xs:
        if not math.isfinite(x) or x < 0:
            raise InvalidGradeError(f"grade must be finite and non-negative, got {x!r}")
    return xs


def _check_weighted(sample: Sequence[float], weights: Sequence[float]) -> tuple[list[float], list[float]]:
    """Validate a sample/weight pair and drop the zero-weight observations."""
    xs = _check_sample(sample)
    ws = [float(w) for w in weights]
    if len(ws) != len(xs):
        raise LengthMismatchError(f"{len(xs)} grades but {len(ws)} weights")
    for w in ws:
        if not math.isfinite(w) or w < 0:
            raise InvalidWeightError(f"weight must be finite and non-negative, got {w!r}")
    kept = [(x, w) for x, w in zip(xs, ws) if w > 0]
    if not kept:
        raise AllZeroWeightsError("every weight is zero")
    return [x for x, _ in kept], [w for _, w in kept]


def _clamp(value: float, xs: list[float]) -> float:
    # A mean of xs lies in [min, max]; rounding in exp/log or division may
    # push it one ulp outside.
    return min(max(value, min(xs)), max(xs))


def arithmetic_mean(sample: Sequence[float]) -> float:
    xs = _check_sample(sample)
    if min(xs) == max(xs):
        return xs[0]
    return _clamp(math.fsum(xs) / len(xs), xs)


def geometric_mean(sample: Sequence[float]) -> float:
    """n-th root of the product; exactly 0 when any grade is 0."""
    xs = _check_sample(sample)
    if any(x == 0 for x in xs):
        return 0.0
    if min(xs) == max(xs):
        return xs[0]
    return _clamp(math.exp(math.fsum(math.log(x) for x in xs) / len(xs)), xs)


def harmonic_mean(sample: Sequence[float]) -> float:
    xs = _check_sample(sample)
    if any(x == 0 for x in xs):
        raise ZeroObservationError("harmonic mean is undefined for a zero grade")
    if min(xs) == max(xs):
        return xs[0]
    return _clamp(len(xs) / math.fsum(1.0 / x for x in xs), xs)


def median(sample: Sequence[float]) -> float:
    xs = sorted(_check_sample(sample))
    n = len(xs)
    mid = n // 2
    if n % 2:
        return xs[mid]
    return (xs[mid - 1] + xs[mid]) / 2


def weighted_arithmetic_mean(sample: Sequence[float], weights: Sequence[float]) -> float:
    xs, ws = _check_weighted(sample, weights)
    if min(xs) == max(xs):
        return xs[0]
    return _clamp(math.fsum(w * x for x, w in zip(xs, ws)) / math.fsum(ws), xs)


def weighted_geometric_mean(sample: Sequence[float], weights: Sequence[float]) -> float:
    """Product of ``x_i ** w_i``, rooted by the total weight.

    Zero-weight observations are dropped first, so a zero grade only forces
    the result to 0 when it carries positive weight.
    """
    xs, ws = _check_weighted(sample, weights)
    if any(x == 0 for x in xs):
        return 0.0
    if min(xs) == max(xs):
        return xs[0]
    log_sum = math.fsum(w * math.log(x) for x, w in zip(xs, ws))
    return _clamp(math.exp(log_sum / math.fsum(ws)), xs)


def weighted_harmonic_mean(sample: Sequence[float], weights: Sequence[float]) -> float:
    xs, ws = _check_weighted(sample, weights)
    if any(x == 0 for x in xs):
        raise ZeroObservationError("positive weight on a zero grade")
    if min(xs) == max(xs):
        return xs[0]
    return _clamp(math.fsum(ws) / math.fsum(w / x for x, w in zip(xs, ws)), xs)


def weighted_median(sample: Sequence[float], weights: Sequence[float]) -> float:
    """The 50% weighted percentile.

    Observations are sorted by grade (ties by original position) and the first
    grade whose cumulative weight passes half the total is returned.  When the
    cumulative weight lands exactly on the half, the midpoint with the next
    grade is returned, which is the ordinary median for equal weights.
    Cumulative weights are compared exactly, as rationals.
    """
    xs, ws = _check_weighted(sample, weights)
    order = sorted(range(len(xs)), key=lambda i: (xs[i], i))
    fracs = [Fraction(ws[i]) for i in order]
    half = sum(fracs) / 2
    cumulative = Fraction(0)
    for pos, i in enumerate(order):
        cumulative += fracs[pos]
        if cumulative > half:
            return xs[i]
        if cumulative == half:
            return (xs[i] + xs[order[pos + 1]]) / 2
    raise AssertionError("unreachable: cumulative weight never passed half")  # pragma: no cover


UNWEIGHTED: dict[AggregationMethod, Callable[[Sequence[float]], float]] = {
    AggregationMethod.ARITHMETIC_MEAN: arithmetic_mean,
    AggregationMethod.GEOMETRIC_MEAN: geometric_mean,
    AggregationMethod.HARMONIC_MEAN: harmonic_mean,
    AggregationMethod.MEDIAN: median,
}

WEIGHTED: dict[AggregationMethod, Callable[[Sequence[float], Sequence[float]], float]] = {
    AggregationMethod.ARITHMETIC_MEAN: weighted_arithmetic_mean,
    AggregationMethod.GEOMETRIC_MEAN: weighted_geometric_mean,
    AggregationMethod.HARMONIC_MEAN: weighted_harmonic_mean,
    AggregationMethod.MEDIAN: weighted_median,
}


def aggregate(
    sample: Sequence[float],
    method: AggregationMethod,
    weights: Sequence[float] | None = None,
) -> AggregateResult:
    """Dispatch to one of the eight functions.

    If every weight is zero the unweighted function is used instead and the
    result carries ``UNWEIGHTED_FALLBACK``; all other errors propagate.
    """
    if weights is None:
        return AggregateResult(UNWEIGHTED[method](sample), method, False)
    if len(weights) != len(sample):
        raise LengthMismatchError(f"{len(sample)} grades but {len(weights)} weights")
    try:
        value = WEIGHTED[method](sample, weights)
    except AllZeroWeightsError:
        return AggregateResult(UNWEIGHTED[method](sample), method, False, (UNWEIGHTED_FALLBACK,))
    diagnostics = (ZERO_WEIGHTS_DISCARDED,) if any(w == 0 for w in weights) else ()
    return AggregateResult(value, method, True, diagnostics)

"""Agreement between aggregated peer grades and instructor grades.

Pearson correlation with a two-tailed t-test, descriptive statistics, and the
histogram / five-number-summary tables behind the distribution plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from scipy.special import betainc

from . import aggregation
from .aggregation import AggregationMethod, aggregate
from .errors import ConstantVectorError, LengthMismatchError, TooFewValuesError
from .weighting import WeightScheme, weights_for_raters

if TYPE_CHECKING:
    from .ingest import ReviewDataset

DEGENERATE = "DEGENERATE"
CONSTANT_VECTOR = "CONSTANT_VECTOR"
INSTRUCTOR = "INSTRUCTOR"


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise LengthMismatchError(f"{len(xs)} vs {len(ys)} values")
    if len(xs) < 3:
        raise TooFewValuesError(f"correlation needs at least 3 pairs, got {len(xs)}")
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    dx = [v - mx for v in xs]
    dy = [v - my for v in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise ConstantVectorError("correlation is undefined for a constant vector")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    # sqrt(s * s) == s in binary64, so r(X, X) is exactly 1
    r = sxy / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class Significance:
    t_statistic: float
    p_value: float
    degenerate: bool = False


def significance(r: float, m: int) -> Significance:
    """Two-tailed Student-t test of a Pearson coefficient over ``m`` pairs."""
    if m < 3:
        raise TooFewValuesError(f"significance needs m >= 3, got {m}")
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation {r!r} outside [-1, 1]")
    if abs(r) == 1.0:
        return Significance(math.copysign(math.inf, r), 0.0, True)
    df = m - 2
    t = r * math.sqrt(df) / math.sqrt(1.0 - r * r)
    # P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return Significance(t, min(1.0, max(0.0, p)))


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    sd: float
    min: float
    max: float
    count: int


def descriptive(values: Sequence[float]) -> DescriptiveStats:
    xs = [float(v) for v in values]
    if len(xs) < 2:
        raise TooFewValuesError("descriptive statistics need at least 2 values")
    lo, hi = min(xs), max(xs)
    mean = min(max(math.fsum(xs) / len(xs), lo), hi)
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in xs) / (len(xs) - 1))
    return DescriptiveStats(mean, sd, lo, hi, len(xs))


def histogram(values: Iterable[float], bin_width: float = 0.5, origin: float = 0.0) -> list[tuple[float, int]]:
    """Counts over half-open bins ``[origin + k*w, origin + (k+1)*w)``.

    Bins run from the lowest to the highest occupied bin; empty bins in
    between are kept with count 0.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    counts: dict[int, int] = {}
    for v in values:
        k = math.floor((v - origin) / bin_width)
        # guard against (v - origin) / w rounding across a bin edge
        if origin + k * bin_width > v:
            k -= 1
        elif origin + (k + 1) * bin_width <= v:
            k += 1
        counts[k] = counts.get(k, 0) + 1
    if not counts:
        return []
    return [(origin + k * bin_width, counts.get(k, 0)) for k in range(min(counts), max(counts) + 1)]


@dataclass(frozen=True)
class FiveNumberSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float


def _quantile(xs: list[float], q: float) -> float:
    pos = (len(xs) - 1) * q
    lo = math.floor(pos)
    frac = pos - lo
    if frac == 0:
        return xs[lo]
    return xs[lo] + (xs[lo + 1] - xs[lo]) * frac


def five_number_summary(values: Sequence[float]) -> FiveNumberSummary:
    xs = sorted(float(v) for v in values)
    if not xs:
        raise TooFewValuesError("five-number summary of an empty vector")
    return FiveNumberSummary(xs[0], _quantile(xs, 0.25), aggregation.median(xs), _quantile(xs, 0.75), xs[-1])


@dataclass(frozen=True)
class ValidityCell:
    method: AggregationMethod
    scheme: WeightScheme
    r: float
    t_statistic: float
    p_value: float
    m: int
    flags: tuple[str, ...] = ()


@dataclass
class ValidityReport:
    cells: dict[tuple[AggregationMethod, WeightScheme], ValidityCell]
    scores: dict[tuple[AggregationMethod, WeightScheme], list[float]]
    instructor: list[float]
    essay_ids: list[str]
    stats: dict[str, DescriptiveStats]
    histograms: dict[str, list[tuple[float, int]]]
    boxplots: dict[str, FiveNumberSummary]
    diagnostics: dict[str, int] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def cell(self, method: AggregationMethod, scheme: WeightScheme) -> ValidityCell:
        return self.cells[(method, scheme)]


def series_label(method: AggregationMethod, scheme: WeightScheme) -> str:
    return f"{method.value}/{scheme.value}"


def aggregate_dataset(
    dataset: "ReviewDataset",
    method: AggregationMethod,
    scheme: WeightScheme,
    attempted_only: bool = False,
) -> tuple[list[float], list[tuple[str, ...]]]:
    """Aggregate every essay of ``dataset``; returns values and per-essay diagnostics."""
    values: list[float] = []
    flags: list[tuple[str, ...]] = []
    for essay in dataset.essays:
        grades = [rv.grade for rv in essay.peer_reviews]
        raters = [rv.rater_id for rv in essay.peer_reviews]
        if scheme is WeightScheme.NONE:
            result = aggregate(grades, method)
            notes: list[str] = []
        else:
            weights, missing = weights_for_raters(
                raters, scheme, dataset.engagement, dataset.performance, attempted_only
            )
            result = aggregate(grades, method, weights)
            notes = sorted({code for _, code in missing})
        values.append(result.value)
        flags.append(tuple(notes) + result.diagnostics)
    return values, flags


def build_validity_report(
    dataset: "ReviewDataset",
    methods: Sequence[AggregationMethod] = tuple(AggregationMethod),
    schemes: Sequence[WeightScheme] = tuple(WeightScheme),
    bin_width: float = 0.5,
    attempted_only: bool = False,
) -> ValidityReport:
    """Correlate every (method, scheme) aggregation with the instructor grades.

    A cell whose aggregated vector is constant gets ``r = nan`` and the
    ``CONSTANT_VECTOR`` flag instead of failing the whole grid.
    """
    instructor = [essay.instructor_grade for essay in dataset.essays]
    if any(g is None for g in instructor):
        raise ValueError("every retained essay needs an instructor grade")
    m = len(instructor)
    if m < 3:
        raise TooFewValuesError(f"validity needs at least 3 essays, got {m}")

    cells: dict[tuple[AggregationMethod, WeightScheme], ValidityCell] = {}
    scores: dict[tuple[AggregationMethod, WeightScheme], list[float]] = {}
    stats: dict[str, DescriptiveStats] = {INSTRUCTOR: descriptive(instructor)}
    histograms = {INSTRUCTOR: histogram(instructor, bin_width)}
    boxplots = {INSTRUCTOR: five_number_summary(instructor)}
    diagnostics: dict[str, int] = {}

    for scheme in schemes:
        for method in methods:
            values, flags = aggregate_dataset(dataset, method, scheme, attempted_only)
            for essay_flags in flags:
                for code in essay_flags:
                    key = f"{series_label(method, scheme)}:{code}"
                    diagnostics[key] = diagnostics.get(key, 0) + 1
            try:
                r = pearson(values, instructor)
            except ConstantVectorError:
                cell = ValidityCell(method, scheme, math.nan, math.nan, math.nan, m, (CONSTANT_VECTOR,))
            else:
                sig = significance(r, m)
                cell = ValidityCell(
                    method, scheme, r, sig.t_statistic, sig.p_value, m,
                    (DEGENERATE,) if sig.degenerate else (),
                )
            cells[(method, scheme)] = cell
            scores[(method, scheme)] = values
            label = series_label(method, scheme)
            stats[label] = descriptive(values)
            histograms[label] = histogram(values, bin_width)
            boxplots[label] = five_number_summary(values)

    return ValidityReport(
        cells=cells,
        scores=scores,
        instructor=instructor,
        essay_ids=[essay.essay_id for essay in dataset.essays],
        stats=stats,
        histograms=histograms,
        boxplots=boxplots,
        diagnostics=dict(sorted(diagnostics.items())),
    )

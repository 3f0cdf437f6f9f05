"""Weighted aggregation of rubric-based peer grades and its validity analysis."""

from .aggregation import (
    AggregateResult,
    AggregationMethod,
    aggregate,
    arithmetic_mean,
    geometric_mean,
    harmonic_mean,
    median,
    weighted_arithmetic_mean,
    weighted_geometric_mean,
    weighted_harmonic_mean,
    weighted_median,
)
from .weighting import (
    EngagementRecord,
    PerformanceRecord,
    WeightScheme,
    engagement_weight,
    performance_weight,
    weights_for_raters,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateResult",
    "AggregationMethod",
    "EngagementRecord",
    "PerformanceRecord",
    "WeightScheme",
    "aggregate",
    "arithmetic_mean",
    "engagement_weight",
    "geometric_mean",
    "harmonic_mean",
    "median",
    "performance_weight",
    "weighted_arithmetic_mean",
    "weighted_geometric_mean",
    "weighted_harmonic_mean",
    "weighted_median",
    "weights_for_raters",
]

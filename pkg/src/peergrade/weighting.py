"""Per-rater weights from course engagement and quiz performance."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InvalidRecordError

MISSING_RECORD = "MISSING_RECORD"


class WeightScheme(enum.Enum):
    NONE = "NONE"
    ENGAGEMENT = "ENGAGEMENT"
    PERFORMANCE = "PERFORMANCE"

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise ValueError(f"unknown weight scheme: {text!r}") from None


@dataclass(frozen=True)
class EngagementRecord:
    student_id: str
    lessons_completed_on_time: int
    total_lessons: int


@dataclass(frozen=True)
class PerformanceRecord:
    student_id: str
    quiz_scores: Mapping[str, float] = field(default_factory=dict)
    total_quizzes: int = 1


def engagement_weight(record: EngagementRecord) -> float:
    """Fraction of lessons completed on time."""
    done, total = record.lessons_completed_on_time, record.total_lessons
    if total < 1 or not 0 <= done <= total:
        raise InvalidRecordError(
            f"{record.student_id}: {done} of {total} lessons is not a valid count"
        )
    return done / total


def performance_weight(record: PerformanceRecord, attempted_only: bool = False) -> float:
    """Average quiz mark on the 0-1 scale.

    By default the average runs over every quiz in the course, so an
    unattempted quiz counts as 0.  With ``attempted_only`` the denominator is
    the number of quizzes actually taken (0 if none were).
    """
    scores = list(record.quiz_scores.values())
    if record.total_quizzes < 1 or len(scores) > record.total_quizzes:
        raise InvalidRecordError(
            f"{record.student_id}: {len(scores)} scores for {record.total_quizzes} quizzes"
        )
    for s in scores:
        if not (math.isfinite(s) and 0 <= s <= 100):
            raise InvalidRecordError(f"{record.student_id}: quiz score {s!r} outside [0, 100]")
    denominator = len(scores) if attempted_only else record.total_quizzes
    if denominator == 0:
        return 0.0
    return min(1.0, math.fsum(scores) / (denominator * 100))


def weights_for_raters(
    rater_ids: Sequence[str],
    scheme: WeightScheme,
    engagement: Mapping[str, EngagementRecord] | None = None,
    performance: Mapping[str, PerformanceRecord] | None = None,
    attempted_only: bool = False,
) -> tuple[list[float], list[tuple[str, str]]]:
    """Weight vector aligned with ``rater_ids`` plus ``(rater_id, code)`` diagnostics.

    A rater without a record gets weight 0 and a ``MISSING_RECORD`` diagnostic.
    """
    if scheme is WeightScheme.NONE:
        return [1.0] * len(rater_ids), []
    weights: list[float] = []
    diagnostics: list[tuple[str, str]] = []
    for rater in rater_ids:
        if scheme is WeightScheme.ENGAGEMENT:
            rec = (engagement or {}).get(rater)
            w = None if rec is None else engagement_weight(rec)
        else:
            rec = (performance or {}).get(rater)
            w = None if rec is None else performance_weight(rec, attempted_only)
        if w is None:
            diagnostics.append((rater, MISSING_RECORD))
            w = 0.0
        weights.append(w)
    return weights, diagnostics

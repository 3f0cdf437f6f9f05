"""CSV ingestion and the joined review dataset.

All files are comma-separated UTF-8 with a mandatory header line; LF and CRLF
line endings are accepted.  Identifiers are restricted to ``[A-Za-z0-9_-]``,
so no quoting is ever needed.  Row-level problems do not abort a parse: they
are collected as :class:`RowError` entries with their 1-based line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InvalidRubricError, MalformedHeaderError
from .weighting import EngagementRecord, PerformanceRecord

REVIEWS_HEADER = ("essay_id", "rater_id", "writing", "format_org", "language_bib", "argumentation")
INSTRUCTOR_HEADER = ("essay_id", "writing", "format_org", "language_bib", "argumentation")
ESSAYS_HEADER = ("essay_id", "author_id")
ENGAGEMENT_HEADER = ("student_id", "lessons_completed", "total_lessons")
QUIZZES_HEADER = ("student_id", "quiz_id", "score")

PARSE_ERROR = "PARSE_ERROR"
DUPLICATE_KEY = "DUPLICATE_KEY"
SELF_REVIEW = "SELF_REVIEW"
TOO_FEW_REVIEWS = "TOO_FEW_REVIEWS"
NO_INSTRUCTOR_GRADE = "NO_INSTRUCTOR_GRADE"

_IDENT = re.compile(r"[A-Za-z0-9_-]+\Z")


@dataclass(frozen=True)
class RubricScore:
    writing: int
    format_org: int
    language_bib: int
    argumentation: int

    @property
    def dimensions(self) -> tuple[int, int, int, int]:
        return (self.writing, self.format_org, self.language_bib, self.argumentation)

    @property
    def total(self) -> int:
        return sum(self.dimensions)

    @classmethod
    def from_total(cls, total: int) -> "RubricScore":
        """Spread a 4..20 total as evenly as possible, earlier dimensions first."""
        if not 4 <= total <= 20:
            raise InvalidRubricError(f"rubric total {total} outside 4..20")
        base, extra = divmod(total, 4)
        return cls(*(base + (1 if i < extra else 0) for i in range(4)))


def rescale_rubric(rubric: RubricScore) -> float:
    """Map the 4..20 rubric total onto the 0-10 grade scale by halving."""
    for d in rubric.dimensions:
        if isinstance(d, bool) or not isinstance(d, int) or not 1 <= d <= 5:
            raise InvalidRubricError(f"rubric dimension {d!r} outside 1..5")
    return rubric.total / 2


@dataclass(frozen=True)
class PeerReview:
    essay_id: str
    rater_id: str
    rubric: RubricScore
    grade: float


@dataclass(frozen=True)
class RowError:
    line: int
    code: str
    message: str


@dataclass
class Essay:
    essay_id: str
    author_id: str | None
    peer_reviews: list[PeerReview]
    instructor_grade: float | None


@dataclass
class ReviewDataset:
    essays: list[Essay]
    engagement: dict[str, EngagementRecord] = field(default_factory=dict)
    performance: dict[str, PerformanceRecord] = field(default_factory=dict)
    exclusions: list[tuple[str, str]] = field(default_factory=list)
    diagnostics: list[tuple[str, str]] = field(default_factory=list)


# -- low-level CSV handling ---------------------------------------------------

def _decode(data: bytes | str) -> str:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    return text[1:] if text.startswith("\ufeff") else text


def _rows(data: bytes | str, header: Sequence[str]) -> Iterable[tuple[int, list[str]]]:
    lines = _decode(data).replace("\r\n", "\n").split("\n")
    found = [c.strip() for c in lines[0].split(",")] if lines and lines[0].strip() else []
    if tuple(found) != tuple(header):
        raise MalformedHeaderError(f"expected header {','.join(header)!r}, got {lines[0] if lines else ''!r}")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        yield lineno, [c.strip() for c in line.split(",")]


def canonicalize_csv(data: bytes | str) -> bytes:
    """LF endings, no surrounding whitespace per field, no blank lines, trailing newline."""
    lines = _decode(data).replace("\r\n", "\n").split("\n")
    kept = [",".join(c.strip() for c in line.split(",")) for line in lines if line.strip()]
    return ("\n".join(kept) + "\n").encode("utf-8")


def _ident(value: str, what: str) -> str:
    if not _IDENT.match(value):
        raise ValueError(f"invalid {what} {value!r}")
    return value


def _int(value: str, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{what} is not an integer: {value!r}") from None


def _rubric(cells: Sequence[str]) -> RubricScore:
    rubric = RubricScore(*(_int(c, name) for c, name in zip(cells, REVIEWS_HEADER[2:])))
    rescale_rubric(rubric)  # validates the dimension range
    return rubric


def format_number(x: float) -> str:
    """Shortest round-tripping text, without a trailing ``.0`` for integers."""
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _check_width(cells: list[str], header: Sequence[str]) -> None:
    if len(cells) != len(header):
        raise ValueError(f"expected {len(header)} fields, got {len(cells)}")


# -- parsers -------------------------------------------------------------------

def parse_reviews(data: bytes | str) -> tuple[list[PeerReview], list[RowError]]:
    reviews: list[PeerReview] = []
    errors: list[RowError] = []
    for lineno, cells in _rows(data, REVIEWS_HEADER):
        try:
            _check_width(cells, REVIEWS_HEADER)
            essay_id = _ident(cells[0], "essay_id")
            rater_id = _ident(cells[1], "rater_id")
            rubric = _rubric(cells[2:])
        except (ValueError, InvalidRubricError) as exc:
            errors.append(RowError(lineno, PARSE_ERROR, str(exc)))
            continue
        reviews.append(PeerReview(essay_id, rater_id, rubric, rescale_rubric(rubric)))
    return reviews, errors


def parse_instructor(data: bytes | str) -> tuple[dict[str, RubricScore], list[RowError]]:
    grades: dict[str, RubricScore] = {}
    errors: list[RowError] = []
    for lineno, cells in _rows(data, INSTRUCTOR_HEADER):
        try:
            _check_width(cells, INSTRUCTOR_HEADER)
            essay_id = _ident(cells[0], "essay_id")
            rubric = _rubric(cells[1:])
        except (ValueError, InvalidRubricError) as exc:
            errors.append(RowError(lineno, PARSE_ERROR, str(exc)))
            continue
        if essay_id in grades:
            errors.append(RowError(lineno, DUPLICATE_KEY, f"second instructor grade for {essay_id}"))
            continue
        grades[essay_id] = rubric
    return grades, errors


def parse_essays(data: bytes | str) -> tuple[dict[str, str], list[RowError]]:
    authors: dict[str, str] = {}
    errors: list[RowError] = []
    for lineno, cells in _rows(data, ESSAYS_HEADER):
        try:
            _check_width(cells, ESSAYS_HEADER)
            essay_id = _ident(cells[0], "essay_id")
            author_id = _ident(cells[1], "author_id")
        except ValueError as exc:
            errors.append(RowError(lineno, PARSE_ERROR, str(exc)))
            continue
        if essay_id in authors:
            errors.append(RowError(lineno, DUPLICATE_KEY, f"essay {essay_id} listed twice"))
            continue
        authors[essay_id] = author_id
    return authors, errors


def parse_engagement(data: bytes | str) -> tuple[dict[str, EngagementRecord], list[RowError]]:
    records: dict[str, EngagementRecord] = {}
    errors: list[RowError] = []
    for lineno, cells in _rows(data, ENGAGEMENT_HEADER):
        try:
            _check_width(cells, ENGAGEMENT_HEADER)
            student = _ident(cells[0], "student_id")
            done = _int(cells[1], "lessons_completed")
            total = _int(cells[2], "total_lessons")
            if total < 1 or not 0 <= done <= total:
                raise ValueError(f"{done} of {total} lessons is not a valid count")
        except ValueError as exc:
            errors.append(RowError(lineno, PARSE_ERROR, str(exc)))
            continue
        if student in records:
            errors.append(RowError(lineno, DUPLICATE_KEY, f"student {student} listed twice"))
            continue
        records[student] = EngagementRecord(student, done, total)
    return records, errors


def parse_quizzes(data: bytes | str, total_quizzes: int | None = None) -> tuple[dict[str, PerformanceRecord], list[RowError]]:
    """Accumulate quiz rows per student.

    ``total_quizzes`` defaults to the number of distinct quiz ids in the file,
    i.e. every quiz somebody took counts as part of the course.
    """
    scores: dict[str, dict[str, float]] = {}
    quiz_ids: set[str] = set()
    errors: list[RowError] = []
    for lineno, cells in _rows(data, QUIZZES_HEADER):
        try:
            _check_width(cells, QUIZZES_HEADER)
            student = _ident(cells[0], "student_id")
            quiz = _ident(cells[1], "quiz_id")
            score = float(cells[2])
            if not (math.isfinite(score) and 0 <= score <= 100):
                raise ValueError(f"score {cells[2]!r} outside [0, 100]")
        except ValueError as exc:
            errors.append(RowError(lineno, PARSE_ERROR, str(exc)))
            continue
        per_student = scores.setdefault(student, {})
        if quiz in per_student:
            errors.append(RowError(lineno, DUPLICATE_KEY, f"student {student} has quiz {quiz} twice"))
            continue
        per_student[quiz] = score
        quiz_ids.add(quiz)
    total = total_quizzes if total_quizzes is not None else max(len(quiz_ids), 1)
    records = {s: PerformanceRecord(s, q, total) for s, q in scores.items()}
    return records, errors


# -- serializers (canonical form of each schema) -------------------------------

def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def serialize_reviews(reviews: Iterable[PeerReview]) -> bytes:
    return _csv(REVIEWS_HEADER, ([r.essay_id, r.rater_id, *map(str, r.rubric.dimensions)] for r in reviews))


def serialize_instructor(grades: Mapping[str, RubricScore]) -> bytes:
    return _csv(INSTRUCTOR_HEADER, ([e, *map(str, rub.dimensions)] for e, rub in grades.items()))


def serialize_essays(authors: Mapping[str, str]) -> bytes:
    return _csv(ESSAYS_HEADER, ([e, a] for e, a in authors.items()))


def serialize_engagement(records: Mapping[str, EngagementRecord]) -> bytes:
    return _csv(ENGAGEMENT_HEADER, (
        [r.student_id, str(r.lessons_completed_on_time), str(r.total_lessons)] for r in records.values()
    ))


def serialize_quizzes(records: Mapping[str, PerformanceRecord]) -> bytes:
    return _csv(QUIZZES_HEADER, (
        [r.student_id, quiz, format_number(score)]
        for r in records.values()
        for quiz, score in r.quiz_scores.items()
    ))


# -- join ------------------------------------------------------------------------

def build_dataset(
    reviews: Sequence[PeerReview],
    instructor_grades: Mapping[str, RubricScore | float] | None,
    engagement: Mapping[str, EngagementRecord] | None = None,
    performance: Mapping[str, PerformanceRecord] | None = None,
    min_reviews: int = 3,
    authors: Mapping[str, str] | None = None,
    require_instructor: bool = True,
) -> ReviewDataset:
    """Join reviews, instructor grades, authorship and rater records.

    Self-reviews are dropped with a ``SELF_REVIEW`` diagnostic.  An essay
    with fewer than ``min_reviews`` remaining reviews is excluded with
    ``TOO_FEW_REVIEWS``; one without an instructor grade (when required) with
    ``NO_INSTRUCTOR_GRADE``.  Essays with extra reviews keep all of them.
    Retained essays are ordered by essay id; reviews keep their input order.
    """
    authors = dict(authors or {})
    instructor_grades = instructor_grades or {}
    by_essay: dict[str, list[PeerReview]] = {}
    diagnostics: list[tuple[str, str]] = []
    for review in reviews:
        reviews_for = by_essay.setdefault(review.essay_id, [])
        if authors.get(review.essay_id) == review.rater_id:
            diagnostics.append((review.essay_id, SELF_REVIEW))
            continue
        reviews_for.append(review)

    essays: list[Essay] = []
    exclusions: list[tuple[str, str]] = []
    for essay_id in sorted(set(by_essay) | set(instructor_grades)):
        peer = by_essay.get(essay_id, [])
        grade = instructor_grades.get(essay_id)
        if isinstance(grade, RubricScore):
            grade = rescale_rubric(grade)
        if len(peer) < min_reviews:
            exclusions.append((essay_id, TOO_FEW_REVIEWS))
        elif grade is None and require_instructor:
            exclusions.append((essay_id, NO_INSTRUCTOR_GRADE))
        else:
            essays.append(Essay(essay_id, authors.get(essay_id), peer, grade))

    return ReviewDataset(
        essays=essays,
        engagement=dict(engagement or {}),
        performance=dict(performance or {}),
        exclusions=exclusions,
        diagnostics=diagnostics,
    )

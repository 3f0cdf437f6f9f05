"""Synthetic peer-review cohorts with competence-dependent rater error.

Every student writes one essay and reviews ``reviews_per_student`` essays of
others.  A rater's Gaussian noise shrinks linearly with their latent
competence, and so does their constant offset: weak raters are lenient and
erratic, strong raters grade close to the instructor.  Quiz marks track the
same competence, so performance weights carry real information about rater
accuracy.  Engagement tracks competence only for a configurable share of
students and is independent noise for the rest.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; the algorithm name is written into every report.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .aggregation import AggregationMethod
from .errors import InvalidConfigError, InvalidKError
from .ingest import (
    PeerReview,
    ReviewDataset,
    RubricScore,
    build_dataset,
    rescale_rubric,
    serialize_engagement,
    serialize_essays,
    serialize_instructor,
    serialize_quizzes,
    serialize_reviews,
)
from .validity import ValidityReport, build_validity_report
from .weighting import EngagementRecord, PerformanceRecord, WeightScheme

RNG_ALGORITHM = f"numpy.random.PCG64 via SeedSequence (numpy {np.__version__})"


@dataclass(frozen=True)
class CohortConfig:
    n_students: int = 91
    reviews_per_student: int = 3
    quality_mean: float = 7.5
    quality_sd: float = 1.3
    # competence ~ low + (high - low) * Beta(a, b); a = b = 1 is uniform
    competence_low: float = 0.0
    competence_high: float = 1.0
    competence_a: float = 0.3
    competence_b: float = 0.3
    # per-review noise sd runs from sd_max (competence 0) down to sd_min (competence 1)
    sd_max: float = 2.0
    sd_min: float = 0.0
    # per-rater offset (1 - competence) * (leniency + bias_sd * z)
    leniency: float = 4.0
    bias_sd: float = 1.0
    engagement_coupling: float = 0.85
    total_lessons: int = 7
    total_quizzes: int = 7
    quiz_noise_sd: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_students < 4:
            raise InvalidConfigError("n_students must be at least 4")
        if not 1 <= self.reviews_per_student < self.n_students:
            raise InvalidConfigError("reviews_per_student must lie in [1, n_students)")
        if self.sd_min < 0 or self.sd_min > self.sd_max:
            raise InvalidConfigError("need 0 <= sd_min <= sd_max")
        if not 0.0 <= self.competence_low <= self.competence_high <= 1.0:
            raise InvalidConfigError("competence bounds must satisfy 0 <= low <= high <= 1")
        if not 0.0 <= self.engagement_coupling <= 1.0:
            raise InvalidConfigError("engagement_coupling must lie in [0, 1]")
        if self.total_lessons < 1 or self.total_quizzes < 1:
            raise InvalidConfigError("total_lessons and total_quizzes must be positive")
        if not (self.competence_a > 0 and self.competence_b > 0):
            raise InvalidConfigError("competence shape parameters must be positive")
        if min(self.quality_sd, self.bias_sd, self.quiz_noise_sd) < 0:
            raise InvalidConfigError("standard deviations must be non-negative")
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise InvalidConfigError(f"{f.name} must be finite")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "CohortConfig":
        """Build from string values, e.g. a ``key=value`` file."""
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in fields:
                raise InvalidConfigError(f"unknown config key {key!r}")
            kind = int if fields[key].type in ("int", int) else float
            try:
                kwargs[key] = kind(raw)
            except ValueError:
                raise InvalidConfigError(f"{key}: cannot parse {raw!r}") from None
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, str]:
        return {f.name: repr(getattr(self, f.name)) for f in dataclasses.fields(self)}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidConfigError(f"line {lineno}: expected key=value")
        values[key.strip()] = value.strip()
    return values


@dataclass
class SyntheticCohort:
    dataset: ReviewDataset
    true_quality: dict[str, float]
    competence: dict[str, float]
    reviews: list[PeerReview]
    instructor: dict[str, RubricScore]
    authors: dict[str, str]
    config: CohortConfig

    def export_csv(self) -> dict[str, bytes]:
        """The cohort in the ingest schemas, keyed by file name."""
        return {
            "reviews.csv": serialize_reviews(self.reviews),
            "instructor.csv": serialize_instructor(self.instructor),
            "essays.csv": serialize_essays(self.authors),
            "engagement.csv": serialize_engagement(self.dataset.engagement),
            "quizzes.csv": serialize_quizzes(self.dataset.performance),
        }


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def assign_reviews(n: int, k: int, seed: int) -> list[tuple[int, int]]:
    """Circulant review assignment: ``(rater, essay)`` pairs, k out and k in per student.

    A random permutation ``p`` is drawn and rater ``p[i]`` reviews the essays
    of ``p[i+1] .. p[i+k]`` (indices mod n), so nobody reviews themselves.
    """
    if not 1 <= k < n:
        raise InvalidKError(f"need 1 <= k < n, got k={k}, n={n}")
    perm = _rng(seed, 0).permutation(n).tolist()
    return [(perm[i], perm[(i + d) % n]) for i in range(n) for d in range(1, k + 1)]


def round_half(x: float) -> float:
    """Nearest multiple of 0.5 (halves of a quarter-point round up)."""
    return math.floor(x * 2 + 0.5) / 2


def _grade_on_lattice(x: float) -> float:
    return min(10.0, max(2.0, round_half(x)))


def generate_cohort(config: CohortConfig) -> SyntheticCohort:
    n, k = config.n_students, config.reviews_per_student
    rng = _rng(config.seed, 1)
    quality = np.clip(rng.normal(config.quality_mean, config.quality_sd, n), 2.0, 10.0)
    span = config.competence_high - config.competence_low
    competence = config.competence_low + span * rng.beta(config.competence_a, config.competence_b, n)
    bias = (1.0 - competence) * (config.leniency + rng.normal(0.0, 1.0, n) * config.bias_sd)
    noise_sd = config.sd_max - (config.sd_max - config.sd_min) * competence
    tracks = rng.uniform(0.0, 1.0, n) < config.engagement_coupling
    engaged_share = np.where(tracks, competence, rng.uniform(0.0, 1.0, n))
    quiz_noise = rng.normal(0.0, 1.0, (n, config.total_quizzes)) * config.quiz_noise_sd
    pairs = assign_reviews(n, k, config.seed)
    review_noise = rng.normal(0.0, 1.0, len(pairs))

    width = len(str(n))
    student = [f"s{i:0{width}d}" for i in range(n)]
    essay = [f"e{i:0{width}d}" for i in range(n)]
    authors = dict(zip(essay, student))

    instructor = {
        essay[j]: RubricScore.from_total(int(2 * _grade_on_lattice(float(quality[j])))) for j in range(n)
    }
    reviews = []
    for (rater, author), z in sorted(zip(pairs, review_noise.tolist()), key=lambda p: (p[0][1], p[0][0])):
        raw = float(quality[author]) + float(bias[rater]) + float(noise_sd[rater]) * z
        rubric = RubricScore.from_total(int(2 * _grade_on_lattice(raw)))
        reviews.append(PeerReview(essay[author], student[rater], rubric, rescale_rubric(rubric)))

    engagement = {}
    performance = {}
    for i in range(n):
        done = int(math.floor(float(engaged_share[i]) * config.total_lessons + 0.5))
        engagement[student[i]] = EngagementRecord(student[i], done, config.total_lessons)
        marks = np.clip(competence[i] * 100.0 + quiz_noise[i], 0.0, 100.0)
        scores = {f"q{q + 1}": round(float(s), 1) for q, s in enumerate(marks)}
        performance[student[i]] = PerformanceRecord(student[i], scores, config.total_quizzes)

    dataset = build_dataset(
        reviews, instructor, engagement, performance, min_reviews=k, authors=authors
    )
    return SyntheticCohort(
        dataset=dataset,
        true_quality={essay[j]: float(quality[j]) for j in range(n)},
        competence={student[i]: float(competence[i]) for i in range(n)},
        reviews=reviews,
        instructor=instructor,
        authors=authors,
        config=config,
    )


def run_replication(
    config: CohortConfig,
    index: int,
    methods: Sequence[AggregationMethod] = tuple(AggregationMethod),
    schemes: Sequence[WeightScheme] = tuple(WeightScheme),
) -> ValidityReport:
    cohort_config = dataclasses.replace(config, seed=config.seed + index)
    report = build_validity_report(generate_cohort(cohort_config).dataset, methods, schemes)
    report.metadata.update(
        rng_algorithm=RNG_ALGORITHM, seed=str(cohort_config.seed), replication=str(index)
    )
    return report


def run_experiment(
    config: CohortConfig,
    replications: int,
    methods: Sequence[AggregationMethod] = tuple(AggregationMethod),
    schemes: Sequence[WeightScheme] = tuple(WeightScheme),
) -> list[ValidityReport]:
    """One validity report per replication; replication ``r`` uses seed ``seed + r``."""
    if replications < 1:
        raise InvalidConfigError("replications must be at least 1")
    return [run_replication(config, r, methods, schemes) for r in range(replications)]

"""PeerRank and Generalized PeerRank on a sparse rater-by-essay matrix.

Each student is both an author (essay ``j``) and a rater (row ``i``); the
current grade of a student doubles as the weight of their ratings.  Grades
live on the unit interval; divide rubric grades by 10 before building the
matrix and use :func:`peerrank_to_grades` to map back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import EmptyGradersError, InvalidConfigError


@dataclass(frozen=True)
class GradeMatrix:
    """``entries[(i, j)]`` is the grade rater ``i`` gave to the essay of student ``j``."""

    n: int
    entries: Mapping[tuple[int, int], float]
    graders: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    graded_by: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        graders: list[list[int]] = [[] for _ in range(self.n)]
        graded_by: list[list[int]] = [[] for _ in range(self.n)]
        for (i, j), a in self.entries.items():
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"entry ({i}, {j}) outside a {self.n}-student matrix")
            if i == j:
                raise ValueError(f"self-entry for student {i}")
            if not (math.isfinite(a) and 0.0 <= a <= 1.0):
                raise ValueError(f"entry ({i}, {j}) = {a!r} outside [0, 1]")
            graders[j].append(i)
            graded_by[i].append(j)
        object.__setattr__(self, "graders", tuple(tuple(sorted(g)) for g in graders))
        object.__setattr__(self, "graded_by", tuple(tuple(sorted(g)) for g in graded_by))


@dataclass(frozen=True)
class PeerRankConfig:
    alpha: float = 0.2
    beta: float = 0.0
    tolerance: float = 1e-6
    max_iterations: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise InvalidConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not 0.0 <= self.beta < 1.0 - self.alpha:
            raise InvalidConfigError(f"beta must lie in [0, 1 - alpha), got {self.beta}")
        if not self.tolerance > 0:
            raise InvalidConfigError("tolerance must be positive")
        if self.max_iterations < 1:
            raise InvalidConfigError("max_iterations must be at least 1")


GENERALIZED_DEFAULT = PeerRankConfig(alpha=0.2, beta=0.1)


@dataclass(frozen=True)
class PeerRankResult:
    grades: list[float]
    iterations_used: int
    converged: bool
    trajectory_max_delta: float
    deltas: list[float] = field(default_factory=list, repr=False)


def peerrank_init(matrix: GradeMatrix) -> list[float]:
    """Start each student at the plain mean of the grades their essay received."""
    x = []
    for j in range(matrix.n):
        received = [matrix.entries[(i, j)] for i in matrix.graders[j]]
        if not received:
            raise EmptyGradersError(f"essay {j} has no graders")
        x.append(math.fsum(received) / len(received))
    return x


def peerrank_step(x: list[float], matrix: GradeMatrix, config: PeerRankConfig) -> list[float]:
    alpha, beta = config.alpha, config.beta
    out = []
    for j in range(matrix.n):
        graders = matrix.graders[j]
        total = math.fsum(x[i] for i in graders)
        if total > 0:
            received = math.fsum(x[i] * matrix.entries[(i, j)] for i in graders) / total
        else:
            received = x[j]
        value = (1.0 - alpha - beta) * x[j] + alpha * received
        if beta:
            rated = matrix.graded_by[j]
            if rated:
                accuracy = math.fsum(
                    1.0 - abs(matrix.entries[(j, k)] - x[k]) for k in rated
                ) / len(rated)
            else:
                accuracy = x[j]
            value += beta * accuracy
        out.append(min(1.0, max(0.0, value)))
    return out


def peerrank(
    matrix: GradeMatrix,
    config: PeerRankConfig = PeerRankConfig(),
    init: list[float] | None = None,
) -> PeerRankResult:
    """Iterate :func:`peerrank_step` until the largest change drops below tolerance.

    Non-convergence within ``max_iterations`` is reported through
    ``converged=False``, never raised.
    """
    x = list(init) if init is not None else peerrank_init(matrix)
    deltas: list[float] = []
    for _ in range(config.max_iterations):
        nxt = peerrank_step(x, matrix, config)
        delta = max((abs(a - b) for a, b in zip(nxt, x)), default=0.0)
        deltas.append(delta)
        x = nxt
        if delta < config.tolerance:
            return PeerRankResult(x, len(deltas), True, delta, deltas)
    return PeerRankResult(x, len(deltas), False, deltas[-1], deltas)


def peerrank_to_grades(result: PeerRankResult) -> list[float]:
    return [10.0 * g for g in result.grades]

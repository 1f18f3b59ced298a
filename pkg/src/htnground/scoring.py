"""Agile scoring of planner runs."""

from __future__ import annotations

import math
from collections.abc import Mapping

MIN_TIME = 1.0  # seconds; faster runs are treated as taking one second


def agile_score(times: Mapping[str, float | None]) -> dict[str, float]:
    """Per-planner score on one problem.

    `times` maps a planner to its total time in seconds, or None when the
    planner did not solve the problem.  The fastest planner scores 1, a
    planner ten times slower scores 0.5, an unsolved entry scores 0.
    """
    solved = [t for t in times.values() if t is not None]
    if not solved:
        return {p: 0.0 for p in times}
    best = max(min(solved), MIN_TIME)
    out = {}
    for p, t in times.items():
        if t is None:
            out[p] = 0.0
        else:
            out[p] = 1.0 / (1.0 + math.log10(max(t, MIN_TIME) / best))
    return out


def domain_scores(rows: list[Mapping[str, float | None]]) -> dict[str, float]:
    """Sum of per-problem scores; every row must name the same planners."""
    total: dict[str, float] = {}
    for row in rows:
        for p, s in agile_score(row).items():
            total[p] = total.get(p, 0.0) + s
    return total

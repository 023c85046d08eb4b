"""Two-sided Mann-Whitney U testing with Bonferroni correction.

The U statistic is computed from midrank sums and reported as
min(U_a, U_b); p-values use the normal approximation with tie-corrected
variance and a continuity correction of 0.5. compare_splits crosses
difficulty levels, heuristic measures and class pairs, correcting over the
comparisons actually run.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .gmm import DIFFICULTY_ORDER, DifficultyAssignment
from .heuristics import MEASURE_ORDER, HeuristicProfile


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    n1: int
    n2: int
    tie_correction_applied: bool


@dataclass(frozen=True)
class ComparisonCell:
    difficulty: str
    measure: str
    class_a: str
    class_b: str
    n_a: int
    n_b: int
    u: float
    p_raw: float
    p_adjusted: float
    code: str


@dataclass(frozen=True)
class SkippedCell:
    difficulty: str
    measure: str
    class_a: str
    class_b: str
    reason: str


@dataclass(frozen=True)
class SignificanceReport:
    cells: tuple[ComparisonCell, ...]
    skipped: tuple[SkippedCell, ...]
    m: int


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b) -> UTestResult:
    """Two-sided U test; all-identical pooled values yield p = 1 by convention."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")

    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled, method="average")
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u2 = n1 * n2 - u1
    u = min(u1, u2)

    n = n1 + n2
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(((counts**3) - counts).sum())
    has_ties = bool((counts > 1).any())

    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if variance <= 0.0:
        # every pooled value identical: no evidence either way
        return UTestResult(u, 1.0, n1, n2, True)

    z = (u - n1 * n2 / 2.0 + 0.5) / math.sqrt(variance)
    # erfc underflows to 0 for |z| beyond ~38; keep p strictly positive
    p = min(1.0, max(2.0 * _norm_sf(-z), 5e-324))
    return UTestResult(u, p, n1, n2, has_ties)


def bonferroni(p: float, m: int) -> float:
    """min(1, p * m)."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must be within [0, 1], got {p}")
    if m < 1:
        raise ValueError(f"comparison count must be >= 1, got {m}")
    return min(1.0, p * m)


def significance_code(p_adjusted: float) -> str:
    """ns / * / ** / ***; boundary points take the more significant code."""
    if not (0.0 <= p_adjusted <= 1.0):
        raise ValueError(f"p must be within [0, 1], got {p_adjusted}")
    if p_adjusted <= 0.001:
        return "***"
    if p_adjusted <= 0.01:
        return "**"
    if p_adjusted <= 0.05:
        return "*"
    return "ns"


def _difficulty_map(assignment) -> dict[str, str]:
    if isinstance(assignment, DifficultyAssignment):
        return assignment.difficulty_map()
    return dict(assignment)


def compare_splits(
    profiles: Mapping[str, HeuristicProfile],
    assignment,
    golds: Mapping[str, str],
    labels: Sequence[str] | None = None,
    measures: Sequence[str] = MEASURE_ORDER,
) -> SignificanceReport:
    """U-test every class pair per (difficulty, measure); Bonferroni over all run.

    Boolean measures enter as 0/1 samples. Cells where either class has fewer
    than 2 instances are skipped and reported; the correction family size m
    counts only the comparisons actually performed.
    """
    difficulty_of = _difficulty_map(assignment)
    ids = sorted(profiles)
    missing = [i for i in ids if i not in difficulty_of or i not in golds]
    if missing:
        raise ValueError(f"instances lack difficulty or gold label: {missing[:5]}")

    if labels is None:
        labels = sorted({golds[i] for i in ids})
    class_pairs = list(itertools.combinations(labels, 2))
    difficulties = [d for d in DIFFICULTY_ORDER if any(difficulty_of[i] == d for i in ids)]

    grouped: dict[tuple[str, str], list[str]] = {}
    for i in ids:
        grouped.setdefault((difficulty_of[i], golds[i]), []).append(i)

    raw: list[tuple[str, str, str, str, int, int, float, float]] = []
    skipped: list[SkippedCell] = []
    for difficulty in difficulties:
        for measure in measures:
            for class_a, class_b in class_pairs:
                ids_a = grouped.get((difficulty, class_a), [])
                ids_b = grouped.get((difficulty, class_b), [])
                if len(ids_a) < 2 or len(ids_b) < 2:
                    skipped.append(
                        SkippedCell(difficulty, measure, class_a, class_b, f"cell sizes {len(ids_a)}/{len(ids_b)} < 2")
                    )
                    continue
                sample_a = [profiles[i].value(measure) for i in ids_a]
                sample_b = [profiles[i].value(measure) for i in ids_b]
                res = mann_whitney_u(sample_a, sample_b)
                raw.append((difficulty, measure, class_a, class_b, res.n1, res.n2, res.u_statistic, res.p_value))

    m = len(raw)
    cells = tuple(
        ComparisonCell(d, meas, ca, cb, na, nb, u, p, bonferroni(p, m), significance_code(bonferroni(p, m)))
        for d, meas, ca, cb, na, nb, u, p in raw
    )
    return SignificanceReport(cells=cells, skipped=tuple(skipped), m=m)


def write_report_csv(report: SignificanceReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("difficulty", "measure", "class_a", "class_b", "n_a", "n_b", "u", "p_raw", "p_adjusted", "code"))
        for c in report.cells:
            writer.writerow(
                (
                    c.difficulty,
                    c.measure,
                    c.class_a,
                    c.class_b,
                    c.n_a,
                    c.n_b,
                    format(c.u, ".17g"),
                    format(c.p_raw, ".17g"),
                    format(c.p_adjusted, ".17g"),
                    c.code,
                )
            )


def write_report_json(report: SignificanceReport, path) -> None:
    doc = {
        "m": report.m,
        "n_cells": len(report.cells),
        "skipped": [
            {
                "difficulty": s.difficulty,
                "measure": s.measure,
                "class_a": s.class_a,
                "class_b": s.class_b,
                "reason": s.reason,
            }
            for s in report.skipped
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

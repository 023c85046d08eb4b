"""Percentile-threshold selection baselines over the raw dynamics features.

Two selections used for training-set filtering comparisons: the top slice of
"ph" variability and the middle band of "ph" margin. Percentiles follow the
nearest-rank convention so selections are reproducible across platforms;
instances tied with the boundary value are always included.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .features import FeatureVector, feature_column


@dataclass(frozen=True)
class PercentileRule:
    feature: str
    lower_q: float
    upper_q: float

    def __post_init__(self):
        if not (0.0 <= self.lower_q < self.upper_q <= 100.0):
            raise ValueError(f"need 0 <= lower_q < upper_q <= 100, got {self.lower_q}, {self.upper_q}")


@dataclass(frozen=True)
class BaselineSelection:
    method: str
    selected: tuple[str, ...]
    rule: PercentileRule
    thresholds: tuple[float, ...]
    total: int


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: the ceil(q/100 * N)-th smallest value."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise ValueError("empty values")
    if not (0.0 <= q <= 100.0):
        raise ValueError(f"q must be within [0, 100], got {q}")
    rank = max(1, math.ceil(q / 100.0 * x.size))
    return float(x[rank - 1])


def datamaps_ambiguous(vectors: Sequence[FeatureVector], top_q: float = 66.0) -> BaselineSelection:
    """Keep the top ``top_q`` percent of instances by "ph" variability.

    The cut keeps the ceil(top_q/100 * N) largest values; anything tied with
    the smallest kept value is also selected, so the result can exceed that
    count under ties.
    """
    if not vectors:
        raise ValueError("empty dataset")
    if not (0.0 < top_q <= 100.0):
        raise ValueError(f"top_q must be within (0, 100], got {top_q}")
    var = feature_column(vectors, "var_ph")
    keep = math.ceil(top_q / 100.0 * var.size)
    threshold = float(np.sort(var)[::-1][keep - 1])
    selected = tuple(sorted(v.instance_id for v, x in zip(vectors, var) if x >= threshold))
    rule = PercentileRule("var_ph", lower_q=max(0.0, 100.0 - top_q), upper_q=100.0)
    return BaselineSelection("datamaps", selected, rule, (threshold,), len(vectors))


def aum_ambiguous(vectors: Sequence[FeatureVector], lower_q: float = 33.0, upper_q: float = 66.0) -> BaselineSelection:
    """Keep instances whose "ph" margin lies in the inclusive percentile band."""
    if not vectors:
        raise ValueError("empty dataset")
    rule = PercentileRule("aum_ph", lower_q=lower_q, upper_q=upper_q)
    values = feature_column(vectors, "aum_ph")
    lo = percentile(values, lower_q)
    hi = percentile(values, upper_q)
    selected = tuple(sorted(v.instance_id for v, x in zip(vectors, values) if lo <= x <= hi))
    return BaselineSelection("aum", selected, rule, (lo, hi), len(vectors))


def write_selection(selection: BaselineSelection, ids_path, sidecar_path) -> None:
    with open(ids_path, "w", encoding="utf-8") as fh:
        for instance_id in selection.selected:
            fh.write(instance_id + "\n")
    doc = {
        "method": selection.method,
        "rule": {
            "feature": selection.rule.feature,
            "lower_q": selection.rule.lower_q,
            "upper_q": selection.rule.upper_q,
        },
        "thresholds": [float(t) for t in selection.thresholds],
        "selected": len(selection.selected),
        "total": selection.total,
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

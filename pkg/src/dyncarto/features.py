"""Per-instance training-dynamics features and standard scaling.

Four measures are computed per training setting from the epoch-wise logits:
mean gold-label probability (confidence), its population standard deviation
(variability), the fraction of epochs where the gold label is the argmax
(correctness), and the mean margin of the gold logit over the best other
logit (area under margin). Dual-setting logs yield an 8-D vector per
instance, ordered [conf, var, corr, aum] for "ph" then "h".
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .log import SETTINGS, DynamicsLog, softmax

MEASURE_NAMES = ("conf", "var", "corr", "aum")


@dataclass(frozen=True)
class SettingDynamics:
    """The four dynamics measures of one instance under one setting."""

    confidence: float
    variability: float
    correctness: float
    aum: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.confidence, self.variability, self.correctness, self.aum)


@dataclass(frozen=True)
class FeatureVector:
    instance_id: str
    values: tuple[float, ...]
    feature_names: tuple[str, ...]


@dataclass(frozen=True)
class ScaledFeatureMatrix:
    """Feature matrix after per-column standardization (population std).

    Zero-variance columns are mapped to all zeros; the raw column moments are
    kept for reporting.
    """

    instance_ids: tuple[str, ...]
    matrix: np.ndarray
    column_means: np.ndarray
    column_stds: np.ndarray
    feature_names: tuple[str, ...]


def confidence(gold_prob_series) -> float:
    """Mean gold-label probability across epochs."""
    p = _checked_series(gold_prob_series)
    return float(np.mean(p))


def variability(gold_prob_series) -> float:
    """Population standard deviation of the gold-label probability."""
    p = _checked_series(gold_prob_series)
    mu = np.mean(p)
    return float(np.sqrt(np.mean((p - mu) ** 2)))


def _checked_series(series) -> np.ndarray:
    p = np.asarray(series, dtype=float)
    if p.size == 0:
        raise ValueError("empty probability series")
    if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("probabilities must be finite and within [0, 1]")
    return p


def correctness(logit_series, gold_index: int) -> float:
    """Fraction of epochs whose argmax equals the gold index.

    Argmax ties resolve to the lowest class index, so a tied epoch counts as
    correct only when the gold label is that index.
    """
    z = np.asarray(logit_series, dtype=float)
    if z.size == 0:
        raise ValueError("empty logit series")
    if not (0 <= gold_index < z.shape[1]):
        raise ValueError(f"gold index {gold_index} out of range for {z.shape[1]} classes")
    return float(np.mean(np.argmax(z, axis=1) == gold_index))


def aum(logit_series, gold_index: int) -> float:
    """Mean over epochs of (gold logit - best other-class logit)."""
    z = np.asarray(logit_series, dtype=float)
    if z.size == 0:
        raise ValueError("empty logit series")
    if z.shape[1] < 2:
        raise ValueError("area under margin needs at least 2 classes")
    if not (0 <= gold_index < z.shape[1]):
        raise ValueError(f"gold index {gold_index} out of range for {z.shape[1]} classes")
    others = np.delete(z, gold_index, axis=1)
    return float(np.mean(z[:, gold_index] - others.max(axis=1)))


def setting_dynamics(logit_series, gold_index: int) -> SettingDynamics:
    """All four measures from one setting's (E, n_labels) logit series."""
    z = np.asarray(logit_series, dtype=float)
    gold_probs = np.array([softmax(row)[gold_index] for row in z])
    return SettingDynamics(
        confidence=confidence(gold_probs),
        variability=variability(gold_probs),
        correctness=correctness(z, gold_index),
        aum=aum(z, gold_index),
    )


def feature_names_for(settings: Sequence[str]) -> tuple[str, ...]:
    return tuple(f"{m}_{s}" for s in settings for m in MEASURE_NAMES)


def build_feature_vectors(log: DynamicsLog, allow_single_setting: bool = False) -> list[FeatureVector]:
    """One feature vector per instance, ordered by instance id.

    Dual-setting logs produce 8-D vectors ("ph" block first). A log declaring
    a single setting is rejected unless ``allow_single_setting`` is set, in
    which case 4-D vectors are produced. An instance missing records for a
    declared setting is an error; nothing is imputed.
    """
    settings = log.settings
    if len(settings) < 2 and not allow_single_setting:
        raise ValueError(
            f"log declares only setting(s) {list(settings)}; pass allow_single_setting=True to accept 4-D features"
        )

    missing = [
        (m.instance_id, s) for m in log.instances for s in settings if not log.has_records(m.instance_id, s)
    ]
    if missing:
        detail = ", ".join(f"'{i}' lacks '{s}'" for i, s in missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        raise ValueError(f"instance(s) missing records for a declared setting: {detail}{more}")

    names = feature_names_for(settings)
    vectors = []
    for meta in log.instances:
        gold_index = log.label_space.index(meta.gold_label)
        values: list[float] = []
        for s in settings:
            dyn = setting_dynamics(log.logit_series(meta.instance_id, s), gold_index)
            values.extend(dyn.as_tuple())
        vectors.append(FeatureVector(meta.instance_id, tuple(values), names))
    return vectors


def standard_scale(vectors: Sequence[FeatureVector]) -> ScaledFeatureMatrix:
    """Column-wise (x - mean) / std with population std; constant columns -> 0."""
    if len(vectors) < 2:
        raise ValueError(f"standard scaling needs at least 2 rows, got {len(vectors)}")
    names = vectors[0].feature_names
    if any(v.feature_names != names for v in vectors):
        raise ValueError("inconsistent feature layouts across vectors")
    x = np.array([v.values for v in vectors], dtype=float)
    means = x.mean(axis=0)
    stds = np.sqrt(np.mean((x - means) ** 2, axis=0))
    safe = np.where(stds > 0.0, stds, 1.0)
    scaled = (x - means) / safe
    scaled[:, stds == 0.0] = 0.0
    return ScaledFeatureMatrix(
        instance_ids=tuple(v.instance_id for v in vectors),
        matrix=scaled,
        column_means=means,
        column_stds=stds,
        feature_names=names,
    )


def feature_column(vectors: Sequence[FeatureVector], name: str) -> np.ndarray:
    """Raw values of one named feature across vectors."""
    if not vectors:
        raise ValueError("no feature vectors")
    try:
        idx = vectors[0].feature_names.index(name)
    except ValueError:
        raise ValueError(f"feature '{name}' not present; have {list(vectors[0].feature_names)}") from None
    return np.array([v.values[idx] for v in vectors], dtype=float)


def write_features_csv(vectors: Iterable[FeatureVector], path) -> None:
    """CSV export with 17 significant digits per value."""
    vectors = list(vectors)
    names = vectors[0].feature_names if vectors else feature_names_for(SETTINGS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("instance_id",) + names)
        for v in vectors:
            writer.writerow([v.instance_id] + [format(x, ".17g") for x in v.values])


def read_features_csv(path) -> list[FeatureVector]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = tuple(header[1:])
        return [FeatureVector(row[0], tuple(float(x) for x in row[1:]), names) for row in reader]

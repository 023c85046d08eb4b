"""Split assembly and per-split statistics: fractions, accuracies, class
counts and heuristic aggregates, with machine- and plot-ready exports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .gmm import DIFFICULTY_ORDER, DifficultyAssignment
from .heuristics import MEASURE_ORDER, HeuristicProfile
from .log import InstanceMeta, instance_json


def _difficulty_map(assignment) -> dict[str, str]:
    if isinstance(assignment, DifficultyAssignment):
        return assignment.difficulty_map()
    return dict(assignment)


def build_splits(assignment, instances: Sequence[InstanceMeta]) -> dict[str, list[InstanceMeta]]:
    """Disjoint, exhaustive partition by difficulty; lists sorted by id."""
    difficulty_of = _difficulty_map(assignment)
    missing = [m.instance_id for m in instances if m.instance_id not in difficulty_of]
    if missing:
        raise ValueError(f"instances missing from assignment: {missing[:5]}")
    splits: dict[str, list[InstanceMeta]] = {d: [] for d in DIFFICULTY_ORDER}
    for meta in instances:
        splits[difficulty_of[meta.instance_id]].append(meta)
    for metas in splits.values():
        metas.sort(key=lambda m: m.instance_id)
    return splits


def split_accuracy(instances: Sequence[InstanceMeta], assignment) -> dict[str, float]:
    """Per-difficulty fraction of reference predictions matching gold."""
    missing = [m.instance_id for m in instances if m.reference_prediction is None]
    if missing:
        raise ValueError(f"instances lack a reference prediction: {missing[:5]}")
    splits = build_splits(assignment, instances)
    out = {}
    for difficulty, metas in splits.items():
        if metas:
            out[difficulty] = sum(1 for m in metas if m.reference_prediction == m.gold_label) / len(metas)
    return out


def class_counts(assignment, golds: Mapping[str, str]) -> dict[str, dict[str, int]]:
    """Contingency counts per (difficulty, class)."""
    difficulty_of = _difficulty_map(assignment)
    mismatched = set(difficulty_of) ^ set(golds)
    if mismatched:
        raise ValueError(f"assignment and gold labels cover different ids: {sorted(mismatched)[:5]}")
    counts: dict[str, dict[str, int]] = {d: {} for d in DIFFICULTY_ORDER}
    for instance_id in sorted(golds):
        cell = counts[difficulty_of[instance_id]]
        label = golds[instance_id]
        cell[label] = cell.get(label, 0) + 1
    return counts


def aggregate_heuristics(
    profiles: Mapping[str, HeuristicProfile],
    assignment,
    golds: Mapping[str, str],
    measures: Sequence[str] = MEASURE_ORDER,
) -> dict[str, dict[str, dict[str, dict | None]]]:
    """Mean and population std of each measure per (difficulty, class) cell.

    Boolean measures aggregate as the proportion true. Empty cells are kept
    as None so "absent" stays distinct from "measured zero".
    """
    difficulty_of = _difficulty_map(assignment)
    missing = [i for i in profiles if i not in difficulty_of or i not in golds]
    if missing:
        raise ValueError(f"profiles cover ids without difficulty or gold label: {sorted(missing)[:5]}")
    labels = sorted({golds[i] for i in profiles})

    grouped: dict[tuple[str, str], list[str]] = {}
    for i in sorted(profiles):
        grouped.setdefault((difficulty_of[i], golds[i]), []).append(i)

    out: dict[str, dict[str, dict[str, dict | None]]] = {}
    for difficulty in DIFFICULTY_ORDER:
        out[difficulty] = {}
        for label in labels:
            ids = grouped.get((difficulty, label), [])
            cell: dict[str, dict | None] = {}
            for measure in measures:
                if not ids:
                    cell[measure] = None
                    continue
                values = np.array([profiles[i].value(measure) for i in ids], dtype=float)
                cell[measure] = {"mean": float(values.mean()), "std": float(values.std()), "n": len(ids)}
            out[difficulty][label] = cell
    return out


@dataclass(frozen=True)
class SplitReport:
    n_instances: int
    labels: tuple[str, ...]
    counts: dict
    fractions: dict
    accuracy: dict | None
    class_counts: dict
    heuristics: dict | None

    def to_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "labels": list(self.labels),
            "splits": {
                d: {
                    "count": self.counts[d],
                    "fraction": self.fractions[d],
                    "accuracy": None if self.accuracy is None else self.accuracy.get(d),
                    "class_counts": self.class_counts[d],
                }
                for d in DIFFICULTY_ORDER
            },
            "heuristics": self.heuristics,
        }


def build_report(
    instances: Sequence[InstanceMeta],
    assignment,
    labels: Sequence[str],
    profiles: Mapping[str, HeuristicProfile] | None = None,
) -> SplitReport:
    """Assemble the full per-split report.

    Accuracy is included when every instance carries a reference prediction,
    omitted when none does, and an error in between (partial predictions are
    ambiguous). Heuristic aggregates are included when profiles are given.
    """
    golds = {m.instance_id: m.gold_label for m in instances}
    splits = build_splits(assignment, instances)
    n = len(instances)
    counts = {d: len(splits[d]) for d in DIFFICULTY_ORDER}
    fractions = {d: (counts[d] / n if n else 0.0) for d in DIFFICULTY_ORDER}

    with_ref = sum(1 for m in instances if m.reference_prediction is not None)
    accuracy: dict | None
    if with_ref == 0:
        accuracy = None
    else:
        per_split = split_accuracy(instances, assignment)  # raises on partial coverage
        accuracy = {}
        for difficulty in DIFFICULTY_ORDER:
            metas = splits[difficulty]
            if not metas:
                accuracy[difficulty] = None
                continue
            per_class = {}
            for label in labels:
                of_class = [m for m in metas if m.gold_label == label]
                per_class[label] = (
                    sum(1 for m in of_class if m.reference_prediction == m.gold_label) / len(of_class)
                    if of_class
                    else None
                )
            accuracy[difficulty] = {"overall": per_split[difficulty], "per_class": per_class}

    cc = class_counts(assignment, golds)
    counts_full = {d: {label: cc[d].get(label, 0) for label in labels} for d in DIFFICULTY_ORDER}
    heur = aggregate_heuristics(profiles, assignment, golds) if profiles is not None else None
    return SplitReport(
        n_instances=n,
        labels=tuple(labels),
        counts=counts,
        fractions=fractions,
        accuracy=accuracy,
        class_counts=counts_full,
        heuristics=heur,
    )


def write_report_json(report: SplitReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_split_summary_csv(report: SplitReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("difficulty", "count", "fraction", "accuracy"))
        for d in DIFFICULTY_ORDER:
            acc = ""
            if report.accuracy is not None and report.accuracy.get(d) is not None:
                acc = format(report.accuracy[d]["overall"], ".17g")
            writer.writerow((d, report.counts[d], format(report.fractions[d], ".17g"), acc))


def write_class_counts_csv(report: SplitReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("difficulty",) + report.labels)
        for d in DIFFICULTY_ORDER:
            writer.writerow((d,) + tuple(report.class_counts[d][label] for label in report.labels))


def write_heuristic_cells_csv(report: SplitReport, path) -> None:
    if report.heuristics is None:
        raise ValueError("report carries no heuristic aggregates")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("difficulty", "class", "measure", "n", "mean", "std"))
        for d in DIFFICULTY_ORDER:
            for label in sorted(report.heuristics[d]):
                for measure, agg in report.heuristics[d][label].items():
                    if agg is None:
                        writer.writerow((d, label, measure, 0, "", ""))
                    else:
                        writer.writerow(
                            (d, label, measure, agg["n"], format(agg["mean"], ".17g"), format(agg["std"], ".17g"))
                        )


def write_split_jsonl(splits: Mapping[str, Sequence[InstanceMeta]], directory) -> None:
    """One JSONL file of instance metadata per difficulty."""
    for difficulty in DIFFICULTY_ORDER:
        path = f"{directory}/{difficulty}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for meta in splits.get(difficulty, ()):
                fh.write(json.dumps(instance_json(meta), ensure_ascii=False, separators=(",", ":")) + "\n")

"""Emission and light-weight reading of the dynamics-log JSONL wire format.

This package talks to the characterization toolkit only through files, so the
format lives here as well: a header line declaring labels and epochs per
setting, instance metadata lines, and one record line per (instance,
setting, epoch) with the epoch-end logits.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Mapping, Sequence

from .data import Example


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def header_line(labels: Sequence[str], epochs: Mapping[str, int]) -> str:
    return _dump({"kind": "header", "labels": list(labels), "epochs": dict(epochs)})


def instance_line(example: Example, reference_prediction: str | None = None) -> str:
    obj = {
        "kind": "instance",
        "id": example.uid,
        "premise": example.premise,
        "hypothesis": example.hypothesis,
        "gold": example.label,
    }
    if reference_prediction is not None:
        obj["reference_prediction"] = reference_prediction
    return _dump(obj)


def record_line(uid: str, setting: str, epoch: int, logits: Sequence[float]) -> str:
    return _dump({"kind": "record", "id": uid, "setting": setting, "epoch": epoch, "logits": [float(v) for v in logits]})


def write_lines_atomically(path, lines: Iterable[str]) -> None:
    """Write via a temp file and rename, so aborted runs leave nothing behind."""
    tmp = f"{path}.partial"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def read_log(path):
    """Parse a log into (header, instance dicts by id, record dicts).

    Schema validation is the toolkit's job (`dyncarto validate`); this reader
    only needs enough structure for merging and annotation."""
    header = None
    instances: dict[str, dict] = {}
    records: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            obj = json.loads(raw)
            kind = obj.get("kind")
            if kind == "header":
                header = obj
            elif kind == "instance":
                instances[obj["id"]] = obj
            elif kind == "record":
                records.append(obj)
    if header is None:
        raise ValueError(f"{path}: no header line")
    return header, instances, records


def merge_logs(paths: Sequence, out_path) -> None:
    """Combine single-setting fragments over the same instances into one log."""
    headers, instance_maps, all_records = [], [], []
    for path in paths:
        header, instances, records = read_log(path)
        headers.append(header)
        instance_maps.append(instances)
        all_records.append(records)

    labels = headers[0]["labels"]
    if any(h["labels"] != labels for h in headers):
        raise ValueError("fragments disagree on the label space")
    ids = set(instance_maps[0])
    if any(set(m) != ids for m in instance_maps):
        raise ValueError("fragments cover different instance sets")
    epochs: dict[str, int] = {}
    for header in headers:
        for setting, e in header["epochs"].items():
            if setting in epochs and epochs[setting] != e:
                raise ValueError(f"conflicting epoch counts for setting '{setting}'")
            epochs[setting] = e

    lines = [header_line(labels, epochs)]
    merged_instances = instance_maps[0]
    for uid in sorted(merged_instances):
        # prefer a fragment that carries a reference prediction
        chosen = merged_instances[uid]
        for m in instance_maps[1:]:
            if "reference_prediction" in m[uid]:
                chosen = m[uid]
        lines.append(_dump(chosen))
    for records in all_records:
        lines.extend(_dump(r) for r in records)
    write_lines_atomically(out_path, lines)


def set_reference_predictions(log_path, predictions: Mapping[str, str], out_path=None) -> None:
    """Rewrite a log with reference predictions merged into its instance lines.

    Idempotent: applying the same predictions twice yields the same bytes.
    """
    header, instances, records = read_log(log_path)
    missing = sorted(set(instances) - set(predictions))
    if missing:
        raise ValueError(f"predictions missing for instance(s): {missing[:5]}")
    lines = [_dump(header)]
    for uid in sorted(instances):
        obj = dict(instances[uid])
        obj["reference_prediction"] = predictions[uid]
        lines.append(_dump(obj))
    lines.extend(_dump(r) for r in records)
    write_lines_atomically(out_path or log_path, lines)

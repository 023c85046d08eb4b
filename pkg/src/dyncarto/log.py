"""Training-dynamics log: domain types, JSONL wire format, parsing and validation.

A log couples a label space, per-instance metadata (texts, gold label,
optional reference prediction) and per-epoch logit records for up to two
training settings: "ph" (premise + hypothesis) and "h" (hypothesis only).
Parsed logs are canonicalized (instances and records sorted), so the result
is independent of line order in the stream.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

PH = "ph"
H = "h"
SETTINGS = (PH, H)

_HEADER_KEYS = {"kind", "labels", "epochs"}
_INSTANCE_KEYS = {"kind", "id", "premise", "hypothesis", "gold", "reference_prediction"}
_INSTANCE_REQUIRED = {"kind", "id", "premise", "hypothesis", "gold"}
_RECORD_KEYS = {"kind", "id", "setting", "epoch", "logits"}


@dataclass(frozen=True)
class LogIssue:
    """A single validation problem. ``line`` is 1-based; None for checks
    that span lines (e.g. a missing epoch)."""

    line: int | None
    message: str

    def __str__(self) -> str:
        return self.message if self.line is None else f"line {self.line}: {self.message}"


class LogValidationError(ValueError):
    """Raised with every problem found in a log, sorted by line number."""

    def __init__(self, issues: Iterable[LogIssue]):
        self.issues = sorted(issues, key=lambda i: (i.line is None, i.line or 0, i.message))
        preview = "; ".join(str(i) for i in self.issues[:5])
        more = "" if len(self.issues) <= 5 else f" (+{len(self.issues) - 5} more)"
        super().__init__(f"{len(self.issues)} validation problem(s): {preview}{more}")


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class names; logit index i refers to labels[i]."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError(f"label space needs at least 2 classes, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate label names in {labels}")
        if not all(isinstance(x, str) and x for x in labels):
            raise ValueError("labels must be non-empty strings")

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class InstanceMeta:
    instance_id: str
    premise: str
    hypothesis: str
    gold_label: str
    reference_prediction: str | None = None


@dataclass(frozen=True)
class EpochLogits:
    instance_id: str
    setting: str
    epoch: int
    logits: tuple[float, ...]


def _record_key(r: EpochLogits) -> tuple:
    return (r.instance_id, SETTINGS.index(r.setting), r.epoch)


@dataclass(frozen=True)
class DynamicsLog:
    """Validated, canonically ordered training-dynamics log."""

    label_space: LabelSpace
    instances: tuple[InstanceMeta, ...]
    records: tuple[EpochLogits, ...]
    epochs_per_setting: Mapping[str, int]
    _meta_by_id: dict = field(init=False, repr=False, compare=False)
    _series: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_meta_by_id", {m.instance_id: m for m in self.instances})
        series: dict[tuple[str, str], list[EpochLogits]] = {}
        for r in self.records:
            series.setdefault((r.instance_id, r.setting), []).append(r)
        object.__setattr__(self, "_series", series)

    @property
    def settings(self) -> tuple[str, ...]:
        """Declared settings, in ("ph", "h") order."""
        return tuple(s for s in SETTINGS if s in self.epochs_per_setting)

    @property
    def instance_ids(self) -> tuple[str, ...]:
        return tuple(m.instance_id for m in self.instances)

    def meta(self, instance_id: str) -> InstanceMeta:
        return self._meta_by_id[instance_id]

    def has_records(self, instance_id: str, setting: str) -> bool:
        return (instance_id, setting) in self._series

    def logit_series(self, instance_id: str, setting: str) -> np.ndarray:
        """Logits for one instance/setting as an (E, n_labels) array, epoch order."""
        recs = self._series.get((instance_id, setting))
        if recs is None:
            raise KeyError(f"no '{setting}' records for instance '{instance_id}'")
        return np.array([r.logits for r in recs], dtype=float)

    @staticmethod
    def build(
        label_space: LabelSpace,
        instances: Iterable[InstanceMeta],
        records: Iterable[EpochLogits],
        epochs_per_setting: Mapping[str, int],
    ) -> "DynamicsLog":
        """Construct a log from parts, applying the full validation suite."""
        instances = sorted(instances, key=lambda m: m.instance_id)
        records = sorted(records, key=_record_key)
        issues = _structural_issues(label_space, instances, records, epochs_per_setting)
        if issues:
            raise LogValidationError(issues)
        return DynamicsLog(label_space, tuple(instances), tuple(records), dict(epochs_per_setting))


def softmax(logits) -> np.ndarray:
    """Stable softmax (max-subtracted); entries positive and summing to 1."""
    x = np.asarray(logits, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("softmax expects a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite logit in softmax input")
    e = np.exp(x - x.max())
    return e / e.sum()


def _structural_issues(
    label_space: LabelSpace,
    instances: list[InstanceMeta],
    records: list[EpochLogits],
    epochs_per_setting: Mapping[str, int],
    instance_lines: Mapping[int, int] | None = None,
    record_lines: Mapping[int, int] | None = None,
) -> list[LogIssue]:
    """Cross-line invariant checks shared by build() and parse_log().

    Line maps (object index -> 1-based line) are supplied by the parser so
    issues point at the offending line where one exists.
    """
    issues: list[LogIssue] = []
    iline = (instance_lines or {}).get
    rline = (record_lines or {}).get

    if not epochs_per_setting:
        issues.append(LogIssue(None, "header declares no settings"))
    for setting, e in epochs_per_setting.items():
        if setting not in SETTINGS:
            issues.append(LogIssue(None, f"unknown setting '{setting}' in header epochs"))
        elif not isinstance(e, int) or isinstance(e, bool) or e < 1:
            issues.append(LogIssue(None, f"epoch count for '{setting}' must be an integer >= 1, got {e!r}"))

    seen_ids: set[str] = set()
    for idx, m in enumerate(instances):
        if m.instance_id in seen_ids:
            issues.append(LogIssue(iline(idx), f"duplicate instance id '{m.instance_id}'"))
        seen_ids.add(m.instance_id)
        if m.gold_label not in label_space:
            issues.append(LogIssue(iline(idx), f"unknown label '{m.gold_label}' for instance '{m.instance_id}'"))
        if m.reference_prediction is not None and m.reference_prediction not in label_space:
            issues.append(
                LogIssue(iline(idx), f"unknown reference prediction '{m.reference_prediction}' for instance '{m.instance_id}'")
            )

    n_labels = len(label_space)
    seen_records: set[tuple[str, str, int]] = set()
    epochs_seen: dict[tuple[str, str], set[int]] = {}
    for idx, r in enumerate(records):
        line = rline(idx)
        if r.setting not in epochs_per_setting:
            issues.append(LogIssue(line, f"record setting '{r.setting}' not declared in header"))
            continue
        e_max = epochs_per_setting[r.setting]
        if r.instance_id not in seen_ids:
            issues.append(LogIssue(line, f"record references unknown instance '{r.instance_id}'"))
        if not isinstance(e_max, int) or isinstance(e_max, bool) or e_max < 1:
            continue  # header problem already reported
        if r.epoch < 1 or r.epoch > e_max:
            issues.append(
                LogIssue(line, f"epoch {r.epoch} out of declared range 1..{e_max} for setting '{r.setting}'")
            )
        if len(r.logits) != n_labels:
            issues.append(
                LogIssue(line, f"logit arity mismatch: got {len(r.logits)} values for {n_labels} labels")
            )
        if not all(math.isfinite(v) for v in r.logits):
            issues.append(LogIssue(line, f"non-finite logit for instance '{r.instance_id}'"))
        key = (r.instance_id, r.setting, r.epoch)
        if key in seen_records:
            issues.append(
                LogIssue(line, f"duplicate record for instance '{r.instance_id}', setting '{r.setting}', epoch {r.epoch}")
            )
        seen_records.add(key)
        epochs_seen.setdefault((r.instance_id, r.setting), set()).add(r.epoch)

    for (instance_id, setting), got in sorted(epochs_seen.items()):
        e_max = epochs_per_setting.get(setting)
        if not isinstance(e_max, int) or isinstance(e_max, bool) or e_max < 1:
            continue
        missing = sorted(set(range(1, e_max + 1)) - got)
        if missing:
            issues.append(
                LogIssue(
                    None,
                    f"missing epoch(s) {missing} for instance '{instance_id}', setting '{setting}' (declared 1..{e_max})",
                )
            )
    return issues


def _schema_error(line: int, msg: str) -> LogIssue:
    return LogIssue(line, msg)


def _check_keys(obj: dict, allowed: set, required: set, line: int, issues: list) -> bool:
    ok = True
    extra = set(obj) - allowed
    if extra:
        issues.append(_schema_error(line, f"unknown field(s) {sorted(extra)}"))
        ok = False
    missing = required - set(obj)
    if missing:
        issues.append(_schema_error(line, f"missing field(s) {sorted(missing)}"))
        ok = False
    return ok


def _as_text_lines(source) -> list[str]:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source.splitlines()
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            return data.splitlines()
    else:
        raise TypeError(f"cannot parse log from {type(source).__name__}")
    return data.decode("utf-8").splitlines()


def parse_log(source: bytes | str | IO) -> DynamicsLog:
    """Parse and validate a JSONL dynamics log from bytes, text or a stream.

    The header line must come first; instance and record lines may appear in
    any order after it. Raises LogValidationError listing every problem,
    sorted by line number.
    """
    try:
        lines = _as_text_lines(source)
    except UnicodeDecodeError as e:
        raise LogValidationError([LogIssue(None, f"stream is not valid UTF-8: {e}")]) from e

    issues: list[LogIssue] = []
    label_space: LabelSpace | None = None
    epochs_per_setting: dict[str, int] = {}
    instances: list[InstanceMeta] = []
    records: list[EpochLogits] = []
    instance_lines: dict[int, int] = {}
    record_lines: dict[int, int] = {}
    header_seen = False

    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            issues.append(_schema_error(lineno, f"malformed JSON: {e.msg}"))
            continue
        if not isinstance(obj, dict):
            issues.append(_schema_error(lineno, "line is not a JSON object"))
            continue
        kind = obj.get("kind")

        if not header_seen:
            if kind != "header":
                issues.append(_schema_error(lineno, "missing header: first line must be the header"))
                return _finish_parse(issues)
            header_seen = True
            if not _check_keys(obj, _HEADER_KEYS, _HEADER_KEYS, lineno, issues):
                return _finish_parse(issues)
            labels = obj["labels"]
            if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
                issues.append(_schema_error(lineno, "header 'labels' must be a list of strings"))
                return _finish_parse(issues)
            try:
                label_space = LabelSpace(tuple(labels))
            except ValueError as e:
                issues.append(_schema_error(lineno, str(e)))
                return _finish_parse(issues)
            epochs = obj["epochs"]
            if not isinstance(epochs, dict):
                issues.append(_schema_error(lineno, "header 'epochs' must be an object"))
                return _finish_parse(issues)
            epochs_per_setting = epochs
            continue

        if kind == "header":
            issues.append(_schema_error(lineno, "duplicate header line"))
        elif kind == "instance":
            if not _check_keys(obj, _INSTANCE_KEYS, _INSTANCE_REQUIRED, lineno, issues):
                continue
            bad = [k for k in ("id", "premise", "hypothesis", "gold") if not isinstance(obj[k], str)]
            if bad or not obj["id"]:
                issues.append(_schema_error(lineno, f"instance fields must be strings (id non-empty); bad: {bad or ['id']}"))
                continue
            ref = obj.get("reference_prediction")
            if ref is not None and not isinstance(ref, str):
                issues.append(_schema_error(lineno, "reference_prediction must be a string or null"))
                continue
            instance_lines[len(instances)] = lineno
            instances.append(InstanceMeta(obj["id"], obj["premise"], obj["hypothesis"], obj["gold"], ref))
        elif kind == "record":
            if not _check_keys(obj, _RECORD_KEYS, _RECORD_KEYS, lineno, issues):
                continue
            if not isinstance(obj["id"], str) or not obj["id"]:
                issues.append(_schema_error(lineno, "record 'id' must be a non-empty string"))
                continue
            if obj["setting"] not in SETTINGS:
                issues.append(_schema_error(lineno, f"record 'setting' must be one of {list(SETTINGS)}, got {obj['setting']!r}"))
                continue
            epoch = obj["epoch"]
            if not isinstance(epoch, int) or isinstance(epoch, bool):
                issues.append(_schema_error(lineno, f"record 'epoch' must be an integer, got {epoch!r}"))
                continue
            logits = obj["logits"]
            if (
                not isinstance(logits, list)
                or not logits
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in logits)
            ):
                issues.append(_schema_error(lineno, "record 'logits' must be a non-empty list of numbers"))
                continue
            record_lines[len(records)] = lineno
            records.append(EpochLogits(obj["id"], obj["setting"], epoch, tuple(float(v) for v in logits)))
        else:
            issues.append(_schema_error(lineno, f"unknown kind {kind!r}"))

    if not header_seen:
        issues.append(LogIssue(None, "missing header: stream contains no lines"))
        return _finish_parse(issues)

    assert label_space is not None
    issues.extend(
        _structural_issues(label_space, instances, records, epochs_per_setting, instance_lines, record_lines)
    )
    if issues:
        raise LogValidationError(issues)
    instances_sorted = sorted(instances, key=lambda m: m.instance_id)
    records_sorted = sorted(records, key=_record_key)
    return DynamicsLog(label_space, tuple(instances_sorted), tuple(records_sorted), dict(epochs_per_setting))


def _finish_parse(issues: list[LogIssue]) -> DynamicsLog:
    raise LogValidationError(issues)


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def instance_json(meta: InstanceMeta) -> dict:
    obj = {
        "kind": "instance",
        "id": meta.instance_id,
        "premise": meta.premise,
        "hypothesis": meta.hypothesis,
        "gold": meta.gold_label,
    }
    if meta.reference_prediction is not None:
        obj["reference_prediction"] = meta.reference_prediction
    return obj


def serialize_log(log: DynamicsLog) -> bytes:
    """Serialize to canonical JSONL; parse(serialize(log)) == log."""
    out = io.StringIO()
    header = {
        "kind": "header",
        "labels": list(log.label_space.labels),
        "epochs": {s: log.epochs_per_setting[s] for s in log.settings},
    }
    out.write(_dump(header) + "\n")
    for meta in log.instances:
        out.write(_dump(instance_json(meta)) + "\n")
    for r in log.records:
        rec = {"kind": "record", "id": r.instance_id, "setting": r.setting, "epoch": r.epoch, "logits": list(r.logits)}
        out.write(_dump(rec) + "\n")
    return out.getvalue().encode("utf-8")


def load_log(path) -> DynamicsLog:
    with open(path, "rb") as fh:
        return parse_log(fh)


def write_log(log: DynamicsLog, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_log(log))

"""Datasets for sequence-pair classification: SNLI-format JSONL loading and a
synthetic premise/hypothesis corpus with planted annotation artifacts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

LABELS = ("entailment", "contradiction", "neutral")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower().replace("n't", " not"))


@dataclass(frozen=True)
class Example:
    uid: str
    premise: str
    hypothesis: str
    label: str


class DatasetSchemaError(ValueError):
    pass


def load_snli_jsonl(path, limit: int | None = None) -> list[Example]:
    """Read SNLI-format JSONL (sentence1/sentence2/gold_label); '-' labels are
    unlabeled annotator disagreements and are skipped."""
    examples: list[Example] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DatasetSchemaError(f"{path}: line {lineno}: invalid JSON: {e.msg}") from e
            missing = {"sentence1", "sentence2", "gold_label"} - set(obj)
            if missing:
                raise DatasetSchemaError(f"{path}: line {lineno}: missing field(s) {sorted(missing)}")
            label = obj["gold_label"]
            if label == "-":
                continue
            if label not in LABELS:
                raise DatasetSchemaError(f"{path}: line {lineno}: unknown gold_label {label!r}")
            uid = str(obj.get("pairID", f"pair{lineno:07d}"))
            examples.append(Example(uid, obj["sentence1"], obj["sentence2"], label))
            if limit is not None and len(examples) >= limit:
                break
    if not examples:
        raise DatasetSchemaError(f"{path}: no labeled examples found")
    return examples


_SUBJECTS = [
    "a man", "a woman", "two dogs", "the children", "a cyclist", "an old lady",
    "three friends", "a street vendor", "the tall boy", "a musician", "a dancer",
    "two workers", "a young girl", "the tourists", "a soccer player", "a chef",
]
# (third person, base form)
_ACTIONS = [
    ("runs", "run"), ("sleeps", "sleep"), ("plays guitar", "play guitar"),
    ("reads a newspaper", "read a newspaper"), ("eats lunch", "eat lunch"),
    ("paints a wall", "paint a wall"), ("rides a bike", "ride a bike"),
    ("waits for the bus", "wait for the bus"), ("sells fruit", "sell fruit"),
    ("climbs the stairs", "climb the stairs"), ("walks slowly", "walk slowly"),
    ("laughs loudly", "laugh loudly"), ("cooks dinner", "cook dinner"),
    ("fixes a car", "fix a car"), ("throws a ball", "throw a ball"),
    ("takes photos", "take photos"),
]
_PLACES = [
    "in the park", "at the beach", "near the station", "on the sidewalk",
    "inside the market", "by the river", "at the stadium", "in the kitchen",
    "under the bridge", "outside the school", "on the rooftop", "at the corner",
]
_NEUTRAL_TAILS = [
    "to meet an old friend", "because it is a birthday", "before a big storm",
    "while planning a trip", "after winning a prize", "hoping for good news",
]
_GENERIC_SUBJECTS = ["a person", "someone", "people"]


def synthetic_nli(n: int, seed: int = 0) -> list[Example]:
    """SNLI-style pairs whose hypotheses carry the usual annotation artifacts.

    Contradictions are mostly negations, neutrals append unverifiable detail,
    entailments shorten and generalize the premise — so a hypothesis-only
    model beats chance by a wide margin. Counter-cues (negation inside some
    entailments and neutrals) and premise-dependent pairs (a bare
    "subject action" hypothesis is entailment or contradiction depending on
    the unseen premise) keep it from being perfectly separable.
    """
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        subject = _SUBJECTS[rng.integers(len(_SUBJECTS))]
        third, base = _ACTIONS[rng.integers(len(_ACTIONS))]
        place = _PLACES[rng.integers(len(_PLACES))]
        premise = f"{subject} {third} {place}"
        label = LABELS[i % 3]
        r = rng.random()
        if label == "entailment":
            if r < 0.35:
                hypothesis = f"{_GENERIC_SUBJECTS[rng.integers(len(_GENERIC_SUBJECTS))]} {third}"
            elif r < 0.5:
                hypothesis = f"{subject} is not missing"
            else:
                hypothesis = f"{subject} {third}"
        elif label == "contradiction":
            if r < 0.35:
                hypothesis = f"{subject} does not {base} {place}"
            elif r < 0.6:
                hypothesis = f"{subject} never {third}"
            elif r < 0.75:
                hypothesis = f"no one {third} {place}"
            else:
                other_third = _ACTIONS[int((rng.integers(1, len(_ACTIONS)) + _ACTIONS.index((third, base))) % len(_ACTIONS))][0]
                hypothesis = f"{subject} {other_third}"
        else:
            tail = _NEUTRAL_TAILS[rng.integers(len(_NEUTRAL_TAILS))]
            if r < 0.75:
                hypothesis = f"{subject} {third} {place} {tail}"
            else:
                hypothesis = f"{subject} {third} {place} and may not stay long"
        examples.append(Example(f"syn{i:06d}", premise, hypothesis, label))
    return examples


def load_dataset(spec: str, limit: int | None = None) -> list[Example]:
    """Dataset spec: 'synthetic:N[:seed]' or a path to SNLI-format JSONL."""
    if spec.startswith("synthetic:"):
        parts = spec.split(":")
        n = int(parts[1])
        seed = int(parts[2]) if len(parts) > 2 else 0
        examples = synthetic_nli(n, seed=seed)
        return examples[:limit] if limit else examples
    return load_snli_jsonl(spec, limit=limit)


class Vocab:
    """Token -> id map with PAD=0, UNK=1, SEP=2, built from training text."""

    PAD, UNK, SEP = 0, 1, 2

    def __init__(self, texts):
        self._index: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                if token not in self._index:
                    self._index[token] = 3 + len(self._index)

    def __len__(self) -> int:
        return 3 + len(self._index)

    def encode(self, text: str) -> list[int]:
        return [self._index.get(t, self.UNK) for t in tokenize(text)]

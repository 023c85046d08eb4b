"""Lexical measures of spurious premise/hypothesis correlation.

Five per-pair measures over a shared whitespace-free tokenization:
type-level word overlap, antonym pair count, signed length mismatch,
out-of-dictionary ratio and a negation flag. Antonym and dictionary data are
plain lexicon files, not code; normalization choices (which side's length
divides what) are fixed here and echoed in exports.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .log import InstanceMeta

DEFAULT_NEGATIONS = frozenset({"no", "not", "never", "none"})

MEASURE_ORDER = ("word_overlap", "antonym_score", "length_mismatch", "misspelled_ratio", "contains_negation")

_CONTRACTION_RE = re.compile(r"n't\b")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; "n't" becomes "not"."""
    lowered = text.lower()
    lowered = _CONTRACTION_RE.sub(" not", lowered)
    return _TOKEN_RE.findall(lowered)


@dataclass(frozen=True)
class TokenizedPair:
    premise_tokens: tuple[str, ...]
    hypothesis_tokens: tuple[str, ...]

    @staticmethod
    def from_texts(premise: str, hypothesis: str) -> "TokenizedPair":
        return TokenizedPair(tuple(tokenize(premise)), tuple(tokenize(hypothesis)))

    @property
    def premise_types(self) -> frozenset:
        return frozenset(self.premise_tokens)

    @property
    def hypothesis_types(self) -> frozenset:
        return frozenset(self.hypothesis_tokens)


@dataclass(frozen=True)
class LexiconSet:
    """Antonym map, spelling dictionary and negation word set (all lowercase)."""

    antonyms: Mapping[str, frozenset] = field(default_factory=dict)
    dictionary: frozenset = frozenset()
    negations: frozenset = DEFAULT_NEGATIONS


@dataclass(frozen=True)
class HeuristicProfile:
    word_overlap: float
    antonym_score: float
    length_mismatch: float
    misspelled_ratio: float
    contains_negation: bool

    def value(self, measure: str) -> float:
        v = getattr(self, measure)
        return float(v) if isinstance(v, bool) else v


def load_antonyms(path, symmetrize: bool = True) -> dict[str, frozenset]:
    """Antonym TSV loader (word<TAB>antonym per line); symmetrized by default."""
    pairs: dict[str, set] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}: line {lineno}: expected 'word<TAB>antonym', got {raw!r}")
            a, b = parts[0].strip().lower(), parts[1].strip().lower()
            pairs.setdefault(a, set()).add(b)
            if symmetrize:
                pairs.setdefault(b, set()).add(a)
    return {w: frozenset(s) for w, s in pairs.items()}


def load_wordlist(path) -> frozenset:
    """One lowercase word per line; blank lines and '#' comments ignored."""
    words = set()
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            word = raw.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)


def word_overlap(pair: TokenizedPair) -> float:
    """Shared word types over hypothesis type count."""
    h_types = pair.hypothesis_types
    if not h_types:
        raise ValueError("empty hypothesis")
    return len(pair.premise_types & h_types) / len(h_types)


def antonym_score(pair: TokenizedPair, lexicon: LexiconSet) -> float:
    """Premise-token/hypothesis-type antonym pairs over hypothesis type count.

    Every premise token occurrence counts, so repeated premise words weigh in
    each time they occur.
    """
    h_types = pair.hypothesis_types
    if not h_types:
        raise ValueError("empty hypothesis")
    count = 0
    for token in pair.premise_tokens:
        ants = lexicon.antonyms.get(token)
        if ants:
            count += sum(1 for h in h_types if h in ants)
    return count / len(h_types)


def length_mismatch(pair: TokenizedPair) -> float:
    """Signed, bounded token-count difference: (|P| - |H|) / (|P| + |H|)."""
    n_p, n_h = len(pair.premise_tokens), len(pair.hypothesis_tokens)
    if n_p + n_h == 0:
        raise ValueError("both sides empty")
    return (n_p - n_h) / (n_p + n_h)


def misspelled_ratio(pair: TokenizedPair, dictionary: frozenset) -> float:
    """Out-of-dictionary alphabetic tokens over total token count.

    Tokens containing digits are never counted as misspelled.
    """
    tokens = pair.premise_tokens + pair.hypothesis_tokens
    if not tokens:
        raise ValueError("both sides empty")
    if not dictionary:
        warnings.warn("empty spelling dictionary: every alphabetic token counts as misspelled", stacklevel=2)
    missing = sum(1 for t in tokens if t.isalpha() and t not in dictionary)
    return missing / len(tokens)


def contains_negation(pair: TokenizedPair, negations: frozenset = DEFAULT_NEGATIONS) -> bool:
    """True iff any token of either side is a negation word."""
    return any(t in negations for t in pair.premise_tokens) or any(t in negations for t in pair.hypothesis_tokens)


def profile_pair(pair: TokenizedPair, lexicons: LexiconSet) -> HeuristicProfile:
    return HeuristicProfile(
        word_overlap=word_overlap(pair),
        antonym_score=antonym_score(pair, lexicons),
        length_mismatch=length_mismatch(pair),
        misspelled_ratio=misspelled_ratio(pair, lexicons.dictionary),
        contains_negation=contains_negation(pair, lexicons.negations),
    )


def profile_dataset(instances: Iterable[InstanceMeta], lexicons: LexiconSet) -> dict[str, HeuristicProfile]:
    """All five measures per instance, keyed by instance id."""
    profiles: dict[str, HeuristicProfile] = {}
    for meta in instances:
        pair = TokenizedPair.from_texts(meta.premise, meta.hypothesis)
        try:
            profiles[meta.instance_id] = profile_pair(pair, lexicons)
        except ValueError as e:
            raise ValueError(f"instance '{meta.instance_id}': {e}") from e
    return profiles


def write_profiles_csv(profiles: Mapping[str, HeuristicProfile], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("instance_id",) + MEASURE_ORDER)
        for instance_id in sorted(profiles):
            p = profiles[instance_id]
            writer.writerow(
                (
                    instance_id,
                    format(p.word_overlap, ".17g"),
                    format(p.antonym_score, ".17g"),
                    format(p.length_mismatch, ".17g"),
                    format(p.misspelled_ratio, ".17g"),
                    "true" if p.contains_negation else "false",
                )
            )


def read_profiles_csv(path) -> dict[str, HeuristicProfile]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != ("instance_id",) + MEASURE_ORDER:
            raise ValueError(f"unexpected heuristics CSV header: {header}")
        out = {}
        for row in reader:
            out[row[0]] = HeuristicProfile(
                word_overlap=float(row[1]),
                antonym_score=float(row[2]),
                length_mismatch=float(row[3]),
                misspelled_ratio=float(row[4]),
                contains_negation=row[5] == "true",
            )
        return out

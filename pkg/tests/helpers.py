"""Shared fixture builders: synthetic dynamics logs with controlled behavior."""

from __future__ import annotations

import math

import numpy as np

from dyncarto.log import PH, H, DynamicsLog, EpochLogits, InstanceMeta, LabelSpace

NLI_LABELS = ("entailment", "contradiction", "neutral")


def gold_logit_for_prob(p: float, n_labels: int) -> float:
    """Gold logit that yields gold probability p when all other logits are 0."""
    return math.log(p * (n_labels - 1) / (1.0 - p))


def records_from_prob_series(instance_id, setting, gold_index, prob_series, n_labels):
    """One record per epoch with softmax gold probability equal to the series."""
    records = []
    for epoch, p in enumerate(prob_series, start=1):
        logits = [0.0] * n_labels
        logits[gold_index] = gold_logit_for_prob(float(p), n_labels)
        records.append(EpochLogits(instance_id, setting, epoch, tuple(logits)))
    return records


def random_log(seed: int, n_instances: int = 200, epochs: int = 5, labels=NLI_LABELS, settings=(PH, H)) -> DynamicsLog:
    """Seeded random logits for every instance, epoch and setting."""
    rng = np.random.default_rng(seed)
    space = LabelSpace(tuple(labels))
    instances = []
    records = []
    for i in range(n_instances):
        instance_id = f"inst{i:04d}"
        gold = labels[i % len(labels)]
        instances.append(InstanceMeta(instance_id, f"premise {i}", f"hypothesis {i}", gold))
        for setting in settings:
            for epoch in range(1, epochs + 1):
                logits = rng.normal(0.0, 2.0, size=len(labels))
                records.append(EpochLogits(instance_id, setting, epoch, tuple(float(v) for v in logits)))
    return DynamicsLog.build(space, instances, records, {s: epochs for s in settings})


_EASY_SHAPE = np.array([-0.02, 0.0, 0.02, 0.0, 0.0])
_AMB_SHAPE = np.array([0.0, -0.25, 0.25, -0.25, 0.25])
_HARD_SHAPE = np.array([0.02, -0.02, 0.0, 0.02, -0.02])


def three_group_log(
    seed: int = 7,
    group_sizes=(40, 30, 30),
    labels=NLI_LABELS,
    accuracy_by_group=(0.9, 0.6, 0.3),
    epochs: int = 5,
):
    """A log with three constructed behavior groups.

    Group 0: confident and stable (p ~ 0.95, tiny wobble) in both settings.
    Group 1: oscillating around p ~ 0.5 with high epoch-to-epoch swing.
    Group 2: p ~ 0.1, never argmax, negative margin.

    Reference predictions are planted so each group's accuracy is exactly
    round(rate * size) / size. Returns (log, group_of_instance_id).
    """
    rng = np.random.default_rng(seed)
    space = LabelSpace(tuple(labels))
    n_labels = len(labels)
    instances, records = [], []
    group_of = {}
    counter = 0
    for group, (size, acc) in enumerate(zip(group_sizes, accuracy_by_group)):
        n_correct = round(acc * size)
        for j in range(size):
            instance_id = f"g{group}i{counter:04d}"
            counter += 1
            gold = labels[counter % n_labels]
            gold_index = labels.index(gold)
            correct = j < n_correct
            prediction = gold if correct else labels[(gold_index + 1) % n_labels]
            instances.append(InstanceMeta(instance_id, f"premise {instance_id}", f"hypothesis {instance_id}", gold, prediction))
            group_of[instance_id] = group
            for setting in (PH, H):
                if group == 0:
                    base = rng.uniform(0.93, 0.97)
                    series = np.clip(base + _EASY_SHAPE + rng.normal(0, 0.004, epochs), 0.9, 0.99)
                elif group == 1:
                    base = rng.uniform(0.47, 0.53)
                    series = np.clip(base + _AMB_SHAPE + rng.normal(0, 0.01, epochs), 0.15, 0.85)
                else:
                    base = rng.uniform(0.06, 0.14)
                    series = np.clip(base + _HARD_SHAPE + rng.normal(0, 0.004, epochs), 0.03, 0.2)
                records.extend(records_from_prob_series(instance_id, setting, gold_index, series, n_labels))
    log = DynamicsLog.build(space, instances, records, {PH: epochs, H: epochs})
    return log, group_of

"""Training loops that log per-epoch logits for dataset characterization.

Two settings are trained separately: "ph" sees premise [SEP] hypothesis,
"h" sees the hypothesis alone (the premise field is never read on that code
path, including vocabulary construction). After every epoch the current
model scores every instance and the logits are recorded; the resulting file
is the characterization toolkit's input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import LABELS, Example, Vocab, load_dataset
from .logio import header_line, instance_line, read_log, record_line, set_reference_predictions, write_lines_atomically
from .model import TinyPairEncoder

PH = "ph"
H = "h"


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    dataset: str
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 1e-5
    warmup_frac: float = 0.1
    seed: int = 0
    embed_dim: int = 64
    n_heads: int = 4
    n_layers: int = 1
    max_len: int = 48
    dropout: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class SettingRun:
    """Everything one setting's training produced."""

    setting: str
    labels: tuple[str, ...]
    vocab: Vocab
    model: TinyPairEncoder
    epoch_logits: list[np.ndarray]  # one (N, C) array per epoch, example order


def _setting_tokens(vocab: Vocab, example: Example, setting: str, max_len: int) -> list[int]:
    if setting == H:
        ids = vocab.encode(example.hypothesis)
    else:
        ids = vocab.encode(example.premise) + [Vocab.SEP] + vocab.encode(example.hypothesis)
    return ids[:max_len] or [Vocab.UNK]


def _batch_tensors(token_lists):
    width = max(len(t) for t in token_lists)
    ids = torch.zeros((len(token_lists), width), dtype=torch.long)
    mask = torch.zeros((len(token_lists), width), dtype=torch.float32)
    for row, tokens in enumerate(token_lists):
        ids[row, : len(tokens)] = torch.tensor(tokens, dtype=torch.long)
        mask[row, : len(tokens)] = 1.0
    return ids, mask


def _label_order(examples) -> tuple[str, ...]:
    present = {ex.label for ex in examples}
    ordered = tuple(label for label in LABELS if label in present)
    return ordered + tuple(sorted(present - set(LABELS)))


@torch.no_grad()
def _score(model, encoded, batch_size) -> np.ndarray:
    model.eval()
    chunks = []
    for start in range(0, len(encoded), batch_size):
        ids, mask = _batch_tensors(encoded[start : start + batch_size])
        chunks.append(model(ids, mask).numpy())
    return np.vstack(chunks)


def train_setting(config: TrainConfig, setting: str, examples: list[Example], record_epochs: bool = True) -> SettingRun:
    """Fit one setting's model; optionally score all examples after each epoch."""
    torch.manual_seed(config.seed if setting == PH else config.seed + 1)
    labels = _label_order(examples)
    label_index = {label: i for i, label in enumerate(labels)}
    if setting == H:
        vocab = Vocab(ex.hypothesis for ex in examples)
    else:
        vocab = Vocab(text for ex in examples for text in (ex.premise, ex.hypothesis))
    encoded = [_setting_tokens(vocab, ex, setting, config.max_len) for ex in examples]
    targets = torch.tensor([label_index[ex.label] for ex in examples], dtype=torch.long)

    model = TinyPairEncoder(
        vocab_size=len(vocab),
        n_classes=len(labels),
        embed_dim=config.embed_dim,
        n_heads=config.n_heads,
        n_layers=config.n_layers,
        max_len=config.max_len,
        dropout=config.dropout,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    steps_per_epoch = (len(examples) + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    warmup = max(1, int(config.warmup_frac * total_steps))

    def lr_lambda(step: int) -> float:
        if step < warmup:
            return (step + 1) / warmup
        return max(0.0, (total_steps - step) / max(1, total_steps - warmup))

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)
    loss_fn = nn.CrossEntropyLoss()
    shuffler = torch.Generator().manual_seed(config.seed * 7919 + (0 if setting == PH else 1))

    epoch_logits: list[np.ndarray] = []
    for _ in range(config.epochs):
        model.train()
        order = torch.randperm(len(examples), generator=shuffler)
        for start in range(0, len(examples), config.batch_size):
            batch = order[start : start + config.batch_size]
            ids, mask = _batch_tensors([encoded[i] for i in batch])
            optimizer.zero_grad()
            loss = loss_fn(model(ids, mask), targets[batch])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss in setting '{setting}'")
            loss.backward()
            optimizer.step()
            scheduler.step()
        if record_epochs:
            logits = _score(model, encoded, config.batch_size)
            if not np.all(np.isfinite(logits)):
                raise TrainingDivergedError(f"non-finite logits in setting '{setting}'")
            epoch_logits.append(logits)
    return SettingRun(setting, labels, vocab, model, epoch_logits)


def run_training(config: TrainConfig, settings=(PH, H), out_path=None, examples=None):
    """Train each requested setting on the characterized set, emit one log.

    Instances are logged in uid order; a failed run leaves no partial file.
    Returns (labels, examples, final-epoch accuracy per setting).
    """
    if examples is None:
        examples = load_dataset(config.dataset)
    examples = sorted(examples, key=lambda ex: ex.uid)
    if len({ex.uid for ex in examples}) != len(examples):
        raise ValueError("duplicate example uids in dataset")

    runs = [train_setting(config, setting, examples) for setting in settings]
    labels = runs[0].labels
    if any(run.labels != labels for run in runs):
        raise ValueError("settings disagree on the label space")

    label_index = {label: i for i, label in enumerate(labels)}
    gold = np.array([label_index[ex.label] for ex in examples])
    final_accuracy = {run.setting: float(np.mean(run.epoch_logits[-1].argmax(axis=1) == gold)) for run in runs}

    if out_path is not None:
        lines = [header_line(labels, {run.setting: config.epochs for run in runs})]
        lines.extend(instance_line(ex) for ex in examples)
        for run in runs:
            for epoch, logits in enumerate(run.epoch_logits, start=1):
                lines.extend(record_line(ex.uid, run.setting, epoch, logits[row]) for row, ex in enumerate(examples))
        write_lines_atomically(out_path, lines)
    return labels, examples, final_accuracy


def emit_reference_predictions(config: TrainConfig, log_path, out_path=None) -> dict[str, str]:
    """Train a full-input model on a separate train split and merge its
    predictions for the logged instances into the log's metadata.

    Deterministic per seed, so reruns rewrite the log identically."""
    train_examples = sorted(load_dataset(config.dataset), key=lambda ex: ex.uid)
    header, instances, _ = read_log(log_path)

    run = train_setting(config, PH, train_examples, record_epochs=False)
    unknown = set(run.labels) - set(header["labels"])
    if unknown:
        raise ValueError(f"train split labels {sorted(unknown)} not in the log's label space")

    targets = sorted(instances)
    target_examples = [
        Example(uid, instances[uid]["premise"], instances[uid]["hypothesis"], instances[uid]["gold"])
        for uid in targets
    ]
    encoded = [_setting_tokens(run.vocab, ex, PH, config.max_len) for ex in target_examples]
    scores = _score(run.model, encoded, config.batch_size)
    predictions = {uid: run.labels[int(np.argmax(scores[row]))] for row, uid in enumerate(targets)}
    set_reference_predictions(log_path, predictions, out_path)
    return predictions

"""Trainer companion: emits dynamics logs for dataset characterization."""

from .data import LABELS, Example, load_dataset, load_snli_jsonl, synthetic_nli
from .logio import merge_logs, read_log, set_reference_predictions
from .train import H, PH, TrainConfig, TrainingDivergedError, emit_reference_predictions, run_training, train_setting

__version__ = "0.1.0"

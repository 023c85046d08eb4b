"""Command-line entry points for dynamics-log production."""

from __future__ import annotations

import sys

import click

from .data import DatasetSchemaError
from .logio import merge_logs
from .train import H, PH, TrainConfig, TrainingDivergedError, emit_reference_predictions, run_training

_SETTINGS = {"ph": (PH,), "h": (H,), "both": (PH, H)}


def _config_from(params) -> TrainConfig:
    return TrainConfig(
        dataset=params["dataset"],
        epochs=params["epochs"],
        batch_size=params["batch_size"],
        learning_rate=params["learning_rate"],
        warmup_frac=params["warmup_frac"],
        seed=params["seed"],
        embed_dim=params["embed_dim"],
        n_heads=params["n_heads"],
        n_layers=params["n_layers"],
        max_len=params["max_len"],
    )


_train_options = [
    click.option("--characterize-split", "dataset", required=True,
                 help="The split being characterized: 'synthetic:N[:seed]' or an SNLI-format JSONL path. "
                      "Training runs on this very split; the models only gather dynamics."),
    click.option("--epochs", type=click.IntRange(min=1), default=5, show_default=True),
    click.option("--batch-size", type=click.IntRange(min=1), default=32, show_default=True),
    click.option("--learning-rate", type=float, default=1e-5, show_default=True,
                 help="Default suits fine-tuning; from-scratch runs want ~1e-3."),
    click.option("--warmup-frac", type=click.FloatRange(0, 0.5), default=0.1, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--embed-dim", type=click.IntRange(min=8), default=64, show_default=True),
    click.option("--n-heads", type=click.IntRange(min=1), default=4, show_default=True),
    click.option("--n-layers", type=click.IntRange(min=1), default=1, show_default=True),
    click.option("--max-len", type=click.IntRange(min=4), default=48, show_default=True),
]


def _with_train_options(fn):
    for option in reversed(_train_options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Train paired full-input / hypothesis-only classifiers and emit dynamics logs."""


@main.command()
@_with_train_options
@click.option("--setting", type=click.Choice(sorted(_SETTINGS)), default="both", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def train(**params) -> None:
    """Train on the characterized split and write the dynamics log."""
    config = _config_from(params)
    try:
        labels, examples, accuracy = run_training(config, settings=_SETTINGS[params["setting"]], out_path=params["out_path"])
    except (DatasetSchemaError, ValueError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except TrainingDivergedError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    acc = ", ".join(f"{s}={a:.4f}" for s, a in accuracy.items())
    click.echo(f"wrote {params['out_path']}: {len(examples)} instances, labels {list(labels)}, final-epoch accuracy {acc}")


@main.command()
@click.argument("fragments", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def merge(fragments, out_path) -> None:
    """Merge single-setting log fragments over the same instances."""
    try:
        merge_logs(fragments, out_path)
    except (ValueError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    click.echo(f"wrote {out_path}")


@main.command()
@_with_train_options
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dynamics log whose instances get reference predictions.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Output path; defaults to rewriting the log in place.")
def reference(**params) -> None:
    """Train on a separate train split (--characterize-split names it here)
    and merge its predictions into the log."""
    config = _config_from(params)
    try:
        predictions = emit_reference_predictions(config, params["log_path"], params["out_path"])
    except (DatasetSchemaError, ValueError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except TrainingDivergedError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    click.echo(f"annotated {len(predictions)} instances")


if __name__ == "__main__":
    main()

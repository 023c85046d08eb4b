"""Multi-command entry point wiring the pipeline over files.

Every command is a pure function of its input files and configuration:
reruns write byte-identical outputs (manifests carry input hashes and the
effective configuration, never timestamps). Exit codes: 0 success, 1
internal error, 2 invalid input or configuration.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__, baselines, features, gmm, heuristics, report, stats
from .gmm import EmptyClusterError
from .log import LogValidationError, load_log

_TOOL = "dyncarto"


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LogValidationError as e:
            for issue in e.issues:
                click.echo(str(issue), err=True)
            sys.exit(2)
        except EmptyClusterError as e:
            _fail(str(e), 1)
        except (ValueError, OSError) as e:
            _fail(str(e), 2)

    return wrapper


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: dict) -> None:
    doc = {
        "tool": _TOOL,
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_config_file(ctx: click.Context, params: dict) -> dict:
    """Overlay values from --config for parameters not set on the command line."""
    config_path = params.get("config")
    if not config_path:
        return params
    with open(config_path, "r", encoding="utf-8") as fh:
        try:
            file_values = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"config file {config_path}: invalid JSON: {e}") from e
    if not isinstance(file_values, dict):
        raise ValueError(f"config file {config_path}: expected a JSON object")
    unknown = set(file_values) - set(params)
    if unknown:
        raise ValueError(f"config file {config_path}: unknown key(s) {sorted(unknown)}")
    merged = dict(params)
    for key, value in file_values.items():
        if ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            merged[key] = value
    return merged


def _out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require_instances(log) -> None:
    if not log.instances:
        raise ValueError("empty dataset: the log declares no instances")


def _load_lexicons(antonyms, dictionary, negations, symmetrize) -> heuristics.LexiconSet:
    ant = heuristics.load_antonyms(antonyms, symmetrize=symmetrize) if antonyms else {}
    words = heuristics.load_wordlist(dictionary) if dictionary else frozenset()
    neg = heuristics.load_wordlist(negations) if negations else heuristics.DEFAULT_NEGATIONS
    return heuristics.LexiconSet(antonyms=ant, dictionary=words, negations=neg)


def _config_echo(params: dict, skip=("config",)) -> dict:
    return {k: v for k, v in sorted(params.items()) if k not in skip}


_config_option = click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file; explicit flags win.")
_log_option = click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Dynamics log (JSONL).")
_out_option = click.option("--out", "out_path", required=True, type=click.Path(file_okay=False), help="Output directory.")
_single_setting_option = click.option("--single-setting", is_flag=True, default=False, help="Accept logs declaring a single setting (4-D features).")


@click.group()
@click.version_option(version=__version__, prog_name=_TOOL)
def main() -> None:
    """Characterize datasets into easy/ambiguous/hard splits from training-dynamics logs."""


@main.command()
@_log_option
@_guarded
def validate(log_path: str) -> None:
    """Validate a dynamics log; exit 2 with line-numbered diagnostics if invalid."""
    log = load_log(log_path)
    epochs = ", ".join(f"{s}={log.epochs_per_setting[s]}" for s in log.settings)
    click.echo(
        f"OK: {len(log.instances)} instances, {len(log.records)} records, "
        f"{len(log.label_space)} labels, epochs {epochs}"
    )


@main.command("features")
@_log_option
@_out_option
@_single_setting_option
@_config_option
@click.pass_context
@_guarded
def features_cmd(ctx: click.Context, **params) -> None:
    """Compute the raw training-dynamics feature matrix and export it as CSV."""
    params = _apply_config_file(ctx, params)
    log = load_log(params["log_path"])
    _require_instances(log)
    vectors = features.build_feature_vectors(log, allow_single_setting=params["single_setting"])
    out = _out_dir(params["out_path"])
    features.write_features_csv(vectors, out / "features.csv")
    _write_manifest(out, "features", _config_echo(params), {"log": params["log_path"]})
    click.echo(f"wrote {out / 'features.csv'} ({len(vectors)} rows)")


@main.command()
@_log_option
@_out_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k", type=click.IntRange(min=1), default=3, show_default=True, help="Mixture components (difficulty ranking requires 3).")
@click.option("--n-init", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--max-iter", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-6, show_default=True)
@click.option("--epsilon", type=click.FloatRange(min=0, min_open=True), default=1e-6, show_default=True)
@_single_setting_option
@_config_option
@click.pass_context
@_guarded
def characterize(ctx: click.Context, **params) -> None:
    """Full pipeline: features, scaling, GMM fit, difficulty ranking, split files."""
    params = _apply_config_file(ctx, params)
    if params["k"] != 3:
        raise ValueError(f"difficulty ranking is defined for k=3 clusters, got k={params['k']}")
    log = load_log(params["log_path"])
    _require_instances(log)
    vectors = features.build_feature_vectors(log, allow_single_setting=params["single_setting"])
    scaled = features.standard_scale(vectors)
    model = gmm.fit_gmm(
        scaled,
        k=params["k"],
        seed=params["seed"],
        n_init=params["n_init"],
        max_iter=params["max_iter"],
        tol=params["tol"],
        epsilon=params["epsilon"],
    )
    resp = gmm.responsibilities(model, scaled)
    labels = resp.argmax(axis=1)
    conf_name = "conf_ph" if "conf_ph" in scaled.feature_names else "conf_h"
    raw_conf = features.feature_column(vectors, conf_name)
    assignment = gmm.rank_difficulty(
        labels, raw_conf, scaled.instance_ids, max_responsibilities=resp.max(axis=1), n_clusters=params["k"]
    )

    out = _out_dir(params["out_path"])
    features.write_features_csv(vectors, out / "features.csv")
    gmm.write_model_json(model, out / "model.json")
    gmm.write_assignment_csv(assignment, out / "assignment.csv")
    with open(out / "clusters.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "ranking_feature": conf_name,
                "clusters": [
                    {
                        "cluster_id": c,
                        "difficulty": assignment.cluster_difficulty[c],
                        "mean_confidence": assignment.cluster_confidence[c],
                        "size": sum(1 for x in assignment.cluster_ids if x == c),
                    }
                    for c in range(params["k"])
                ],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    splits = report.build_splits(assignment, log.instances)
    splits_dir = out / "splits"
    splits_dir.mkdir(exist_ok=True)
    report.write_split_jsonl(splits, splits_dir)
    _write_manifest(out, "characterize", _config_echo(params), {"log": params["log_path"]})
    sizes = ", ".join(f"{d}={len(splits[d])}" for d in gmm.DIFFICULTY_ORDER)
    click.echo(f"characterized {len(vectors)} instances: {sizes}")


@main.command("baselines")
@_log_option
@_out_option
@click.option("--datamaps-top-q", type=click.FloatRange(min=0, max=100, min_open=True), default=66.0, show_default=True)
@click.option("--aum-band", default="33,66", show_default=True, help="Lower,upper percentile bounds for the margin band.")
@_single_setting_option
@_config_option
@click.pass_context
@_guarded
def baselines_cmd(ctx: click.Context, **params) -> None:
    """Percentile-threshold baseline selections (variability slice, margin band)."""
    params = _apply_config_file(ctx, params)
    try:
        lower_q, upper_q = (float(x) for x in str(params["aum_band"]).split(","))
    except ValueError:
        raise ValueError(f"--aum-band expects 'LOWER,UPPER', got {params['aum_band']!r}") from None
    log = load_log(params["log_path"])
    _require_instances(log)
    vectors = features.build_feature_vectors(log, allow_single_setting=params["single_setting"])
    dm = baselines.datamaps_ambiguous(vectors, top_q=params["datamaps_top_q"])
    am = baselines.aum_ambiguous(vectors, lower_q=lower_q, upper_q=upper_q)
    out = _out_dir(params["out_path"])
    baselines.write_selection(dm, out / "datamaps_selection.ids", out / "datamaps_selection.json")
    baselines.write_selection(am, out / "aum_selection.ids", out / "aum_selection.json")
    _write_manifest(out, "baselines", _config_echo(params), {"log": params["log_path"]})
    click.echo(f"datamaps: {len(dm.selected)}/{dm.total} selected; aum: {len(am.selected)}/{am.total} selected")


_lexicon_options = [
    click.option("--antonyms", type=click.Path(exists=True, dir_okay=False), default=None, help="Antonym TSV (word<TAB>antonym)."),
    click.option("--dictionary", type=click.Path(exists=True, dir_okay=False), default=None, help="Spelling word list (one word per line)."),
    click.option("--negations", type=click.Path(exists=True, dir_okay=False), default=None, help="Negation word list; defaults to no/not/never/none."),
    click.option("--symmetrize/--no-symmetrize", "symmetrize", default=True, show_default=True, help="Symmetrize the antonym relation at load."),
]


def _with_lexicon_options(fn):
    for option in reversed(_lexicon_options):
        fn = option(fn)
    return fn


@main.command("heuristics")
@_log_option
@_out_option
@_with_lexicon_options
@_config_option
@click.pass_context
@_guarded
def heuristics_cmd(ctx: click.Context, **params) -> None:
    """Per-instance spurious-correlation measures, exported as CSV."""
    params = _apply_config_file(ctx, params)
    log = load_log(params["log_path"])
    _require_instances(log)
    lexicons = _load_lexicons(params["antonyms"], params["dictionary"], params["negations"], params["symmetrize"])
    profiles = heuristics.profile_dataset(log.instances, lexicons)
    out = _out_dir(params["out_path"])
    heuristics.write_profiles_csv(profiles, out / "heuristics.csv")
    inputs = {"log": params["log_path"]}
    inputs.update({k: params[k] for k in ("antonyms", "dictionary", "negations") if params[k]})
    _write_manifest(out, "heuristics", _config_echo(params), inputs)
    click.echo(f"wrote {out / 'heuristics.csv'} ({len(profiles)} rows)")


@main.command("stats")
@_log_option
@_out_option
@click.option("--assignment", "assignment_path", required=True, type=click.Path(exists=True, dir_okay=False), help="assignment.csv from characterize.")
@_with_lexicon_options
@_config_option
@click.pass_context
@_guarded
def stats_cmd(ctx: click.Context, **params) -> None:
    """Mann-Whitney U tests across class pairs per difficulty and measure."""
    params = _apply_config_file(ctx, params)
    log = load_log(params["log_path"])
    _require_instances(log)
    assignment = gmm.read_assignment_csv(params["assignment_path"])
    lexicons = _load_lexicons(params["antonyms"], params["dictionary"], params["negations"], params["symmetrize"])
    profiles = heuristics.profile_dataset(log.instances, lexicons)
    golds = {m.instance_id: m.gold_label for m in log.instances}
    sig = stats.compare_splits(profiles, assignment, golds, labels=log.label_space.labels)
    out = _out_dir(params["out_path"])
    stats.write_report_csv(sig, out / "stats.csv")
    stats.write_report_json(sig, out / "stats_summary.json")
    inputs = {"log": params["log_path"], "assignment": params["assignment_path"]}
    inputs.update({k: params[k] for k in ("antonyms", "dictionary", "negations") if params[k]})
    _write_manifest(out, "stats", _config_echo(params), inputs)
    click.echo(f"ran {sig.m} comparisons ({len(sig.skipped)} cells skipped)")


@main.command("report")
@_log_option
@_out_option
@click.option("--assignment", "assignment_path", required=True, type=click.Path(exists=True, dir_okay=False), help="assignment.csv from characterize.")
@_with_lexicon_options
@_config_option
@click.pass_context
@_guarded
def report_cmd(ctx: click.Context, **params) -> None:
    """Split fractions, accuracies, class counts and heuristic aggregates."""
    params = _apply_config_file(ctx, params)
    log = load_log(params["log_path"])
    _require_instances(log)
    assignment = gmm.read_assignment_csv(params["assignment_path"])
    profiles = None
    if params["antonyms"] or params["dictionary"] or params["negations"]:
        lexicons = _load_lexicons(params["antonyms"], params["dictionary"], params["negations"], params["symmetrize"])
        profiles = heuristics.profile_dataset(log.instances, lexicons)
    doc = report.build_report(log.instances, assignment, log.label_space.labels, profiles=profiles)
    out = _out_dir(params["out_path"])
    report.write_report_json(doc, out / "report.json")
    report.write_split_summary_csv(doc, out / "split_summary.csv")
    report.write_class_counts_csv(doc, out / "class_counts.csv")
    if profiles is not None:
        report.write_heuristic_cells_csv(doc, out / "heuristic_cells.csv")
    splits = report.build_splits(assignment, log.instances)
    splits_dir = out / "splits"
    splits_dir.mkdir(exist_ok=True)
    report.write_split_jsonl(splits, splits_dir)
    inputs = {"log": params["log_path"], "assignment": params["assignment_path"]}
    inputs.update({k: params[k] for k in ("antonyms", "dictionary", "negations") if params[k]})
    _write_manifest(out, "report", _config_echo(params), inputs)
    click.echo(f"wrote {out / 'report.json'}")


if __name__ == "__main__":
    main()

"""Command-line entry point: ``esn-affect {train,evaluate,cross-validate,predict,synth}``.

Option values resolve as: command-line flag, then ``--config`` JSON file,
then built-in default.
"""

from __future__ import annotations

import functools
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import data_io, esn, evaluation, model_io
from .preprocessing import SmoothingConfig

_DEFAULTS = esn.EsnConfig()
MODEL_FILE = "model.json"


def _load_config_file(ctx, param, value):
    if value is None:
        return None
    try:
        data = json.loads(Path(value).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise click.BadParameter(f"cannot read config file {value}: {e}") from None
    if not isinstance(data, dict):
        raise click.BadParameter(f"config file {value} must hold a JSON object")
    ctx.default_map = {**(ctx.default_map or {}), **{k.replace("-", "_"): v for k, v in data.items()}}
    return value


config_option = click.option(
    "--config",
    type=click.Path(dir_okay=False),
    callback=_load_config_file,
    is_eager=True,
    expose_value=False,
    help="JSON file of option defaults (keys are option names).",
)


def esn_options(f):
    opts = [
        config_option,
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=_DEFAULTS.seed, show_default=True,
                     help="Reservoir seed; also seeds the fold split."),
        click.option("--reservoir-size", type=click.IntRange(min=1), default=_DEFAULTS.reservoir_size,
                     show_default=True, help="Number of internal units."),
        click.option("--spectral-radius", type=float, default=_DEFAULTS.spectral_radius, show_default=True,
                     help="Spectral radius of the recurrent matrix."),
        click.option("--ridge", type=float, default=_DEFAULTS.ridge_beta, show_default=True,
                     help="Ridge regression constant."),
        click.option("--leak", type=float, default=_DEFAULTS.leak_rate, show_default=True,
                     help="Leak rate of the state update."),
        click.option("--washout", type=click.IntRange(min=0), default=_DEFAULTS.washout, show_default=True,
                     help="Initial frames discarded (clamped to frames - 1)."),
        click.option("--input-scaling", type=float, default=_DEFAULTS.input_scaling, show_default=True,
                     help="Input weights are uniform in +/- this value."),
        click.option("--connectivity", type=float, default=_DEFAULTS.connectivity, show_default=True,
                     help="Fraction of nonzero recurrent weights."),
        click.option("--smooth-window", type=click.IntRange(min=1), default=15, show_default=True,
                     help="Trailing moving-average window in frames."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _esn_config(kw) -> tuple[esn.EsnConfig, SmoothingConfig]:
    try:
        cfg = esn.EsnConfig(
            reservoir_size=kw.pop("reservoir_size"),
            spectral_radius=kw.pop("spectral_radius"),
            ridge_beta=kw.pop("ridge"),
            leak_rate=kw.pop("leak"),
            input_scaling=kw.pop("input_scaling"),
            washout=kw.pop("washout"),
            seed=kw.pop("seed"),
            connectivity=kw.pop("connectivity"),
        )
        return cfg, SmoothingConfig(kw.pop("smooth_window"))
    except ValueError as e:
        raise click.UsageError(str(e)) from None


def _fail_on_errors(f):
    """Turn domain errors into a one-line message and exit status 1."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (OSError, ValueError, KeyError, RuntimeError, np.linalg.LinAlgError) as e:
            msg = e.args[0] if isinstance(e, KeyError) and e.args else e
            click.echo(f"error: {msg}", err=True)
            sys.exit(1)

    return wrapper


def _load_labeled(features, labels):
    manifest = data_io.build_manifest(features, labels)
    labeled = manifest.labeled()
    if not labeled:
        raise ValueError(f"no labeled utterances found in {features}")
    series = [data_io.load_utterance(e.path) for e in labeled]
    return series, manifest.labels


def _print_metrics(title, metrics):
    click.echo(title)
    click.echo("target,ccc,mse")
    for t in evaluation.TARGETS:
        click.echo(f"{t},{metrics[t].ccc:.6f},{metrics[t].mse:.6f}")


def _write_report(report: evaluation.EvalReport, out: Path, stem: str):
    data_io.atomic_write_text(out / f"{stem}.json", report.to_json())
    data_io.atomic_write_text(out / f"{stem}.csv", report.to_csv())


features_option = click.option("--features", type=click.Path(file_okay=False), required=True,
                               help="Directory of <id>.csv feature files.")
labels_option = click.option("--labels", type=click.Path(dir_okay=False), required=True,
                             help="CSV with header id,arousal,valence.")
out_option = click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
model_option = click.option("--model", "model_path", type=click.Path(dir_okay=False), required=True,
                            help="Model file written by `train`.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Echo state network regression of utterance-level arousal and valence."""


@main.command()
@features_option
@labels_option
@out_option
@esn_options
@_fail_on_errors
def train(features, labels, out, **kw):
    """Train on a labeled corpus and write OUT/model.json."""
    config, smoothing = _esn_config(kw)
    series, label_map = _load_labeled(features, labels)
    model = evaluation.train_pipeline(series, label_map, config, smoothing)
    path = model_io.save_model(model, Path(out) / MODEL_FILE)
    _print_metrics(f"training set ({len(series)} utterances)", evaluation.evaluate_pipeline(model, series, label_map))
    click.echo(f"model written to {path}")


@main.command()
@model_option
@features_option
@labels_option
@out_option
@_fail_on_errors
def evaluate(model_path, features, labels, out):
    """Score a trained model on a labeled corpus; writes OUT/eval_report.{json,csv}."""
    model = model_io.load_model(model_path)
    series, label_map = _load_labeled(features, labels)
    report = evaluation.holdout_report(model, series, label_map)
    _write_report(report, Path(out), "eval_report")
    _print_metrics(f"evaluation ({report.n_utterances} utterances)", report.aggregate)


@main.command("cross-validate")
@features_option
@labels_option
@out_option
@click.option("--folds", type=click.IntRange(min=2), default=5, show_default=True, help="Number of folds.")
@esn_options
@_fail_on_errors
def cross_validate(features, labels, out, folds, **kw):
    """k-fold cross-validation; writes OUT/cv_report.{json,csv}."""
    config, smoothing = _esn_config(kw)
    series, label_map = _load_labeled(features, labels)
    report = evaluation.cross_validate(series, label_map, config, smoothing, k=folds)
    _write_report(report, Path(out), "cv_report")
    click.echo(report.to_csv(), nl=False)


@main.command()
@model_option
@features_option
@out_option
@_fail_on_errors
def predict(model_path, features, out):
    """Predict every utterance in FEATURES; writes OUT/predictions.csv."""
    model = model_io.load_model(model_path)
    manifest = data_io.build_manifest(features)
    if not manifest.entries:
        raise ValueError(f"no utterances found in {features}")
    series = [data_io.load_utterance(e.path) for e in manifest.entries]
    pred = evaluation.predict_corpus(model, series)
    buf = io.StringIO()
    buf.write("id,arousal,valence\n")
    for s, (a, v) in zip(series, pred):
        buf.write(f"{s.id},{data_io.format_float(a)},{data_io.format_float(v)}\n")
    path = Path(out) / "predictions.csv"
    data_io.atomic_write_text(path, buf.getvalue())
    click.echo(f"{len(series)} predictions written to {path}")


@main.command()
@out_option
@config_option
@click.option("--n-utterances", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--min-frames", type=click.IntRange(min=1), default=60, show_default=True)
@click.option("--max-frames", type=click.IntRange(min=1), default=120, show_default=True)
@click.option("--noise", type=click.FloatRange(min=0), default=0.05, show_default=True,
              help="Std of per-frame Gaussian noise before squashing.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@_fail_on_errors
def synth(out, n_utterances, min_frames, max_frames, noise, seed):
    """Write a synthetic corpus as OUT/features/*.csv and OUT/labels.csv."""
    series, labels = data_io.generate_synthetic_corpus(n_utterances, (min_frames, max_frames), seed, noise)
    feat_dir, labels_path = data_io.write_corpus(series, labels, out)
    click.echo(f"{len(series)} utterances written to {feat_dir}; labels in {labels_path}")


if __name__ == "__main__":
    main()

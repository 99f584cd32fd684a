"""Training, evaluation and k-fold cross-validation of the full pipeline."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import esn
from .data_io import N_CHANNELS, LabelRecord, UtteranceSeries, format_float
from .metrics import MetricPair, metric_pair
from .preprocessing import (
    NormalizationModel,
    SmoothingConfig,
    fit_normalization,
    preprocess,
)

TARGETS = ("arousal", "valence")
REPORT_FORMAT = "esn-affect-report/1"


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: Mapping[str, int]

    def ids_in(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.fold_of.items() if f == fold)

    def sizes(self) -> list[int]:
        return [len(self.ids_in(f)) for f in range(self.k)]


def kfold_split(ids: Sequence[str], k: int, seed: int = 0) -> FoldAssignment:
    """Shuffle (sorted) ids with ``seed`` and deal them round-robin into ``k`` folds."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    ordered = sorted(ids)
    if len(set(ordered)) != len(ordered):
        raise ValueError("ids must be unique")
    if len(ordered) < k:
        raise ValueError(f"cannot split {len(ordered)} utterances into {k} folds")
    perm = np.random.default_rng(seed).permutation(len(ordered))
    return FoldAssignment(k, {ordered[j]: i % k for i, j in enumerate(perm)})


@dataclass(frozen=True, eq=False)
class TrainedModel:
    reservoir: esn.Reservoir
    normalization: NormalizationModel
    smoothing: SmoothingConfig
    readout: esn.ReadoutWeights

    @property
    def config(self) -> esn.EsnConfig:
        return self.reservoir.config


def effective_washout(washout: int, frames: int) -> int:
    return min(washout, frames - 1)


def embed(
    reservoir: esn.Reservoir,
    normalization: NormalizationModel,
    smoothing: SmoothingConfig,
    series: UtteranceSeries,
) -> np.ndarray:
    """Preprocess one utterance and reduce its reservoir response to an embedding."""
    u = preprocess(normalization, smoothing, series).values
    washout = effective_washout(reservoir.config.washout, u.shape[0])
    states = esn.run_sequence(reservoir, u, washout)
    return esn.mean_state_embedding(states, u[washout:].mean(axis=0))


def _label_matrix(series: Sequence[UtteranceSeries], labels: Mapping[str, LabelRecord]) -> np.ndarray:
    missing = [s.id for s in series if s.id not in labels]
    if missing:
        raise KeyError(f"no label for utterance(s): {', '.join(missing[:5])}")
    return np.array([[labels[s.id].arousal, labels[s.id].valence] for s in series])


def _as_label_map(labels) -> dict[str, LabelRecord]:
    if isinstance(labels, Mapping):
        return dict(labels)
    return {r.id: r for r in labels}


def train_pipeline(
    train: Sequence[UtteranceSeries],
    labels,
    config: esn.EsnConfig,
    smoothing: SmoothingConfig,
) -> TrainedModel:
    """Fit normalization, build the reservoir and train the joint ridge readout."""
    if not train:
        raise ValueError("training set is empty")
    labels = _as_label_map(labels)
    y = _label_matrix(train, labels)
    normalization = fit_normalization(train)
    reservoir = esn.build_reservoir(config, N_CHANNELS)
    x = np.array([embed(reservoir, normalization, smoothing, s) for s in train])
    readout = esn.fit_ridge(x, y, config.ridge_beta)
    return TrainedModel(reservoir, normalization, smoothing, readout)


def predict_corpus(model: TrainedModel, series: Sequence[UtteranceSeries]) -> np.ndarray:
    """Predictions, one ``(arousal, valence)`` row per utterance."""
    x = np.array([embed(model.reservoir, model.normalization, model.smoothing, s) for s in series])
    return esn.predict(model.readout, x)


def score(pred: np.ndarray, truth: np.ndarray) -> dict[str, MetricPair]:
    return {name: metric_pair(pred[:, j], truth[:, j]) for j, name in enumerate(TARGETS)}


def evaluate_pipeline(model: TrainedModel, eval_set: Sequence[UtteranceSeries], labels) -> dict[str, MetricPair]:
    """CCC and MSE per target over the pooled predictions on ``eval_set``."""
    if not eval_set:
        raise ValueError("evaluation set is empty")
    truth = _label_matrix(eval_set, _as_label_map(labels))
    return score(predict_corpus(model, eval_set), truth)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    n_utterances: int
    metrics: dict[str, MetricPair]
    validation_ids: tuple[str, ...]
    normalization_fitted_on: tuple[str, ...]


@dataclass(frozen=True)
class EvalReport:
    """Per-fold and pooled metrics plus everything needed to audit the run.

    For a single held-out evaluation ``per_fold`` is empty and ``aggregate``
    carries the metrics.
    """

    per_fold: tuple[FoldResult, ...]
    aggregate: dict[str, MetricPair]
    n_utterances: int
    config_snapshot: dict
    predictions: tuple[tuple[str, float, float], ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        def m(metrics):
            return {
                f"{kind}_{t}": getattr(metrics[t], kind)
                for t in TARGETS
                for kind in ("ccc", "mse")
            }

        return {
            "format": REPORT_FORMAT,
            "config": self.config_snapshot,
            "folds": [
                {
                    "fold": f.fold,
                    "n_utterances": f.n_utterances,
                    **m(f.metrics),
                    "validation_ids": list(f.validation_ids),
                    "normalization_fitted_on": list(f.normalization_fitted_on),
                }
                for f in self.per_fold
            ],
            "aggregate": {"n_utterances": self.n_utterances, **m(self.aggregate)},
            "predictions": [
                {"id": i, "arousal": a, "valence": v} for i, a, v in self.predictions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """One row per fold plus a final ``aggregate`` row."""
        cols = ["fold", "n_utterances", "ccc_arousal", "ccc_valence", "mse_arousal", "mse_valence"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)

        def row(name, n, metrics):
            return [name, n] + [
                format_float(getattr(metrics[t], kind)) for kind in ("ccc", "mse") for t in TARGETS
            ]

        for f in self.per_fold:
            w.writerow(row(f.fold, f.n_utterances, f.metrics))
        w.writerow(row("aggregate", self.n_utterances, self.aggregate))
        return buf.getvalue()


def config_snapshot(config: esn.EsnConfig, smoothing: SmoothingConfig, **extra) -> dict:
    return {"esn": config.to_dict(), "smoothing_window": smoothing.window, **extra}


def cross_validate(
    corpus: Sequence[UtteranceSeries],
    labels,
    config: esn.EsnConfig,
    smoothing: SmoothingConfig,
    k: int = 5,
    seed: int | None = None,
) -> EvalReport:
    """k-fold CV with per-fold normalization; the reservoir seed is shared by all folds.

    ``seed`` drives the fold assignment and defaults to ``config.seed``.
    Aggregate metrics are computed on the pooled out-of-fold predictions.
    """
    labels = _as_label_map(labels)
    split_seed = config.seed if seed is None else seed
    by_id = {s.id: s for s in corpus}
    if len(by_id) != len(corpus):
        raise ValueError("corpus ids must be unique")
    folds = kfold_split(list(by_id), k, split_seed)

    results = []
    pooled_ids, pooled_pred, pooled_true = [], [], []
    for f in range(k):
        val_ids = folds.ids_in(f)
        val_set = set(val_ids)
        train = [by_id[i] for i in sorted(by_id) if i not in val_set]
        held = [by_id[i] for i in val_ids]
        model = train_pipeline(train, labels, config, smoothing)
        pred = predict_corpus(model, held)
        truth = _label_matrix(held, labels)
        results.append(
            FoldResult(
                fold=f,
                n_utterances=len(held),
                metrics=score(pred, truth),
                validation_ids=tuple(val_ids),
                normalization_fitted_on=model.normalization.fitted_on,
            )
        )
        pooled_ids += val_ids
        pooled_pred.append(pred)
        pooled_true.append(truth)

    pred = np.vstack(pooled_pred)
    truth = np.vstack(pooled_true)
    return EvalReport(
        per_fold=tuple(results),
        aggregate=score(pred, truth),
        n_utterances=len(pooled_ids),
        config_snapshot=config_snapshot(config, smoothing, folds=k, split_seed=int(split_seed)),
        predictions=tuple((i, float(a), float(v)) for i, (a, v) in zip(pooled_ids, pred)),
    )


def holdout_report(
    model: TrainedModel,
    eval_set: Sequence[UtteranceSeries],
    labels,
) -> EvalReport:
    """Report for a trained model scored on one labeled set."""
    if not eval_set:
        raise ValueError("evaluation set is empty")
    labels = _as_label_map(labels)
    pred = predict_corpus(model, eval_set)
    truth = _label_matrix(eval_set, labels)
    return EvalReport(
        per_fold=(),
        aggregate=score(pred, truth),
        n_utterances=len(eval_set),
        config_snapshot=config_snapshot(
            model.config,
            model.smoothing,
            normalization_fitted_on=list(model.normalization.fitted_on),
        ),
        predictions=tuple((s.id, float(a), float(v)) for s, (a, v) in zip(eval_set, pred)),
    )

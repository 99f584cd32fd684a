"""Echo state network regression of utterance-level arousal and valence from facial action unit streams."""

from .data_io import CHANNELS, LabelRecord, UtteranceSeries, generate_synthetic_corpus, load_labels, load_utterance
from .esn import EsnConfig, ReadoutWeights, Reservoir, StateSequence, build_reservoir, fit_ridge, predict, run_sequence
from .evaluation import EvalReport, TrainedModel, cross_validate, evaluate_pipeline, kfold_split, train_pipeline
from .metrics import MetricPair, ccc, mse
from .preprocessing import NormalizationModel, SmoothingConfig

__all__ = [
    "CHANNELS", "LabelRecord", "UtteranceSeries", "generate_synthetic_corpus", "load_labels", "load_utterance",
    "EsnConfig", "ReadoutWeights", "Reservoir", "StateSequence", "build_reservoir", "fit_ridge", "predict",
    "run_sequence", "EvalReport", "TrainedModel", "cross_validate", "evaluate_pipeline", "kfold_split",
    "train_pipeline", "MetricPair", "ccc", "mse", "NormalizationModel", "SmoothingConfig",
]

"""Model file: JSON holding normalization stats, reservoir config and readout.

Reservoir matrices are not stored; they are rebuilt from the seed and config
and checked against a stored SHA-256 digest.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from . import esn
from .data_io import N_CHANNELS, atomic_write_text
from .evaluation import TrainedModel
from .preprocessing import NormalizationModel, SmoothingConfig

MODEL_FORMAT = "esn-affect-model/1"


class ModelFormatError(ValueError):
    pass


def model_to_json(model: TrainedModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "esn": model.config.to_dict(),
        "input_dim": model.reservoir.input_dim,
        "reservoir_sha256": model.reservoir.checksum(),
        "smoothing_window": model.smoothing.window,
        "normalization": {
            "min": model.normalization.per_channel_min.tolist(),
            "max": model.normalization.per_channel_max.tolist(),
            "fitted_on": list(model.normalization.fitted_on),
        },
        "readout": model.readout.w_out.tolist(),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_model(model: TrainedModel, path: str | os.PathLike) -> Path:
    atomic_write_text(path, model_to_json(model))
    return Path(path)


def load_model(path: str | os.PathLike) -> TrainedModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: not a valid model file ({e})") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: unrecognized model format (expected {MODEL_FORMAT})")
    try:
        config = esn.EsnConfig.from_dict(doc["esn"])
        input_dim = int(doc["input_dim"])
        norm = doc["normalization"]
        normalization = NormalizationModel(norm["min"], norm["max"], tuple(norm["fitted_on"]))
        smoothing = SmoothingConfig(int(doc["smoothing_window"]))
        readout = esn.ReadoutWeights(np.array(doc["readout"], dtype=np.float64))
        digest = doc["reservoir_sha256"]
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: malformed model field ({e!r})") from None

    if input_dim != N_CHANNELS:
        raise ModelFormatError(f"{path}: model input_dim is {input_dim}, corpus schema has {N_CHANNELS} channels")
    if normalization.per_channel_min.shape != (input_dim,):
        raise ModelFormatError(f"{path}: normalization has {normalization.per_channel_min.size} channels, expected {input_dim}")
    expected_cols = config.reservoir_size + input_dim + 1
    if readout.embedding_dim != expected_cols or readout.output_dim != 2:
        raise ModelFormatError(
            f"{path}: readout shape {readout.w_out.shape}, expected (2, {expected_cols})"
        )
    reservoir = esn.build_reservoir(config, input_dim)
    if reservoir.checksum() != digest:
        raise ModelFormatError(f"{path}: rebuilt reservoir does not match stored checksum")
    return TrainedModel(reservoir, normalization, smoothing, readout)

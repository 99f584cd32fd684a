"""Per-channel min-max normalization and trailing moving-average smoothing.

The pipeline applies normalization first, then smoothing, so smoothed data
stays inside [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_io import N_CHANNELS, UtteranceSeries


@dataclass(frozen=True, eq=False)
class NormalizationModel:
    per_channel_min: np.ndarray
    per_channel_max: np.ndarray
    fitted_on: tuple[str, ...] = ()

    def __post_init__(self):
        lo = np.array(self.per_channel_min, dtype=np.float64)
        hi = np.array(self.per_channel_max, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("per-channel min/max must be 1-D vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("per_channel_min exceeds per_channel_max for some channel")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "per_channel_min", lo)
        object.__setattr__(self, "per_channel_max", hi)
        object.__setattr__(self, "fitted_on", tuple(self.fitted_on))


@dataclass(frozen=True)
class SmoothingConfig:
    window: int = 15

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise ValueError(f"smoothing window must be a positive integer, got {self.window!r}")


def fit_normalization(training_series: Sequence[UtteranceSeries]) -> NormalizationModel:
    """Pooled per-channel min and max over every frame of every training utterance."""
    if not training_series:
        raise ValueError("cannot fit normalization on an empty list")
    for s in training_series:
        if s.values.shape[1] != N_CHANNELS:
            raise ValueError(f"utterance {s.id!r} has {s.values.shape[1]} channels, expected {N_CHANNELS}")
    lo = np.min([s.values.min(axis=0) for s in training_series], axis=0)
    hi = np.max([s.values.max(axis=0) for s in training_series], axis=0)
    return NormalizationModel(lo, hi, tuple(s.id for s in training_series))


def normalize_values(model: NormalizationModel, values: np.ndarray) -> np.ndarray:
    lo, hi = model.per_channel_min, model.per_channel_max
    span = hi - lo
    constant = span == 0
    with np.errstate(over="ignore"):  # subnormal spans overflow to inf; the clip absorbs it
        scaled = (values - lo) / np.where(constant, 1.0, span)
    scaled[:, constant] = 0.0
    return np.clip(scaled, 0.0, 1.0)


def apply_normalization(model: NormalizationModel, series: UtteranceSeries) -> UtteranceSeries:
    """Map each channel to [0, 1] with the fitted range; constant channels become 0."""
    if series.values.shape[1] != model.per_channel_min.shape[0]:
        raise ValueError(
            f"utterance {series.id!r} has {series.values.shape[1]} channels, "
            f"model expects {model.per_channel_min.shape[0]}"
        )
    return UtteranceSeries(series.id, normalize_values(model, series.values), series.frame_rate)


def smooth_values(values: np.ndarray, window: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if window == 1:
        return values.copy()
    frames = values.shape[0]
    total = np.zeros_like(values)
    count = np.zeros((frames, 1))
    for lag in range(min(window, frames)):
        total[lag:] += values[: frames - lag]
        count[lag:] += 1
    out = total / count
    # keep the mean inside the window's range despite rounding
    return np.clip(out, values.min(axis=0), values.max(axis=0))


def moving_average(series: UtteranceSeries, cfg: SmoothingConfig) -> UtteranceSeries:
    """Trailing mean over the last ``cfg.window`` frames, shorter at the start."""
    return UtteranceSeries(series.id, smooth_values(series.values, cfg.window), series.frame_rate)


def preprocess(model: NormalizationModel, cfg: SmoothingConfig, series: UtteranceSeries) -> UtteranceSeries:
    return moving_average(apply_normalization(model, series), cfg)

"""Agreement metrics: Lin's concordance correlation coefficient and MSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricPair:
    ccc: float
    mse: float

    def __post_init__(self):
        if not -1.0 <= self.ccc <= 1.0:
            raise ValueError(f"ccc out of range: {self.ccc}")
        if not self.mse >= 0.0:
            raise ValueError(f"mse must be non-negative: {self.mse}")


def _pair(pred, truth, min_len):
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    if p.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {p.size}")
    return p, t


def ccc(pred, truth) -> float:
    """Concordance correlation coefficient with population (1/N) moments.

    Degenerate inputs: two identical constant vectors give 1.0; two
    constant vectors that differ give 0.0; a constant vector against a
    varying one gives 0.0.
    """
    p, t = _pair(pred, truth, 2)
    p_const = bool(np.all(p == p[0]))
    t_const = bool(np.all(t == t[0]))
    if p_const and t_const:
        return 1.0 if p[0] == t[0] else 0.0
    if p_const or t_const:
        # zero covariance exactly; a rounded mean would leave ~1e-32 residue
        return 0.0
    mp, mt = p.mean(), t.mean()
    dp, dt = p - mp, t - mt
    cov = np.mean(dp * dt)
    denom = np.mean(dp * dp) + np.mean(dt * dt) + (mp - mt) ** 2
    # rounding can nudge |r| a hair past 1 for perfectly (anti-)concordant inputs
    return float(np.clip(2.0 * cov / denom, -1.0, 1.0))


def mse(pred, truth) -> float:
    p, t = _pair(pred, truth, 1)
    d = p - t
    return float(np.mean(d * d))


def metric_pair(pred, truth) -> MetricPair:
    return MetricPair(ccc=ccc(pred, truth), mse=mse(pred, truth))

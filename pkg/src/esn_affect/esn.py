"""Echo state network core: reservoir construction, state harvesting, ridge readout.

The state update is the leaky-integrator form

    x(n+1) = (1 - a) * x(n) + a * tanh(W_rec @ x(n) + W_in @ [u(n); 1])

with ``a`` the leak rate. Sequences are mapped to a fixed-size embedding by
averaging post-washout states and appending the mean input and a bias term.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

#: Below this the raw recurrent matrix cannot be rescaled meaningfully.
MIN_RAW_RADIUS = 1e-12

#: Dense eigensolver fallback is only attempted up to this reservoir size.
DENSE_FALLBACK_MAX = 4000


class DegenerateReservoirError(ValueError):
    """Raised when a random recurrent draw has (numerically) zero spectral radius."""


class ConvergenceError(RuntimeError):
    """Raised when power iteration fails to settle within ``max_iter`` sweeps."""


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when an unregularized ridge system is rank-deficient."""


@dataclass(frozen=True)
class EsnConfig:
    """Reservoir and readout hyperparameters.

    The first four defaults (500 units, spectral radius 1.5, ridge 0.1,
    leak 0.85) are the published training setup; the rest fill in choices
    the setup leaves open.
    """

    reservoir_size: int = 500
    spectral_radius: float = 1.5
    ridge_beta: float = 0.1
    leak_rate: float = 0.85
    input_scaling: float = 1.0
    washout: int = 10
    seed: int = 0
    connectivity: float = 0.1

    def __post_init__(self):
        if int(self.reservoir_size) != self.reservoir_size or self.reservoir_size < 1:
            raise ValueError(f"reservoir_size must be a positive integer, got {self.reservoir_size!r}")
        if not self.spectral_radius > 0:
            raise ValueError(f"spectral_radius must be positive, got {self.spectral_radius!r}")
        if not self.ridge_beta >= 0:
            raise ValueError(f"ridge_beta must be non-negative, got {self.ridge_beta!r}")
        if not 0 < self.leak_rate <= 1:
            raise ValueError(f"leak_rate must lie in (0, 1], got {self.leak_rate!r}")
        if not self.input_scaling > 0:
            raise ValueError(f"input_scaling must be positive, got {self.input_scaling!r}")
        if int(self.washout) != self.washout or self.washout < 0:
            raise ValueError(f"washout must be a non-negative integer, got {self.washout!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 0 < self.connectivity <= 1:
            raise ValueError(f"connectivity must lie in (0, 1], got {self.connectivity!r}")

    def to_dict(self) -> dict:
        return {
            "reservoir_size": int(self.reservoir_size),
            "spectral_radius": float(self.spectral_radius),
            "ridge_beta": float(self.ridge_beta),
            "leak_rate": float(self.leak_rate),
            "input_scaling": float(self.input_scaling),
            "washout": int(self.washout),
            "seed": int(self.seed),
            "connectivity": float(self.connectivity),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EsnConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Reservoir:
    """Fixed random weights. ``w_in`` carries the bias as its last column."""

    w_in: np.ndarray
    w_rec: np.ndarray
    input_dim: int
    config: EsnConfig

    def __post_init__(self):
        n = self.config.reservoir_size
        if self.w_rec.shape != (n, n):
            raise ValueError(f"w_rec must be {n}x{n}, got {self.w_rec.shape}")
        if self.w_in.shape != (n, self.input_dim + 1):
            raise ValueError(f"w_in must be {n}x{self.input_dim + 1}, got {self.w_in.shape}")
        object.__setattr__(self, "w_in", _frozen(self.w_in))
        object.__setattr__(self, "w_rec", _frozen(self.w_rec))

    @property
    def size(self) -> int:
        return self.config.reservoir_size

    def checksum(self) -> str:
        """SHA-256 over the raw bytes of both weight matrices."""
        h = hashlib.sha256()
        h.update(self.w_in.tobytes())
        h.update(self.w_rec.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class StateSequence:
    states: np.ndarray
    washout_applied: int = 0

    def __len__(self):
        return self.states.shape[0]


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    """Linear map from a state embedding to the targets (rows of ``w_out``)."""

    w_out: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w_out, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"w_out must be 2-D, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("readout weights contain non-finite entries")
        object.__setattr__(self, "w_out", _frozen(w))

    @property
    def output_dim(self) -> int:
        return self.w_out.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.w_out.shape[1]


def estimate_spectral_radius(
    m: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 20000,
    block_size: int = 8,
    seed: int = 0,
) -> float:
    """Largest eigenvalue modulus of ``m`` by block power iteration.

    A block of ``block_size`` vectors (started from a fixed-seed Gaussian
    draw) is repeatedly multiplied by ``m`` and re-orthonormalized; each
    sweep takes the largest Ritz value modulus of the projected matrix.
    The block makes complex-conjugate and other equal-modulus leading
    eigenvalues converge, which defeats a single power vector.

    Stops once successive estimates agree to ``tol`` (relative).

    Raises:
        ConvergenceError: no agreement after ``max_iter`` sweeps.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        raise ValueError("matrix must be non-empty")
    p = min(block_size, n)
    q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, p)))
    prev = None
    for _ in range(max_iter):
        z = m @ q
        ritz = np.linalg.eigvals(q.T @ z)
        est = float(np.max(np.abs(ritz)))
        if prev is not None and abs(est - prev) <= tol * est:
            return est
        if est == 0.0 and prev == 0.0:
            return 0.0
        prev = est
        q, _ = np.linalg.qr(z)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations (last estimate {prev})")


def spectral_radius(m: np.ndarray) -> float:
    """Power-iteration estimate, falling back to a dense eigensolve on non-convergence."""
    try:
        return estimate_spectral_radius(m)
    except ConvergenceError:
        if m.shape[0] > DENSE_FALLBACK_MAX:
            raise
        return float(np.max(np.abs(np.linalg.eigvals(m))))


@lru_cache(maxsize=8)
def build_reservoir(config: EsnConfig, input_dim: int) -> Reservoir:
    """Draw and scale the fixed reservoir weights for ``config``.

    Recurrent weights are uniform in [-1, 1] on a Bernoulli(connectivity)
    mask, then rescaled to ``config.spectral_radius``. Input weights
    (including the bias column) are uniform in ±input_scaling. Results are
    memoized; the returned object is read-only.
    """
    if int(input_dim) != input_dim or input_dim < 1:
        raise ValueError(f"input_dim must be a positive integer, got {input_dim!r}")
    n = config.reservoir_size
    rng = np.random.default_rng(config.seed)
    mask = rng.random((n, n)) < config.connectivity
    w_rec = rng.uniform(-1.0, 1.0, size=(n, n)) * mask
    w_in = rng.uniform(-config.input_scaling, config.input_scaling, size=(n, input_dim + 1))

    raw = spectral_radius(w_rec)
    if raw < MIN_RAW_RADIUS:
        raise DegenerateReservoirError(
            f"raw recurrent matrix has spectral radius {raw:.3g} (seed={config.seed}, "
            f"size={n}, connectivity={config.connectivity}); cannot rescale"
        )
    w_rec = w_rec * (config.spectral_radius / raw)
    return Reservoir(w_in=w_in, w_rec=w_rec, input_dim=int(input_dim), config=config)


def step(r: Reservoir, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One leaky-integrator update of state ``x`` driven by input ``u``."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.shape != (r.size,):
        raise ValueError(f"state must have shape ({r.size},), got {x.shape}")
    if u.shape != (r.input_dim,):
        raise ValueError(f"input must have shape ({r.input_dim},), got {u.shape}")
    return _update(r, x, np.append(u, 1.0))


def _update(r: Reservoir, x: np.ndarray, u_aug: np.ndarray) -> np.ndarray:
    a = r.config.leak_rate
    return (1.0 - a) * x + a * np.tanh(r.w_rec @ x + r.w_in @ u_aug)


def run_sequence(
    r: Reservoir,
    series: np.ndarray,
    washout: int,
    x0: np.ndarray | None = None,
) -> StateSequence:
    """Drive the reservoir with ``series`` (frames x input_dim) from rest.

    ``x0`` overrides the zero initial state; it exists for testing the
    fading-memory property and is not used by the pipeline.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2 or series.shape[1] != r.input_dim:
        raise ValueError(f"series must have shape (frames, {r.input_dim}), got {series.shape}")
    frames = series.shape[0]
    if washout < 0:
        raise ValueError("washout must be non-negative")
    if frames <= washout:
        raise ValueError(f"sequence of {frames} frames is too short for washout {washout}")

    x = np.zeros(r.size) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (r.size,):
        raise ValueError(f"initial state must have shape ({r.size},), got {x.shape}")
    aug = np.hstack([series, np.ones((frames, 1))])
    out = np.empty((frames - washout, r.size))
    for t in range(frames):
        x = _update(r, x, aug[t])
        if t >= washout:
            out[t - washout] = x
    return StateSequence(states=out, washout_applied=int(washout))


def mean_state_embedding(s: StateSequence, u_mean: np.ndarray) -> np.ndarray:
    """``[mean harvested state; u_mean; 1]``."""
    if len(s) == 0:
        raise ValueError("state sequence is empty")
    u_mean = np.asarray(u_mean, dtype=np.float64).ravel()
    return np.concatenate([s.states.mean(axis=0), u_mean, [1.0]])


def fit_ridge(embeddings: np.ndarray, targets: np.ndarray, beta: float) -> ReadoutWeights:
    """Ridge readout ``W = Y^T X (X^T X + beta I)^-1``, every column penalized.

    Solved as least squares on the augmented system ``[X; sqrt(beta) I]``
    so the normal matrix is never formed or inverted.

    Raises:
        SingularSystemError: ``beta == 0`` and ``X`` lacks full column rank.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes: embeddings {x.shape}, targets {y.shape}")
    if x.shape[0] < 1:
        raise ValueError("need at least one training row")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("embeddings and targets must be finite")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")

    d = x.shape[1]
    if beta == 0:
        w, _, rank, _ = np.linalg.lstsq(x, y, rcond=None)
        if rank < d:
            raise SingularSystemError(
                f"embedding matrix has rank {rank} < {d} columns; use beta > 0"
            )
    else:
        xa = np.vstack([x, np.sqrt(beta) * np.eye(d)])
        ya = np.vstack([y, np.zeros((d, y.shape[1]))])
        w, *_ = np.linalg.lstsq(xa, ya, rcond=None)
    return ReadoutWeights(w_out=w.T)


def predict(w: ReadoutWeights, embedding: np.ndarray) -> np.ndarray:
    """Apply the readout to one embedding, or to each row of a 2-D batch."""
    e = np.asarray(embedding, dtype=np.float64)
    if e.shape[-1] != w.embedding_dim:
        raise ValueError(f"embedding has length {e.shape[-1]}, readout expects {w.embedding_dim}")
    if e.ndim == 1:
        return w.w_out @ e
    if e.ndim == 2:
        return e @ w.w_out.T
    raise ValueError(f"embedding must be 1-D or 2-D, got {e.ndim}-D")

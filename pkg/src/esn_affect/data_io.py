"""Corpus file formats and a synthetic corpus generator.

Feature files are headerless CSV, one row per 1/30 s frame and 23 columns in
``CHANNELS`` order. Labels live in a single CSV with header
``id,arousal,valence``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ACTION_UNITS = (
    "AU1", "AU2", "AU4", "AU5", "AU6", "AU7", "AU9", "AU10", "AU11", "AU12",
    "AU14", "AU15", "AU17", "AU18", "AU20", "AU23", "AU24", "AU25", "AU26", "AU28",
)
EVIDENCE = ("neutral", "positive", "negative")
CHANNELS = ACTION_UNITS + EVIDENCE
N_CHANNELS = len(CHANNELS)
FRAME_RATE = 30

LABEL_HEADER = ("id", "arousal", "valence")


class SchemaError(ValueError):
    """A corpus file does not match its pinned format."""


@dataclass(frozen=True, eq=False)
class UtteranceSeries:
    id: str
    values: np.ndarray
    frame_rate: int = FRAME_RATE

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != N_CHANNELS:
            raise SchemaError(f"utterance {self.id!r}: expected frames x {N_CHANNELS}, got shape {v.shape}")
        if v.shape[0] < 1:
            raise SchemaError(f"utterance {self.id!r}: no frames")
        if not np.all(np.isfinite(v)):
            raise SchemaError(f"utterance {self.id!r}: non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LabelRecord:
    id: str
    arousal: float
    valence: float


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: Path
    has_label: bool


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    labels: dict = field(default_factory=dict, compare=False)

    def labeled(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.has_label]

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def load_utterance(path: str | os.PathLike) -> UtteranceSeries:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != N_CHANNELS:
                raise SchemaError(f"{path}: row {lineno} has {len(row)} columns, expected {N_CHANNELS}")
            vals = []
            for col, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise SchemaError(f"{path}: row {lineno}, column {col}: non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise SchemaError(f"{path}: row {lineno}, column {col}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise SchemaError(f"{path}: empty feature file")
    return UtteranceSeries(id=path.stem, values=np.array(rows))


def write_utterance(series: UtteranceSeries, directory: str | os.PathLike) -> Path:
    path = Path(directory) / f"{series.id}.csv"
    buf = io.StringIO()
    for row in series.values:
        buf.write(",".join(format_float(v) for v in row))
        buf.write("\n")
    atomic_write_text(path, buf.getvalue())
    return path


def load_labels(path: str | os.PathLike) -> list[LabelRecord]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing header, expected {','.join(LABEL_HEADER)}")
        header = [h.strip() for h in header]
        missing = [c for c in LABEL_HEADER if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in LABEL_HEADER]
        records: list[LabelRecord] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise SchemaError(f"{path}: row {lineno} has {len(row)} columns, expected {len(header)}")
            uid = row[idx[0]].strip()
            if uid in seen:
                raise SchemaError(f"{path}: duplicate id {uid!r} at row {lineno}")
            seen.add(uid)
            vals = []
            for name, i in zip(LABEL_HEADER[1:], idx[1:]):
                try:
                    v = float(row[i])
                except ValueError:
                    raise SchemaError(f"{path}: row {lineno}, column {name}: non-numeric value {row[i]!r}") from None
                if not math.isfinite(v):
                    raise SchemaError(f"{path}: row {lineno}, column {name}: non-finite value")
                vals.append(v)
            records.append(LabelRecord(uid, *vals))
    return records


def write_labels(records: Iterable[LabelRecord], path: str | os.PathLike) -> Path:
    buf = io.StringIO()
    buf.write(",".join(LABEL_HEADER) + "\n")
    for r in records:
        buf.write(f"{r.id},{format_float(r.arousal)},{format_float(r.valence)}\n")
    atomic_write_text(path, buf.getvalue())
    return Path(path)


def build_manifest(features_dir: str | os.PathLike, labels_path: str | os.PathLike | None = None) -> Manifest:
    """Index ``*.csv`` under ``features_dir`` (sorted by id), joined with labels.

    Every labeled id must resolve to a feature file.
    """
    features_dir = Path(features_dir)
    if not features_dir.is_dir():
        raise FileNotFoundError(f"features directory not found: {features_dir}")
    labels: dict[str, LabelRecord] = {}
    if labels_path is not None:
        if not Path(labels_path).is_file():
            raise FileNotFoundError(f"labels file not found: {labels_path}")
        labels = {r.id: r for r in load_labels(labels_path)}
    paths = sorted(features_dir.glob("*.csv"), key=lambda p: p.stem)
    if labels_path is not None:
        # a labels file placed inside the features directory is not an utterance
        paths = [p for p in paths if p.resolve() != Path(labels_path).resolve()]
    entries = tuple(ManifestEntry(p.stem, p, p.stem in labels) for p in paths)
    known = {e.id for e in entries}
    orphans = sorted(set(labels) - known)
    if orphans:
        raise SchemaError(f"labeled id(s) without a feature file in {features_dir}: {', '.join(orphans[:5])}")
    return Manifest(entries=entries, labels=labels)


def synthetic_targets(values: np.ndarray) -> tuple[float, float]:
    """Arousal and valence implied by a synthetic utterance's features.

    Arousal is the mean of the first five channels (AU1..AU5 order slots)
    over all frames; with features in [0, 1] it already lies in [0, 1].
    Valence is mean positive evidence minus mean negative evidence.
    """
    v = np.asarray(values, dtype=np.float64)
    arousal = float(np.mean(v[:, 0:5]))
    valence = float(np.mean(v[:, 20]) - np.mean(v[:, 22]))
    return arousal, valence


def generate_synthetic_corpus(
    n_utterances: int,
    frames_range: tuple[int, int] = (60, 120),
    seed: int = 0,
    noise_sigma: float = 0.05,
) -> tuple[list[UtteranceSeries], list[LabelRecord]]:
    """Random smooth multichannel utterances with labels that are functionals of them.

    Each channel is a logistic-squashed sum of a random baseline, three
    random-phase sinusoids (0.1 to 2 Hz) and Gaussian noise of std
    ``noise_sigma``. Labels come from :func:`synthetic_targets`.
    """
    lo, hi = frames_range
    if n_utterances < 1:
        raise ValueError("n_utterances must be >= 1")
    if not 1 <= lo <= hi:
        raise ValueError(f"frames_range must satisfy 1 <= min <= max, got {frames_range}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")

    rng = np.random.default_rng(seed)
    width = len(str(n_utterances - 1))
    series, labels = [], []
    for i in range(n_utterances):
        frames = int(rng.integers(lo, hi + 1))
        t = np.arange(frames)[:, None, None] / FRAME_RATE
        baseline = rng.uniform(-2.0, 2.0, size=N_CHANNELS)
        amp = rng.uniform(0.0, 1.0, size=(1, N_CHANNELS, 3))
        freq = rng.uniform(0.1, 2.0, size=(1, N_CHANNELS, 3))
        phase = rng.uniform(0.0, 2 * np.pi, size=(1, N_CHANNELS, 3))
        noise = rng.standard_normal((frames, N_CHANNELS))
        raw = baseline + np.sum(amp * np.sin(2 * np.pi * freq * t + phase), axis=2) + noise_sigma * noise
        values = 1.0 / (1.0 + np.exp(-raw))
        uid = f"utt{i:0{max(width, 4)}d}"
        series.append(UtteranceSeries(id=uid, values=values))
        labels.append(LabelRecord(uid, *synthetic_targets(values)))
    return series, labels


def write_corpus(
    series: Sequence[UtteranceSeries],
    labels: Sequence[LabelRecord],
    out_dir: str | os.PathLike,
) -> tuple[Path, Path]:
    """Materialize a corpus as ``<out>/features/<id>.csv`` plus ``<out>/labels.csv``."""
    out_dir = Path(out_dir)
    feat_dir = out_dir / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    for s in series:
        write_utterance(s, feat_dir)
    labels_path = write_labels(labels, out_dir / "labels.csv")
    return feat_dir, labels_path

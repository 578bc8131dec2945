"""Datasets of variable-length multivariate series: ingestion, windowing,
splits, pair construction, and synthetic generation."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import Rng, derive_seed


@dataclass
class TimeSeries:
    """One sequence of fixed-dimension real frames with an optional class label."""

    id: str
    frames: np.ndarray  # (length, dim) float64
    label: int | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValueError(f"series {self.id!r}: frames must be 2-D (length, dim)")
        if self.frames.shape[0] < 1:
            raise ValueError(f"series {self.id!r}: needs at least one frame")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError(f"series {self.id!r}: non-finite values in frames")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


@dataclass
class Dataset:
    """A list of series sharing one frame dimension, with unique ids."""

    series: list[TimeSeries] = field(default_factory=list)

    def __post_init__(self):
        ids = set()
        for s in self.series:
            if s.id in ids:
                raise ValueError(f"duplicate series id {s.id!r}")
            ids.add(s.id)
            if s.dim != self.series[0].dim:
                raise ValueError(
                    f"series {s.id!r} has dim {s.dim}, expected {self.series[0].dim}"
                )

    def __len__(self) -> int:
        return len(self.series)

    def __getitem__(self, i: int) -> TimeSeries:
        return self.series[i]

    def __iter__(self):
        return iter(self.series)

    @property
    def dim(self) -> int:
        if not self.series:
            raise ValueError("empty dataset has no dimension")
        return self.series[0].dim

    @property
    def class_ids(self) -> list[int]:
        return sorted({s.label for s in self.series if s.label is not None})


@dataclass
class PairSet:
    """Similar / dissimilar index pairs over an owning dataset.

    Dissimilar pairs carry a kind: "cross-class" (different labels) or
    "forgery" (genuine paired with a forged version of itself).
    """

    similar: list[tuple[int, int]]
    dissimilar: list[tuple[int, int, str]]


@dataclass
class SplitSpec:
    """How to partition a dataset into train / validation / test.

    within-domain: stratified random split by train_fraction, validation
    carved out of the training portion. out-of-domain: train and test use
    disjoint class sets.
    """

    mode: str  # "within-domain" | "out-of-domain"
    seed: int
    train_fraction: float = 0.7
    validation_fraction: float = 0.1
    train_classes: set[int] | None = None
    test_classes: set[int] | None = None

    def __post_init__(self):
        if self.mode not in ("within-domain", "out-of-domain"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.mode == "out-of-domain":
            if self.train_classes is None or self.test_classes is None:
                raise ValueError("out-of-domain split needs train_classes and test_classes")
            overlap = set(self.train_classes) & set(self.test_classes)
            if overlap:
                raise ValueError(f"train/test classes overlap: {sorted(overlap)}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.mode == "within-domain" and not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must be in (0, 1]")


# ---------------------------------------------------------------------------
# JSON Lines ingestion
# ---------------------------------------------------------------------------

def load_jsonl(path) -> Dataset:
    """Read a dataset from JSON Lines (one object per line: id, label?, frames).

    Errors name the offending line. Values must be finite and every frame in
    a record must have the same length; the dataset dimension is the first
    record's frame length.
    """
    path = Path(path)
    series: list[TimeSeries] = []
    dim = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if "id" not in rec or "frames" not in rec:
                raise ValueError(f"{path}:{lineno}: record needs 'id' and 'frames'")
            frames = rec["frames"]
            if not frames:
                raise ValueError(f"{path}:{lineno}: empty frames")
            lengths = {len(f) for f in frames}
            if len(lengths) != 1:
                raise ValueError(f"{path}:{lineno}: ragged frames {sorted(lengths)}")
            arr = np.asarray(frames, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{path}:{lineno}: non-finite value in frames")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ValueError(
                    f"{path}:{lineno}: frame dim {arr.shape[1]} != dataset dim {dim}"
                )
            label = rec.get("label")
            if label is not None and not isinstance(label, int):
                raise ValueError(f"{path}:{lineno}: label must be an integer")
            series.append(TimeSeries(id=str(rec["id"]), frames=arr, label=label))
    if not series:
        raise ValueError(f"{path}: empty dataset file")
    return Dataset(series)


def save_jsonl(dataset: Dataset, path) -> None:
    """Write a dataset as JSON Lines; floats keep full round-trip precision."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in dataset:
            rec: dict = {"id": s.id}
            if s.label is not None:
                rec["label"] = int(s.label)
            rec["frames"] = [[float(v) for v in row] for row in s.frames]
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

def window(series: TimeSeries, w: int) -> TimeSeries:
    """Sliding window with stride 1: frame t becomes the concatenation of raw
    frames t..t+w-1, so length shrinks to T-w+1 and dim grows to dim*w."""
    if w < 1:
        raise ValueError("window size must be >= 1")
    if series.length < w:
        raise ValueError(
            f"series {series.id!r} has length {series.length} < window {w}"
        )
    if w == 1:
        return series
    stacked = np.hstack([series.frames[i : series.length - w + 1 + i] for i in range(w)])
    return TimeSeries(id=series.id, frames=stacked, label=series.label)


def window_dataset(dataset: Dataset, w: int) -> Dataset:
    return Dataset([window(s, w) for s in dataset])


def zscore_dataset(dataset: Dataset) -> Dataset:
    """Standardize each dimension using mean/std pooled over all frames.

    Off by default everywhere; opt in via the CLI flag.
    """
    stacked = np.vstack([s.frames for s in dataset])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    std[std < 1e-12] = 1.0
    return Dataset(
        [TimeSeries(id=s.id, frames=(s.frames - mean) / std, label=s.label) for s in dataset]
    )


# ---------------------------------------------------------------------------
# Splits and pairs
# ---------------------------------------------------------------------------

def _stratified_carve(indices_by_class, fraction, rng):
    """Split each class's index list into (kept, carved) with carved ~ fraction."""
    kept, carved = [], []
    for label in sorted(indices_by_class):
        idx = list(indices_by_class[label])
        rng.shuffle(idx)
        n_carved = int(round(fraction * len(idx)))
        carved.extend(idx[:n_carved])
        kept.extend(idx[n_carved:])
    return sorted(kept), sorted(carved)


def make_split(dataset: Dataset, spec: SplitSpec):
    """Partition into (train, validation, test) datasets as ``spec`` describes."""
    by_class: dict[int, list[int]] = {}
    for i, s in enumerate(dataset):
        if s.label is None:
            raise ValueError(f"series {s.id!r} is unlabeled; splits need labels")
        by_class.setdefault(s.label, []).append(i)

    rng = Rng(derive_seed(spec.seed, "split"))
    if spec.mode == "out-of-domain":
        for c in sorted(set(spec.train_classes) | set(spec.test_classes)):
            if c not in by_class:
                raise ValueError(f"requested class {c} absent from dataset")
        train_pool = {c: by_class[c] for c in spec.train_classes}
        train_idx, val_idx = _stratified_carve(train_pool, spec.validation_fraction, rng)
        test_idx = sorted(i for c in spec.test_classes for i in by_class[c])
    else:
        test_pool, train_pool = {}, {}
        for label in sorted(by_class):
            idx = list(by_class[label])
            rng.shuffle(idx)
            n_train = int(round(spec.train_fraction * len(idx)))
            train_pool[label] = idx[:n_train]
            test_pool[label] = idx[n_train:]
        train_idx, val_idx = _stratified_carve(train_pool, spec.validation_fraction, rng)
        test_idx = sorted(i for idx in test_pool.values() for i in idx)

    pick = lambda idx: Dataset([dataset[i] for i in idx])
    train, val, test = pick(train_idx), pick(val_idx), pick(test_idx)
    if spec.mode == "out-of-domain":
        assert not (set(train.class_ids) | set(val.class_ids)) & set(test.class_ids)
    return train, val, test


def build_pairs(dataset: Dataset, forgery_map: dict[str, list[str]] | None = None) -> PairSet:
    """All same-label pairs as similar; dissimilar pairs are either all
    cross-class pairs or, when a forgery map is given, genuine-forgery pairs
    only (forged series are excluded from the similar set)."""
    labels = []
    for s in dataset:
        if s.label is None:
            raise ValueError(f"series {s.id!r} is unlabeled; pairs need labels")
        labels.append(s.label)

    index_of = {s.id: i for i, s in enumerate(dataset)}
    forged_ids: set[str] = set()
    if forgery_map is not None:
        for genuine, forged in forgery_map.items():
            if genuine not in index_of:
                raise ValueError(f"forgery map references unknown id {genuine!r}")
            for f in forged:
                if f not in index_of:
                    raise ValueError(f"forgery map references unknown id {f!r}")
                forged_ids.add(f)

    genuine_idx = [i for i, s in enumerate(dataset) if s.id not in forged_ids]
    similar = [
        (i, j)
        for a, i in enumerate(genuine_idx)
        for j in genuine_idx[a + 1 :]
        if labels[i] == labels[j]
    ]

    if forgery_map is None:
        n = len(dataset)
        dissimilar = [
            (i, j, "cross-class")
            for i in range(n)
            for j in range(i + 1, n)
            if labels[i] != labels[j]
        ]
    else:
        dissimilar = [
            (index_of[genuine], index_of[forged], "forgery")
            for genuine in sorted(forgery_map)
            for forged in forgery_map[genuine]
        ]

    if not dissimilar:
        warnings.warn("pair set has no dissimilar pairs (single class?)", stacklevel=2)
    return PairSet(similar=similar, dissimilar=dissimilar)


def sample_pair_batch(pairs: PairSet, rng: Rng, batch: int) -> list[tuple[int, int, bool]]:
    """Half similar, half dissimilar, sampled uniformly with replacement."""
    if batch < 2 or batch % 2 != 0:
        raise ValueError("batch size must be even and >= 2")
    if not pairs.similar:
        raise ValueError("cannot sample: similar pair set is empty")
    if not pairs.dissimilar:
        raise ValueError("cannot sample: dissimilar pair set is empty")
    half = batch // 2
    out: list[tuple[int, int, bool]] = []
    for k in rng.integers(len(pairs.similar), size=half):
        i, j = pairs.similar[int(k)]
        out.append((i, j, True))
    for k in rng.integers(len(pairs.dissimilar), size=half):
        i, j, _ = pairs.dissimilar[int(k)]
        out.append((i, j, False))
    return out


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

def _sinusoid_template(rng: Rng, dim: int, amplitude: float = 1.0):
    """Per-dimension sum of 2-3 random sinusoids over the unit interval."""
    parts = []
    for _ in range(dim):
        k = 2 + rng.integers(2)  # 2 or 3 components
        amps = rng.uniform(0.5, 1.0, size=k) * amplitude
        freqs = rng.uniform(0.5, 2.5, size=k)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=k)
        parts.append((amps, freqs, phases))

    def evaluate(u: np.ndarray) -> np.ndarray:
        cols = []
        for amps, freqs, phases in parts:
            grid = 2.0 * np.pi * np.outer(u, freqs) + phases
            cols.append(np.sin(grid) @ amps)
        return np.column_stack(cols)

    return evaluate


def _time_grid(length: int) -> np.ndarray:
    if length == 1:
        return np.zeros(1)
    return np.arange(length, dtype=np.float64) / (length - 1)


def _check_len_range(len_range):
    lo, hi = int(len_range[0]), int(len_range[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid length range [{lo}, {hi}]")
    return lo, hi


def synth_generate(
    n_classes: int,
    per_class: int,
    dim: int,
    len_range: tuple[int, int],
    noise: float,
    seed: int,
) -> Dataset:
    """Smooth per-class sinusoid templates, resampled to random lengths with
    additive Gaussian noise. Deterministic in the seed."""
    if n_classes < 1 or per_class < 1 or dim < 1:
        raise ValueError("counts must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    lo, hi = _check_len_range(len_range)

    root = Rng(seed)
    tpl_rng = root.spawn("templates")
    templates = [_sinusoid_template(tpl_rng, dim) for _ in range(n_classes)]
    sample_rng = root.spawn("samples")

    series = []
    for c in range(n_classes):
        for k in range(per_class):
            length = lo + sample_rng.integers(hi - lo + 1)
            values = templates[c](_time_grid(length))
            values = values + noise * sample_rng.normal(size=(length, dim))
            series.append(TimeSeries(id=f"c{c}-s{k}", frames=values, label=c))
    return Dataset(series)


def synth_reversal(
    per_class: int,
    dim: int,
    len_range: tuple[int, int],
    noise: float,
    seed: int,
) -> Dataset:
    """Two classes sharing identical frame multisets: class 1 is class 0
    played backwards. Only temporal order separates them, so order-blind
    scorers are at chance here."""
    if per_class < 1 or dim < 1:
        raise ValueError("counts must be >= 1")
    lo, hi = _check_len_range(len_range)

    root = Rng(seed)
    template = _sinusoid_template(root.spawn("template"), dim)
    sample_rng = root.spawn("samples")

    series = []
    for c in (0, 1):
        for k in range(per_class):
            length = lo + sample_rng.integers(hi - lo + 1)
            values = template(_time_grid(length))
            if c == 1:
                values = values[::-1]
            values = values + noise * sample_rng.normal(size=(length, dim))
            series.append(TimeSeries(id=f"c{c}-s{k}", frames=values, label=c))
    return Dataset(series)


def synth_distractor(
    n_classes: int,
    per_class: int,
    dim: int,
    len_range: tuple[int, int],
    noise: float,
    seed: int,
    n_distractors: int = 6,
    label_scale: float = 0.3,
    distractor_scale: float = 1.5,
) -> Dataset:
    """Labels carried by a small per-class offset while the dominant variance
    comes from high-amplitude distractor trajectories shared across classes.
    Distance-based scorers track the distractors, not the labels."""
    if n_classes < 1 or per_class < 1 or dim < 1 or n_distractors < 1:
        raise ValueError("counts must be >= 1")
    lo, hi = _check_len_range(len_range)

    root = Rng(seed)
    offset_rng = root.spawn("offsets")
    offsets = [
        offset_rng.uniform(-1.0, 1.0, size=dim) * label_scale for _ in range(n_classes)
    ]
    tpl_rng = root.spawn("distractors")
    distractors = [
        _sinusoid_template(tpl_rng, dim, amplitude=distractor_scale)
        for _ in range(n_distractors)
    ]
    sample_rng = root.spawn("samples")

    series = []
    for c in range(n_classes):
        for k in range(per_class):
            length = lo + sample_rng.integers(hi - lo + 1)
            which = sample_rng.integers(n_distractors)
            values = distractors[which](_time_grid(length)) + offsets[c]
            values = values + noise * sample_rng.normal(size=(length, dim))
            series.append(TimeSeries(id=f"c{c}-s{k}", frames=values, label=c))
    return Dataset(series)

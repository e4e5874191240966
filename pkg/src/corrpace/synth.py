"""Deterministic synthetic multimodal regression data.

Each sample draws a shared latent vector; its label is a clipped linear
readout of that latent, and every modality's feature vector is a fixed
linear map of the latent plus a modality-private component and jitter.
Modalities of one sample therefore carry recoverable shared information,
which is exactly what cross-modal correlation learning needs to exploit.

``inject_noise`` plants contradictory-modality samples: one modality's
features are swapped with another sample's, and ground-truth flags record
the corruption. The flags exist purely for evaluation and reporting; no
training code path reads them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

LABEL_MIN = -3.0
LABEL_MAX = 3.0
_LABEL_SCALE = 1.5  # std-dev of the raw label readout before clipping
_FORMAT_TAG = "corrpace-dataset"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SynthConfig:
    samples: int = 600
    modalities: int = 3
    feature_widths: tuple[int, ...] = (16, 12, 20)
    shared_dim: int = 6
    private_dim: int = 4
    feature_noise: float = 0.1
    noise_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.modalities < 2:
            raise ConfigError(f"need at least 2 modalities, got {self.modalities}")
        if len(self.feature_widths) != self.modalities:
            raise ConfigError(
                f"feature_widths has {len(self.feature_widths)} entries "
                f"for {self.modalities} modalities"
            )
        if self.shared_dim < 0 or self.private_dim < 0:
            raise ConfigError("latent dimensions must be non-negative")
        if not 0.0 <= self.noise_fraction < 0.5:
            raise ConfigError(
                f"noise_fraction must lie in [0, 0.5), got {self.noise_fraction}"
            )
        floor = self.shared_dim + self.private_dim
        for m, width in enumerate(self.feature_widths):
            if width < floor:
                raise ConfigError(
                    f"modality {m} width {width} is below shared+private = {floor}"
                )


@dataclass
class Dataset:
    """Column blocks of a generated dataset.

    ``noise_flags``/``noise_modality`` are evaluation-only ground truth:
    flag o is True iff sample o had modality ``noise_modality[o]`` swapped.
    """

    features: list[np.ndarray]  # one (samples, width) block per modality
    labels: np.ndarray  # (samples,), values in [LABEL_MIN, LABEL_MAX]
    noise_flags: np.ndarray  # (samples,) bool
    noise_modality: np.ndarray  # (samples,) int, -1 for clean samples

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def k(self) -> int:
        return len(self.features)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(block.shape[1] for block in self.features)

    def copy(self) -> "Dataset":
        return Dataset(
            [block.copy() for block in self.features],
            self.labels.copy(),
            self.noise_flags.copy(),
            self.noise_modality.copy(),
        )


@dataclass
class SampleBatch:
    """A batch referenced by global sample indices; labels come along for
    pair scoring, features stay in the dataset and are encoded lazily."""

    indices: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_dataset(cls, dataset: Dataset, indices) -> "SampleBatch":
        idx = np.asarray(indices, dtype=np.int64)
        return cls(idx, dataset.labels[idx])

    @property
    def n(self) -> int:
        return int(self.indices.shape[0])


def generate_dataset(cfg: SynthConfig) -> Dataset:
    """Generate a dataset deterministically from the config (seed included)."""
    cfg.validate()
    root = np.random.SeedSequence(cfg.seed)
    gen_seq, noise_seq = root.spawn(2)
    rng = np.random.default_rng(gen_seq)

    latent = rng.standard_normal((cfg.samples, cfg.shared_dim))
    if cfg.shared_dim > 0:
        readout = rng.standard_normal(cfg.shared_dim)
        readout /= np.linalg.norm(readout)
        raw = _LABEL_SCALE * (latent @ readout)
    else:
        raw = np.zeros(cfg.samples)
    labels = np.clip(raw, LABEL_MIN, LABEL_MAX)

    features: list[np.ndarray] = []
    for width in cfg.feature_widths:
        shared_map = rng.standard_normal((cfg.shared_dim, width))
        if cfg.shared_dim > 0:
            shared_map /= math.sqrt(cfg.shared_dim)
        private_map = rng.standard_normal((cfg.private_dim, width))
        if cfg.private_dim > 0:
            private_map /= math.sqrt(cfg.private_dim)
        private = rng.standard_normal((cfg.samples, cfg.private_dim))
        jitter = rng.standard_normal((cfg.samples, width))
        features.append(latent @ shared_map + private @ private_map + cfg.feature_noise * jitter)

    dataset = Dataset(
        features,
        labels,
        np.zeros(cfg.samples, dtype=bool),
        np.full(cfg.samples, -1, dtype=np.int64),
    )
    if cfg.noise_fraction > 0.0:
        dataset = inject_noise(dataset, cfg.noise_fraction, noise_seq)
    return dataset


def inject_noise(dataset: Dataset, fraction: float, seed) -> Dataset:
    """Swap one modality of a uniformly chosen fraction of samples with a
    random other sample's features, flagging the corrupted samples."""
    if not 0.0 <= fraction < 0.5:
        raise ConfigError(f"noise fraction must lie in [0, 0.5), got {fraction}")
    out = dataset.copy()
    count = round(fraction * dataset.n)
    if count == 0:
        return out
    rng = np.random.default_rng(seed)
    victims = rng.choice(dataset.n, size=count, replace=False)
    for o in victims:
        m = int(rng.integers(dataset.k))
        donor = int(rng.integers(dataset.n - 1))
        if donor >= o:
            donor += 1
        # donor rows come from the pristine input, not already-swapped rows
        out.features[m][o] = dataset.features[m][donor]
        out.noise_flags[o] = True
        out.noise_modality[o] = m
    return out


def save_dataset(dataset: Dataset, path) -> None:
    """Write the flat columnar text format (bit-exact float round trip)."""
    lines = [
        f"{_FORMAT_TAG} {_FORMAT_VERSION}",
        f"modalities {dataset.k}",
        "widths " + " ".join(str(w) for w in dataset.widths),
        f"samples {dataset.n}",
    ]
    for o in range(dataset.n):
        parts = [
            repr(float(dataset.labels[o])),
            str(int(dataset.noise_flags[o])),
            str(int(dataset.noise_modality[o])),
        ]
        for block in dataset.features:
            parts.extend(repr(float(v)) for v in block[o])
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    text = Path(path).read_text().splitlines()
    if len(text) < 4 or not text[0].startswith(_FORMAT_TAG):
        raise ConfigError(f"{path} is not a {_FORMAT_TAG} file")
    k = int(text[1].split()[1])
    widths = [int(w) for w in text[2].split()[1:]]
    n = int(text[3].split()[1])
    if len(widths) != k:
        raise ConfigError(f"{path}: header declares {k} modalities but {len(widths)} widths")
    rows = text[4 : 4 + n]
    if len(rows) != n:
        raise ConfigError(f"{path}: header declares {n} samples, found {len(rows)} rows")
    labels = np.empty(n)
    flags = np.empty(n, dtype=bool)
    noise_mod = np.empty(n, dtype=np.int64)
    features = [np.empty((n, w)) for w in widths]
    expected = 3 + sum(widths)
    for o, row in enumerate(rows):
        parts = row.split()
        if len(parts) != expected:
            raise ConfigError(f"{path}: row {o} has {len(parts)} fields, expected {expected}")
        labels[o] = float(parts[0])
        flags[o] = bool(int(parts[1]))
        noise_mod[o] = int(parts[2])
        offset = 3
        for m, w in enumerate(widths):
            features[m][o] = [float(v) for v in parts[offset : offset + w]]
            offset += w
    return Dataset(features, labels, flags, noise_mod)


def strip_noise_flags(dataset: Dataset) -> Dataset:
    """Return a copy with the evaluation-only ground truth blanked out."""
    return replace(
        dataset.copy(),
        noise_flags=np.zeros(dataset.n, dtype=bool),
        noise_modality=np.full(dataset.n, -1, dtype=np.int64),
    )


__all__ = [
    "LABEL_MAX",
    "LABEL_MIN",
    "Dataset",
    "SampleBatch",
    "SynthConfig",
    "generate_dataset",
    "inject_noise",
    "load_dataset",
    "save_dataset",
    "strip_noise_flags",
]

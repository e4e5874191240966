"""Cross-sample bimodal pair construction with label-derived target scores.

Pairs carry sample indices only; embeddings are recomputed from the
current encoders whenever a pair is scored, so encoder gradients stay
live. A positive pair takes both modalities from the same sample and gets
target 1; a negative pair mixes two samples and gets the reciprocal
target 1/(label distance + offset), which caps negatives at 1/offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import BatchError, ConfigError
from .synth import SampleBatch


class PairPolarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class BimodalPair:
    """One ordered pair reference: (modality_i of sample o1, modality_j of o2)."""

    modality_i: int
    modality_j: int
    o1: int
    o2: int
    polarity: PairPolarity
    target: float

    def __post_init__(self) -> None:
        if self.modality_i == self.modality_j:
            raise ConfigError("a bimodal pair needs two distinct modalities")
        same = self.o1 == self.o2
        if same != (self.polarity is PairPolarity.POSITIVE):
            raise ConfigError("polarity tag disagrees with the sample indices")
        if same and self.target != 1.0:
            raise ConfigError("positive pairs must carry target 1")
        if not 0.0 < self.target <= 1.0:
            raise ConfigError(f"target {self.target} outside (0, 1]")


class PairSet:
    """Columnar batch of pairs from one (modality pair, polarity) stream."""

    __slots__ = ("modality_i", "modality_j", "polarity", "o1", "o2", "target")

    def __init__(self, modality_i, modality_j, polarity, o1, o2, target):
        self.modality_i = int(modality_i)
        self.modality_j = int(modality_j)
        self.polarity = polarity
        self.o1 = np.asarray(o1, dtype=np.int64)
        self.o2 = np.asarray(o2, dtype=np.int64)
        self.target = np.asarray(target, dtype=np.float64)
        if self.modality_i == self.modality_j:
            raise ConfigError("a bimodal pair needs two distinct modalities")
        if not (self.o1.shape == self.o2.shape == self.target.shape):
            raise ConfigError("pair columns must have identical lengths")
        same = self.o1 == self.o2
        if polarity is PairPolarity.POSITIVE:
            if not bool(np.all(same)) or not bool(np.all(self.target == 1.0)):
                raise ConfigError("positive pairs require o1 == o2 and target 1")
        else:
            if bool(np.any(same)):
                raise ConfigError("negative pairs require o1 != o2")
        if len(self) and not bool(np.all((self.target > 0.0) & (self.target <= 1.0))):
            raise ConfigError("pair targets must lie in (0, 1]")

    def __len__(self) -> int:
        return int(self.o1.shape[0])

    def __getitem__(self, i: int) -> BimodalPair:
        return BimodalPair(
            self.modality_i,
            self.modality_j,
            int(self.o1[i]),
            int(self.o2[i]),
            self.polarity,
            float(self.target[i]),
        )

    def __iter__(self) -> Iterator[BimodalPair]:
        for i in range(len(self)):
            yield self[i]

    def subset(self, index) -> "PairSet":
        idx = np.asarray(index)
        return PairSet(
            self.modality_i,
            self.modality_j,
            self.polarity,
            self.o1[idx],
            self.o2[idx],
            self.target[idx],
        )

    @classmethod
    def empty(cls, modality_i, modality_j, polarity) -> "PairSet":
        zero = np.zeros(0, dtype=np.int64)
        return cls(modality_i, modality_j, polarity, zero, zero, np.zeros(0))

    @classmethod
    def concat(cls, sets: Sequence["PairSet"]) -> "PairSet":
        if not sets:
            raise ConfigError("cannot concatenate zero pair sets")
        head = sets[0]
        for s in sets[1:]:
            if (s.modality_i, s.modality_j, s.polarity) != (
                head.modality_i,
                head.modality_j,
                head.polarity,
            ):
                raise ConfigError("can only concatenate pair sets from one stream")
        return cls(
            head.modality_i,
            head.modality_j,
            head.polarity,
            np.concatenate([s.o1 for s in sets]),
            np.concatenate([s.o2 for s in sets]),
            np.concatenate([s.target for s in sets]),
        )

    def id_pairs(self) -> list[list[int]]:
        return [[int(a), int(b)] for a, b in zip(self.o1, self.o2)]


def modality_pairs(k: int) -> list[tuple[int, int]]:
    """All unordered modality pairs (i < j), in a fixed order."""
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def label_distance(l1: float, l2: float) -> float:
    """Non-negative distance between two continuous labels."""
    if not (np.isfinite(l1) and np.isfinite(l2)):
        raise ConfigError("labels must be finite")
    return float(np.sqrt((l1 - l2) ** 2))


def correlation_score(o1: int, o2: int, labels, distance_offset: float) -> float:
    """Weakly supervised target: 1 for same-sample pairs, else the
    reciprocal of the label distance shifted by ``distance_offset``."""
    if distance_offset <= 1.0:
        raise ConfigError(
            f"distance_offset must exceed 1, got {distance_offset}"
        )
    if o1 == o2:
        return 1.0
    return 1.0 / (label_distance(float(labels[o1]), float(labels[o2])) + distance_offset)


def _negative_targets(l1, l2, distance_offset: float) -> np.ndarray:
    if distance_offset <= 1.0:
        raise ConfigError(f"distance_offset must exceed 1, got {distance_offset}")
    return 1.0 / (np.abs(np.asarray(l1) - np.asarray(l2)) + distance_offset)


def generate_positive_pairs(batch: SampleBatch, modality_i: int, modality_j: int) -> PairSet:
    """One same-sample pair per batch member, every target exactly 1."""
    if batch.n < 1:
        raise BatchError("cannot build positive pairs from an empty batch")
    return PairSet(
        modality_i,
        modality_j,
        PairPolarity.POSITIVE,
        batch.indices,
        batch.indices,
        np.ones(batch.n),
    )


def generate_negative_pairs(
    batch: SampleBatch,
    modality_i: int,
    modality_j: int,
    negative_factor: float,
    rng: np.random.Generator,
    distance_offset: float,
) -> PairSet:
    """round(negative_factor * n) cross-sample pairs, drawn uniformly over
    ordered (o1, o2) index pairs with replacement, o1 != o2 enforced."""
    if batch.n < 2:
        raise BatchError("need at least two samples to form cross-sample pairs")
    if negative_factor <= 0:
        raise ConfigError(f"negative_factor must be positive, got {negative_factor}")
    count = int(round(negative_factor * batch.n))
    a = rng.integers(batch.n, size=count)
    b = rng.integers(batch.n, size=count)
    clash = a == b
    while clash.any():
        b[clash] = rng.integers(batch.n, size=int(clash.sum()))
        clash = a == b
    return PairSet(
        modality_i,
        modality_j,
        PairPolarity.NEGATIVE,
        batch.indices[a],
        batch.indices[b],
        _negative_targets(batch.labels[a], batch.labels[b], distance_offset),
    )


__all__ = [
    "BimodalPair",
    "PairPolarity",
    "PairSet",
    "correlation_score",
    "generate_negative_pairs",
    "generate_positive_pairs",
    "label_distance",
    "modality_pairs",
]

"""The linear correlation predictor and its polarity-balanced losses.

A predictor is a bare 1 x 2d weight matrix scoring the concatenation of
two embeddings; no bias, no squashing (an optional clamp to [0, 1] exists
as an ablation switch, off by default). The stream loss is half the mean
absolute error over selected positives plus half that over selected
negatives, and the overall loss averages the streams of all modality
pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, CurriculumError, TrainingError
from .numerics import error_signs
from .pairing import PairPolarity, PairSet, modality_pairs

Array = np.ndarray

StreamKey = tuple[int, int, PairPolarity]

_SHARED = "shared"


@dataclass
class CorrelationPredictor:
    """Linear score map over a concatenated bimodal embedding."""

    weights: Array  # shape (1, 2 * embed_dim)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != 1 or self.weights.shape[1] % 2:
            raise ConfigError(
                f"predictor weights must have shape (1, 2*d), got {self.weights.shape}"
            )

    @classmethod
    def init(cls, embed_dim: int, rng: np.random.Generator) -> "CorrelationPredictor":
        bound = 1.0 / np.sqrt(2 * embed_dim)
        return cls(rng.uniform(-bound, bound, size=(1, 2 * embed_dim)))

    @property
    def embed_dim(self) -> int:
        return self.weights.shape[1] // 2

    def left(self) -> Array:
        return self.weights[0, : self.embed_dim]

    def right(self) -> Array:
        return self.weights[0, self.embed_dim :]

    def copy(self) -> "CorrelationPredictor":
        return CorrelationPredictor(self.weights.copy())


def predict_score(cp: CorrelationPredictor, x_i, x_j) -> float:
    """Score one pair of embeddings; an unbounded real."""
    a = np.asarray(x_i, dtype=np.float64)
    b = np.asarray(x_j, dtype=np.float64)
    if a.shape != (cp.embed_dim,) or b.shape != (cp.embed_dim,):
        raise ConfigError(
            f"predictor expects two embeddings of length {cp.embed_dim}, "
            f"got {a.shape} and {b.shape}"
        )
    return float(a @ cp.left() + b @ cp.right())


def predict_scores(cp: CorrelationPredictor, rows_i: Array, rows_j: Array) -> Array:
    """Vectorized scoring of stacked embedding rows."""
    if rows_i.shape[1] != cp.embed_dim or rows_j.shape[1] != cp.embed_dim:
        raise ConfigError(
            f"predictor expects embedding width {cp.embed_dim}, "
            f"got {rows_i.shape[1]} and {rows_j.shape[1]}"
        )
    return rows_i @ cp.left() + rows_j @ cp.right()


def pair_loss(score: float, target: float) -> float:
    return abs(score - target)


def pair_losses(scores, targets) -> Array:
    return np.abs(np.asarray(scores, dtype=np.float64) - np.asarray(targets, dtype=np.float64))


def bimodal_loss(positive_losses, negative_losses) -> float:
    """Half the positive mean plus half the negative mean."""
    pos = np.asarray(positive_losses, dtype=np.float64)
    neg = np.asarray(negative_losses, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise CurriculumError("a feeding round selected zero pairs of one polarity")
    return 0.5 * float(np.mean(pos)) + 0.5 * float(np.mean(neg))


def overall_correlation_loss(bimodal_losses: Sequence[float], modality_count: int) -> float:
    """Arithmetic mean over the modality-pair losses."""
    expected = modality_count * (modality_count - 1) // 2
    values = list(bimodal_losses)
    if len(values) != expected:
        raise ConfigError(
            f"expected {expected} bimodal losses for {modality_count} modalities, "
            f"got {len(values)}"
        )
    return float(np.mean(values))


@dataclass
class BimodalLossReport:
    modality_i: int
    modality_j: int
    positive_losses: Array
    negative_losses: Array

    @property
    def positive_mean(self) -> float:
        return float(np.mean(self.positive_losses))

    @property
    def negative_mean(self) -> float:
        return float(np.mean(self.negative_losses))

    @property
    def aggregate(self) -> float:
        return bimodal_loss(self.positive_losses, self.negative_losses)


class PredictorBank:
    """Correlation predictors for every modality pair.

    Default is one predictor per pair; with ``shared`` a single weight
    matrix serves all pairs and its gradients accumulate across them.
    """

    def __init__(self, predictors: dict[tuple[int, int], CorrelationPredictor], shared: bool):
        self._predictors = predictors
        self.shared = shared

    @classmethod
    def init(
        cls,
        modality_count: int,
        embed_dim: int,
        rng: np.random.Generator,
        shared: bool = False,
    ) -> "PredictorBank":
        pairs = modality_pairs(modality_count)
        if shared:
            one = CorrelationPredictor.init(embed_dim, rng)
            return cls({pair: one for pair in pairs}, True)
        return cls({pair: CorrelationPredictor.init(embed_dim, rng) for pair in pairs}, False)

    def get(self, modality_i: int, modality_j: int) -> CorrelationPredictor:
        key = (modality_i, modality_j)
        if key not in self._predictors:
            raise ConfigError(f"no predictor for modality pair {key}")
        return self._predictors[key]

    def param_name(self, modality_i: int, modality_j: int) -> str:
        if self.shared:
            return f"predictor.{_SHARED}.w"
        return f"predictor.{modality_i}-{modality_j}.w"

    def named_parameters(self) -> dict[str, Array]:
        if self.shared:
            first = next(iter(self._predictors.values()))
            return {f"predictor.{_SHARED}.w": first.weights}
        return {
            f"predictor.{i}-{j}.w": cp.weights for (i, j), cp in self._predictors.items()
        }

    def copy(self) -> "PredictorBank":
        if self.shared:
            one = next(iter(self._predictors.values())).copy()
            return PredictorBank({pair: one for pair in self._predictors}, True)
        return PredictorBank({pair: cp.copy() for pair, cp in self._predictors.items()}, False)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._predictors)


def _effective_scores(scores: Array, clamp: bool) -> tuple[Array, Array]:
    """Apply the optional output clamp; returns (scores, pass-through mask)."""
    if not clamp:
        return scores, np.ones_like(scores)
    mask = ((scores > 0.0) & (scores < 1.0)).astype(np.float64)
    return np.clip(scores, 0.0, 1.0), mask


def stream_pair_losses(
    bank: PredictorBank, embeddings: Sequence[Array], pairs: PairSet, clamp: bool = False
) -> Array:
    """Per-pair absolute errors for one stream, evaluation only.

    Projects each embedding matrix once and indexes the projections, so the
    cost is O(samples * d + pairs) rather than O(pairs * d).
    """
    cp = bank.get(pairs.modality_i, pairs.modality_j)
    scores = (
        (embeddings[pairs.modality_i] @ cp.left())[pairs.o1]
        + (embeddings[pairs.modality_j] @ cp.right())[pairs.o2]
    )
    effective, _ = _effective_scores(scores, clamp)
    return pair_losses(effective, pairs.target)


def correlation_loss_and_grads(
    bank: PredictorBank,
    embeddings: Sequence[Array],
    selections: Mapping[StreamKey, PairSet],
    modality_count: int,
    clamp: bool = False,
) -> tuple[float, list[BimodalLossReport], dict[str, Array], list[Array]]:
    """Overall correlation loss plus its analytic gradients.

    Returns the loss, per-modality-pair reports, predictor weight
    gradients keyed by parameter name, and one embedding-gradient matrix
    per modality (same shape as ``embeddings[m]``) for the caller to push
    through the encoders. Subgradient 0 is used at the |.| kinks.
    """
    pairs_of = modality_pairs(modality_count)
    n_streams = len(pairs_of)
    weight_grads: dict[str, Array] = {}
    emb_grads = [np.zeros_like(e) for e in embeddings]
    reports: list[BimodalLossReport] = []
    stream_losses: list[float] = []

    for (i, j) in pairs_of:
        cp = bank.get(i, j)
        name = bank.param_name(i, j)
        per_polarity: dict[PairPolarity, Array] = {}
        for polarity in (PairPolarity.POSITIVE, PairPolarity.NEGATIVE):
            key = (i, j, polarity)
            if key not in selections:
                raise CurriculumError(f"no selection supplied for stream {key}")
            sel = selections[key]
            if len(sel) == 0:
                raise CurriculumError(f"stream {key} selected zero pairs")
            scores = (embeddings[i] @ cp.left())[sel.o1] + (embeddings[j] @ cp.right())[sel.o2]
            effective, mask = _effective_scores(scores, clamp)
            losses = pair_losses(effective, sel.target)
            per_polarity[polarity] = losses
            # d(overall)/d(score): mean over streams, halved polarity means;
            # per-sample sums of the coefficients turn the pairwise scatter
            # into O(samples * d) rank-one updates
            coef = error_signs(effective, sel.target) * mask / (2.0 * len(sel) * n_streams)
            n_i = embeddings[i].shape[0]
            n_j = embeddings[j].shape[0]
            sums_i = np.bincount(sel.o1, weights=coef, minlength=n_i)
            sums_j = np.bincount(sel.o2, weights=coef, minlength=n_j)
            grad = weight_grads.setdefault(name, np.zeros_like(cp.weights))
            grad[0, : cp.embed_dim] += sums_i @ embeddings[i]
            grad[0, cp.embed_dim :] += sums_j @ embeddings[j]
            emb_grads[i] += np.outer(sums_i, cp.left())
            emb_grads[j] += np.outer(sums_j, cp.right())
        reports.append(
            BimodalLossReport(
                i, j, per_polarity[PairPolarity.POSITIVE], per_polarity[PairPolarity.NEGATIVE]
            )
        )
        stream_losses.append(reports[-1].aggregate)

    loss = overall_correlation_loss(stream_losses, modality_count)
    if not np.isfinite(loss):
        raise TrainingError(f"correlation loss is non-finite ({loss})")
    return loss, reports, weight_grads, emb_grads


__all__ = [
    "BimodalLossReport",
    "CorrelationPredictor",
    "PredictorBank",
    "StreamKey",
    "bimodal_loss",
    "correlation_loss_and_grads",
    "overall_correlation_loss",
    "pair_loss",
    "pair_losses",
    "predict_score",
    "predict_scores",
    "stream_pair_losses",
]

"""Difficulty scoring, noisy-pair discarding, difficulty partitioning, and
the three-action pair feeding state machine.

Difficulty of a pair is its absolute-error loss under a frozen pretrained
scorer, plus (after warm-up) a weighted loss under the current predictor.
Pairs whose difficulty strictly exceeds the empirical 95th-percentile
value of their stream are treated as noisy and dropped. The survivors are
sorted easiest-first and cut into contiguous partitions; every feeding
round, each stream's state machine picks one partition:

  * the relative loss ratio rose past the backward threshold -> step back
    one partition (count resets);
  * it fell past the forward threshold -> stay and keep drilling (count
    resets);
  * neither, and the stream has idled for ``patience`` rounds -> step
    forward to a harder partition (count resets);
  * otherwise stay and let the idle count grow.

When the hardest partition is selected, a fraction of its size is re-drawn
at random from the easier partitions so earlier material keeps circulating.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, CurriculumError, InternalError
from .pairing import BimodalPair, PairPolarity, PairSet

log = logging.getLogger(__name__)

Array = np.ndarray
StreamKey = tuple[int, int, PairPolarity]

# below this, a previous loss is treated as solved and the ratio tests skipped
ZERO_LOSS_GUARD = 1e-12


@dataclass(frozen=True)
class CurriculumConfig:
    patience: int = 6
    forward_threshold: float = 0.1
    backward_threshold: float = 0.15
    positive_partitions: int = 2
    negative_partitions: int = 10
    current_loss_weight: float = 0.8
    discard_percentile: float = 0.95
    warmup_epochs: int = 2
    augment_fraction: float = 0.5

    def validate(self) -> None:
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.forward_threshold <= 0 or self.backward_threshold <= 0:
            raise ConfigError("forward/backward thresholds must be positive")
        if self.positive_partitions < 1 or self.negative_partitions < 1:
            raise ConfigError("partition counts must be >= 1")
        if self.current_loss_weight < 0:
            raise ConfigError("current_loss_weight must be non-negative")
        if not 0.0 < self.discard_percentile < 1.0:
            raise ConfigError(
                f"discard_percentile must lie in (0, 1), got {self.discard_percentile}"
            )
        if self.warmup_epochs < 0:
            raise ConfigError("warmup_epochs must be non-negative")
        if not 0.0 <= self.augment_fraction <= 1.0:
            raise ConfigError("augment_fraction must lie in [0, 1]")

    def partitions_for(self, polarity: PairPolarity) -> int:
        if polarity is PairPolarity.POSITIVE:
            return self.positive_partitions
        return self.negative_partitions


class FeedAction(Enum):
    STAY = "stay"
    STEP_FORWARD = "step_forward"
    STEP_BACKWARD = "step_backward"


@dataclass(frozen=True)
class FeederState:
    """Per-stream curriculum state. ``level`` is the 1-based choosing index
    into the difficulty partitions (1 = easiest)."""

    level: int = 1
    count: int = 0
    prev_loss: float | None = None


@dataclass(frozen=True)
class DifficultyScoredPair:
    pair: BimodalPair
    pre_loss: float
    cur_loss: float | None
    difficulty: float


class ScoredPairs:
    """A PairSet annotated with per-pair difficulty columns."""

    __slots__ = ("pairs", "pre_loss", "cur_loss", "difficulty")

    def __init__(self, pairs: PairSet, pre_loss: Array, cur_loss: Array | None, difficulty: Array):
        n = len(pairs)
        if pre_loss.shape != (n,) or difficulty.shape != (n,):
            raise ConfigError("difficulty columns must match the pair count")
        if cur_loss is not None and cur_loss.shape != (n,):
            raise ConfigError("difficulty columns must match the pair count")
        self.pairs = pairs
        self.pre_loss = pre_loss
        self.cur_loss = cur_loss
        self.difficulty = difficulty

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i: int) -> DifficultyScoredPair:
        return DifficultyScoredPair(
            self.pairs[i],
            float(self.pre_loss[i]),
            None if self.cur_loss is None else float(self.cur_loss[i]),
            float(self.difficulty[i]),
        )

    def subset(self, index) -> "ScoredPairs":
        idx = np.asarray(index)
        return ScoredPairs(
            self.pairs.subset(idx),
            self.pre_loss[idx],
            None if self.cur_loss is None else self.cur_loss[idx],
            self.difficulty[idx],
        )


def difficulty_scores(
    pairs: PairSet,
    pre_losses: Array,
    cur_losses: Array | None,
    current_loss_weight: float,
    warm_up: bool,
) -> ScoredPairs:
    """Annotate pairs with difficulty. During warm-up only the pretrained
    scorer's loss counts; afterwards the current predictor's loss joins in,
    weighted by ``current_loss_weight``."""
    if current_loss_weight < 0:
        raise ConfigError("current_loss_weight must be non-negative")
    pre = np.asarray(pre_losses, dtype=np.float64)
    if pre.shape != (len(pairs),):
        raise ConfigError(
            f"got {pre.shape[0] if pre.ndim else 0} pretrained losses for {len(pairs)} pairs"
        )
    if warm_up:
        return ScoredPairs(pairs, pre, None, pre.copy())
    if cur_losses is None:
        raise ConfigError("current-predictor losses are required after warm-up")
    cur = np.asarray(cur_losses, dtype=np.float64)
    if cur.shape != pre.shape:
        raise ConfigError("pretrained and current loss columns must align")
    return ScoredPairs(pairs, pre, cur, pre + current_loss_weight * cur)


def sort_by_difficulty(scored: ScoredPairs) -> ScoredPairs:
    """Ascending, stable in creation order for ties."""
    order = np.argsort(scored.difficulty, kind="stable")
    return scored.subset(order)


def noisy_split(scored: ScoredPairs, percentile: float) -> tuple[ScoredPairs, ScoredPairs]:
    """Split into (retained sorted ascending, discarded).

    The threshold is the ceil(percentile * N)-th smallest difficulty;
    pairs strictly above it are discarded, ties at the threshold retained.
    """
    if len(scored) == 0:
        raise CurriculumError("cannot discard from an empty stream")
    if not 0.0 < percentile < 1.0:
        raise ConfigError(f"percentile must lie in (0, 1), got {percentile}")
    n = len(scored)
    order = np.argsort(scored.difficulty, kind="stable")
    threshold = scored.difficulty[order[math.ceil(percentile * n) - 1]]
    keep = scored.difficulty[order] <= threshold
    return scored.subset(order[keep]), scored.subset(order[~keep])


def discard_noisy(scored: ScoredPairs, percentile: float) -> ScoredPairs:
    return noisy_split(scored, percentile)[0]


def partition(pairs: PairSet, partition_count: int) -> list[PairSet]:
    """Cut an (already difficulty-sorted) pair set into contiguous chunks.

    Chunks are as equal as possible; the remainder is spread over the last
    chunks, one extra pair each, so the hardest partitions are the larger
    ones. Asking for more partitions than pairs degrades to one pair per
    partition, with a log note.
    """
    if partition_count < 1:
        raise ConfigError(f"partition count must be >= 1, got {partition_count}")
    n = len(pairs)
    if n == 0:
        raise CurriculumError("cannot partition an empty pair set")
    if n < partition_count:
        log.warning(
            "stream (%d,%d,%s): only %d pairs for %d partitions; degrading",
            pairs.modality_i,
            pairs.modality_j,
            pairs.polarity.value,
            n,
            partition_count,
        )
        partition_count = n
    base, rem = divmod(n, partition_count)
    sizes = [base] * (partition_count - rem) + [base + 1] * rem
    out: list[PairSet] = []
    start = 0
    for size in sizes:
        out.append(pairs.subset(np.arange(start, start + size)))
        start += size
    return out


def feed_action(
    state: FeederState,
    loss_now: float,
    partition_count: int,
    cfg: CurriculumConfig,
    allow_backward: bool = True,
) -> tuple[FeedAction, FeederState]:
    """Pure state transition of the feeding machine.

    The first invocation of a stream initializes it: easiest partition,
    zero count, action ``stay``. Afterwards the three-branch rule applies,
    with both ratio tests skipped when the previous loss is effectively
    zero. The returned action reflects the realized movement of the
    choosing index, so a boundary-clamped branch reports ``stay``.
    """
    c = partition_count
    if c < 1:
        raise ConfigError(f"partition count must be >= 1, got {c}")
    level = min(max(state.level, 1), c)
    if state.prev_loss is None:
        return FeedAction.STAY, FeederState(1, 0, loss_now)
    prev = state.prev_loss
    rose = improved = False
    if prev >= ZERO_LOSS_GUARD:
        rose = (loss_now - prev) / prev > cfg.backward_threshold
        improved = (prev - loss_now) / prev > cfg.forward_threshold
    if rose and allow_backward:
        new_level, new_count = max(level - 1, 1), 0
    elif improved:
        new_level, new_count = level, 0
    elif state.count >= cfg.patience:
        new_level, new_count = min(level + 1, c), 0
    else:
        new_level, new_count = level, state.count + 1
    if new_level < level:
        action = FeedAction.STEP_BACKWARD
    elif new_level > level:
        action = FeedAction.STEP_FORWARD
    else:
        action = FeedAction.STAY
    return action, FeederState(new_level, new_count, loss_now)


@dataclass
class FeedResult:
    selected: PairSet
    action: FeedAction
    state: FeederState
    loss: float  # the loss_now this transition consumed
    augmented: int  # pairs added by random sampling from easier partitions


def feed(
    state: FeederState,
    loss_now: float,
    partitions: Sequence[PairSet],
    cfg: CurriculumConfig,
    rng: np.random.Generator,
    allow_backward: bool = True,
    augment_fraction: float | None = None,
) -> FeedResult:
    """Advance one stream's state machine and select its training pairs.

    Selection is the partition at the new choosing index; on the hardest
    partition, ceil(fraction * |partition|) extra pairs are drawn uniformly
    without replacement from the other partitions.
    """
    if not partitions:
        raise CurriculumError("no partitions to feed from")
    action, new_state = feed_action(state, loss_now, len(partitions), cfg, allow_backward)
    selected = partitions[new_state.level - 1]
    fraction = cfg.augment_fraction if augment_fraction is None else augment_fraction
    augmented = 0
    if new_state.level == len(partitions) and len(partitions) > 1 and fraction > 0:
        want = math.ceil(fraction * len(selected))
        others = PairSet.concat([p for t, p in enumerate(partitions) if t != new_state.level - 1])
        take = min(want, len(others))
        if take:
            extra = rng.choice(len(others), size=take, replace=False)
            selected = PairSet.concat([selected, others.subset(extra)])
            augmented = take
    return FeedResult(selected, action, new_state, loss_now, augmented)


@dataclass
class StreamRound:
    """Inputs one stream contributes to a feeding round."""

    partitions: list[PairSet]
    loss_now: float


def run_feeding_round(
    streams: Mapping[StreamKey, StreamRound],
    states: dict[StreamKey, FeederState],
    cfg: CurriculumConfig,
    rng: np.random.Generator,
    allow_backward: bool = True,
    augment_fraction: float | None = None,
) -> dict[StreamKey, FeedResult]:
    """Run ``feed`` once per (modality pair, polarity) stream.

    Streams are visited in a fixed sorted order and carry independent
    states, so one stream's losses never influence another's index.
    ``states`` is updated in place with each stream's new state.
    """
    results: dict[StreamKey, FeedResult] = {}
    for key in sorted(streams, key=lambda s: (s[0], s[1], s[2].value)):
        if key not in states:
            raise InternalError(f"missing feeder state for stream {key}")
        entry = streams[key]
        result = feed(
            states[key],
            entry.loss_now,
            entry.partitions,
            cfg,
            rng,
            allow_backward=allow_backward,
            augment_fraction=augment_fraction,
        )
        states[key] = result.state
        results[key] = result
    return results


def apply_ablation_overrides(cfg: CurriculumConfig, no_patience: bool) -> CurriculumConfig:
    """Patience 1 makes the machine step forward as soon as one idle round
    passes without a significant gain."""
    return replace(cfg, patience=1) if no_patience else cfg


__all__ = [
    "ZERO_LOSS_GUARD",
    "CurriculumConfig",
    "DifficultyScoredPair",
    "FeedAction",
    "FeedResult",
    "FeederState",
    "ScoredPairs",
    "StreamKey",
    "StreamRound",
    "apply_ablation_overrides",
    "difficulty_scores",
    "discard_noisy",
    "feed",
    "feed_action",
    "noisy_split",
    "partition",
    "run_feeding_round",
    "sort_by_difficulty",
]

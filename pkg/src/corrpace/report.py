"""Run reports and their file emissions.

A run produces three text artifacts, all deterministic byte-for-byte
given the same config and seed:

  * ``report.json``    - the full RunReport, one JSON document;
  * ``metrics.jsonl``  - one JSON object per epoch (loss curves);
  * ``trajectories.jsonl`` - one JSON object per (round, stream) feeding
    record with fields (round, modality_i, modality_j, polarity, action,
    c_i, count, loss).

Noise-flag recall of discarded pairs is computed here, on the reporting
side: training decisions never read the ground-truth flags.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .pairing import PairPolarity
from .synth import Dataset


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    correlation_loss: float | None  # mean training value over the epoch's rounds


@dataclass
class FeedTrace:
    round: int
    modality_i: int
    modality_j: int
    polarity: str
    action: str
    level: int  # the choosing index; emitted as "c_i"
    count: int
    loss: float
    selected_count: int = 0  # pairs handed to the optimizer this round
    pool_count: int = 0  # retained pairs in the stream this epoch

    def to_line_record(self) -> dict:
        return {
            "round": self.round,
            "modality_i": self.modality_i,
            "modality_j": self.modality_j,
            "polarity": self.polarity,
            "action": self.action,
            "c_i": self.level,
            "count": self.count,
            "loss": self.loss,
        }


@dataclass
class DiscardRecord:
    epoch: int
    round_start: int  # first global round the rescoring applies to
    modality_i: int
    modality_j: int
    polarity: str
    kept: int
    discarded_pairs: list[list[int]]
    noise_recall: float | None  # positive streams on flagged datasets only


@dataclass
class RunReport:
    config: dict
    seed: int
    epochs: list[EpochRecord] = field(default_factory=list)
    pretrain_losses: list[float] = field(default_factory=list)
    trajectories: list[FeedTrace] = field(default_factory=list)
    discard_log: list[DiscardRecord] = field(default_factory=list)
    stream_first_max: dict[str, int | None] = field(default_factory=dict)
    positive_first_max_mean: float | None = None
    negative_first_max_mean: float | None = None
    total_rounds: int = 0
    final_train_mse: float = float("nan")
    final_val_mse: float = float("nan")
    final_test_mse: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "epochs": [asdict(e) for e in self.epochs],
            "pretrain_losses": self.pretrain_losses,
            "trajectories": [asdict(t) for t in self.trajectories],
            "discard_log": [asdict(d) for d in self.discard_log],
            "stream_first_max": self.stream_first_max,
            "positive_first_max_mean": self.positive_first_max_mean,
            "negative_first_max_mean": self.negative_first_max_mean,
            "total_rounds": self.total_rounds,
            "final_train_mse": self.final_train_mse,
            "final_val_mse": self.final_val_mse,
            "final_test_mse": self.final_test_mse,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        report = cls(config=data["config"], seed=data["seed"])
        report.epochs = [EpochRecord(**e) for e in data["epochs"]]
        report.pretrain_losses = list(data["pretrain_losses"])
        report.trajectories = [FeedTrace(**t) for t in data["trajectories"]]
        report.discard_log = [DiscardRecord(**d) for d in data["discard_log"]]
        report.stream_first_max = dict(data["stream_first_max"])
        report.positive_first_max_mean = data["positive_first_max_mean"]
        report.negative_first_max_mean = data["negative_first_max_mean"]
        report.total_rounds = data["total_rounds"]
        report.final_train_mse = data["final_train_mse"]
        report.final_val_mse = data["final_val_mse"]
        report.final_test_mse = data["final_test_mse"]
        return report


def stream_label(modality_i: int, modality_j: int, polarity: str) -> str:
    return f"{modality_i}-{modality_j}/{polarity}"


def summarize_first_max(
    traces: list[FeedTrace], partition_counts: dict[str, int], total_rounds: int
) -> tuple[dict[str, int | None], float | None, float | None]:
    """Per stream, the first round its choosing index hit the top partition.

    Streams that never reach the top enter the polarity means with the
    sentinel ``total_rounds + 1``. Returns (per-stream firsts, positive
    mean, negative mean); the means are None when a polarity has no
    streams or no rounds ran.
    """
    firsts: dict[str, int | None] = {label: None for label in partition_counts}
    for trace in traces:
        label = stream_label(trace.modality_i, trace.modality_j, trace.polarity)
        if label not in partition_counts:
            continue
        if firsts[label] is None and trace.level >= partition_counts[label]:
            firsts[label] = trace.round
    if total_rounds == 0 or not partition_counts:
        return firsts, None, None
    sentinel = total_rounds + 1
    by_polarity: dict[str, list[int]] = {p.value: [] for p in PairPolarity}
    for label, first in firsts.items():
        polarity = label.split("/", 1)[1]
        by_polarity[polarity].append(sentinel if first is None else first)
    pos = by_polarity[PairPolarity.POSITIVE.value]
    neg = by_polarity[PairPolarity.NEGATIVE.value]
    return (
        firsts,
        float(np.mean(pos)) if pos else None,
        float(np.mean(neg)) if neg else None,
    )


def positive_discard_recall(
    dataset: Dataset, modality_i: int, modality_j: int, discarded_pairs: list[list[int]],
    pool_sample_ids: np.ndarray,
) -> float | None:
    """Recall of ground-truth-noisy positive pairs inside the discard set.

    A positive pair of stream (i, j) is noisy when its sample is flagged
    and the corrupted modality is one of the pair's two. Returns None when
    the pool holds no noisy samples (e.g. clean datasets).
    """
    flagged = dataset.noise_flags[pool_sample_ids]
    affected = np.isin(dataset.noise_modality[pool_sample_ids], [modality_i, modality_j])
    noisy = set(pool_sample_ids[flagged & affected].tolist())
    if not noisy:
        return None
    discarded = {pair[0] for pair in discarded_pairs}
    return len(noisy & discarded) / len(noisy)


def write_report(report: RunReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def read_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))


def write_metrics(report: RunReport, path) -> None:
    lines = [json.dumps(asdict(e)) for e in report.epochs]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def emit_trajectories(report: RunReport, path) -> None:
    """One line-delimited JSON record per (round, stream)."""
    if report.total_rounds < 1:
        raise ConfigError("cannot emit trajectories for a run with no rounds")
    lines = [json.dumps(t.to_line_record()) for t in report.trajectories]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_trajectories(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line]


__all__ = [
    "DiscardRecord",
    "EpochRecord",
    "FeedTrace",
    "RunReport",
    "emit_trajectories",
    "positive_discard_recall",
    "read_report",
    "read_trajectories",
    "stream_label",
    "summarize_first_max",
    "write_metrics",
    "write_report",
]

"""Render run figures to files alongside the delimited outputs.

Two standard figures per run: the loss curves (train/val MSE with the
correlation loss on a twin axis) and the feeding trajectories (choosing
index per stream over rounds). A third appears when discard records carry
noise recall values. Uses the Agg backend; nothing is ever shown.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pairing import PairPolarity
from .report import RunReport, stream_label

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_loss_curves(report: RunReport, path: Path) -> None:
    epochs = [e.epoch for e in report.epochs]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(epochs, [e.train_mse for e in report.epochs], label="train MSE", color=_COLORS[0])
    ax.plot(epochs, [e.val_mse for e in report.epochs], label="val MSE", color=_COLORS[1])
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    corr = [(e.epoch, e.correlation_loss) for e in report.epochs if e.correlation_loss is not None]
    if corr:
        twin = ax.twinx()
        twin.plot(*zip(*corr), label="correlation loss", color=_COLORS[2], linestyle="--")
        twin.set_ylabel("correlation loss")
        twin.legend(loc="upper right")
    ax.legend(loc="upper left")
    ax.set_title("loss curves")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trajectories(report: RunReport, path: Path) -> None:
    fig, axes = plt.subplots(2, 1, figsize=(7.2, 5.4), sharex=True)
    for ax, polarity in zip(axes, (PairPolarity.POSITIVE, PairPolarity.NEGATIVE)):
        by_stream: dict[str, tuple[list[int], list[int]]] = {}
        for t in report.trajectories:
            if t.polarity != polarity.value:
                continue
            rounds, levels = by_stream.setdefault(
                stream_label(t.modality_i, t.modality_j, t.polarity), ([], [])
            )
            rounds.append(t.round)
            levels.append(t.level)
        for color, (label, (rounds, levels)) in zip(_COLORS, sorted(by_stream.items())):
            ax.step(rounds, levels, where="post", label=label, color=color)
        ax.set_ylabel("choosing index")
        ax.set_title(f"{polarity.value} streams")
        if by_stream:
            ax.legend(loc="lower right", fontsize=8)
    axes[-1].set_xlabel("round")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_discard_recall(report: RunReport, path: Path) -> None:
    by_stream: dict[str, tuple[list[int], list[float]]] = {}
    for rec in report.discard_log:
        if rec.noise_recall is None:
            continue
        xs, ys = by_stream.setdefault(
            stream_label(rec.modality_i, rec.modality_j, rec.polarity), ([], [])
        )
        xs.append(rec.epoch)
        ys.append(rec.noise_recall)
    if not by_stream:
        return
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for color, (label, (xs, ys)) in zip(_COLORS, sorted(by_stream.items())):
        ax.plot(xs, ys, marker="o", label=label, color=color)
    ax.set_xlabel("epoch")
    ax.set_ylabel("noise recall in discarded top slice")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("discard recall of flagged positive pairs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_run_figures(report: RunReport, out_dir) -> list[Path]:
    """Write every applicable figure for a run; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if report.epochs:
        path = out / "loss_curves.png"
        render_loss_curves(report, path)
        written.append(path)
    if report.trajectories:
        path = out / "trajectories.png"
        render_trajectories(report, path)
        written.append(path)
    if any(rec.noise_recall is not None for rec in report.discard_log):
        path = out / "discard_recall.png"
        render_discard_recall(report, path)
        written.append(path)
    return written


__all__ = [
    "render_discard_recall",
    "render_loss_curves",
    "render_run_figures",
    "render_trajectories",
]

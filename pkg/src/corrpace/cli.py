"""Experiment runner.

Subcommands: ``gen-data``, ``pretrain``, ``train``, ``eval``,
``replay-feed``. Configuration is an INI-style text file with ``[data]``,
``[train]`` and ``[curriculum]`` sections whose keys mirror the config
dataclasses; ``--set section.key=value`` overrides individual entries.
The default output directory comes from $CORRPACE_OUT (fallback
``runs``). The train path writes the delimited report files and, unless
``--no-figures`` is given, the rendered figures next to them.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import typing
from dataclasses import fields
from pathlib import Path

import numpy as np

from .curriculum import CurriculumConfig, FeederState, feed_action
from .errors import ConfigError, CorrpaceError, TrainingError
from .figures import render_run_figures
from .report import emit_trajectories, write_metrics, write_report
from .synth import SynthConfig, generate_dataset, load_dataset, save_dataset
from .trainer import (
    Ablations,
    Model,
    TrainConfig,
    evaluate_mse,
    load_model,
    pretrain_correlation_predictor,
    rng_streams,
    save_model,
    split_indices,
    train,
)

_SECTIONS = {"data": SynthConfig, "train": TrainConfig, "curriculum": CurriculumConfig}

_ABLATION_CHOICES = [
    "no-correlation",
    "no-curriculum",
    "no-patience",
    "no-backward",
    "no-discard",
    "no-random-sampling",
]


def _coerce(raw: str, typ, field_name: str):
    origin = typing.get_origin(typ)
    if origin is tuple:
        args = typing.get_args(typ)
        parts = [p for p in raw.replace(",", " ").split() if p]
        if Ellipsis in args:
            return tuple(_coerce(p, args[0], field_name) for p in parts)
        if len(parts) != len(args):
            raise ConfigError(f"{field_name}: expected {len(args)} values, got {len(parts)}")
        return tuple(_coerce(p, a, field_name) for p, a in zip(parts, args))
    if typ is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{field_name}: cannot parse boolean from '{raw}'")
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{field_name}: {exc}") from None
    if typ is str:
        return raw.strip()
    raise ConfigError(f"{field_name}: unsupported config type {typ}")


def load_configs(
    config_path: str | None, overrides: list[str] | None = None
) -> tuple[SynthConfig, TrainConfig, CurriculumConfig]:
    """Parse the INI config plus ``section.key=value`` overrides."""
    raw: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}
    if config_path:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep key case
        read = parser.read(config_path)
        if not read:
            raise ConfigError(f"cannot read config file {config_path}")
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            raw[section].update(dict(parser.items(section)))
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override '{item}' is not of the form section.key=value")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"override '{item}': unknown section '{section}'")
        raw[section][key.strip()] = value.strip()

    built = {}
    for section, cls in _SECTIONS.items():
        hints = typing.get_type_hints(cls)
        known = {f.name: hints[f.name] for f in fields(cls)}
        kwargs = {}
        for key, value in raw[section].items():
            if key not in known:
                raise ConfigError(f"[{section}] has no field '{key}'")
            kwargs[key] = _coerce(value, known[key], f"{section}.{key}")
        built[section] = cls(**kwargs)
    built["data"].validate()
    built["train"].validate()
    built["curriculum"].validate()
    return built["data"], built["train"], built["curriculum"]


def default_out_dir() -> Path:
    return Path(os.environ.get("CORRPACE_OUT", "runs"))


def _resolve_dataset(args, data_cfg: SynthConfig, out_dir: Path, save_copy: bool):
    if getattr(args, "data", None):
        return load_dataset(args.data), Path(args.data)
    dataset = generate_dataset(data_cfg)
    path = out_dir / "dataset.txt"
    if save_copy:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_dataset(dataset, path)
    return dataset, path


def run_pipeline(
    dataset,
    data_cfg: SynthConfig,
    train_cfg: TrainConfig,
    curriculum_cfg: CurriculumConfig,
    ablations: Ablations,
    out_dir: Path,
    figures: bool = True,
):
    """pretrain -> train -> eval, writing every artifact into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report = train(dataset, train_cfg, curriculum_cfg, ablations)
    report.config["data"] = {
        f.name: (list(v) if isinstance(v := getattr(data_cfg, f.name), tuple) else v)
        for f in fields(SynthConfig)
    }
    write_report(report, out_dir / "report.json")
    write_metrics(report, out_dir / "metrics.jsonl")
    if report.total_rounds >= 1:
        emit_trajectories(report, out_dir / "trajectories.jsonl")
    model: Model = report.model
    save_model(
        model,
        {
            "seed": train_cfg.seed,
            "split_fractions": list(train_cfg.split_fractions),
            "dataset_samples": dataset.n,
        },
        out_dir / "model.json",
    )
    written = []
    if figures:
        written = render_run_figures(report, out_dir)
    return report, model, written


def cmd_gen_data(args) -> int:
    data_cfg, _, _ = load_configs(args.config, args.set)
    if args.seed is not None:
        data_cfg = SynthConfig(**{**_cfg_dict(data_cfg), "seed": args.seed})
        data_cfg.validate()
    dataset = generate_dataset(data_cfg)
    out = Path(args.out) if args.out else default_out_dir() / "dataset.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out)
    print(
        json.dumps(
            {
                "dataset": str(out),
                "samples": dataset.n,
                "modalities": dataset.k,
                "flagged": int(dataset.noise_flags.sum()),
            }
        )
    )
    return 0


def _cfg_dict(cfg) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def cmd_pretrain(args) -> int:
    data_cfg, train_cfg, _ = load_configs(args.config, args.set)
    if args.seed is not None:
        train_cfg = TrainConfig(**{**_cfg_dict(train_cfg), "seed": args.seed})
        train_cfg.validate()
    out_dir = Path(args.out) if args.out else default_out_dir()
    dataset, _ = _resolve_dataset(args, data_cfg, out_dir, save_copy=True)
    rngs = rng_streams(train_cfg.seed)
    train_idx, _, _ = split_indices(dataset.n, train_cfg.split_fractions, rngs["data"])
    model = Model.init(dataset.widths, train_cfg, rngs["init"])
    scorer = pretrain_correlation_predictor(
        dataset, model.encoders, train_cfg, train_idx, rngs["pretrain"]
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    scorer_model = Model(scorer.encoders, None, scorer.predictors, train_cfg.embed_dim)
    save_model(
        scorer_model,
        {
            "seed": train_cfg.seed,
            "split_fractions": list(train_cfg.split_fractions),
            "dataset_samples": dataset.n,
            "role": "pretrained-scorer",
        },
        out_dir / "scorer.json",
    )
    lines = [
        json.dumps({"epoch": e, "correlation_loss": loss})
        for e, loss in enumerate(scorer.history)
    ]
    (out_dir / "pretrain_metrics.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""))
    print(json.dumps({"scorer": str(out_dir / "scorer.json"), "epochs": len(scorer.history)}))
    return 0


def cmd_train(args) -> int:
    data_cfg, train_cfg, curriculum_cfg = load_configs(args.config, args.set)
    if args.seed is not None:
        train_cfg = TrainConfig(**{**_cfg_dict(train_cfg), "seed": args.seed})
        train_cfg.validate()
    ablations = Ablations.from_names(args.ablation or [])
    out_dir = Path(args.out) if args.out else default_out_dir()
    dataset, _ = _resolve_dataset(args, data_cfg, out_dir, save_copy=True)
    report, _, figure_paths = run_pipeline(
        dataset,
        data_cfg,
        train_cfg,
        curriculum_cfg,
        ablations,
        out_dir,
        figures=not args.no_figures,
    )
    print(
        json.dumps(
            {
                "out": str(out_dir),
                "epochs": len(report.epochs),
                "final_val_mse": report.final_val_mse,
                "final_test_mse": report.final_test_mse,
                "figures": [str(p) for p in figure_paths],
            }
        )
    )
    return 0


def cmd_eval(args) -> int:
    model, meta = load_model(args.model)
    dataset = load_dataset(args.data)
    if model.head is None:
        raise ConfigError(f"{args.model} has no fusion head; it cannot predict labels")
    if args.split == "all":
        rows = np.arange(dataset.n)
    else:
        if dataset.n != meta.get("dataset_samples"):
            raise ConfigError(
                "dataset size differs from the one the model was trained on; "
                "use --split all for cross-dataset evaluation"
            )
        rngs = rng_streams(meta["seed"])
        train_idx, val_idx, test_idx = split_indices(
            dataset.n, tuple(meta["split_fractions"]), rngs["data"]
        )
        rows = {"train": train_idx, "val": val_idx, "test": test_idx}[args.split]
    mse = evaluate_mse(model.encoders, model.head, dataset, rows)
    print(json.dumps({"split": args.split, "rows": int(len(rows)), "mse": mse}))
    return 0


def cmd_replay_feed(args) -> int:
    losses = [
        float(line)
        for line in Path(args.losses).read_text().splitlines()
        if line.strip()
    ]
    if not losses:
        raise ConfigError(f"{args.losses} holds no loss values")
    cfg = CurriculumConfig(
        patience=args.patience,
        forward_threshold=args.forward_threshold,
        backward_threshold=args.backward_threshold,
    )
    cfg.validate()
    if args.partitions < 1:
        raise ConfigError("--partitions must be >= 1")
    state = FeederState()
    for step, loss in enumerate(losses, start=1):
        action, state = feed_action(
            state, loss, args.partitions, cfg, allow_backward=not args.no_backward
        )
        print(
            json.dumps(
                {
                    "step": step,
                    "loss": loss,
                    "action": action.value,
                    "c_i": state.level,
                    "count": state.count,
                }
            )
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrpace",
        description="curriculum-paced weakly supervised modality correlation learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_data=True):
        p.add_argument("--config", help="INI config file with [data]/[train]/[curriculum]")
        p.add_argument(
            "--set",
            action="append",
            metavar="SECTION.KEY=VALUE",
            help="override one config entry (repeatable)",
        )
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--out", help="output directory (default: $CORRPACE_OUT or ./runs)")
        if with_data:
            p.add_argument("--data", help="existing dataset file; generated when omitted")

    p = sub.add_parser("gen-data", help="generate and write a synthetic dataset")
    add_common(p, with_data=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("pretrain", help="pretrain and freeze the difficulty scorer")
    add_common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="full pipeline: pretrain, train, evaluate, report")
    add_common(p)
    p.add_argument(
        "--ablation",
        action="append",
        choices=_ABLATION_CHOICES,
        help="disable one mechanism (repeatable)",
    )
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset split")
    p.add_argument("--model", required=True, help="model.json from a train run")
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--split", choices=["train", "val", "test", "all"], default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "replay-feed", help="drive the feeding state machine with a recorded loss sequence"
    )
    p.add_argument("--losses", required=True, help="text file, one loss value per line")
    p.add_argument("--partitions", type=int, default=10, help="partition count c")
    p.add_argument("--patience", type=int, default=CurriculumConfig.patience)
    p.add_argument("--forward-threshold", type=float, default=CurriculumConfig.forward_threshold)
    p.add_argument("--backward-threshold", type=float, default=CurriculumConfig.backward_threshold)
    p.add_argument("--no-backward", action="store_true", help="disable the backward branch")
    p.set_defaults(func=cmd_replay_feed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 1
    except CorrpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

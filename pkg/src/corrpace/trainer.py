"""Training orchestration: scorer pretraining, the joint loop combining
the fused regression loss with the curriculum-fed correlation loss, and
model (de)serialization.

RNG discipline: the master seed spawns fixed, named sub-streams (init,
data, pairing, curriculum, pretrain) so that toggling one mechanism never
perturbs another's draws. In particular, a run with the correlation
machinery disabled consumes exactly the same data-order and init draws as
an enabled run.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .correlation import (
    CorrelationPredictor,
    PredictorBank,
    correlation_loss_and_grads,
    stream_pair_losses,
)
from .curriculum import (
    CurriculumConfig,
    FeederState,
    StreamRound,
    apply_ablation_overrides,
    difficulty_scores,
    noisy_split,
    partition,
    run_feeding_round,
    sort_by_difficulty,
)
from .encoders import UnimodalEncoder, build_encoders, encode_all
from .errors import ConfigError, TrainingError
from .numerics import AdamState, MlpParams, adam_step, mlp_backward, mlp_forward
from .pairing import (
    PairPolarity,
    PairSet,
    generate_negative_pairs,
    generate_positive_pairs,
    modality_pairs,
)
from .report import (
    DiscardRecord,
    EpochRecord,
    FeedTrace,
    RunReport,
    positive_discard_recall,
    stream_label,
    summarize_first_max,
)
from .synth import Dataset, SampleBatch

Array = np.ndarray
StreamKey = tuple[int, int, PairPolarity]

RNG_STREAM_NAMES = ("init", "data", "pairing", "curriculum", "pretrain")


@dataclass(frozen=True)
class TrainConfig:
    # production-scale reference points noted where desk defaults differ
    correlation_weight: float = 1.0
    learning_rate: float = 1e-3  # full scale: 2e-5 with transformer encoders
    batch_size: int = 32  # full scale: 64
    epochs: int = 30  # full scale: 20
    pretrain_epochs: int = 10
    pretrain_negative_factor: float = 4.0
    negative_factor: float = 30.0
    distance_offset: float = 1.4
    embed_dim: int = 16  # full scale: 100
    encoder_hidden: tuple[int, ...] = (32,)
    fusion_hidden: tuple[int, ...] = (32,)
    fusion_dim: int = 24
    predictor_hidden: tuple[int, ...] = (16,)
    activation: str = "relu"
    shared_predictor: bool = False
    clamp_scores: bool = False
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def validate(self) -> None:
        if self.correlation_weight < 0:
            raise ConfigError("correlation_weight must be non-negative")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("epoch counts must be non-negative")
        if self.negative_factor <= 0 or self.pretrain_negative_factor <= 0:
            raise ConfigError("negative sampling factors must be positive")
        if self.distance_offset <= 1.0:
            raise ConfigError(
                f"distance_offset must exceed 1, got {self.distance_offset}"
            )
        if self.embed_dim < 1 or self.fusion_dim < 1:
            raise ConfigError("embedding and fusion widths must be >= 1")
        if len(self.split_fractions) != 3 or any(f < 0 for f in self.split_fractions):
            raise ConfigError("split_fractions must be three non-negative values")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ConfigError("split_fractions must sum to 1")


_ABLATION_NAMES = {
    "no-correlation": "no_correlation",
    "no-curriculum": "no_curriculum",
    "no-patience": "no_patience",
    "no-backward": "no_backward",
    "no-discard": "no_discard",
    "no-random-sampling": "no_random_sampling",
}


@dataclass(frozen=True)
class Ablations:
    """Each switch removes exactly one mechanism from the full method."""

    no_correlation: bool = False
    no_curriculum: bool = False
    no_patience: bool = False
    no_backward: bool = False
    no_discard: bool = False
    no_random_sampling: bool = False

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "Ablations":
        kwargs = {}
        for name in names:
            if name not in _ABLATION_NAMES:
                raise ConfigError(
                    f"unknown ablation '{name}'; choose from {sorted(_ABLATION_NAMES)}"
                )
            kwargs[_ABLATION_NAMES[name]] = True
        return cls(**kwargs)

    def active_names(self) -> list[str]:
        return sorted(flag for flag, attr in _ABLATION_NAMES.items() if getattr(self, attr))


@dataclass
class FusionHead:
    """Fusion DNN over the concatenated embeddings plus a scalar predictor."""

    dnn: MlpParams  # activated output: the fused representation
    predictor: MlpParams  # linear scalar output

    @classmethod
    def init(
        cls,
        modality_count: int,
        embed_dim: int,
        fusion_hidden: Sequence[int],
        fusion_dim: int,
        predictor_hidden: Sequence[int],
        rng: np.random.Generator,
        activation: str = "relu",
    ) -> "FusionHead":
        dnn = MlpParams.init(
            [modality_count * embed_dim, *fusion_hidden, fusion_dim],
            rng,
            activation,
            activate_output=True,
        )
        predictor = MlpParams.init([fusion_dim, *predictor_hidden, 1], rng, activation)
        return cls(dnn, predictor)

    def forward(self, mat: Array):
        fused, dnn_cache = mlp_forward(self.dnn, mat)
        out, mp_cache = mlp_forward(self.predictor, fused)
        return out[:, 0], (dnn_cache, mp_cache)

    def backward(self, caches, dpred: Array):
        dnn_cache, mp_cache = caches
        mp_grads, dfused = mlp_backward(self.predictor, mp_cache, dpred[:, None])
        dnn_grads, dmat = mlp_backward(self.dnn, dnn_cache, dfused)
        grads: dict[str, Array] = {}
        for (name, _), g in zip(self.dnn.named_arrays("head.dnn"), _interleave(dnn_grads)):
            grads[name] = g
        for (name, _), g in zip(
            self.predictor.named_arrays("head.mp"), _interleave(mp_grads)
        ):
            grads[name] = g
        return grads, dmat

    def named_parameters(self) -> dict[str, Array]:
        out = dict(self.dnn.named_arrays("head.dnn"))
        out.update(self.predictor.named_arrays("head.mp"))
        return out

    def copy(self) -> "FusionHead":
        return FusionHead(self.dnn.copy(), self.predictor.copy())


def _interleave(grads) -> list[Array]:
    out = []
    for w, b in zip(grads.weights, grads.biases):
        out.append(w)
        out.append(b)
    return out


def fuse_and_predict(embeddings: Sequence, head: FusionHead) -> float:
    """Scalar prediction for one sample's embeddings."""
    vecs = [np.asarray(e, dtype=np.float64) for e in embeddings]
    widths = {v.shape for v in vecs}
    if any(v.ndim != 1 for v in vecs) or len(widths) != 1:
        raise ConfigError("fusion expects one 1-D embedding per modality, equal lengths")
    mat = np.concatenate(vecs)[None, :]
    preds, _ = head.forward(mat)
    return float(preds[0])


def task_loss(label: float, prediction: float) -> float:
    """Squared error of one prediction."""
    return float((label - prediction) ** 2)


def total_loss(task: float, correlation: float, correlation_weight: float) -> float:
    """Task loss plus the weighted correlation loss."""
    if correlation_weight < 0:
        raise ConfigError("correlation_weight must be non-negative")
    return float(task + correlation_weight * correlation)


@dataclass
class Model:
    encoders: list[UnimodalEncoder]
    head: FusionHead | None
    predictors: PredictorBank
    embed_dim: int

    @classmethod
    def init(cls, feature_widths: Sequence[int], cfg: TrainConfig, rng: np.random.Generator):
        encoders = build_encoders(
            feature_widths, cfg.embed_dim, cfg.encoder_hidden, rng, cfg.activation
        )
        head = FusionHead.init(
            len(feature_widths),
            cfg.embed_dim,
            cfg.fusion_hidden,
            cfg.fusion_dim,
            cfg.predictor_hidden,
            rng,
            cfg.activation,
        )
        bank = PredictorBank.init(len(feature_widths), cfg.embed_dim, rng, cfg.shared_predictor)
        return cls(encoders, head, bank, cfg.embed_dim)

    def named_parameters(
        self, include_head: bool = True, include_predictors: bool = True
    ) -> dict[str, Array]:
        params: dict[str, Array] = {}
        for enc in self.encoders:
            params.update(enc.mlp.named_arrays(f"encoder{enc.modality}"))
        if include_head and self.head is not None:
            params.update(self.head.named_parameters())
        if include_predictors:
            params.update(self.predictors.named_parameters())
        return params

    def copy(self) -> "Model":
        return Model(
            [e.copy() for e in self.encoders],
            None if self.head is None else self.head.copy(),
            self.predictors.copy(),
            self.embed_dim,
        )


@dataclass
class PretrainedScorer:
    """Frozen difficulty reference: encoder snapshot plus predictors,
    trained on randomly fed pairs and never updated afterwards."""

    encoders: list[UnimodalEncoder]
    predictors: PredictorBank
    history: list[float] = field(default_factory=list)


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(RNG_STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(RNG_STREAM_NAMES, children)}


def split_indices(
    n: int, fractions: tuple[float, float, float], rng: np.random.Generator
) -> tuple[Array, Array, Array]:
    """Disjoint train/val/test index sets from one shuffle."""
    perm = rng.permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train : n_train + n_val])
    test = np.sort(perm[n_train + n_val :])
    return train, val, test


def make_batches(perm: Array, batch_size: int) -> list[Array]:
    """Chunk a permuted index array; a trailing singleton is folded into
    the previous batch so cross-sample pairs stay constructible."""
    batches = [perm[s : s + batch_size] for s in range(0, len(perm), batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        tail = batches.pop()
        batches[-1] = np.concatenate([batches[-1], tail])
    return batches


def build_epoch_pools(
    dataset: Dataset,
    batches: Sequence[Array],
    negative_factor: float,
    distance_offset: float,
    rng: np.random.Generator,
) -> dict[StreamKey, PairSet]:
    """Generate every batch's pairs and pool them per stream for the epoch."""
    k = dataset.k
    parts: dict[StreamKey, list[PairSet]] = {}
    for (i, j) in modality_pairs(k):
        parts[(i, j, PairPolarity.POSITIVE)] = []
        parts[(i, j, PairPolarity.NEGATIVE)] = []
    for rows in batches:
        batch = SampleBatch.from_dataset(dataset, rows)
        for (i, j) in modality_pairs(k):
            parts[(i, j, PairPolarity.POSITIVE)].append(generate_positive_pairs(batch, i, j))
            parts[(i, j, PairPolarity.NEGATIVE)].append(
                generate_negative_pairs(batch, i, j, negative_factor, rng, distance_offset)
            )
    return {key: PairSet.concat(chunks) for key, chunks in parts.items()}


def training_loss_and_grads(
    dataset: Dataset,
    encoders: Sequence[UnimodalEncoder],
    head: FusionHead | None,
    bank: PredictorBank | None,
    batch_rows: Array | None,
    selections: dict[StreamKey, PairSet] | None,
    correlation_weight: float,
    clamp_scores: bool = False,
):
    """One optimization step's losses and analytic gradients.

    Either part may be absent: ``batch_rows=None`` skips the task loss
    (scorer pretraining), ``selections=None`` skips the correlation loss.
    Returns (total, task, correlation, grads by parameter name).
    """
    k = dataset.k
    embeddings, caches = encode_all(encoders, dataset.features, with_cache=True)
    emb_grads = [np.zeros_like(e) for e in embeddings]
    grads: dict[str, Array] = {}

    task = None
    if batch_rows is not None:
        if head is None:
            raise ConfigError("a fusion head is required to compute the task loss")
        rows = np.asarray(batch_rows, dtype=np.int64)
        mat = np.concatenate([embeddings[m][rows] for m in range(k)], axis=1)
        preds, head_caches = head.forward(mat)
        labels = dataset.labels[rows]
        task = float(np.mean((labels - preds) ** 2))
        dpred = 2.0 * (preds - labels) / len(rows)
        head_grads, dmat = head.backward(head_caches, dpred)
        grads.update(head_grads)
        d = embeddings[0].shape[1]
        for m in range(k):
            emb_grads[m][rows] += dmat[:, m * d : (m + 1) * d]

    correlation = None
    if selections is not None:
        if bank is None:
            raise ConfigError("a predictor bank is required for the correlation loss")
        correlation, _, weight_grads, corr_emb_grads = correlation_loss_and_grads(
            bank, embeddings, selections, k, clamp_scores
        )
        for name, g in weight_grads.items():
            grads[name] = correlation_weight * g
        for m in range(k):
            emb_grads[m] += correlation_weight * corr_emb_grads[m]

    for m, enc in enumerate(encoders):
        enc_grads, _ = mlp_backward(enc.mlp, caches[m], emb_grads[m])
        for (name, _), g in zip(enc.mlp.named_arrays(f"encoder{enc.modality}"), _interleave(enc_grads)):
            grads[name] = g

    total = (task if task is not None else 0.0) + correlation_weight * (
        correlation if correlation is not None else 0.0
    )
    if not math.isfinite(total):
        raise TrainingError(f"non-finite loss (task={task}, correlation={correlation})")
    return total, task, correlation, grads


def evaluate_mse(
    encoders: Sequence[UnimodalEncoder], head: FusionHead, dataset: Dataset, rows: Array
) -> float:
    rows = np.asarray(rows, dtype=np.int64)
    embeddings = [enc.encode(block[rows]) for enc, block in zip(encoders, dataset.features)]
    mat = np.concatenate(embeddings, axis=1)
    preds, _ = head.forward(mat)
    return float(np.mean((dataset.labels[rows] - preds) ** 2))


def pretrain_correlation_predictor(
    dataset: Dataset,
    encoders: Sequence[UnimodalEncoder],
    cfg: TrainConfig,
    train_indices: Array | None = None,
    rng: np.random.Generator | None = None,
) -> PretrainedScorer:
    """Train a separate scorer on randomly fed pairs, then freeze it.

    The passed encoders are cloned; pretraining updates the clones jointly
    with fresh predictors, and the returned snapshot is never touched by
    the main loop. Zero pretrain epochs yield a randomly initialized
    frozen scorer, which is degenerate but legal.
    """
    cfg.validate()
    if rng is None:
        rng = rng_streams(cfg.seed)["pretrain"]
    if train_indices is None:
        train_indices = np.arange(dataset.n)
    k = dataset.k
    enc_clones = [enc.copy() for enc in encoders]
    bank = PredictorBank.init(k, cfg.embed_dim, rng, cfg.shared_predictor)
    params: dict[str, Array] = {}
    for enc in enc_clones:
        params.update(enc.mlp.named_arrays(f"encoder{enc.modality}"))
    params.update(bank.named_parameters())
    opt = AdamState.for_params(params, cfg.learning_rate)
    history: list[float] = []
    for epoch in range(cfg.pretrain_epochs):
        perm = rng.permutation(train_indices)
        batches = make_batches(perm, cfg.batch_size)
        epoch_losses: list[float] = []
        for b, rows in enumerate(batches):
            batch = SampleBatch.from_dataset(dataset, rows)
            selections: dict[StreamKey, PairSet] = {}
            for (i, j) in modality_pairs(k):
                selections[(i, j, PairPolarity.POSITIVE)] = generate_positive_pairs(batch, i, j)
                selections[(i, j, PairPolarity.NEGATIVE)] = generate_negative_pairs(
                    batch, i, j, cfg.pretrain_negative_factor, rng, cfg.distance_offset
                )
            try:
                _, _, corr, grads = training_loss_and_grads(
                    dataset, enc_clones, None, bank, None, selections, 1.0, cfg.clamp_scores
                )
                adam_step(params, grads, opt)
            except TrainingError as exc:
                raise TrainingError(f"pretraining epoch {epoch}, batch {b}: {exc}") from exc
            epoch_losses.append(corr)
        history.append(float(np.mean(epoch_losses)))
    return PretrainedScorer(enc_clones, bank, history)


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    curriculum_cfg: CurriculumConfig | None = None,
    ablations: Ablations | None = None,
) -> RunReport:
    """Full run: split, init, optional scorer pretraining, the joint loop,
    and final evaluation. Deterministic given (dataset, configs, seed)."""
    cfg.validate()
    cc = curriculum_cfg if curriculum_cfg is not None else CurriculumConfig()
    cc.validate()
    ab = ablations if ablations is not None else Ablations()
    cc = apply_ablation_overrides(cc, ab.no_patience)

    correlation_active = cfg.correlation_weight > 0 and not ab.no_correlation
    curriculum_active = correlation_active and not ab.no_curriculum

    rngs = rng_streams(cfg.seed)
    train_idx, val_idx, test_idx = split_indices(dataset.n, cfg.split_fractions, rngs["data"])
    if len(train_idx) == 0:
        raise ConfigError("the training split is empty")
    model = Model.init(dataset.widths, cfg, rngs["init"])

    scorer: PretrainedScorer | None = None
    if curriculum_active:
        scorer = pretrain_correlation_predictor(
            dataset, model.encoders, cfg, train_idx, rngs["pretrain"]
        )

    params = model.named_parameters(include_predictors=correlation_active)
    opt = AdamState.for_params(params, cfg.learning_rate)

    k = dataset.k
    stream_keys: list[StreamKey] = [
        (i, j, pol)
        for (i, j) in modality_pairs(k)
        for pol in (PairPolarity.POSITIVE, PairPolarity.NEGATIVE)
    ]
    states: dict[StreamKey, FeederState] = {key: FeederState() for key in stream_keys}
    partition_counts = (
        {stream_label(i, j, pol.value): cc.partitions_for(pol) for (i, j, pol) in stream_keys}
        if curriculum_active
        else {}
    )

    epoch_records: list[EpochRecord] = []
    traces: list[FeedTrace] = []
    discard_log: list[DiscardRecord] = []
    round_no = 0

    for epoch in range(cfg.epochs):
        perm = rngs["data"].permutation(train_idx)
        batches = make_batches(perm, cfg.batch_size)

        pools: dict[StreamKey, PairSet] | None = None
        if correlation_active:
            pools = build_epoch_pools(
                dataset, batches, cfg.negative_factor, cfg.distance_offset, rngs["pairing"]
            )

        stream_partitions: dict[StreamKey, list[PairSet]] = {}
        retained_pools: dict[StreamKey, PairSet] = {}
        if curriculum_active:
            warm = epoch < cc.warmup_epochs
            pre_embs = encode_all(scorer.encoders, dataset.features)
            cur_embs = None if warm else encode_all(model.encoders, dataset.features)
            for key in stream_keys:
                i, j, pol = key
                pairs = pools[key]
                pre_losses = stream_pair_losses(
                    scorer.predictors, pre_embs, pairs, cfg.clamp_scores
                )
                cur_losses = (
                    None
                    if warm
                    else stream_pair_losses(model.predictors, cur_embs, pairs, cfg.clamp_scores)
                )
                scored = difficulty_scores(pairs, pre_losses, cur_losses, cc.current_loss_weight, warm)
                if ab.no_discard:
                    retained = sort_by_difficulty(scored)
                    discarded_pairs: list[list[int]] = []
                else:
                    retained, discarded = noisy_split(scored, cc.discard_percentile)
                    discarded_pairs = discarded.pairs.id_pairs()
                recall = None
                if pol is PairPolarity.POSITIVE and not ab.no_discard:
                    recall = positive_discard_recall(dataset, i, j, discarded_pairs, train_idx)
                discard_log.append(
                    DiscardRecord(
                        epoch, round_no + 1, i, j, pol.value, len(retained), discarded_pairs, recall
                    )
                )
                retained_pools[key] = retained.pairs
                stream_partitions[key] = partition(retained.pairs, cc.partitions_for(pol))
        elif correlation_active:
            for key in stream_keys:
                stream_partitions[key] = [pools[key]]

        epoch_corr: list[float] = []
        for b, batch_rows in enumerate(batches):
            round_no += 1
            selections: dict[StreamKey, PairSet] | None = None
            if curriculum_active:
                eval_embs = encode_all(model.encoders, dataset.features)
                rounds: dict[StreamKey, StreamRound] = {}
                for key in stream_keys:
                    losses = stream_pair_losses(
                        model.predictors, eval_embs, retained_pools[key], cfg.clamp_scores
                    )
                    rounds[key] = StreamRound(stream_partitions[key], float(np.mean(losses)))
                results = run_feeding_round(
                    rounds,
                    states,
                    cc,
                    rngs["curriculum"],
                    allow_backward=not ab.no_backward,
                    augment_fraction=0.0 if ab.no_random_sampling else None,
                )
                selections = {}
                for key in sorted(results, key=lambda s: (s[0], s[1], s[2].value)):
                    res = results[key]
                    selections[key] = res.selected
                    traces.append(
                        FeedTrace(
                            round_no,
                            key[0],
                            key[1],
                            key[2].value,
                            res.action.value,
                            res.state.level,
                            res.state.count,
                            res.loss,
                            selected_count=len(res.selected),
                            pool_count=len(retained_pools[key]),
                        )
                    )
            elif correlation_active:
                selections = {key: stream_partitions[key][0] for key in stream_keys}

            try:
                _, _, corr, grads = training_loss_and_grads(
                    dataset,
                    model.encoders,
                    model.head,
                    model.predictors if correlation_active else None,
                    batch_rows,
                    selections,
                    cfg.correlation_weight,
                    cfg.clamp_scores,
                )
                adam_step(params, grads, opt)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}, batch {b}: {exc}") from exc
            if corr is not None:
                epoch_corr.append(corr)

        epoch_records.append(
            EpochRecord(
                epoch,
                evaluate_mse(model.encoders, model.head, dataset, train_idx),
                evaluate_mse(model.encoders, model.head, dataset, val_idx),
                float(np.mean(epoch_corr)) if epoch_corr else None,
            )
        )

    stream_first_max, pos_mean, neg_mean = summarize_first_max(
        traces, partition_counts, round_no
    )
    report = RunReport(
        config={
            "train": _jsonable(asdict(cfg)),
            "curriculum": _jsonable(asdict(cc)),
            "ablations": ab.active_names(),
            "dataset": {
                "samples": dataset.n,
                "modalities": dataset.k,
                "widths": list(dataset.widths),
                "flagged": int(dataset.noise_flags.sum()),
            },
        },
        seed=cfg.seed,
        epochs=epoch_records,
        pretrain_losses=list(scorer.history) if scorer is not None else [],
        trajectories=traces,
        discard_log=discard_log,
        stream_first_max=stream_first_max,
        positive_first_max_mean=pos_mean,
        negative_first_max_mean=neg_mean,
        total_rounds=round_no,
        final_train_mse=evaluate_mse(model.encoders, model.head, dataset, train_idx),
        final_val_mse=evaluate_mse(model.encoders, model.head, dataset, val_idx),
        final_test_mse=evaluate_mse(model.encoders, model.head, dataset, test_idx),
    )
    # in-memory conveniences for callers that keep training; not serialized
    report.model = model
    report.scorer = scorer
    return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {key: _jsonable(value) for key, value in obj.items()}
    if isinstance(obj, tuple):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def _mlp_to_dict(mlp: MlpParams) -> dict:
    return {
        "weights": [w.tolist() for w in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
        "activation": mlp.activation,
        "activate_output": mlp.activate_output,
    }


def _mlp_from_dict(data: dict) -> MlpParams:
    return MlpParams(
        [np.asarray(w, dtype=np.float64) for w in data["weights"]],
        [np.asarray(b, dtype=np.float64) for b in data["biases"]],
        data["activation"],
        data["activate_output"],
    )


def save_model(model: Model, meta: dict, path) -> None:
    """Serialize to JSON text; floats round-trip exactly via repr."""
    bank = model.predictors
    if bank.shared:
        entries = {"shared": bank.named_parameters()["predictor.shared.w"].tolist()}
    else:
        entries = {
            f"{i}-{j}": bank.get(i, j).weights.tolist() for (i, j) in bank.pairs()
        }
    obj = {
        "format": "corrpace-model",
        "version": 1,
        "embed_dim": model.embed_dim,
        "meta": meta,
        "encoders": [
            {"modality": enc.modality, "mlp": _mlp_to_dict(enc.mlp)} for enc in model.encoders
        ],
        "head": None
        if model.head is None
        else {"dnn": _mlp_to_dict(model.head.dnn), "mp": _mlp_to_dict(model.head.predictor)},
        "predictors": {"shared": bank.shared, "entries": entries},
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_model(path) -> tuple[Model, dict]:
    obj = json.loads(Path(path).read_text())
    if obj.get("format") != "corrpace-model":
        raise ConfigError(f"{path} is not a corrpace model file")
    encoders = [
        UnimodalEncoder(e["modality"], _mlp_from_dict(e["mlp"])) for e in obj["encoders"]
    ]
    head = None
    if obj["head"] is not None:
        head = FusionHead(_mlp_from_dict(obj["head"]["dnn"]), _mlp_from_dict(obj["head"]["mp"]))
    shared = obj["predictors"]["shared"]
    k = len(encoders)
    if shared:
        one = CorrelationPredictor(np.asarray(obj["predictors"]["entries"]["shared"]))
        bank = PredictorBank({pair: one for pair in modality_pairs(k)}, True)
    else:
        bank = PredictorBank(
            {
                tuple(int(v) for v in key.split("-")): CorrelationPredictor(np.asarray(weights))
                for key, weights in obj["predictors"]["entries"].items()
            },
            False,
        )
    return Model(encoders, head, bank, obj["embed_dim"]), obj["meta"]


__all__ = [
    "Ablations",
    "FusionHead",
    "Model",
    "PretrainedScorer",
    "TrainConfig",
    "build_epoch_pools",
    "evaluate_mse",
    "fuse_and_predict",
    "load_model",
    "make_batches",
    "pretrain_correlation_predictor",
    "rng_streams",
    "save_model",
    "split_indices",
    "task_loss",
    "total_loss",
    "train",
    "training_loss_and_grads",
]

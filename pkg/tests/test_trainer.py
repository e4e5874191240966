"""Unit tests for the training orchestration."""

import json

import numpy as np
import pytest

from corrpace import synth
from corrpace.curriculum import CurriculumConfig
from corrpace.errors import ConfigError, TrainingError
from corrpace.numerics import MlpParams
from corrpace.trainer import (
    Ablations,
    FusionHead,
    Model,
    TrainConfig,
    fuse_and_predict,
    make_batches,
    pretrain_correlation_predictor,
    rng_streams,
    split_indices,
    task_loss,
    total_loss,
    train,
)

SMALL_DATA = synth.SynthConfig(
    samples=120, feature_widths=(10, 8, 12), shared_dim=4, private_dim=2, noise_fraction=0.1, seed=0
)
SMALL_TRAIN = TrainConfig(
    epochs=3,
    pretrain_epochs=3,
    batch_size=24,
    negative_factor=8.0,
    embed_dim=8,
    encoder_hidden=(12,),
    fusion_hidden=(12,),
    fusion_dim=10,
    predictor_hidden=(8,),
    seed=0,
)
SMALL_CURRICULUM = CurriculumConfig(patience=2, negative_partitions=4, positive_partitions=2, warmup_epochs=1)


def _dataset():
    return synth.generate_dataset(SMALL_DATA)


def _params_bytes(model: Model) -> bytes:
    return b"".join(p.tobytes() for _, p in sorted(model.named_parameters().items()))


class TestFusionHead:
    def test_zero_weight_head_predicts_zero(self):
        head = FusionHead.init(3, 4, (5,), 4, (3,), np.random.default_rng(0))
        for mlp in (head.dnn, head.predictor):
            for w, b in zip(mlp.weights, mlp.biases):
                w[:] = 0.0
                b[:] = 0.0
        assert fuse_and_predict([np.ones(4)] * 3, head) == 0.0

    def test_seeded_head_matches_scripted_forward(self):
        rng = np.random.default_rng(31)
        head = FusionHead.init(2, 3, (4,), 3, (2,), rng)
        embeddings = [rng.standard_normal(3), rng.standard_normal(3)]
        x = np.concatenate(embeddings)
        h = np.maximum(head.dnn.weights[0] @ x + head.dnn.biases[0], 0.0)
        fused = np.maximum(head.dnn.weights[1] @ h + head.dnn.biases[1], 0.0)
        g = np.maximum(head.predictor.weights[0] @ fused + head.predictor.biases[0], 0.0)
        expected = float((head.predictor.weights[1] @ g + head.predictor.biases[1])[0])
        assert fuse_and_predict(embeddings, head) == pytest.approx(expected, rel=1e-15)

    def test_permuted_concatenation_with_permuted_columns_is_identical(self):
        rng = np.random.default_rng(5)
        d = 3
        head = FusionHead.init(3, d, (6,), 4, (3,), rng)
        embeddings = [rng.standard_normal(d) for _ in range(3)]
        order = [2, 0, 1]
        permuted = FusionHead(head.dnn.copy(), head.predictor.copy())
        cols = np.concatenate([np.arange(m * d, (m + 1) * d) for m in order])
        permuted.dnn.weights[0] = head.dnn.weights[0][:, cols]
        value = fuse_and_predict(embeddings, head)
        swapped = fuse_and_predict([embeddings[m] for m in order], permuted)
        assert swapped == pytest.approx(value, rel=1e-12)

    def test_mismatched_embedding_widths_rejected(self):
        head = FusionHead.init(2, 3, (4,), 3, (2,), np.random.default_rng(0))
        with pytest.raises(ConfigError):
            fuse_and_predict([np.ones(3), np.ones(2)], head)


class TestScalarLosses:
    def test_task_loss(self):
        assert task_loss(1.0, 1.0) == 0.0
        assert task_loss(1.0, -1.0) == 4.0
        assert task_loss(0.25, 1.0) == task_loss(1.0, 0.25)

    def test_total_loss(self):
        assert total_loss(0.7, 9.9, 0.0) == pytest.approx(0.7)
        assert total_loss(0.5, 0.3, 1.0) == pytest.approx(0.8)
        for weight in (0.25, 1.0, 3.0):
            assert total_loss(0.5, 0.4, weight) == pytest.approx(0.5 + weight * 0.4)

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigError):
            total_loss(0.5, 0.3, -1.0)


class TestSplitsAndBatches:
    def test_split_sizes_and_disjointness(self):
        rng = np.random.default_rng(0)
        train_idx, val_idx, test_idx = split_indices(600, (0.8, 0.1, 0.1), rng)
        assert (len(train_idx), len(val_idx), len(test_idx)) == (480, 60, 60)
        combined = np.concatenate([train_idx, val_idx, test_idx])
        assert len(np.unique(combined)) == 600

    def test_trailing_singleton_is_folded(self):
        batches = make_batches(np.arange(9), 4)
        assert [len(b) for b in batches] == [4, 5]

    def test_even_batches_untouched(self):
        batches = make_batches(np.arange(8), 4)
        assert [len(b) for b in batches] == [4, 4]


class TestPretraining:
    def test_zero_epochs_is_legal(self):
        ds = _dataset()
        cfg = TrainConfig(pretrain_epochs=0, embed_dim=8, encoder_hidden=(12,), seed=0)
        rngs = rng_streams(cfg.seed)
        model = Model.init(ds.widths, cfg, rngs["init"])
        scorer = pretrain_correlation_predictor(ds, model.encoders, cfg, rng=rngs["pretrain"])
        assert scorer.history == []

    def test_pretraining_reduces_the_correlation_loss(self):
        ds = _dataset()
        cfg = TrainConfig(
            pretrain_epochs=8, batch_size=24, embed_dim=8, encoder_hidden=(12,), seed=1
        )
        rngs = rng_streams(cfg.seed)
        model = Model.init(ds.widths, cfg, rngs["init"])
        scorer = pretrain_correlation_predictor(ds, model.encoders, cfg, rng=rngs["pretrain"])
        assert scorer.history[-1] < 0.75 * scorer.history[0]

    def test_pretraining_does_not_touch_the_passed_encoders(self):
        ds = _dataset()
        cfg = TrainConfig(pretrain_epochs=2, batch_size=24, embed_dim=8, encoder_hidden=(12,), seed=2)
        rngs = rng_streams(cfg.seed)
        model = Model.init(ds.widths, cfg, rngs["init"])
        before = _params_bytes(model)
        pretrain_correlation_predictor(ds, model.encoders, cfg, rng=rngs["pretrain"])
        assert _params_bytes(model) == before

    def test_loss_approaches_the_additive_fit_bound_on_constant_labels(self):
        """With equal labels every negative target hits the cap, and the
        best additive score map has a closed-form least-absolute optimum of
        (1 - cap)/2; pretraining must approach it and can never beat it."""
        ds = synth.generate_dataset(
            synth.SynthConfig(
                samples=120, feature_widths=(10, 8, 12), shared_dim=4, private_dim=2,
                noise_fraction=0.0, seed=0,
            )
        )
        ds.labels[:] = 1.25
        cfg = TrainConfig(
            pretrain_epochs=25, batch_size=24, embed_dim=8, encoder_hidden=(16,), seed=0
        )
        rngs = rng_streams(cfg.seed)
        model = Model.init(ds.widths, cfg, rngs["init"])
        scorer = pretrain_correlation_predictor(ds, model.encoders, cfg, rng=rngs["pretrain"])
        bound = 0.5 * (1.0 - 1.0 / cfg.distance_offset)
        assert scorer.history[-1] >= bound - 0.005
        assert scorer.history[-1] <= bound + 0.05


class TestTrain:
    def test_zero_epochs_reports_initial_state_only(self):
        report = train(_dataset(), TrainConfig(**{**SMALL_TRAIN.__dict__, "epochs": 0}), SMALL_CURRICULUM)
        assert report.epochs == []
        assert report.total_rounds == 0
        assert np.isfinite(report.final_val_mse)

    def test_same_seed_is_bit_identical(self):
        a = train(_dataset(), SMALL_TRAIN, SMALL_CURRICULUM)
        b = train(_dataset(), SMALL_TRAIN, SMALL_CURRICULUM)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
        assert _params_bytes(a.model) == _params_bytes(b.model)

    def test_training_descends_on_the_default_task(self):
        ds = _dataset()
        cfg = TrainConfig(**{**SMALL_TRAIN.__dict__, "epochs": 6})
        report = train(ds, cfg, SMALL_CURRICULUM)
        baseline = train(ds, TrainConfig(**{**SMALL_TRAIN.__dict__, "epochs": 0}), SMALL_CURRICULUM)
        assert report.final_train_mse < baseline.final_train_mse

    def test_alpha_zero_equals_correlation_free_trainer(self):
        ds = _dataset()
        alpha0 = train(ds, TrainConfig(**{**SMALL_TRAIN.__dict__, "correlation_weight": 0.0}), SMALL_CURRICULUM)
        ablated = train(ds, SMALL_TRAIN, SMALL_CURRICULUM, Ablations(no_correlation=True))
        assert _params_bytes(alpha0.model) == _params_bytes(ablated.model)
        assert [e.__dict__ for e in alpha0.epochs] == [e.__dict__ for e in ablated.epochs]
        assert alpha0.trajectories == [] and ablated.trajectories == []

    def test_noise_flags_never_influence_training(self):
        ds = _dataset()
        hidden = synth.strip_noise_flags(ds)
        a = train(ds, SMALL_TRAIN, SMALL_CURRICULUM)
        b = train(hidden, SMALL_TRAIN, SMALL_CURRICULUM)
        assert _params_bytes(a.model) == _params_bytes(b.model)
        assert [e.__dict__ for e in a.epochs] == [e.__dict__ for e in b.epochs]
        assert any(rec.noise_recall is not None for rec in a.discard_log)
        assert all(rec.noise_recall is None for rec in b.discard_log)

    def test_scorer_stays_frozen_through_main_training(self):
        ds = _dataset()
        report = train(ds, SMALL_TRAIN, SMALL_CURRICULUM)
        rngs = rng_streams(SMALL_TRAIN.seed)
        train_idx, _, _ = split_indices(ds.n, SMALL_TRAIN.split_fractions, rngs["data"])
        model = Model.init(ds.widths, SMALL_TRAIN, rngs["init"])
        reference = pretrain_correlation_predictor(
            ds, model.encoders, SMALL_TRAIN, train_idx, rngs["pretrain"]
        )
        got = report.scorer
        for ref_enc, got_enc in zip(reference.encoders, got.encoders):
            for a, b in zip(ref_enc.mlp.weights, got_enc.mlp.weights):
                assert a.tobytes() == b.tobytes()
        ref_bank = reference.predictors.named_parameters()
        got_bank = got.predictors.named_parameters()
        assert all(ref_bank[name].tobytes() == got_bank[name].tobytes() for name in ref_bank)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts_with_provenance(self):
        # one optimizer step at this rate overflows the next forward pass
        cfg = TrainConfig(**{**SMALL_TRAIN.__dict__, "learning_rate": 1e150, "epochs": 2})
        with pytest.raises(TrainingError, match="epoch"):
            train(_dataset(), cfg, SMALL_CURRICULUM)

    def test_curriculum_off_degenerate_config_selects_everything(self):
        """One partition per polarity, discard and augmentation off, warm-up
        forced: every round must feed the complete pair pool."""
        cc = CurriculumConfig(
            patience=2,
            positive_partitions=1,
            negative_partitions=1,
            warmup_epochs=10_000,
            augment_fraction=0.0,
        )
        report = train(
            _dataset(), SMALL_TRAIN, cc, Ablations(no_discard=True, no_random_sampling=True)
        )
        assert report.trajectories
        for trace in report.trajectories:
            assert trace.selected_count == trace.pool_count
            assert trace.level == 1

    def test_report_schema_is_stable_across_ablations(self):
        ds = _dataset()
        base = train(ds, SMALL_TRAIN, SMALL_CURRICULUM).to_dict()
        ablated = train(
            ds, SMALL_TRAIN, SMALL_CURRICULUM, Ablations(no_curriculum=True)
        ).to_dict()
        assert set(base) == set(ablated)
        assert ablated["trajectories"] == []
        assert ablated["discard_log"] == []
        assert ablated["config"]["ablations"] == ["no-curriculum"]


class TestAblationNames:
    def test_round_trip(self):
        ab = Ablations.from_names(["no-discard", "no-backward"])
        assert ab.no_discard and ab.no_backward and not ab.no_curriculum
        assert ab.active_names() == ["no-backward", "no-discard"]

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError):
            Ablations.from_names(["no-such-thing"])

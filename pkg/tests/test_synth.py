"""Unit tests for the synthetic dataset generator."""

import numpy as np
import pytest

from corrpace import pairing, synth, trainer
from corrpace.correlation import stream_pair_losses
from corrpace.encoders import encode_all
from corrpace.errors import ConfigError


class TestGeneration:
    def test_same_config_yields_identical_bytes(self, tmp_path):
        cfg = synth.SynthConfig(samples=80, seed=3)
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        synth.save_dataset(synth.generate_dataset(cfg), a)
        synth.save_dataset(synth.generate_dataset(cfg), b)
        assert a.read_bytes() == b.read_bytes()

    def test_labels_cover_the_range_at_default_size(self):
        ds = synth.generate_dataset(synth.SynthConfig(seed=0))
        assert ds.labels.min() < -2.0 and ds.labels.max() > 2.0
        assert np.all(ds.labels >= synth.LABEL_MIN) and np.all(ds.labels <= synth.LABEL_MAX)

    def test_shapes_follow_config(self):
        cfg = synth.SynthConfig(samples=50, feature_widths=(11, 12, 13), seed=1)
        ds = synth.generate_dataset(cfg)
        assert ds.n == 50 and ds.widths == (11, 12, 13)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            synth.SynthConfig(noise_fraction=0.5).validate()
        with pytest.raises(ConfigError):
            synth.SynthConfig(feature_widths=(4, 12, 20)).validate()  # below shared+private
        with pytest.raises(ConfigError):
            synth.SynthConfig(modalities=1, feature_widths=(16,)).validate()


class TestNoiseInjection:
    def test_zero_fraction_leaves_everything_clean(self):
        ds = synth.generate_dataset(synth.SynthConfig(samples=100, noise_fraction=0.0, seed=2))
        assert not ds.noise_flags.any()
        assert np.all(ds.noise_modality == -1)

    def test_exact_count_at_ten_percent(self):
        ds = synth.generate_dataset(synth.SynthConfig(samples=600, noise_fraction=0.1, seed=4))
        assert int(ds.noise_flags.sum()) == 60

    def test_flags_name_the_swapped_modality(self):
        clean = synth.generate_dataset(synth.SynthConfig(samples=60, noise_fraction=0.0, seed=5))
        noisy = synth.inject_noise(clean, 0.2, seed=7)
        changed = 0
        for o in np.flatnonzero(noisy.noise_flags):
            m = int(noisy.noise_modality[o])
            assert m >= 0
            if not np.array_equal(noisy.features[m][o], clean.features[m][o]):
                changed += 1
            for other in range(clean.k):
                if other != m:
                    assert np.array_equal(noisy.features[other][o], clean.features[other][o])
        assert changed == int(noisy.noise_flags.sum())

    def test_donor_rows_come_from_pristine_input(self):
        clean = synth.generate_dataset(synth.SynthConfig(samples=40, noise_fraction=0.0, seed=6))
        noisy = synth.inject_noise(clean, 0.4, seed=8)
        for o in np.flatnonzero(noisy.noise_flags):
            m = int(noisy.noise_modality[o])
            matches = [
                q for q in range(clean.n) if np.array_equal(noisy.features[m][o], clean.features[m][q])
            ]
            assert matches and all(q != o for q in matches)

    def test_fraction_bounds(self):
        ds = synth.generate_dataset(synth.SynthConfig(samples=10, noise_fraction=0.0, seed=0))
        with pytest.raises(ConfigError):
            synth.inject_noise(ds, 0.6, seed=0)


class TestSerialization:
    def test_bit_exact_round_trip(self, tmp_path):
        ds = synth.generate_dataset(synth.SynthConfig(samples=30, noise_fraction=0.2, seed=9))
        path = tmp_path / "ds.txt"
        synth.save_dataset(ds, path)
        loaded = synth.load_dataset(path)
        for a, b in zip(ds.features, loaded.features):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(ds.labels, loaded.labels)
        np.testing.assert_array_equal(ds.noise_flags, loaded.noise_flags)
        np.testing.assert_array_equal(ds.noise_modality, loaded.noise_modality)
        again = tmp_path / "ds2.txt"
        synth.save_dataset(loaded, again)
        assert path.read_bytes() == again.read_bytes()

    def test_reject_foreign_files(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a dataset\n1\n2\n3\n")
        with pytest.raises(ConfigError):
            synth.load_dataset(path)

    def test_strip_noise_flags(self):
        ds = synth.generate_dataset(synth.SynthConfig(samples=40, noise_fraction=0.2, seed=1))
        stripped = synth.strip_noise_flags(ds)
        assert not stripped.noise_flags.any()
        np.testing.assert_array_equal(stripped.features[0], ds.features[0])


def _scorer_mae_vs_constant(shared_dim: int, seed: int):
    """Pretrain the correlation scorer and compare its pair MAE on freshly
    drawn pairs against the best constant predictor."""
    cfg = synth.SynthConfig(
        samples=150,
        feature_widths=(12, 10, 14),
        shared_dim=shared_dim,
        private_dim=3,
        noise_fraction=0.0,
        seed=seed,
    )
    ds = synth.generate_dataset(cfg)
    tc = trainer.TrainConfig(
        pretrain_epochs=15, batch_size=25, embed_dim=8, encoder_hidden=(16,), seed=seed
    )
    rngs = trainer.rng_streams(tc.seed)
    model = trainer.Model.init(ds.widths, tc, rngs["init"])
    scorer = trainer.pretrain_correlation_predictor(ds, model.encoders, tc, rng=rngs["pretrain"])
    rng = np.random.default_rng(999)
    batch = synth.SampleBatch.from_dataset(ds, np.arange(ds.n))
    embs = encode_all(scorer.encoders, ds.features)
    losses, targets = [], []
    for (i, j) in pairing.modality_pairs(ds.k):
        for pairs in (
            pairing.generate_positive_pairs(batch, i, j),
            pairing.generate_negative_pairs(batch, i, j, 4.0, rng, tc.distance_offset),
        ):
            losses.append(stream_pair_losses(scorer.predictors, embs, pairs))
            targets.append(pairs.target)
    losses = np.concatenate(losses)
    targets = np.concatenate(targets)
    baseline = float(np.mean(np.abs(np.median(targets) - targets)))
    return float(np.mean(losses)), baseline


def test_zero_shared_signal_is_a_negative_control():
    """Without cross-modal shared signal the learned scorer cannot beat the
    best constant predictor, and it sits relatively much further from it
    than a scorer trained on data that does carry shared signal."""
    mae0, base0 = _scorer_mae_vs_constant(shared_dim=0, seed=0)
    assert mae0 >= 0.9 * base0
    mae6, base6 = _scorer_mae_vs_constant(shared_dim=6, seed=0)
    assert mae0 / base0 > 1.5 * (mae6 / base6)

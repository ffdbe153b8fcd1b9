"""Tests for random streams, samplers and synthetic tasks."""

from pathlib import Path

import numpy as np
import pytest

from gendisc.core.models import GenerativeModel, validate
from gendisc.core.sampling import (
    SplitMix64,
    as_rng,
    draw_categorical,
    make_feature_task,
    make_tagging_task,
    quantize,
    random_model,
    sample,
    sample_corpus,
)
from gendisc.core.types import LabelSet, ModelKind, ObsSet
from gendisc.exceptions import ModelValidationError
from gendisc.io.formats import write_corpus

GOLDEN_DIR = Path(__file__).parent / "data" / "golden"

# Probability of the first outcome of every binary row; dyadic so the
# corpora depend on the random stream alone.
GOLDEN_TABLES = {
    "nb": {"prior": 0.25, "emission": [0.75, 0.25]},
    "pooledmc": {
        "prior": 0.25,
        "first_emission": [0.75, 0.25],
        "emission_transition": [[0.5, 0.25], [0.75, 0.5]],
    },
    "pooledmc2": {
        "prior": 0.25,
        "first_emission": [0.75, 0.25],
        "second_emission": [[0.5, 0.25], [0.75, 0.5]],
        "emission_transition2": [[[0.75, 0.25], [0.25, 0.75]], [[0.25, 0.5], [0.5, 0.25]]],
    },
    "hmc": {"prior": 0.25, "transition": [0.75, 0.5], "emission": [0.75, 0.25]},
    "hmc2": {
        "prior": 0.25,
        "transition": [0.75, 0.5],
        "transition2": [[0.75, 0.5], [0.5, 0.25]],
        "emission": [0.75, 0.25],
    },
    "hmcplus": {
        "prior": 0.25,
        "transition": [0.75, 0.5],
        "first_emission": [0.75, 0.25],
        "pair_emission": [[0.75, 0.5], [0.5, 0.25]],
    },
}


def _golden_model(name: str) -> GenerativeModel:
    tables = {}
    for table, first in GOLDEN_TABLES[name].items():
        p = np.asarray(first, dtype=float)
        tables[table] = np.stack([p, 1.0 - p], axis=-1)
    return GenerativeModel(ModelKind(name), LabelSet(("A", "B")), ObsSet(("u", "v")), tables)


def _hmc(prior, transition, emission) -> GenerativeModel:
    return GenerativeModel(
        kind=ModelKind.HMC,
        labels=LabelSet(("A", "B")),
        observations=ObsSet(("p", "q")),
        tables={
            "prior": np.array(prior, dtype=float),
            "transition": np.array(transition, dtype=float),
            "emission": np.array(emission, dtype=float),
        },
    )


class TestSplitMix64:
    """Tests for the SplitMix64 stream."""

    def test_golden_values(self):
        outputs = [int(v) for v in SplitMix64(0).next_uint64(3)]
        assert outputs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]

    def test_counter_continues(self):
        rng = SplitMix64(7)
        first = np.concatenate([rng.next_uint64(1), rng.next_uint64(2)])
        np.testing.assert_array_equal(first, SplitMix64(7).next_uint64(3))
        assert rng.counter == 3

    def test_uniform_range(self):
        u = SplitMix64(1).uniform(10_000)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 0.02

    def test_normal_moments(self):
        z = SplitMix64(2).normal(20_001)
        assert z.shape == (20_001,)
        assert abs(z.mean()) < 0.03
        assert abs(z.std() - 1.0) < 0.03

    def test_integers(self):
        values = SplitMix64(3).integers(2, 5, 1000)
        assert set(values.tolist()) == {2, 3, 4}

    def test_spawn(self):
        root = SplitMix64(11)
        assert root.spawn(0).seed == SplitMix64(11).spawn(0).seed
        assert root.spawn(0).seed != root.spawn(1).seed
        assert root.counter == 0

    def test_as_rng(self):
        rng = SplitMix64(5)
        assert as_rng(rng) is rng
        assert as_rng(None).seed == 0
        assert as_rng(9).seed == 9


class TestDrawCategorical:
    """Tests for CDF inversion."""

    def test_skips_zero_entries(self):
        cdf = np.cumsum([0.2, 0.0, 0.8])
        assert draw_categorical(cdf, 0.1) == 0
        assert draw_categorical(cdf, 0.2) == 2

    def test_frequencies(self):
        draws = SplitMix64(4).categorical(np.array([0.1, 0.6, 0.3]), 20_000)
        freq = np.bincount(draws, minlength=3) / draws.size
        np.testing.assert_allclose(freq, [0.1, 0.6, 0.3], atol=0.015)


class TestSample:
    """Tests for ancestral sampling."""

    def test_deterministic_chain(self):
        model = _hmc([1.0, 0.0], [[0.0, 1.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
        seq = sample(model, 5, 123)
        assert seq.x.tolist() == [0, 1, 0, 1, 0]
        assert seq.y.tolist() == [0, 1, 0, 1, 0]

    def test_absorbing_state(self):
        model = _hmc([0.5, 0.5], [[1.0, 0.0], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]])
        for seq in sample_corpus(model, 50, 12, seed=3):
            labels = seq.x.tolist()
            if 0 in labels:
                assert all(v == 0 for v in labels[labels.index(0) :])

    def test_shapes(self, kind):
        seq = sample(random_model(kind, 3, 4, 1), 6, 2)
        assert seq.y.shape == (6,)
        assert seq.x.shape == ((6,) if kind.is_sequence else (1,))
        assert seq.y.max() < 4 and seq.x.max() < 3

    def test_same_seed_same_corpus(self, kind):
        model = random_model(kind, 2, 3, 0)
        a = sample_corpus(model, 5, 4, seed=9)
        b = sample_corpus(model, 5, 4, seed=9)
        assert all(np.array_equal(s.y, t.y) and np.array_equal(s.x, t.x) for s, t in zip(a, b))

    def test_corpus_prefix_stable(self):
        model = random_model("hmc", 2, 3, 0)
        short = sample_corpus(model, 3, 5, seed=1)
        long = sample_corpus(model, 6, 5, seed=1)
        assert all(np.array_equal(s.y, t.y) for s, t in zip(short, long))

    def test_prior_frequencies(self, nb_model):
        corpus = sample_corpus(nb_model, 10_000, 1, seed=5)
        share = np.mean([seq.x[0] == 0 for seq in corpus])
        assert abs(share - 0.6) < 0.02

    def test_invalid_length(self, nb_model):
        with pytest.raises(ValueError):
            sample(nb_model, 0)

    def test_invalid_model(self, nb_model):
        with pytest.raises(ModelValidationError):
            sample(nb_model.with_tables(prior=np.array([0.5, 0.6])), 3)


class TestGoldenCorpora:
    """Checked-in corpora sampled with seed 2024 (4 sequences of length 6)."""

    @pytest.mark.parametrize("name", list(GOLDEN_TABLES))
    def test_sampler_reproduces_golden_bytes(self, name, tmp_path):
        model = _golden_model(name)
        assert validate(model) == []
        suffix = ".tsv" if model.kind.is_sequence else ".txt"
        corpus = sample_corpus(model, 4, 6, seed=2024)
        out = write_corpus(
            tmp_path / f"{name}{suffix}", corpus, model.kind, model.labels, model.observations
        )
        assert out.read_bytes() == (GOLDEN_DIR / f"{name}{suffix}").read_bytes()


class TestRandomModel:
    """Tests for random_model."""

    def test_valid_and_positive(self, kind):
        model = random_model(kind, 3, 4, 8)
        assert validate(model) == []
        assert all((t > 0).all() for t in model.tables.values())
        assert model.labels.names == ("x0", "x1", "x2")
        assert model.observations.names == ("y0", "y1", "y2", "y3")

    def test_seeded(self):
        a, b = random_model("hmc2", 2, 2, 4), random_model("hmc2", 2, 2, 4)
        for name in a.tables:
            np.testing.assert_array_equal(a.table(name), b.table(name))


class TestFeatureTasks:
    """Tests for the synthetic featurized tasks."""

    def test_quantize(self):
        features = np.array([[0.5, -1.0, 2.0], [-0.1, -0.2, -0.3]])
        assert quantize(features).tolist() == [0b101, 0]

    def test_feature_task_shapes(self):
        task = make_feature_task(n_classes=3, d=6, n=100, rng=1, doc_length=2)
        assert task.features.shape == (100, 2, 6)
        assert task.symbols.shape == (100, 2)
        assert task.n_symbols == 64
        assert set(task.labels.tolist()) <= {0, 1, 2}
        assert task.obs_set().names[5] == "000101"

    def test_signs_hide_classes(self):
        task = make_feature_task(n=2000, rng=2)
        extreme = np.isin(task.symbols, [0, task.n_symbols - 1]).mean()
        assert extreme >= 0.95

    def test_too_few_dims(self):
        with pytest.raises(ValueError):
            make_feature_task(n_classes=4, d=4, n=10)

    def test_split(self):
        task = make_feature_task(n=50, rng=3)
        train, test = task.split(40)
        assert (len(train), len(test)) == (40, 10)
        np.testing.assert_array_equal(test.labels, task.labels[40:])
        assert len(train.featurized()) == 40
        assert train.discrete()[0].y.shape == (1,)

    def test_tagging_task(self):
        task = make_tagging_task(n_labels=3, d=4, length=7, n=20, rng=4)
        assert task.kind is ModelKind.HMC
        assert task.labels.shape == (20, 7)
        assert task.featurized()[0].y.shape == (7, 4)

    def test_full_stickiness(self):
        task = make_tagging_task(n_labels=2, d=4, length=9, n=30, rng=5, stickiness=1.0)
        assert all(len(set(row.tolist())) == 1 for row in task.labels)

    def test_invalid_stickiness(self):
        with pytest.raises(ValueError):
            make_tagging_task(stickiness=1.5)

"""Tests for alphabets, model tables, joint laws and Bayes inversion."""

import itertools

import numpy as np
import pytest

from gendisc.core.inversion import as_units, bayes_invert
from gendisc.core.joint import joint_log_prob, kappa_log, label_marginals
from gendisc.core.models import (
    DiscriminativeUnits,
    FeatureHead,
    GenerativeModel,
    require_valid,
    validate,
)
from gendisc.core.types import (
    DecodeResult,
    LabeledSequence,
    LabelSet,
    ModelKind,
    ObsSet,
    PosteriorMarginals,
)
from gendisc.exceptions import (
    AlphabetError,
    InversionError,
    ModelValidationError,
    ShapeError,
)


class TestModelKind:
    """Tests for ModelKind parsing and families."""

    def test_parse_spellings(self):
        assert ModelKind.parse("HMC+") is ModelKind.HMC_PLUS
        assert ModelKind.parse("pooled_mc2") is ModelKind.POOLED_MC2
        assert ModelKind.parse(ModelKind.NB) is ModelKind.NB

    def test_parse_unknown(self):
        with pytest.raises(ValueError, match="Unknown model kind"):
            ModelKind.parse("crf")

    def test_families(self):
        assert {k.family for k in ModelKind if k.is_sequence} == {"hmc"}
        assert {k.family for k in ModelKind if not k.is_sequence} == {"nb"}


class TestAlphabet:
    """Tests for LabelSet / ObsSet."""

    def test_encode_decode(self):
        labels = LabelSet(("a", "b", "c"))
        codes = labels.encode(["c", "a"])
        assert codes.tolist() == [2, 0]
        assert labels.decode(codes) == ["c", "a"]

    def test_unknown_name(self):
        with pytest.raises(AlphabetError):
            ObsSet(("u", "v")).index("w")

    def test_duplicate_names(self):
        with pytest.raises(AlphabetError):
            LabelSet(("a", "a"))

    def test_from_iterable_keeps_order(self):
        assert LabelSet.from_iterable(["b", "a"]).names == ("b", "a")


class TestLabeledSequence:
    """Tests for LabeledSequence shape checks."""

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            LabeledSequence(y=np.array([], dtype=int))

    def test_featurized(self):
        seq = LabeledSequence(y=np.zeros((3, 2)), x=np.array([1]))
        assert seq.is_featurized
        assert seq.length == 3

    def test_check_label_count(self):
        seq = LabeledSequence(y=np.array([0, 1]), x=np.array([0]))
        with pytest.raises(ShapeError):
            seq.check(ModelKind.HMC, 2, 2)
        seq.check(ModelKind.NB, 2, 2)

    def test_check_symbol_range(self):
        seq = LabeledSequence(y=np.array([0, 5]), x=np.array([0]))
        with pytest.raises(AlphabetError):
            seq.check(ModelKind.NB, 2, 2)


class TestResults:
    """Tests for PosteriorMarginals and DecodeResult."""

    def test_marginals_must_normalize(self):
        with pytest.raises(ValueError):
            PosteriorMarginals(np.array([[0.5, 0.6]]))

    def test_marginals_argmax_lowest_index(self):
        m = PosteriorMarginals(np.array([[0.5, 0.5], [0.2, 0.8]]))
        assert m.argmax().tolist() == [0, 1]

    def test_decode_result_equality(self):
        assert DecodeResult(np.array([1, 0]), -2.0) == DecodeResult([1, 0], -2.0)
        assert DecodeResult([1], -2.0, 1) != DecodeResult([1], -2.0, 0)


class TestValidate:
    """Tests for model validation."""

    def test_valid_model(self, nb_model):
        assert validate(nb_model) == []

    def test_random_models_valid(self, kind, make_random_model):
        assert validate(make_random_model(kind)) == []

    def test_row_sum_violation(self, sticky_hmc):
        bad = sticky_hmc.with_tables(transition=np.array([[0.9, 0.1], [0.5, 0.6]]))
        violations = validate(bad)
        assert len(violations) == 1
        assert violations[0].table == "transition"
        assert violations[0].index == (1,)
        assert "row sum 1.1" in violations[0].message

    def test_missing_and_unexpected_tables(self, nb_model):
        tables = dict(nb_model.tables)
        tables["transition"] = tables.pop("emission")
        bad = GenerativeModel(nb_model.kind, nb_model.labels, nb_model.observations, tables)
        messages = {(v.table, v.message) for v in validate(bad)}
        assert ("emission", "missing") in messages
        assert ("transition", "unexpected table for nb") in messages

    def test_negative_entry(self, nb_model):
        bad = nb_model.with_tables(prior=np.array([1.2, -0.2]))
        assert "not a probability" in validate(bad)[0].message

    def test_require_valid_raises(self, sticky_hmc):
        bad = sticky_hmc.with_tables(prior=np.array([0.3, 0.3]))
        with pytest.raises(ModelValidationError, match="prior"):
            require_valid(bad, source="test")

    def test_zero_marginal_flagged(self, sticky_hmc):
        units = bayes_invert(sticky_hmc, horizon=2)
        bad = units.with_tables(marginals=np.array([[1.0, 0.0]]))
        assert any(v.message == "zero denominator marginal" for v in validate(bad))

    def test_head_output_count(self, nb_model):
        units = DiscriminativeUnits(
            ModelKind.NB,
            nb_model.labels,
            None,
            {"prior": nb_model.table("prior")},
            heads={"posterior": FeatureHead.zeros(3, 2)},
        )
        assert any("3 outputs" in v.message for v in validate(units))


class TestFeatureHead:
    """Tests for FeatureHead."""

    def test_zero_head_is_uniform(self):
        probs = FeatureHead.zeros(4, 3).predict_proba(np.ones((2, 3)))
        np.testing.assert_allclose(probs, 0.25)

    def test_input_dimension_checked(self):
        with pytest.raises(ShapeError):
            FeatureHead.zeros(2, 3).logits(np.ones(4))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        head = FeatureHead(rng.normal(size=(3, 2)), rng.normal(size=3))
        features = rng.normal(size=(3, 2))
        targets = np.array([0, 2, 1])
        _, dW, db = head.loss_and_gradients(features, targets)

        h = 1e-5
        for params, grad in ((head.W, dW), (head.b, db)):
            for idx in np.ndindex(params.shape):
                up, down = params.copy(), params.copy()
                up[idx] += h
                down[idx] -= h
                if params.ndim == 2:
                    lu = FeatureHead(up, head.b).loss_and_gradients(features, targets)[0]
                    ld = FeatureHead(down, head.b).loss_and_gradients(features, targets)[0]
                else:
                    lu = FeatureHead(head.W, up).loss_and_gradients(features, targets)[0]
                    ld = FeatureHead(head.W, down).loss_and_gradients(features, targets)[0]
                assert abs((lu - ld) / (2 * h) - grad[idx]) <= 1e-6


class TestJoint:
    """Tests for joint probabilities and the kappa factor."""

    def test_nb_joint(self, nb_model, uv):
        seq = LabeledSequence(y=uv, x=np.array([0]))
        assert joint_log_prob(nb_model, seq) == pytest.approx(np.log(0.126))

    def test_joint_needs_labels(self, nb_model, uv):
        with pytest.raises(ShapeError):
            joint_log_prob(nb_model, LabeledSequence(y=uv))

    def test_nb_kappa(self, nb_model, uv):
        result = kappa_log(nb_model, uv)
        assert result.log_kappa == pytest.approx(-np.log(0.25))
        assert not result.zero_probability

    def test_kappa_zero_probability(self, nb_model):
        model = nb_model.with_tables(emission=np.array([[1.0, 0.0], [1.0, 0.0]]))
        result = kappa_log(model, np.array([1]))
        assert result.zero_probability
        assert result.log_kappa == np.inf

    def test_hmc_joint_by_hand(self, sticky_hmc):
        seq = LabeledSequence(y=np.array([0, 2]), x=np.array([0, 1]))
        expected = np.log(0.5 * 0.6 * 0.1 * 0.6)
        assert joint_log_prob(sticky_hmc, seq) == pytest.approx(expected)

    def test_label_marginals_propagate(self, sticky_hmc):
        marg = label_marginals(sticky_hmc, 3)
        np.testing.assert_allclose(marg[0], [0.5, 0.5])
        np.testing.assert_allclose(marg[1], [0.55, 0.45])
        np.testing.assert_allclose(marg[1] @ sticky_hmc.table("transition"), marg[2])

    @pytest.mark.parametrize("length", [1, 3])
    def test_joint_sums_to_one(self, kind, make_random_model, length):
        model = make_random_model(kind, n_labels=2, n_symbols=2, seed=length)
        n_labels = length if kind.is_sequence else 1
        total = 0.0
        for y in itertools.product(range(2), repeat=length):
            for x in itertools.product(range(2), repeat=n_labels):
                seq = LabeledSequence(y=np.array(y), x=np.array(x))
                total += np.exp(joint_log_prob(model, seq))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestBayesInvert:
    """Tests for bayes_invert."""

    def test_nb_posterior_unit(self, nb_model):
        units = bayes_invert(nb_model)
        np.testing.assert_allclose(units.table("posterior")[0, 0], [0.84, 0.16])
        np.testing.assert_allclose(units.table("posterior")[0, 1], [0.36, 0.64])

    def test_units_valid_for_every_kind(self, kind, make_random_model):
        units = bayes_invert(make_random_model(kind, seed=11), horizon=5)
        assert validate(units) == []
        assert units.marginal_mode == "propagated"

    def test_horizon_rows(self, sticky_hmc):
        units = bayes_invert(sticky_hmc, horizon=4)
        assert units.table("marginals").shape == (4, 2)
        assert units.horizon == 4

    def test_reference_marginals(self, sticky_hmc):
        units = bayes_invert(sticky_hmc, marginals=np.array([0.5, 0.5]))
        assert units.marginal_mode == "reference"
        assert units.table("posterior").shape == (1, 3, 2)

    def test_reference_rejected_for_nb(self, nb_model):
        with pytest.raises(ValueError):
            bayes_invert(nb_model, marginals=np.array([0.5, 0.5]))

    def test_zero_evidence(self, nb_model):
        model = nb_model.with_tables(emission=np.array([[1.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(InversionError, match="posterior"):
            bayes_invert(model)

    def test_invalid_model_rejected(self, nb_model):
        with pytest.raises(ModelValidationError):
            bayes_invert(nb_model.with_tables(prior=np.array([0.5, 0.6])))

    def test_as_units_passthrough(self, nb_model):
        units = bayes_invert(nb_model)
        assert as_units(units) is units
        assert as_units(nb_model, 100).kind is ModelKind.NB

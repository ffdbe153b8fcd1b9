"""Tests for the verification harness and the featurized experiment."""

import json
from types import SimpleNamespace

import numpy as np
import pytest

from gendisc import pipeline
from gendisc.config import OutputConfig, RunConfig, TaskConfig, TrainConfig, VerifyConfig
from gendisc.core.inversion import bayes_invert
from gendisc.exceptions import GendiscError
from gendisc.pipeline import (
    CHECKS,
    run_feature_experiment,
    run_verification,
    sabotage_units,
    trial_seed,
    verify_trial,
)


def _small_run(tmp_path=None, plots=False, overwrite=False) -> RunConfig:
    return RunConfig(
        train=TrainConfig(epochs=3),
        task=TaskConfig(n_train=60, n_test=20, dim=4, sequence_length=5),
        output=OutputConfig(output_dir=tmp_path, save_plots=plots, overwrite=overwrite),
    )


class TestVerification:
    """Tests for run_verification and its helpers."""

    def test_every_kind_passes(self):
        report = run_verification(VerifyConfig(trials=4, seed=42))
        assert report.ok, report.summary()
        assert report.failures == []
        assert report.first_failing_seed is None
        for name, kind_report in report.kinds.items():
            assert kind_report.trials == 4
            expected_efb = 4 if name == "hmc" else None
            assert kind_report.passed["efb"] == expected_efb
        assert report.summary().endswith("PASS")

    def test_sabotage_is_caught(self):
        config = VerifyConfig(trials=3, seed=1, kinds=["nb", "hmc2"], sabotage=True)
        report = run_verification(config)
        assert not report.ok
        assert {f.kind for f in report.failures} == {"nb", "hmc2"}
        assert "--replay" in report.summary()
        assert report.to_dict()["failing_seed"] == report.failures[0].seed

    def test_deterministic(self):
        config = VerifyConfig(trials=2, seed=9, kinds=["pooledmc2", "hmcplus"])
        first = json.dumps(run_verification(config).to_dict())
        assert json.dumps(run_verification(config).to_dict()) == first

    def test_replay_matches_run(self):
        config = VerifyConfig(trials=2, seed=3, kinds=["hmc"], sabotage=True)
        report = run_verification(config)
        failure = report.failures[0]
        assert failure.seed == trial_seed(3, 3, failure.trial)
        replayed = verify_trial("hmc", failure.seed, config)
        assert replayed[failure.check] == failure.detail

    def test_trial_results_cover_checks(self):
        results = verify_trial("hmc", 5)
        assert set(results) == set(CHECKS)
        assert all(message is None for message in results.values())
        assert "efb" not in verify_trial("nb", 5)

    def test_progress_callback(self):
        seen = []
        run_verification(VerifyConfig(trials=2, kinds=["nb"]), lambda k, n: seen.append((k, n)))
        assert seen == [("nb", 1), ("nb", 2)]

    @pytest.mark.parametrize(
        ("kind", "seed"),
        [
            ("hmc", 13105496203538960410),
            ("hmc", 10520357307671972561),
            ("hmcplus", 13610735693144316143),
        ],
    )
    def test_exact_map_ties_pass(self, kind, seed):
        results = verify_trial(kind, seed)
        assert results == {check: None for check in results}

    def test_kappa_tolerance_is_absolute(self, monkeypatch):
        # A 5e-9 gap on a log objective near -1000 must still fail at 1e-9.
        kappa = SimpleNamespace(log_kappa=0.0, zero_probability=False)
        monkeypatch.setattr(pipeline, "kappa_log", lambda model, y: kappa)
        monkeypatch.setattr(pipeline, "joint_log_prob", lambda model, seq: -1000.0)
        monkeypatch.setattr(pipeline, "discriminative_log_prob", lambda units, seq: -1000.0 + 5e-9)
        results = verify_trial("nb", 5)
        assert results["kappa"] is not None
        assert results["argmax"] is None

    @pytest.mark.slow
    def test_default_run_passes(self):
        report = run_verification(VerifyConfig())
        assert report.ok, report.summary()
        assert all(r.trials == 100 for r in report.kinds.values())

    def test_sabotage_units_flips_labels(self, nb_model):
        units = bayes_invert(nb_model)
        flipped = sabotage_units(units)
        np.testing.assert_array_equal(
            flipped.table("posterior"), units.table("posterior")[..., ::-1]
        )


class TestFeatureExperiment:
    """Tests for run_feature_experiment."""

    def test_small_run(self):
        result = run_feature_experiment(_small_run())
        assert set(result.accuracies) == {
            "generative",
            "discriminative_tables",
            "discriminative_head",
        }
        assert result.chance == 0.5
        assert result.paths is None
        data = result.to_dict()
        assert data["gap"] == pytest.approx(result.gap)
        assert "GENDISC EXPERIMENT" in result.summary()

    def test_writes_outputs(self, temp_output_dir):
        result = run_feature_experiment(_small_run(temp_output_dir, plots=True), "hmc")
        for name in ("report", "training_log", "generative_model", "discriminative_model"):
            assert result.saved_files[name].exists(), name
        assert {"plot_accuracy", "plot_loss", "plot_marginals"} <= set(result.saved_files)
        report = json.loads(result.saved_files["report"].read_text())
        assert report["family"] == "hmc"

    def test_refuses_overwrite(self, temp_output_dir):
        run_feature_experiment(_small_run(temp_output_dir))
        with pytest.raises(GendiscError):
            run_feature_experiment(_small_run(temp_output_dir))
        run_feature_experiment(_small_run(temp_output_dir, overwrite=True))

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            run_feature_experiment(_small_run(), family="crf")

    def test_no_separation_is_chance(self):
        config = RunConfig(
            train=TrainConfig(epochs=20),
            task=TaskConfig(separation=0.0, n_train=2000, n_test=1000),
        )
        result = run_feature_experiment(config)
        assert result.accuracies["discriminative_head"] == pytest.approx(0.5, abs=0.07)
        assert result.accuracies["generative"] == pytest.approx(0.5, abs=0.07)

    @pytest.mark.slow
    def test_feature_head_beats_quantized_model(self):
        result = run_feature_experiment(RunConfig())
        assert result.accuracies["discriminative_head"] >= 0.75
        assert result.gap >= 0.10

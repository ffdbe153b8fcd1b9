"""Tests for configuration management."""

from pathlib import Path

import pytest

from gendisc.config import (
    MODEL_KINDS,
    OutputConfig,
    RunConfig,
    TaskConfig,
    TrainConfig,
    VerifyConfig,
    generate_example_config,
    get_default_config,
)


class TestTrainConfig:
    """Tests for TrainConfig."""

    def test_default_values(self):
        config = TrainConfig()
        assert config.smoothing_alpha == 1.0
        assert config.learning_rate == 0.1
        assert config.epochs == 200
        assert config.batch_size == 64
        assert config.momentum == 0.9
        assert config.marginals == "empirical"
        assert config.pair_form == "pair"

    def test_zero_smoothing_allowed(self):
        assert TrainConfig(smoothing_alpha=0.0).smoothing_alpha == 0.0

    @pytest.mark.parametrize(
        "changes",
        [
            {"smoothing_alpha": -0.5},
            {"learning_rate": 0.0},
            {"epochs": -1},
            {"batch_size": 0},
            {"momentum": 1.0},
            {"marginals": "uniform"},
            {"horizon": 0},
            {"pair_form": "triple"},
        ],
    )
    def test_rejects_invalid(self, changes):
        with pytest.raises(ValueError):
            TrainConfig(**changes)


class TestVerifyConfig:
    """Tests for VerifyConfig."""

    def test_default_values(self):
        config = VerifyConfig()
        assert config.trials == 100
        assert config.max_labels == 4
        assert config.max_symbols == 5
        assert config.max_length == 8
        assert config.tolerance == 1e-9
        assert config.kinds == list(MODEL_KINDS)
        assert config.sabotage is False

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="crf"):
            VerifyConfig(kinds=["nb", "crf"])

    def test_rejects_small_alphabets(self):
        with pytest.raises(ValueError):
            VerifyConfig(max_labels=1)

    def test_kinds_not_shared(self):
        a = VerifyConfig()
        a.kinds.append("nb")
        assert VerifyConfig().kinds == list(MODEL_KINDS)


class TestTaskConfig:
    """Tests for TaskConfig."""

    def test_default_values(self):
        config = TaskConfig()
        assert config.n_classes == 2
        assert config.dim == 8
        assert config.separation == 2.0
        assert config.n_train == 5000
        assert config.n_test == 1000

    def test_dim_limit(self):
        TaskConfig(dim=16)
        with pytest.raises(ValueError, match="dim"):
            TaskConfig(dim=17)

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError):
            TaskConfig(noise=-1.0)


class TestOutputConfig:
    """Tests for OutputConfig."""

    def test_default_values(self):
        config = OutputConfig()
        assert config.output_dir is None
        assert config.save_plots is False
        assert config.plot_dpi == 150

    def test_output_dir_conversion(self):
        config = OutputConfig(output_dir="/some/path")
        assert isinstance(config.output_dir, Path)


class TestRunConfig:
    """Tests for the combined RunConfig."""

    def test_default_config(self):
        config = get_default_config()
        assert isinstance(config, RunConfig)
        assert isinstance(config.train, TrainConfig)
        assert isinstance(config.verify, VerifyConfig)
        assert config.log_level == "WARNING"

    def test_from_dict(self):
        data = {
            "log_level": "DEBUG",
            "train": {"smoothing_alpha": 0.5},
            "verify": {"trials": 3, "kinds": ["hmc"]},
        }
        config = RunConfig.from_dict(data)
        assert config.log_level == "DEBUG"
        assert config.train.smoothing_alpha == 0.5
        assert config.verify.kinds == ["hmc"]
        assert config.task.dim == 8

    def test_from_dict_validates(self):
        with pytest.raises(ValueError):
            RunConfig.from_dict({"train": {"momentum": 2.0}})

    def test_roundtrip(self):
        original = RunConfig(train=TrainConfig(epochs=7), output=OutputConfig(output_dir="out"))
        restored = RunConfig.from_dict(original.to_dict())
        assert restored.train.epochs == 7
        assert restored.output.output_dir == Path("out")

    def test_from_env(self, monkeypatch):
        monkeypatch.setenv("GENDISC_TRAIN_EPOCHS", "12")
        monkeypatch.setenv("GENDISC_VERIFY_SEED", "5")
        monkeypatch.setenv("GENDISC_OUTPUT_OVERWRITE", "yes")
        config = RunConfig.from_env()
        assert config.train.epochs == 12
        assert config.verify.seed == 5
        assert config.output.overwrite is True

    def test_unsupported_suffix(self, tmp_path):
        with pytest.raises(ValueError, match="Unsupported"):
            RunConfig.from_file(tmp_path / "config.ini")


class TestConfigFiles:
    """Tests for example config generation and loading."""

    def test_toml_example_loads(self, tmp_path):
        path = tmp_path / "gendisc.toml"
        generate_example_config(path, format="toml")
        assert RunConfig.from_file(path) == RunConfig()

    def test_yaml_example_loads(self, tmp_path):
        pytest.importorskip("yaml")
        path = tmp_path / "gendisc.yaml"
        generate_example_config(path, format="yaml")
        assert RunConfig.from_file(path) == RunConfig()

    def test_yaml_roundtrip(self, tmp_path):
        pytest.importorskip("yaml")
        path = tmp_path / "saved.yaml"
        RunConfig(task=TaskConfig(dim=4)).to_yaml(path)
        assert RunConfig.from_yaml(path).task.dim == 4

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            generate_example_config(tmp_path / "x.ini", format="ini")

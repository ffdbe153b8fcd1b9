"""Configuration management for gendisc.

Provides dataclass-based configuration with support for:
- YAML/TOML configuration files
- Environment variables
- Programmatic configuration
- Defaults matching the verification and experiment protocols
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

MODEL_KINDS = ("nb", "pooledmc", "pooledmc2", "hmc", "hmc2", "hmcplus")
MARGINAL_MODES = ("empirical", "propagated")
PAIR_FORMS = ("pair", "marginal")


def _truthy(value: str) -> bool:
    return value.lower() in ("true", "1", "yes")


@dataclass
class TrainConfig:
    """Configuration for table estimation and feature-head training."""

    # Additive smoothing for count-based tables (0 = plain MLE)
    smoothing_alpha: float = 1.0

    # Gradient descent
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 64
    momentum: float = 0.9

    # Seed for mini-batch shuffling
    seed: int = 0

    # How HMC family label marginals are estimated: label frequency or chain propagation
    marginals: str = "empirical"

    # Rows of positional tables when marginals are propagated
    horizon: int = 64

    # HMC+ discriminative step form
    pair_form: str = "pair"

    def __post_init__(self) -> None:
        """Validate training parameters."""
        if self.smoothing_alpha < 0:
            raise ValueError(f"smoothing_alpha must be >= 0, got {self.smoothing_alpha}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.marginals not in MARGINAL_MODES:
            raise ValueError(f"marginals must be one of {MARGINAL_MODES}, got {self.marginals!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.pair_form not in PAIR_FORMS:
            raise ValueError(f"pair_form must be one of {PAIR_FORMS}, got {self.pair_form!r}")


@dataclass
class VerifyConfig:
    """Configuration for the randomized construction-equivalence checks."""

    # Random models per kind
    trials: int = 100
    seed: int = 0

    # Upper bounds of the random problem sizes (lower bounds are 2, 2, 1)
    max_labels: int = 4
    max_symbols: int = 5
    max_length: int = 8

    # Absolute tolerance for posterior and kappa checks
    tolerance: float = 1e-9

    # Kinds to check
    kinds: list[str] = field(default_factory=lambda: list(MODEL_KINDS))

    # Corrupt one posterior unit to prove the harness reports failures
    sabotage: bool = False

    def __post_init__(self) -> None:
        """Validate verification parameters."""
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.max_labels < 2 or self.max_symbols < 2 or self.max_length < 1:
            raise ValueError("max_labels and max_symbols must be >= 2, max_length >= 1")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        unknown = [k for k in self.kinds if k not in MODEL_KINDS]
        if unknown:
            raise ValueError(f"Unknown model kinds: {unknown}")


@dataclass
class TaskConfig:
    """Configuration for the synthetic featurized experiment."""

    n_classes: int = 2
    dim: int = 8

    # Distance between class means, noise SD and common-mode cluster offset
    separation: float = 2.0
    noise: float = 1.0
    offset: float = 3.0

    n_train: int = 5000
    n_test: int = 1000

    # Feature vectors per document (NB family task)
    doc_length: int = 1

    # Tagging task (HMC family)
    sequence_length: int = 10
    stickiness: float = 0.8

    seed: int = 0

    def __post_init__(self) -> None:
        """Validate task parameters."""
        if self.n_classes < 2 or self.dim < 2:
            raise ValueError("n_classes and dim must be >= 2")
        if self.dim > 16:
            raise ValueError(f"dim must be <= 16 for the quantized baseline, got {self.dim}")
        if self.n_train < 1 or self.n_test < 1 or self.doc_length < 1:
            raise ValueError("n_train, n_test and doc_length must be >= 1")
        if self.noise < 0 or self.separation < 0:
            raise ValueError("noise and separation must be >= 0")


@dataclass
class OutputConfig:
    """Configuration for output files and formats."""

    # Output directory (None = auto-generate in the working directory)
    output_dir: Path | None = None

    # Plotting options
    save_plots: bool = False
    plot_dpi: int = 150
    plot_format: str = "png"

    # Overwrite existing files
    overwrite: bool = False

    def __post_init__(self) -> None:
        """Convert output_dir to Path if provided."""
        if self.output_dir is not None:
            self.output_dir = Path(self.output_dir)


@dataclass
class RunConfig:
    """Main configuration combining all sub-configurations.

    Example:
        >>> config = RunConfig(train=TrainConfig(smoothing_alpha=0.0))
        >>> # Or load from file
        >>> config = RunConfig.from_yaml("gendisc.yaml")

    """

    train: TrainConfig = field(default_factory=TrainConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    # Logging level
    log_level: str = "WARNING"

    def to_dict(self) -> dict[str, Any]:
        """Convert configuration to dictionary."""
        result = asdict(self)
        if result["output"]["output_dir"] is not None:
            result["output"]["output_dir"] = str(result["output"]["output_dir"])
        return result

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        """Create configuration from dictionary."""
        data = dict(data)
        train = TrainConfig(**data.pop("train", {}))
        verify = VerifyConfig(**data.pop("verify", {}))
        task = TaskConfig(**data.pop("task", {}))
        output = OutputConfig(**data.pop("output", {}))
        return cls(train=train, verify=verify, task=task, output=output, **data)

    @classmethod
    def from_yaml(cls, path: str | Path) -> RunConfig:
        """Load configuration from YAML file."""
        try:
            import yaml
        except ImportError as err:
            raise ImportError(
                "PyYAML is required for YAML config files: pip install pyyaml"
            ) from err

        path = Path(path)
        with path.open() as f:
            data = yaml.safe_load(f)

        logger.info(f"Loaded configuration from {path}")
        return cls.from_dict(data or {})

    @classmethod
    def from_toml(cls, path: str | Path) -> RunConfig:
        """Load configuration from TOML file."""
        try:
            import tomllib
        except ImportError:
            try:
                import tomli as tomllib
            except ImportError as err:
                raise ImportError(
                    "tomli is required for TOML config files on Python < 3.11"
                ) from err

        path = Path(path)
        with path.open("rb") as f:
            data = tomllib.load(f)

        logger.info(f"Loaded configuration from {path}")
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        """Load configuration from file, auto-detecting format."""
        path = Path(path)
        suffix = path.suffix.lower()

        if suffix in (".yaml", ".yml"):
            return cls.from_yaml(path)
        elif suffix == ".toml":
            return cls.from_toml(path)
        else:
            raise ValueError(f"Unsupported config file format: {suffix}")

    def to_yaml(self, path: str | Path) -> None:
        """Save configuration to YAML file."""
        try:
            import yaml
        except ImportError as err:
            raise ImportError(
                "PyYAML is required for YAML config files: pip install pyyaml"
            ) from err

        path = Path(path)
        with path.open("w") as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)

        logger.info(f"Saved configuration to {path}")

    @classmethod
    def from_env(cls, prefix: str = "GENDISC_") -> RunConfig:
        """Create configuration from environment variables.

        Environment variables are expected in the format:
        GENDISC_LOG_LEVEL, GENDISC_TRAIN_SMOOTHING_ALPHA, etc.
        """
        data: dict[str, Any] = {}

        env_mappings = {
            "LOG_LEVEL": "log_level",
            "TRAIN_SMOOTHING_ALPHA": ("train.smoothing_alpha", float),
            "TRAIN_LEARNING_RATE": ("train.learning_rate", float),
            "TRAIN_EPOCHS": ("train.epochs", int),
            "TRAIN_BATCH_SIZE": ("train.batch_size", int),
            "TRAIN_SEED": ("train.seed", int),
            "TRAIN_MARGINALS": "train.marginals",
            "VERIFY_TRIALS": ("verify.trials", int),
            "VERIFY_SEED": ("verify.seed", int),
            "TASK_SEED": ("task.seed", int),
            "OUTPUT_DIR": "output.output_dir",
            "OUTPUT_OVERWRITE": ("output.overwrite", _truthy),
            "OUTPUT_SAVE_PLOTS": ("output.save_plots", _truthy),
        }

        for env_key, mapping in env_mappings.items():
            env_value = os.environ.get(f"{prefix}{env_key}")
            if env_value is not None:
                if isinstance(mapping, tuple):
                    key, converter = mapping
                    value = converter(env_value)
                else:
                    key = mapping
                    value = env_value

                # Handle nested keys
                if "." in key:
                    parts = key.split(".")
                    d = data
                    for part in parts[:-1]:
                        d = d.setdefault(part, {})
                    d[parts[-1]] = value
                else:
                    data[key] = value

        return cls.from_dict(data) if data else cls()


def get_default_config() -> RunConfig:
    """Get a default configuration instance."""
    return RunConfig()


_EXAMPLE_YAML = """# gendisc Configuration File
# ==========================
# All available configuration options with their default values.

# Logging
log_level: WARNING  # DEBUG, INFO, WARNING, ERROR

# Estimation and training
train:
  smoothing_alpha: 1.0  # Additive smoothing (0 = plain MLE)
  learning_rate: 0.1  # Feature-head gradient step
  epochs: 200
  batch_size: 64
  momentum: 0.9
  seed: 0  # Mini-batch shuffling
  marginals: empirical  # empirical | propagated
  horizon: 64  # Positional rows for propagated marginals
  pair_form: pair  # HMC+ discriminative step: pair | marginal

# Randomized equivalence checks
verify:
  trials: 100  # Random models per kind
  seed: 0
  max_labels: 4
  max_symbols: 5
  max_length: 8
  tolerance: 1.0e-9
  kinds: [nb, pooledmc, pooledmc2, hmc, hmc2, hmcplus]
  sabotage: false

# Synthetic featurized experiment
task:
  n_classes: 2
  dim: 8
  separation: 2.0  # Distance between class means
  noise: 1.0  # Per-dimension noise SD
  offset: 3.0  # Common-mode cluster offset
  n_train: 5000
  n_test: 1000
  doc_length: 1
  sequence_length: 10
  stickiness: 0.8
  seed: 0

# Output Settings
output:
  output_dir: null  # Output directory (null = auto-generate)
  save_plots: false
  plot_dpi: 150
  plot_format: png
  overwrite: false
"""

_EXAMPLE_TOML = """# gendisc Configuration File
log_level = "WARNING"

[train]
smoothing_alpha = 1.0
learning_rate = 0.1
epochs = 200
batch_size = 64
momentum = 0.9
seed = 0
marginals = "empirical"
horizon = 64
pair_form = "pair"

[verify]
trials = 100
seed = 0
max_labels = 4
max_symbols = 5
max_length = 8
tolerance = 1.0e-9
kinds = ["nb", "pooledmc", "pooledmc2", "hmc", "hmc2", "hmcplus"]
sabotage = false

[task]
n_classes = 2
dim = 8
separation = 2.0
noise = 1.0
offset = 3.0
n_train = 5000
n_test = 1000
doc_length = 1
sequence_length = 10
stickiness = 0.8
seed = 0

[output]
save_plots = false
plot_dpi = 150
plot_format = "png"
overwrite = false
"""


def generate_example_config(path: str | Path, format: str = "yaml") -> None:
    """Generate an example configuration file with all options documented.

    Args:
        path: Output file path
        format: 'yaml' or 'toml'

    """
    if format == "yaml":
        import importlib.util

        if importlib.util.find_spec("yaml") is None:
            raise ImportError("PyYAML required: pip install pyyaml")
        Path(path).write_text(_EXAMPLE_YAML)
    elif format == "toml":
        Path(path).write_text(_EXAMPLE_TOML)
    else:
        raise ValueError(f"Unsupported format: {format}")

    logger.info(f"Generated example config at {path}")

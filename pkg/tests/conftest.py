"""
Pytest configuration and fixtures for gendisc tests.
"""

from pathlib import Path

import matplotlib
import numpy as np
import pytest

matplotlib.use("Agg")

from gendisc.core.models import GenerativeModel  # noqa: E402
from gendisc.core.sampling import random_model  # noqa: E402
from gendisc.core.types import LabeledSequence, LabelSet, ModelKind, ObsSet  # noqa: E402
from gendisc.io.serialization import save_model  # noqa: E402


@pytest.fixture
def nb_model() -> GenerativeModel:
    """Two-class Naive Bayes with hand-checkable tables.

    p(x) = (0.6, 0.4), p(y|a) = (0.7, 0.3), p(y|b) = (0.2, 0.8)
    """
    return GenerativeModel(
        kind=ModelKind.NB,
        labels=LabelSet(("a", "b")),
        observations=ObsSet(("u", "v")),
        tables={
            "prior": np.array([0.6, 0.4]),
            "emission": np.array([[0.7, 0.3], [0.2, 0.8]]),
        },
    )


@pytest.fixture
def uv() -> np.ndarray:
    """Observation sequence (u, v)."""
    return np.array([0, 1])


@pytest.fixture
def sticky_hmc() -> GenerativeModel:
    """Well-conditioned 2-state HMC: sticky transitions, informative emissions."""
    return GenerativeModel(
        kind=ModelKind.HMC,
        labels=LabelSet(("A", "B")),
        observations=ObsSet(("p", "q", "r")),
        tables={
            "prior": np.array([0.5, 0.5]),
            "transition": np.array([[0.9, 0.1], [0.2, 0.8]]),
            "emission": np.array([[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]]),
        },
    )


@pytest.fixture(params=[k.value for k in ModelKind])
def kind(request) -> ModelKind:
    """Every model kind."""
    return ModelKind(request.param)


@pytest.fixture
def make_random_model():
    """Factory for seeded random strictly-positive models."""

    def _make(kind, n_labels: int = 3, n_symbols: int = 3, seed: int = 0) -> GenerativeModel:
        return random_model(kind, n_labels, n_symbols, seed)

    return _make


@pytest.fixture
def nb_corpus() -> list[LabeledSequence]:
    """Tiny labeled NB corpus covering every (label, symbol) context."""
    return [
        LabeledSequence(y=np.array([0, 0, 1]), x=np.array([0])),
        LabeledSequence(y=np.array([1, 1, 0]), x=np.array([1])),
        LabeledSequence(y=np.array([0, 1, 0]), x=np.array([0])),
        LabeledSequence(y=np.array([1, 0, 1]), x=np.array([1])),
    ]


@pytest.fixture
def temp_output_dir(tmp_path: Path) -> Path:
    """Temporary directory for output files."""
    output_dir = tmp_path / "gendisc_output"
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


@pytest.fixture
def nb_model_file(nb_model: GenerativeModel, temp_output_dir: Path) -> Path:
    """The NB example model written to disk."""
    return save_model(temp_output_dir / "nb.json", nb_model)


@pytest.fixture
def hmc_model_file(sticky_hmc: GenerativeModel, temp_output_dir: Path) -> Path:
    """The sticky HMC written to disk."""
    return save_model(temp_output_dir / "hmc.json", sticky_hmc)

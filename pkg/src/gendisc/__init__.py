"""gendisc - generative models and their discriminative constructions.

A Python package for building the same classifier two ways: from the
generative tables of Naive Bayes, Pooled Markov chain and hidden Markov
chain models, or from the posterior units obtained by inverting them with
Bayes' rule. Includes exact decoders, a brute-force oracle, count-based
and feature-head training, and a randomized equivalence check.

License: MIT
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("gendisc")
except PackageNotFoundError:
    __version__ = "0.1.0.dev0"

from gendisc.config import RunConfig
from gendisc.core.estimation import fit_discriminative_tables, fit_generative, train_feature_head
from gendisc.core.inference import classify, posterior_marginals
from gendisc.core.inversion import as_units, bayes_invert
from gendisc.core.models import DiscriminativeUnits, GenerativeModel
from gendisc.io.serialization import load_model, save_model
from gendisc.pipeline import (
    ExperimentResult,
    VerificationReport,
    run_feature_experiment,
    run_verification,
)

__all__ = [
    "__version__",
    "RunConfig",
    "GenerativeModel",
    "DiscriminativeUnits",
    "bayes_invert",
    "as_units",
    "classify",
    "posterior_marginals",
    "fit_generative",
    "fit_discriminative_tables",
    "train_feature_head",
    "load_model",
    "save_model",
    "VerificationReport",
    "ExperimentResult",
    "run_verification",
    "run_feature_experiment",
]

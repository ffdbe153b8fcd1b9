"""Core modules for gendisc.

This package contains the models and algorithms:
- types, models: alphabets, sequences, generative tables, discriminative units
- joint, inversion: exact joint laws, kappa and Bayes inversion
- classifiers, sequences, inference: NB and HMC family decoders
- oracle: brute-force enumeration
- estimation: count-based fitting and feature-head training
- sampling: seeded samplers, random models and featurized tasks
- metrics: accuracy and per-label scores
"""

from gendisc.core.estimation import (
    CountAccumulator,
    TrainingResult,
    fit_discriminative_tables,
    fit_generative,
    train_feature_head,
)
from gendisc.core.inference import (
    classify,
    conditional_log_prob,
    discriminative_log_prob,
    heldout_log_likelihood,
    posterior_marginals,
)
from gendisc.core.inversion import as_units, bayes_invert
from gendisc.core.joint import joint_log_prob, kappa_log
from gendisc.core.metrics import MetricsReport, compute_metrics
from gendisc.core.models import (
    DiscriminativeUnits,
    FeatureHead,
    GenerativeModel,
    Violation,
    require_valid,
    validate,
)
from gendisc.core.oracle import (
    attains_map,
    brute_force_map,
    brute_force_marginals,
    brute_force_posterior,
)
from gendisc.core.sampling import (
    FeatureDataset,
    SplitMix64,
    make_feature_task,
    make_tagging_task,
    random_model,
    sample,
    sample_corpus,
)
from gendisc.core.sequences import (
    entropic_forward_backward,
    hmc2_mpm,
    hmc_efb_mpm,
    hmc_fb_mpm,
    hmc_viterbi,
    hmcplus_mpm,
    map_decode,
    mpm_decode,
)
from gendisc.core.types import (
    Algorithm,
    Construction,
    DecodeResult,
    LabeledSequence,
    LabelSet,
    ModelKind,
    ObsSet,
    PosteriorMarginals,
)

__all__ = [
    "ModelKind",
    "Construction",
    "Algorithm",
    "LabelSet",
    "ObsSet",
    "LabeledSequence",
    "PosteriorMarginals",
    "DecodeResult",
    "GenerativeModel",
    "DiscriminativeUnits",
    "FeatureHead",
    "Violation",
    "validate",
    "require_valid",
    "joint_log_prob",
    "kappa_log",
    "bayes_invert",
    "as_units",
    "classify",
    "posterior_marginals",
    "discriminative_log_prob",
    "conditional_log_prob",
    "heldout_log_likelihood",
    "map_decode",
    "mpm_decode",
    "hmc_viterbi",
    "hmc_fb_mpm",
    "hmc_efb_mpm",
    "entropic_forward_backward",
    "hmc2_mpm",
    "hmcplus_mpm",
    "brute_force_posterior",
    "brute_force_marginals",
    "brute_force_map",
    "attains_map",
    "CountAccumulator",
    "TrainingResult",
    "fit_generative",
    "fit_discriminative_tables",
    "train_feature_head",
    "SplitMix64",
    "FeatureDataset",
    "sample",
    "sample_corpus",
    "random_model",
    "make_feature_task",
    "make_tagging_task",
    "MetricsReport",
    "compute_metrics",
]

"""Kind-independent entry points over the classifiers and sequence decoders."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from scipy.special import logsumexp

from gendisc.core.chain import forward_backward
from gendisc.core.classifiers import (
    discriminative_class_scores,
    generative_class_scores,
    nb_classify_discriminative,
    nb_classify_generative,
    pooledmc2_classify,
    pooledmc_classify,
)
from gendisc.core.inversion import as_units
from gendisc.core.joint import joint_log_prob
from gendisc.core.models import DiscriminativeUnits, GenerativeModel
from gendisc.core.sequences import build_chain, map_decode, mpm_decode
from gendisc.core.types import (
    Algorithm,
    Construction,
    DecodeResult,
    LabeledSequence,
    ModelKind,
    PosteriorMarginals,
)
from gendisc.exceptions import ShapeError

logger = logging.getLogger(__name__)

Source = GenerativeModel | DiscriminativeUnits


def classify(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    algorithm: str = "map",
    pair_form: str = "pair",
) -> DecodeResult:
    """Decode one observation sequence with the classifier matching ``source.kind``.

    Args:
        source: GenerativeModel or DiscriminativeUnits
        y: Observation indices (T,) or feature vectors (T, d)
        construction: "generative" or "discriminative"
        algorithm: "map" or "mpm"; only meaningful for the HMC family, the
            Naive Bayes family has a single label and both coincide
        pair_form: HMC+ discriminative step form

    Returns:
        DecodeResult with one label (NB family) or T labels (HMC family)

    """
    construction = Construction(construction)
    algorithm = Algorithm(algorithm)
    kind = source.kind

    if kind.is_sequence:
        if algorithm is Algorithm.MAP:
            return map_decode(source, y, construction.value, pair_form)
        return mpm_decode(source, y, construction.value, pair_form)[1]

    if kind is ModelKind.NB:
        if construction is Construction.GENERATIVE:
            if not isinstance(source, GenerativeModel):
                raise ShapeError("the generative construction needs a GenerativeModel")
            return nb_classify_generative(source, y)
        return nb_classify_discriminative(as_units(source), y)
    if kind is ModelKind.POOLED_MC:
        return pooledmc_classify(source, y, construction.value)
    return pooledmc2_classify(source, y, construction.value)


def posterior_marginals(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
) -> PosteriorMarginals:
    """p(x_t | y_{1:T}) for every position of an HMC family sequence."""
    if not source.kind.is_sequence:
        raise ShapeError(f"posterior marginals need an HMC family source, not {source.kind.value}")
    return mpm_decode(source, y, construction, pair_form)[0]


def discriminative_log_prob(
    units: DiscriminativeUnits, seq: LabeledSequence, pair_form: str = "pair"
) -> float:
    """Discriminative objective of the labels in ``seq``.

    This is the log of the prior part times the product of posterior-unit
    ratios. For units inverted from a generative model it equals
    ``kappa_log(model, y) + joint_log_prob(model, seq)`` whenever T does not
    exceed the inversion horizon.
    """
    if seq.x is None:
        raise ShapeError("discriminative_log_prob needs a labeled sequence")
    n = units.n_labels
    seq.check(units.kind, n)
    if units.kind.is_sequence:
        chain = build_chain(units, seq.y, "discriminative", pair_form)
        return chain.score(seq.x)
    return float(discriminative_class_scores(units, seq.y)[int(seq.x[0])])


def conditional_log_prob(
    source: Source,
    seq: LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
) -> float:
    """log p(x | y) of the labels in ``seq`` under either construction."""
    if seq.x is None:
        raise ShapeError("conditional_log_prob needs a labeled sequence")
    construction = Construction(construction)
    if source.kind.is_sequence:
        chain = build_chain(source, seq.y, construction.value, pair_form)
        return chain.score(seq.x) - forward_backward(chain.potentials).log_evidence
    if construction is Construction.GENERATIVE:
        if not isinstance(source, GenerativeModel):
            raise ShapeError("the generative construction needs a GenerativeModel")
        scores = generative_class_scores(source, seq.y)
    else:
        scores = discriminative_class_scores(as_units(source), seq.y)
    return float(scores[int(seq.x[0])] - logsumexp(scores))


def heldout_log_likelihood(source: Source, data: Sequence[LabeledSequence]) -> float:
    """Total log-likelihood of labeled held-out data.

    A GenerativeModel scores the joint ``log p(x, y)``; discriminative
    units score the conditional ``log p(x | y)``.
    """
    if isinstance(source, GenerativeModel):
        total = sum(joint_log_prob(source, seq) for seq in data)
    else:
        total = sum(conditional_log_prob(source, seq) for seq in data)
    logger.debug(f"held-out log-likelihood over {len(data)} sequences: {total:.6g}")
    return float(total)

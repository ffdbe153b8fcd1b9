"""Naive Bayes family classifiers (NB, Pooled MC, Pooled MC2) in both constructions.

The generative construction scores ``log p(x) + log p(y_{1:T} | x)``. The
discriminative construction never touches ``p(y | x)``: it combines the
prior with posterior units ``p(x | observation context)``, dividing each
numerator unit by the unit of the context it extends. Both constructions
differ by a term that does not depend on ``x``, so their argmax agree.
"""

from __future__ import annotations

import logging

import numpy as np

from gendisc.core.inversion import as_units
from gendisc.core.joint import class_log_likelihood
from gendisc.core.models import DiscriminativeUnits, GenerativeModel, require_valid
from gendisc.core.types import Construction, DecodeResult, LabeledSequence, ModelKind
from gendisc.exceptions import AlphabetError, ShapeError, ZeroDenominatorError

logger = logging.getLogger(__name__)

Source = GenerativeModel | DiscriminativeUnits


def as_observations(y: np.ndarray | LabeledSequence) -> np.ndarray:
    if isinstance(y, LabeledSequence):
        return y.y
    arr = np.asarray(y)
    if arr.ndim not in (1, 2) or arr.shape[0] < 1:
        raise ShapeError(f"expected T >= 1 observations, got shape {arr.shape}")
    return arr


def _contexts(y: np.ndarray, width: int, ends: np.ndarray) -> np.ndarray:
    """Windows ``y[t-width+1 .. t]`` for every end position ``t``."""
    index = ends[:, None] + np.arange(1 - width, 1)[None, :]
    return y[index]


def argmax_result(scores: np.ndarray) -> DecodeResult:
    """Lowest-index argmax of a score vector, counting ties within 1e-12."""
    best = int(np.argmax(scores))
    top = float(scores[best])
    ties = 0
    if np.isfinite(top) and np.count_nonzero(scores >= top - 1e-12) > 1:
        ties = 1
    return DecodeResult(labels=[best], score=top, ties_broken=ties)


def check_unit_inputs(units: DiscriminativeUnits, y: np.ndarray) -> None:
    if y.ndim == 2:
        if not units.is_featurized:
            raise ShapeError(f"{units.kind.value} units are tables; discrete observations needed")
        if y.shape[1] != units.feature_dim:
            raise ShapeError(f"units expect {units.feature_dim} features, got {y.shape[1]}")
        return
    if not np.issubdtype(y.dtype, np.integer):
        raise ShapeError("discrete observations must be integer indices")
    if units.observations is None:
        raise ShapeError(f"{units.kind.value} units are feature heads; feature vectors needed")
    m = len(units.observations)
    if y.min() < 0 or y.max() >= m:
        raise AlphabetError(f"observation index outside 0..{m - 1}")


def _ratio_sum(
    units: DiscriminativeUnits, y: np.ndarray, num: str, den: str, width: int, start: int
) -> np.ndarray:
    """Sum over t >= start of log num(y_{t-width+1..t}) - log den(y_{t-width+1..t-1}).

    Numerator and denominator at position t both read row t - width + 1.
    """
    T = y.shape[0]
    ends = np.arange(start, T)
    if ends.size == 0:
        return np.zeros(units.n_labels)
    rows = ends - width + 1
    log_num = units.log_unit(num, _contexts(y, width, ends), rows)
    log_den = units.log_unit(den, _contexts(y, width - 1, ends - 1), rows)
    zero = np.isneginf(log_den)
    if zero.any():
        t = int(ends[np.flatnonzero(zero.any(axis=1))[0]])
        raise ZeroDenominatorError(den, position=t + 1)
    return (log_num - log_den).sum(axis=0)


def discriminative_class_scores(units: DiscriminativeUnits, y: np.ndarray) -> np.ndarray:
    """Discriminative objective for every class, shape (N,).

    Raises:
        ZeroDenominatorError: A prior or context unit the objective divides by is zero

    """
    y = as_observations(y)
    check_unit_inputs(units, y)
    T = y.shape[0]
    kind = units.kind
    ends = np.arange(T)

    if kind is ModelKind.NB:
        scores = units.log_unit("posterior", _contexts(y, 1, ends), ends).sum(axis=0)
        if T > 1:
            prior = units.table("prior")
            if (prior <= 0).any():
                raise ZeroDenominatorError("prior")
            scores = scores + (1 - T) * np.log(prior)
        return scores

    if kind is ModelKind.POOLED_MC or (kind is ModelKind.POOLED_MC2 and T == 2):
        scores = units.log_unit("posterior", y[:1][None], np.zeros(1, dtype=np.int64))[0]
        return scores + _ratio_sum(units, y, "pair_posterior", "posterior", 2, 1)

    if kind is ModelKind.POOLED_MC2:
        if T == 1:
            return units.log_unit("posterior", y[:1][None], np.zeros(1, dtype=np.int64))[0]
        scores = units.log_unit("pair_posterior", y[:2][None], np.zeros(1, dtype=np.int64))[0]
        return scores + _ratio_sum(units, y, "triple_posterior", "pair_posterior", 3, 2)

    raise ShapeError(f"{kind.value} is not a Naive Bayes family kind")


def generative_class_scores(model: GenerativeModel, y: np.ndarray) -> np.ndarray:
    """log p(x) + log p(y_{1:T} | x) for every class, shape (N,)."""
    return model.log("prior") + class_log_likelihood(model, as_observations(y))


def nb_classify_generative(model: GenerativeModel, y: np.ndarray | LabeledSequence) -> DecodeResult:
    """Naive Bayes classifier from p(x) and p(y_t | x).

    Example:
        >>> result = nb_classify_generative(model, np.array([0, 1]))
        >>> model.labels.decode(result.labels)
        ['a']

    """
    if model.kind is not ModelKind.NB:
        raise ShapeError(f"expected an nb model, got {model.kind.value}")
    return argmax_result(generative_class_scores(model, y))


def nb_classify_discriminative(
    units: DiscriminativeUnits, y: np.ndarray | LabeledSequence
) -> DecodeResult:
    """Naive Bayes classifier from p(x) and the posterior unit p(x | y_t).

    ``y`` may be symbol indices (table unit) or a (T, d) array of feature
    vectors (FeatureHead unit).
    """
    if units.kind is not ModelKind.NB:
        raise ShapeError(f"expected nb units, got {units.kind.value}")
    return argmax_result(discriminative_class_scores(units, y))


def _pooled(
    kind: ModelKind, source: Source, y: np.ndarray | LabeledSequence, construction: str
) -> DecodeResult:
    construction = Construction(construction)
    if source.kind is not kind:
        raise ShapeError(f"expected a {kind.value} source, got {source.kind.value}")
    y = as_observations(y)
    if construction is Construction.GENERATIVE:
        if not isinstance(source, GenerativeModel):
            raise ShapeError("the generative construction needs a GenerativeModel")
        require_valid(source, source=f"{kind.value}_classify")
        return argmax_result(generative_class_scores(source, y))
    units = as_units(source, y.shape[0])
    return argmax_result(discriminative_class_scores(units, y))


def pooledmc_classify(
    source: Source, y: np.ndarray | LabeledSequence, construction: str = "discriminative"
) -> DecodeResult:
    """First-order Pooled MC classifier.

    Discriminative objective:
    ``log p(x|y_1) + sum_{t=2..T} [log p(x|y_{t-1},y_t) - log p(x|y_{t-1})]``.
    A single observation falls back to the Naive Bayes formula.
    """
    return _pooled(ModelKind.POOLED_MC, source, y, construction)


def pooledmc2_classify(
    source: Source, y: np.ndarray | LabeledSequence, construction: str = "discriminative"
) -> DecodeResult:
    """Second-order Pooled MC classifier.

    Discriminative objective:
    ``log p(x|y_1,y_2) + sum_{t=3..T} [log p(x|y_{t-2},y_{t-1},y_t) - log p(x|y_{t-2},y_{t-1})]``.
    Two observations use the first-order formula, one uses Naive Bayes.
    """
    return _pooled(ModelKind.POOLED_MC2, source, y, construction)

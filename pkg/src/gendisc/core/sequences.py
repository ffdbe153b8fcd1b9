"""HMC family decoders (HMC, HMC2, HMC+) in both constructions.

Each (source, observations, construction) triple is turned into a
:class:`SequenceChain`: log potentials over a state chain plus the
mapping between chain states and labels. HMC and HMC+ chains run over
single labels; HMC2 runs over consecutive label pairs ``(x_t, x_{t+1})``.

Generative potentials use emissions ``p(y_t | ...)``. Discriminative
potentials use posterior units divided by the marginals of what they
condition on, e.g. ``p(x_t | y_t) / p(x_t)`` for the HMC. The entropic
forward-backward (EFB) is the sum-product run on the discriminative chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gendisc.core.chain import (
    TIE_TOL,
    ChainPotentials,
    ForwardBackward,
    forward_backward,
    max_sum,
)
from gendisc.core.classifiers import as_observations, check_unit_inputs
from gendisc.core.inversion import as_units
from gendisc.core.joint import as_symbols
from gendisc.core.models import DiscriminativeUnits, GenerativeModel, require_valid
from gendisc.core.types import (
    Construction,
    DecodeResult,
    LabeledSequence,
    ModelKind,
    PosteriorMarginals,
)
from gendisc.exceptions import ShapeError, ZeroDenominatorError

logger = logging.getLogger(__name__)

Source = GenerativeModel | DiscriminativeUnits
PAIR_FORMS = ("pair", "marginal")


@dataclass(frozen=True, eq=False)
class SequenceChain:
    """Chain potentials for one observation sequence.

    Attributes:
        potentials: Log weights over chain states
        n_labels: Label alphabet size N
        pairs: True when states are label pairs ``s = a * N + b``

    """

    potentials: ChainPotentials
    n_labels: int
    pairs: bool = False

    @property
    def length(self) -> int:
        """Number of observations T."""
        return self.potentials.length + (1 if self.pairs else 0)

    def to_labels(self, states: np.ndarray) -> np.ndarray:
        """Label path of length T from a chain state path."""
        states = np.asarray(states, dtype=np.int64)
        if not self.pairs:
            return states
        return np.concatenate([[states[0] // self.n_labels], states % self.n_labels])

    def to_states(self, labels: np.ndarray) -> np.ndarray:
        """Chain state path for a label path of length T."""
        labels = np.asarray(labels, dtype=np.int64)
        if not self.pairs:
            return labels
        return labels[:-1] * self.n_labels + labels[1:]

    def label_posteriors(self, state_posteriors: np.ndarray) -> np.ndarray:
        """Per-position label posteriors (T, N) from chain state posteriors."""
        if not self.pairs:
            return state_posteriors
        n = self.n_labels
        pair = state_posteriors.reshape(-1, n, n)
        return np.concatenate([pair[:1].sum(axis=2), pair.sum(axis=1)])

    def score(self, labels: np.ndarray) -> float:
        """Log weight of a label path under this chain."""
        return self.potentials.path_score(self.to_states(labels))


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


def _pair_steps(log_q: np.ndarray, per_label: np.ndarray) -> np.ndarray:
    """Pair-state kernels (K, N^2, N^2): (a, b) -> (b, c) weighs log_q[a,b,c] + per_label[k, c]."""
    k, n = per_label.shape[0], log_q.shape[0]
    steps = np.full((k, n, n, n, n), -np.inf)
    b = np.arange(n)
    steps[:, :, b, b, :] = log_q[None] + per_label[:, None, None, :]
    return steps.reshape(k, n * n, n * n)


def _generative_chain(model: GenerativeModel, y: np.ndarray) -> SequenceChain:
    y = as_symbols(model, y)
    T, n = y.size, model.n_labels
    log_prior = model.log("prior")
    kind = model.kind

    if kind is ModelKind.HMC_PLUS:
        init = log_prior + model.log("first_emission")[:, y[0]]
        pair_emit = np.moveaxis(model.log("pair_emission")[:, :, y[1:]], 2, 0)
        steps = model.log("transition")[None] + pair_emit
        return SequenceChain(ChainPotentials(init, steps), n)

    emit = model.log("emission")[:, y].T
    if kind is ModelKind.HMC or T == 1:
        steps = model.log("transition")[None] + emit[1:, None, :]
        return SequenceChain(ChainPotentials(log_prior + emit[0], steps), n)

    init = (log_prior + emit[0])[:, None] + model.log("transition") + emit[1][None, :]
    steps = _pair_steps(model.log("transition2"), emit[2:])
    return SequenceChain(ChainPotentials(init.reshape(-1), steps), n, pairs=True)


def _log_marginals(units: DiscriminativeUnits, name: str, rows: np.ndarray) -> np.ndarray:
    table = units.table(name)
    values = table[units.rows(name, rows)]
    zero = values <= 0
    if zero.any():
        t = int(np.flatnonzero(zero.reshape(zero.shape[0], -1).any(axis=1))[0])
        raise ZeroDenominatorError(name, position=int(rows[t]) + 1)
    return np.log(values)


def _discriminative_chain(
    units: DiscriminativeUnits, y: np.ndarray, pair_form: str
) -> SequenceChain:
    check_unit_inputs(units, y)
    T, n = y.shape[0], units.n_labels
    positions = np.arange(T)
    contexts = y[:, None]
    kind = units.kind

    if kind is ModelKind.HMC_PLUS:
        if pair_form not in PAIR_FORMS:
            raise ValueError(f"pair_form must be one of {PAIR_FORMS}, got {pair_form!r}")
        init = units.log_unit("first_posterior", contexts[:1], positions[:1])[0]
        if T == 1:
            return SequenceChain(ChainPotentials(init, np.empty((0, n, n))), n)
        rows = positions[1:] - 1
        log_pair = units.log_unit("pair_posterior", contexts[1:], rows)
        if pair_form == "pair":
            steps = (
                units.log("transition")[None]
                + log_pair
                - _log_marginals(units, "pair_marginals", rows)
            )
        else:
            steps = log_pair - _log_marginals(units, "marginals", rows)[:, :, None]
        return SequenceChain(ChainPotentials(init, steps), n)

    log_post = units.log_unit("posterior", contexts, positions)
    ratio = log_post - _log_marginals(units, "marginals", positions)
    # p(x_1) p(x_1|y_1) / p(x_1), with the prior read from the units
    first = units.log("prior") + ratio[0]
    if T == 1:
        return SequenceChain(ChainPotentials(first, np.empty((0, n, n))), n)
    log_a = units.log("transition")

    if kind is ModelKind.HMC:
        return SequenceChain(ChainPotentials(first, log_a[None] + ratio[1:, None, :]), n)

    init = first[:, None] + log_a + ratio[1][None, :]
    steps = _pair_steps(units.log("transition2"), ratio[2:])
    return SequenceChain(ChainPotentials(init.reshape(-1), steps), n, pairs=True)


def build_chain(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
) -> SequenceChain:
    """Potentials of the chosen construction for one observation sequence.

    Args:
        source: Generative model, or discriminative units (HMC family)
        y: Observation indices (T,) or feature vectors (T, d)
        construction: "generative" or "discriminative". A generative model
            is inverted automatically for the discriminative construction
        pair_form: HMC+ discriminative step, "pair" divides by p(x_t, x_{t+1})
            after multiplying by p(x_{t+1} | x_t), "marginal" divides by p(x_t)

    Raises:
        ZeroDenominatorError: A marginal the discriminative chain divides by is zero

    """
    construction = Construction(construction)
    if not source.kind.is_sequence:
        raise ShapeError(f"{source.kind.value} is not an HMC family kind")
    y = as_observations(y)
    if construction is Construction.GENERATIVE:
        if not isinstance(source, GenerativeModel):
            raise ShapeError("the generative construction needs a GenerativeModel")
        require_valid(source, source="build_chain")
        chain = _generative_chain(source, y)
    else:
        chain = _discriminative_chain(as_units(source, y.shape[0]), y, pair_form)
    logger.debug(
        f"{source.kind.value} {construction.value} chain: T={chain.length}, "
        f"states={chain.potentials.n_states}"
    )
    return chain


# ---------------------------------------------------------------------------
# MAP
# ---------------------------------------------------------------------------


def map_decode(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
    rescale: bool = True,
) -> DecodeResult:
    """Most probable label path by max-sum over the chain; ties go to the lowest index."""
    chain = build_chain(source, y, construction, pair_form)
    states, score, ties = max_sum(chain.potentials, rescale=rescale)
    return DecodeResult(labels=chain.to_labels(states), score=score, ties_broken=ties)


def hmc_viterbi(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    rescale: bool = True,
) -> DecodeResult:
    """Viterbi path of an HMC.

    Generative: ``log p(x_1) + log p(y_1|x_1) + sum [log p(x_{t+1}|x_t) + log p(y_{t+1}|x_{t+1})]``.
    Discriminative: ``log p(x_1) + log p(x_1|y_1) - log p(x_1)
    + sum [log p(x_{t+1}|x_t) + log p(x_{t+1}|y_{t+1}) - log p(x_{t+1})]``.
    """
    if source.kind is not ModelKind.HMC:
        raise ShapeError(f"hmc_viterbi expects an hmc source, got {source.kind.value}")
    return map_decode(source, y, construction, rescale=rescale)


# ---------------------------------------------------------------------------
# MPM
# ---------------------------------------------------------------------------


def _mpm_result(
    chain: SequenceChain, fb: ForwardBackward
) -> tuple[PosteriorMarginals, DecodeResult]:
    probs = chain.label_posteriors(fb.posteriors)
    probs = probs / probs.sum(axis=1, keepdims=True)
    marginals = PosteriorMarginals(probs)
    labels = marginals.argmax()
    best = probs[np.arange(probs.shape[0]), labels]
    ties = int(np.count_nonzero((probs >= best[:, None] - TIE_TOL).sum(axis=1) > 1))
    with np.errstate(divide="ignore"):
        score = float(np.log(best).sum())
    return marginals, DecodeResult(labels=labels, score=score, ties_broken=ties)


def mpm_decode(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
    rescale: bool = True,
) -> tuple[PosteriorMarginals, DecodeResult]:
    """Posterior marginals p(x_t | y_{1:T}) and their per-position argmax.

    The decoded labels are the per-position maximizers, not a jointly
    coherent path; ``score`` is the sum of their log marginals.

    Raises:
        ZeroProbabilityError: The observations are impossible at some position

    """
    chain = build_chain(source, y, construction, pair_form)
    return _mpm_result(chain, forward_backward(chain.potentials, rescale=rescale))


def hmc_fb_mpm(
    model: GenerativeModel, y: np.ndarray | LabeledSequence, rescale: bool = True
) -> tuple[PosteriorMarginals, DecodeResult]:
    """Classic scaled forward-backward on an HMC."""
    if not isinstance(model, GenerativeModel) or model.kind is not ModelKind.HMC:
        raise ShapeError("hmc_fb_mpm expects a generative hmc model")
    return mpm_decode(model, y, "generative", rescale=rescale)


def entropic_forward_backward(
    units: Source, y: np.ndarray | LabeledSequence, rescale: bool = True
) -> ForwardBackward:
    """Entropic forward and backward messages of an HMC.

    ``alpha_1(x) = p(x_1) p(x | y_1) / p(x_1)`` (prior over the position-1 marginal, which
    cancel for exact units) and each forward step multiplies by
    ``p(x_{t+1} | x_t) p(x_{t+1} | y_{t+1}) / p(x_{t+1})``; ``beta_T = 1``.
    With ``rescale`` every message except ``beta_T`` is divided by its sum.
    """
    if units.kind is not ModelKind.HMC:
        raise ShapeError(f"entropic forward-backward expects hmc units, got {units.kind.value}")
    chain = build_chain(units, y, "discriminative")
    return forward_backward(chain.potentials, rescale=rescale)


def hmc_efb_mpm(
    units: Source, y: np.ndarray | LabeledSequence, rescale: bool = True
) -> tuple[PosteriorMarginals, DecodeResult]:
    """MPM of an HMC from the entropic forward-backward.

    Raises:
        ZeroDenominatorError: Some marginal p(x_t) is zero

    """
    if units.kind is not ModelKind.HMC:
        raise ShapeError(f"hmc_efb_mpm expects hmc units, got {units.kind.value}")
    return mpm_decode(units, y, "discriminative", rescale=rescale)


def hmc2_mpm(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    rescale: bool = True,
) -> tuple[PosteriorMarginals, DecodeResult]:
    """MPM of a second-order HMC by forward-backward over label pairs."""
    if source.kind is not ModelKind.HMC2:
        raise ShapeError(f"hmc2_mpm expects an hmc2 source, got {source.kind.value}")
    return mpm_decode(source, y, construction, rescale=rescale)


def hmcplus_mpm(
    source: Source,
    y: np.ndarray | LabeledSequence,
    construction: str = "discriminative",
    pair_form: str = "pair",
    rescale: bool = True,
) -> tuple[PosteriorMarginals, DecodeResult]:
    """MPM of an HMC+ (each observation depends on two consecutive labels)."""
    if source.kind is not ModelKind.HMC_PLUS:
        raise ShapeError(f"hmcplus_mpm expects an hmcplus source, got {source.kind.value}")
    return mpm_decode(source, y, construction, pair_form, rescale=rescale)

"""Supervised estimation: generative tables, discriminative tables and feature heads.

All three regimes read labeled sequences. Count-based estimates share one
:class:`CountAccumulator`, so generative and discriminative tables fitted
from the same corpus come from the same counts.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from gendisc.config import TrainConfig
from gendisc.core.joint import chain_marginals
from gendisc.core.models import (
    GENERATIVE_SCHEMA,
    DiscriminativeUnits,
    FeatureHead,
    GenerativeModel,
    unit_specs,
)
from gendisc.core.sampling import SplitMix64
from gendisc.core.types import LabeledSequence, LabelSet, ModelKind, ObsSet
from gendisc.exceptions import ShapeError, TrainingDivergedError

logger = logging.getLogger(__name__)

# Discriminative count tensors: observation context axes first, label axes last.
_DISC_SHAPES: dict[ModelKind, dict[str, tuple[str, ...]]] = {
    ModelKind.NB: {"posterior": ("M", "N")},
    ModelKind.POOLED_MC: {"posterior": ("M", "N"), "pair_posterior": ("M", "M", "N")},
    ModelKind.POOLED_MC2: {
        "posterior": ("M", "N"),
        "pair_posterior": ("M", "M", "N"),
        "triple_posterior": ("M", "M", "M", "N"),
    },
    ModelKind.HMC: {"posterior": ("M", "N")},
    ModelKind.HMC2: {"posterior": ("M", "N")},
    ModelKind.HMC_PLUS: {"first_posterior": ("M", "N"), "pair_posterior": ("M", "N", "N")},
}


def normalize_counts(counts: np.ndarray, alpha: float, dist_axes: int = 1) -> np.ndarray:
    """(count + alpha) / (total + alpha * width) over the trailing ``dist_axes`` axes.

    A context with no mass at all (zero counts and alpha = 0) becomes uniform.
    """
    counts = np.asarray(counts, dtype=np.float64) + alpha
    axes = tuple(range(counts.ndim - dist_axes, counts.ndim))
    totals = counts.sum(axis=axes, keepdims=True)
    width = int(np.prod([counts.shape[a] for a in axes]))
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = counts / totals
    return np.where(totals > 0, probs, 1.0 / width)


@dataclass
class CountAccumulator:
    """Integer counts behind every count-based table of one model kind.

    ``generative`` mirrors :data:`GENERATIVE_SCHEMA`; ``discriminative``
    holds label-against-observation-context counts; ``label_tokens`` and
    ``label_pairs`` count labels and consecutive label pairs over all
    positions. Observation counts are skipped when ``n_symbols`` is None
    (featurized data). Accumulators merge associatively.
    """

    kind: ModelKind
    n_labels: int
    n_symbols: int | None
    generative: dict[str, np.ndarray] = field(default_factory=dict)
    discriminative: dict[str, np.ndarray] = field(default_factory=dict)
    label_tokens: np.ndarray = field(init=False)
    label_pairs: np.ndarray = field(init=False)
    n_sequences: int = 0

    def __post_init__(self) -> None:
        self.kind = ModelKind.parse(self.kind)
        sizes = {"N": self.n_labels, "M": self.n_symbols}
        for spec in GENERATIVE_SCHEMA[self.kind]:
            if "M" in spec.axes and self.n_symbols is None:
                continue
            shape = tuple(sizes[a] for a in spec.axes)
            self.generative.setdefault(spec.name, np.zeros(shape, dtype=np.int64))
        if self.n_symbols is not None:
            for name, axes in _DISC_SHAPES[self.kind].items():
                shape = tuple(sizes[a] for a in axes)
                self.discriminative.setdefault(name, np.zeros(shape, dtype=np.int64))
        self.label_tokens = np.zeros(self.n_labels, dtype=np.int64)
        self.label_pairs = np.zeros((self.n_labels, self.n_labels), dtype=np.int64)

    def add(self, seq: LabeledSequence) -> None:
        """Count one labeled sequence."""
        if seq.x is None:
            raise ShapeError("estimation needs labeled sequences")
        seq.check(self.kind, self.n_labels, None if seq.is_featurized else self.n_symbols)
        x = seq.x
        g, d = self.generative, self.discriminative
        self.n_sequences += 1
        g["prior"][x[0]] += 1

        if self.kind.is_sequence:
            np.add.at(self.label_tokens, x, 1)
            np.add.at(self.label_pairs, (x[:-1], x[1:]), 1)
            if self.kind is ModelKind.HMC2:
                if x.size > 1:
                    g["transition"][x[0], x[1]] += 1
                np.add.at(g["transition2"], (x[:-2], x[1:-1], x[2:]), 1)
            else:
                np.add.at(g["transition"], (x[:-1], x[1:]), 1)
        else:
            self.label_tokens[x[0]] += seq.length

        if seq.is_featurized or self.n_symbols is None:
            return
        y, c = seq.y, x[0]
        kind = self.kind
        if kind is ModelKind.NB:
            np.add.at(g["emission"], (c, y), 1)
            np.add.at(d["posterior"], (y, c), 1)
        elif kind in (ModelKind.POOLED_MC, ModelKind.POOLED_MC2):
            g["first_emission"][c, y[0]] += 1
            np.add.at(d["posterior"], (y, c), 1)
            np.add.at(d["pair_posterior"], (y[:-1], y[1:], c), 1)
            if kind is ModelKind.POOLED_MC:
                np.add.at(g["emission_transition"], (c, y[:-1], y[1:]), 1)
            else:
                if y.size > 1:
                    g["second_emission"][c, y[0], y[1]] += 1
                np.add.at(g["emission_transition2"], (c, y[:-2], y[1:-1], y[2:]), 1)
                np.add.at(d["triple_posterior"], (y[:-2], y[1:-1], y[2:], c), 1)
        elif kind in (ModelKind.HMC, ModelKind.HMC2):
            np.add.at(g["emission"], (x, y), 1)
            np.add.at(d["posterior"], (y, x), 1)
        else:
            g["first_emission"][x[0], y[0]] += 1
            np.add.at(g["pair_emission"], (x[:-1], x[1:], y[1:]), 1)
            d["first_posterior"][y[0], x[0]] += 1
            np.add.at(d["pair_posterior"], (y[1:], x[:-1], x[1:]), 1)

    def update(self, data: Iterable[LabeledSequence]) -> CountAccumulator:
        """Count every sequence of ``data`` and return self."""
        for seq in data:
            self.add(seq)
        return self

    def merge(self, other: CountAccumulator) -> CountAccumulator:
        """Sum of two accumulators over the same kind and alphabets."""
        mine = (self.kind, self.n_labels, self.n_symbols)
        if mine != (other.kind, other.n_labels, other.n_symbols):
            raise ShapeError("cannot merge accumulators of different kinds or alphabet sizes")
        merged = CountAccumulator(self.kind, self.n_labels, self.n_symbols)
        for name in merged.generative:
            merged.generative[name] = self.generative[name] + other.generative[name]
        for name in merged.discriminative:
            merged.discriminative[name] = self.discriminative[name] + other.discriminative[name]
        merged.label_tokens = self.label_tokens + other.label_tokens
        merged.label_pairs = self.label_pairs + other.label_pairs
        merged.n_sequences = self.n_sequences + other.n_sequences
        return merged


def _alphabets(
    data: Sequence[LabeledSequence], labels: LabelSet | None, observations: ObsSet | None
) -> tuple[LabelSet, ObsSet | None]:
    """Given alphabets, or index-named alphabets covering the data."""
    if any(s.x is None for s in data):
        raise ShapeError("estimation needs labeled sequences")
    if labels is None:
        n = max(int(s.x.max()) for s in data if s.x is not None) + 1
        labels = LabelSet(tuple(str(i) for i in range(n)))
    discrete = [s for s in data if not s.is_featurized]
    if observations is None and discrete:
        m = max(int(s.y.max()) for s in discrete) + 1
        observations = ObsSet(tuple(str(i) for i in range(m)))
    return labels, observations


def count(
    kind: ModelKind | str,
    data: Sequence[LabeledSequence],
    labels: LabelSet | None = None,
    observations: ObsSet | None = None,
) -> tuple[CountAccumulator, LabelSet, ObsSet | None]:
    """Count ``data`` for ``kind``, resolving alphabets."""
    if not data:
        raise ValueError("no training data")
    kind = ModelKind.parse(kind)
    labels, observations = _alphabets(data, labels, observations)
    n_symbols = None if observations is None else len(observations)
    acc = CountAccumulator(kind, len(labels), n_symbols).update(data)
    logger.debug(f"counted {acc.n_sequences} sequences, {int(acc.label_tokens.sum())} tokens")
    return acc, labels, observations


def fit_generative(
    kind: ModelKind | str,
    data: Sequence[LabeledSequence],
    cfg: TrainConfig | None = None,
    labels: LabelSet | None = None,
    observations: ObsSet | None = None,
) -> GenerativeModel:
    """Smoothed maximum-likelihood generative tables.

    Every conditional row is ``(count + alpha) / (row_total + alpha * width)``.

    Example:
        >>> model = fit_generative("hmc", corpus, TrainConfig(smoothing_alpha=0.0))

    """
    cfg = cfg or TrainConfig()
    acc, labels, observations = count(kind, data, labels, observations)
    if observations is None:
        raise ShapeError("generative tables need discrete observations")
    tables = {
        name: normalize_counts(c, cfg.smoothing_alpha) for name, c in acc.generative.items()
    }
    model = GenerativeModel(acc.kind, labels, observations, tables)
    logger.info(f"fitted generative {acc.kind.value} model on {acc.n_sequences} sequences")
    return model


def _structure(acc: CountAccumulator, cfg: TrainConfig) -> dict[str, np.ndarray]:
    """Priors, transitions and marginals estimated from labels alone."""
    alpha = cfg.smoothing_alpha
    kind = acc.kind
    tables = {"prior": normalize_counts(acc.generative["prior"], alpha)}
    if not kind.is_sequence:
        return tables

    tables["transition"] = normalize_counts(acc.generative["transition"], alpha)
    transition2 = None
    if kind is ModelKind.HMC2:
        transition2 = normalize_counts(acc.generative["transition2"], alpha)
        tables["transition2"] = transition2

    if cfg.marginals == "empirical":
        marginals = normalize_counts(acc.label_tokens, alpha)[None]
    else:
        marginals = chain_marginals(tables["prior"], tables["transition"], cfg.horizon, transition2)
    tables["marginals"] = marginals

    if kind is ModelKind.HMC_PLUS:
        if cfg.marginals == "empirical":
            pairs = normalize_counts(acc.label_pairs, alpha, dist_axes=2)[None]
        else:
            pairs = marginals[:, :, None] * tables["transition"][None]
        tables["pair_marginals"] = pairs
    return tables


def fit_discriminative_tables(
    kind: ModelKind | str,
    data: Sequence[LabeledSequence],
    cfg: TrainConfig | None = None,
    labels: LabelSet | None = None,
    observations: ObsSet | None = None,
) -> DiscriminativeUnits:
    """Posterior units and marginals from smoothed label-against-context counts.

    Units are time-homogeneous (one row). With ``smoothing_alpha = 0`` and
    every context observed, NB units from equal-length documents and HMC /
    HMC2 units equal ``bayes_invert(fit_generative(...), marginals=label
    frequencies)``.
    """
    cfg = cfg or TrainConfig()
    acc, labels, observations = count(kind, data, labels, observations)
    if observations is None:
        raise ShapeError("discriminative tables need discrete observations")
    tables = _structure(acc, cfg)
    for name, counts in acc.discriminative.items():
        dist_axes = 2 if (acc.kind is ModelKind.HMC_PLUS and name == "pair_posterior") else 1
        tables[name] = normalize_counts(counts, cfg.smoothing_alpha, dist_axes)[None]
    units = DiscriminativeUnits(
        acc.kind, labels, observations, tables, marginal_mode=_mode(acc.kind, cfg)
    )
    logger.info(f"fitted discriminative {acc.kind.value} tables on {acc.n_sequences} sequences")
    return units


def _mode(kind: ModelKind, cfg: TrainConfig) -> str:
    return cfg.marginals if kind.is_sequence else "empirical"


# ---------------------------------------------------------------------------
# Feature heads
# ---------------------------------------------------------------------------


@dataclass
class TrainingResult:
    """Trained units and the per-epoch mean cross-entropy of every head."""

    units: DiscriminativeUnits
    loss_history: dict[str, list[float]]

    @property
    def final_loss(self) -> dict[str, float]:
        return {k: v[-1] for k, v in self.loss_history.items() if v}


def head_examples(
    kind: ModelKind, unit: str, data: Sequence[LabeledSequence], n_labels: int
) -> tuple[np.ndarray, np.ndarray]:
    """Inputs (n, k*d) and targets (n,) for the head replacing posterior unit ``unit``."""
    inputs: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    width = {"posterior": 1, "pair_posterior": 2, "triple_posterior": 3, "first_posterior": 1}[unit]
    for seq in data:
        f, x = seq.y, seq.x
        T = f.shape[0]
        if kind is ModelKind.HMC_PLUS:
            if unit == "first_posterior":
                inputs.append(f[:1])
                targets.append(x[:1])
            elif T > 1:
                inputs.append(f[1:])
                targets.append(x[:-1] * n_labels + x[1:])
            continue
        if kind.is_sequence:
            inputs.append(f)
            targets.append(x)
            continue
        if T < width:
            continue
        windows = np.stack([f[k : T - width + 1 + k] for k in range(width)], axis=1)
        inputs.append(windows.reshape(windows.shape[0], -1))
        targets.append(np.full(windows.shape[0], x[0]))
    if not inputs:
        return np.empty((0, 0)), np.empty(0, dtype=np.int64)
    return np.concatenate(inputs), np.concatenate(targets).astype(np.int64)


def _descend(
    unit: str, inputs: np.ndarray, targets: np.ndarray, n_outputs: int, cfg: TrainConfig
) -> tuple[FeatureHead, list[float]]:
    """Mini-batch gradient descent with momentum from an all-zero head."""
    n, d = inputs.shape
    W, b = np.zeros((n_outputs, d)), np.zeros(n_outputs)
    vW, vb = np.zeros_like(W), np.zeros_like(b)
    rng = SplitMix64(cfg.seed)
    history: list[float] = []

    for epoch in range(1, cfg.epochs + 1):
        order = np.argsort(rng.uniform(n), kind="stable")
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, dW, db = FeatureHead(W, b).loss_and_gradients(inputs[batch], targets[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"unit '{unit}' loss became {loss} at epoch {epoch}")
            vW = cfg.momentum * vW - cfg.learning_rate * dW
            vb = cfg.momentum * vb - cfg.learning_rate * db
            W, b = W + vW, b + vb
            total += loss * batch.size
        history.append(total / n)
        logger.debug(f"{unit} epoch {epoch}: loss={history[-1]:.6f}")
    return FeatureHead(W, b), history


def train_feature_head(
    kind: ModelKind | str,
    data: Sequence[LabeledSequence],
    cfg: TrainConfig | None = None,
    labels: LabelSet | None = None,
) -> TrainingResult:
    """Train one FeatureHead per posterior unit by minimizing cross-entropy.

    Structural tables (prior, transitions, marginals) are estimated from
    the labels alone. HMC family heads are trained per position with no
    sequence-level loss.

    Args:
        kind: Model kind
        data: Labeled sequences whose observations are (T, d) feature arrays
        cfg: Learning rate, epochs, batch size, momentum, seed, smoothing
        labels: Label alphabet (defaults to indices seen in ``data``)

    Returns:
        TrainingResult with the units and the per-epoch loss of every head

    Raises:
        TrainingDivergedError: A loss became NaN or infinite

    """
    cfg = cfg or TrainConfig()
    kind = ModelKind.parse(kind)
    if any(not s.is_featurized for s in data):
        raise ShapeError("train_feature_head needs feature-vector observations")
    dims = {int(s.y.shape[1]) for s in data}
    if len(dims) > 1:
        raise ShapeError(f"feature vectors have inconsistent dimensions {sorted(dims)}")
    acc, labels, _ = count(kind, data, labels, None)
    tables = _structure(acc, cfg)
    n = len(labels)
    dim = dims.pop()

    heads: dict[str, FeatureHead] = {}
    history: dict[str, list[float]] = {}
    for spec in unit_specs(kind):
        inputs, targets = head_examples(kind, spec.name, data, n)
        n_outputs = n**spec.dist_axes
        if inputs.shape[0] == 0:
            logger.warning(f"no training windows for '{spec.name}', leaving a uniform head")
            heads[spec.name] = FeatureHead.zeros(n_outputs, spec.context * dim)
            history[spec.name] = []
            continue
        heads[spec.name], history[spec.name] = _descend(spec.name, inputs, targets, n_outputs, cfg)
        if history[spec.name]:
            logger.info(
                f"trained '{spec.name}' head on {inputs.shape[0]} examples: "
                f"loss {history[spec.name][0]:.4f} -> {history[spec.name][-1]:.4f}"
            )

    units = DiscriminativeUnits(
        kind, labels, None, tables, heads=heads, marginal_mode=_mode(kind, cfg)
    )
    return TrainingResult(units=units, loss_history=history)

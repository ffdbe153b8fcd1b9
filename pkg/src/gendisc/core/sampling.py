"""Seeded random streams, ancestral samplers and synthetic featurized tasks.

The random stream is SplitMix64 in its counter form: the k-th 64-bit output
is ``mix(seed + k * 0x9E3779B97F4A7C15)`` for k = 1, 2, ... Uniforms take the
top 53 bits, normals come from Box-Muller, and categorical draws invert the
cumulative distribution (``searchsorted(..., side="right")``), so a sampled
corpus depends only on the seed and never on numpy's generators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from gendisc.core.models import GENERATIVE_SCHEMA, GenerativeModel, require_valid
from gendisc.core.types import LabeledSequence, LabelSet, ModelKind, ObsSet

logger = logging.getLogger(__name__)

_MASK = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Counter-based SplitMix64 stream.

    Example:
        >>> rng = SplitMix64(0)
        >>> hex(int(rng.next_uint64(1)[0]))
        '0xe220a8397b1dcdaf'

    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = int(seed) & _MASK
        self.counter = 0

    def __repr__(self) -> str:
        return f"SplitMix64(seed={self.seed}, counter={self.counter})"

    def next_uint64(self, n: int) -> np.ndarray:
        """The next ``n`` raw 64-bit outputs."""
        ks = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            states = np.uint64(self.seed) + ks * np.uint64(GOLDEN_GAMMA)
        return mix64(states)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) from the top 53 bits."""
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """``n`` standard normals by Box-Muller (both branches used)."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        return z.reshape(-1)[:n]

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """``n`` integers uniform in [low, high)."""
        return low + np.floor(self.uniform(n) * (high - low)).astype(np.int64)

    def categorical(self, probs: np.ndarray, n: int = 1) -> np.ndarray:
        """``n`` draws from one probability vector."""
        return draw_categorical(np.cumsum(probs), self.uniform(n))

    def spawn(self, index: int) -> SplitMix64:
        """Independent stream for item ``index`` (e.g. one sequence of a corpus)."""
        key = mix64(np.array([int(index) & _MASK], dtype=np.uint64))
        derived = mix64(np.uint64(self.seed) ^ key)
        return SplitMix64(int(derived[0]))


def draw_categorical(cdf: np.ndarray, u: np.ndarray | float) -> np.ndarray:
    """Invert a cumulative table; zero-probability entries are never drawn."""
    idx = np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right")
    return np.minimum(idx, cdf.shape[0] - 1)


def as_rng(rng: SplitMix64 | int | None) -> SplitMix64:
    """Accept a stream, a seed, or None (seed 0)."""
    if isinstance(rng, SplitMix64):
        return rng
    return SplitMix64(0 if rng is None else rng)


# ---------------------------------------------------------------------------
# Ancestral sampling
# ---------------------------------------------------------------------------


def sample(
    model: GenerativeModel, length: int, rng: SplitMix64 | int | None = None
) -> LabeledSequence:
    """Draw one labeled sequence of ``length`` observations in factorization order.

    NB family: the class, then observations (Pooled MC chains them given the
    class). HMC family: labels and observations alternate position by
    position, each label given its predecessors and each observation given
    the labels it depends on.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    require_valid(model, source="sample")
    rng = as_rng(rng)
    kind, T = model.kind, int(length)
    cdf = {name: np.cumsum(table, axis=-1) for name, table in model.tables.items()}
    u = iter(rng.uniform(2 * T + 1))

    def draw(name: str, *context: int) -> int:
        return int(draw_categorical(cdf[name][context], next(u)))

    y = np.empty(T, dtype=np.int64)
    if not kind.is_sequence:
        x = draw("prior")
        if kind is ModelKind.NB:
            for t in range(T):
                y[t] = draw("emission", x)
        else:
            y[0] = draw("first_emission", x)
            for t in range(1, T):
                if kind is ModelKind.POOLED_MC:
                    y[t] = draw("emission_transition", x, y[t - 1])
                elif t == 1:
                    y[t] = draw("second_emission", x, y[0])
                else:
                    y[t] = draw("emission_transition2", x, y[t - 2], y[t - 1])
        return LabeledSequence(y=y, x=np.array([x]))

    labels = np.empty(T, dtype=np.int64)
    labels[0] = draw("prior")
    for t in range(T):
        if t > 0:
            if kind is ModelKind.HMC2 and t > 1:
                labels[t] = draw("transition2", labels[t - 2], labels[t - 1])
            else:
                labels[t] = draw("transition", labels[t - 1])
        if kind is not ModelKind.HMC_PLUS:
            y[t] = draw("emission", labels[t])
        elif t == 0:
            y[t] = draw("first_emission", labels[0])
        else:
            y[t] = draw("pair_emission", labels[t - 1], labels[t])
    return LabeledSequence(y=y, x=labels)


def sample_corpus(
    model: GenerativeModel, n_sequences: int, length: int, seed: int = 0
) -> list[LabeledSequence]:
    """``n_sequences`` samples, sequence ``i`` drawn from ``SplitMix64(seed).spawn(i)``."""
    root = SplitMix64(seed)
    corpus = [sample(model, length, root.spawn(i)) for i in range(n_sequences)]
    logger.info(f"sampled {n_sequences} {model.kind.value} sequences of length {length}")
    return corpus


# ---------------------------------------------------------------------------
# Random models
# ---------------------------------------------------------------------------


def _random_table(rng: SplitMix64, shape: tuple[int, ...], floor: float) -> np.ndarray:
    # Flat Dirichlet rows from exponentials, floored to stay strictly positive.
    w = -np.log1p(-rng.uniform(int(np.prod(shape)))).reshape(shape) + floor
    return w / w.sum(axis=-1, keepdims=True)


def random_model(
    kind: ModelKind | str,
    n_labels: int,
    n_symbols: int,
    rng: SplitMix64 | int | None = None,
    floor: float = 0.05,
) -> GenerativeModel:
    """Random generative model with strictly positive tables.

    Args:
        kind: Model kind
        n_labels: N
        n_symbols: M
        rng: Stream or seed
        floor: Added to every unnormalized weight before normalizing

    """
    kind = ModelKind.parse(kind)
    rng = as_rng(rng)
    sizes = {"N": n_labels, "M": n_symbols}
    tables = {
        spec.name: _random_table(rng, tuple(sizes[a] for a in spec.axes), floor)
        for spec in GENERATIVE_SCHEMA[kind]
    }
    return GenerativeModel(
        kind=kind,
        labels=LabelSet(tuple(f"x{i}" for i in range(n_labels))),
        observations=ObsSet(tuple(f"y{i}" for i in range(n_symbols))),
        tables=tables,
    )


# ---------------------------------------------------------------------------
# Featurized tasks
# ---------------------------------------------------------------------------


def quantize(features: np.ndarray) -> np.ndarray:
    """Pack the signs of the last axis into one symbol code (bit k-1 first)."""
    bits = (np.asarray(features) > 0).astype(np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


@dataclass
class FeatureDataset:
    """Labeled data seen both as raw feature vectors and as quantized symbols.

    Attributes:
        labels: Class per item, shape (n,), or label per token, shape (n, T)
        features: Feature vectors, shape (n, T, d)
        symbols: 2-bin quantization of every dimension, packed, shape (n, T)
        n_labels: Number of labels N
        kind: Model family the task is meant for

    """

    labels: np.ndarray
    features: np.ndarray
    symbols: np.ndarray
    n_labels: int
    kind: ModelKind = ModelKind.NB
    meta: dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.features.shape[-1])

    @property
    def n_symbols(self) -> int:
        return 2**self.dim

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def label_set(self) -> LabelSet:
        return LabelSet(tuple(f"c{i}" for i in range(self.n_labels)))

    def obs_set(self) -> ObsSet:
        return ObsSet(tuple(f"{code:0{self.dim}b}" for code in range(self.n_symbols)))

    def split(self, n_first: int) -> tuple[FeatureDataset, FeatureDataset]:
        """The first ``n_first`` items and the rest, sharing class means."""
        head = replace(
            self,
            labels=self.labels[:n_first],
            features=self.features[:n_first],
            symbols=self.symbols[:n_first],
        )
        tail = replace(
            self,
            labels=self.labels[n_first:],
            features=self.features[n_first:],
            symbols=self.symbols[n_first:],
        )
        return head, tail

    def _labels(self, i: int) -> np.ndarray:
        return np.atleast_1d(self.labels[i])

    def featurized(self) -> list[LabeledSequence]:
        return [LabeledSequence(y=self.features[i], x=self._labels(i)) for i in range(len(self))]

    def discrete(self) -> list[LabeledSequence]:
        return [LabeledSequence(y=self.symbols[i], x=self._labels(i)) for i in range(len(self))]


def _class_means(n_classes: int, d: int, separation: float, rng: SplitMix64) -> np.ndarray:
    """Class means of norm separation/2 in the subspace orthogonal to the all-ones vector."""
    if n_classes == 2:
        u = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
        u -= u.mean()
        u /= np.linalg.norm(u)
        return np.stack([-u, u]) * separation / 2
    if d < n_classes + 1:
        raise ValueError(f"{n_classes} classes need d >= {n_classes + 1}, got {d}")
    basis = np.column_stack([np.ones(d), rng.normal(d * n_classes).reshape(d, n_classes)])
    q, _ = np.linalg.qr(basis)
    return q[:, 1 : n_classes + 1].T * separation / 2


def _mixture_features(
    labels: np.ndarray, means: np.ndarray, offset: float, noise: float, rng: SplitMix64
) -> np.ndarray:
    """x = k * offset * 1 + means[label] + noise * eps, with a uniform sign k per vector."""
    d = means.shape[1]
    flat = labels.reshape(-1)
    k = np.where(rng.uniform(flat.size) < 0.5, -1.0, 1.0)
    eps = rng.normal(flat.size * d).reshape(flat.size, d)
    x = k[:, None] * offset + means[flat] + noise * eps
    return x.reshape(labels.shape + (d,))


def make_feature_task(
    n_classes: int = 2,
    d: int = 8,
    separation: float = 2.0,
    noise: float = 1.0,
    n: int = 5000,
    rng: SplitMix64 | int | None = None,
    doc_length: int = 1,
    offset: float = 3.0,
) -> FeatureDataset:
    """Classification task whose classes survive in the features but not in their signs.

    Every vector sits in one of two clusters at ``+offset`` or ``-offset``
    along the all-ones direction, shifted by a class mean orthogonal to it.
    The common-mode shift fixes the sign of almost every dimension, so the
    2-bin quantization used by the generative baseline keeps little class
    information while a linear head recovers the class direction.
    """
    if n_classes < 2 or d < 2:
        raise ValueError("make_feature_task needs n_classes >= 2 and d >= 2")
    rng = as_rng(rng)
    means = _class_means(n_classes, d, separation, rng)
    labels = rng.integers(0, n_classes, n)
    per_token = np.repeat(labels[:, None], doc_length, axis=1)
    features = _mixture_features(per_token, means, offset, noise, rng)
    logger.debug(f"feature task: n={n}, d={d}, classes={n_classes}, sep={separation}")
    return FeatureDataset(
        labels=labels,
        features=features,
        symbols=quantize(features),
        n_labels=n_classes,
        kind=ModelKind.NB,
        meta={"separation": separation, "noise": noise, "offset": offset},
    )


def make_tagging_task(
    n_labels: int = 2,
    d: int = 8,
    length: int = 10,
    n: int = 500,
    rng: SplitMix64 | int | None = None,
    stickiness: float = 0.8,
    separation: float = 2.0,
    noise: float = 1.0,
    offset: float = 3.0,
) -> FeatureDataset:
    """Sequence-labeling analogue: a sticky label chain emitting mixture features per token."""
    if not 0.0 <= stickiness <= 1.0:
        raise ValueError(f"stickiness must be in [0, 1], got {stickiness}")
    rng = as_rng(rng)
    means = _class_means(n_labels, d, separation, rng)
    off_diag = (1.0 - stickiness) / max(n_labels - 1, 1)
    transition = np.full((n_labels, n_labels), off_diag)
    np.fill_diagonal(transition, stickiness if n_labels > 1 else 1.0)
    cdf = np.cumsum(transition, axis=1)
    prior_cdf = np.cumsum(np.full(n_labels, 1.0 / n_labels))

    labels = np.empty((n, length), dtype=np.int64)
    u = rng.uniform(n * length).reshape(n, length)
    labels[:, 0] = draw_categorical(prior_cdf, u[:, 0])
    for t in range(1, length):
        for i in range(n):
            labels[i, t] = draw_categorical(cdf[labels[i, t - 1]], u[i, t])
    features = _mixture_features(labels, means, offset, noise, rng)
    return FeatureDataset(
        labels=labels,
        features=features,
        symbols=quantize(features),
        n_labels=n_labels,
        kind=ModelKind.HMC,
        meta={"separation": separation, "noise": noise, "offset": offset, "stickiness": stickiness},
    )

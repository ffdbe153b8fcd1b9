"""Domain types shared by every gendisc module.

Index convention: positions are written 1-based in documentation and error
messages (``y_1 .. y_T``) and stored 0-based in arrays, so position ``t`` of
the docs lives at array index ``t - 1``. Labels and observation symbols are
integer indices into their alphabets.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from gendisc.exceptions import AlphabetError, ShapeError

logger = logging.getLogger(__name__)

# Tolerance for "sums to one" checks on probability vectors.
PROB_TOL = 1e-9


class ModelKind(str, Enum):
    """The six model families."""

    NB = "nb"
    POOLED_MC = "pooledmc"
    POOLED_MC2 = "pooledmc2"
    HMC = "hmc"
    HMC2 = "hmc2"
    HMC_PLUS = "hmcplus"

    @property
    def is_sequence(self) -> bool:
        """True for the HMC family (one hidden label per observation)."""
        return self in (ModelKind.HMC, ModelKind.HMC2, ModelKind.HMC_PLUS)

    @property
    def family(self) -> str:
        return "hmc" if self.is_sequence else "nb"

    @classmethod
    def parse(cls, value: str | ModelKind) -> ModelKind:
        """Parse a kind name, accepting a few spellings (``HMC+``, ``pooled_mc``)."""
        if isinstance(value, ModelKind):
            return value
        key = value.strip().lower().replace("_", "").replace("-", "").replace("+", "plus")
        for kind in cls:
            if kind.value == key:
                return kind
        expected = [k.value for k in cls]
        raise ValueError(f"Unknown model kind: {value!r} (expected one of {expected})")


class Construction(str, Enum):
    """How a Bayesian classifier is computed."""

    GENERATIVE = "generative"
    DISCRIMINATIVE = "discriminative"


class Algorithm(str, Enum):
    """Decoding criterion for sequence models."""

    MAP = "map"
    MPM = "mpm"


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct names with a stable integer index."""

    names: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise AlphabetError(f"{type(self).__name__} must contain at least one name")
        index = {name: i for i, name in enumerate(names)}
        if len(index) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise AlphabetError(f"{type(self).__name__} has duplicate names: {dupes}")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_iterable(cls, names: Iterable[str]) -> Alphabet:
        """Build an alphabet from names in first-seen order, dropping repeats."""
        seen: dict[str, None] = {}
        for name in names:
            seen.setdefault(str(name), None)
        return cls(tuple(seen))

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        """Return the index of ``name``."""
        try:
            return self._index[name]
        except KeyError as err:
            raise AlphabetError(f"'{name}' is not in the {type(self).__name__}") from err

    def encode(self, names: Sequence[str]) -> np.ndarray:
        """Map names to an int64 index array."""
        return np.asarray([self.index(n) for n in names], dtype=np.int64)

    def decode(self, indices: Iterable[int]) -> list[str]:
        """Map indices back to names."""
        out = []
        for i in indices:
            if not 0 <= int(i) < len(self.names):
                raise AlphabetError(f"index {i} outside {type(self).__name__} of size {len(self)}")
            out.append(self.names[int(i)])
        return out


class LabelSet(Alphabet):
    """The hidden label alphabet (size N)."""

    @property
    def n(self) -> int:
        return len(self)


class ObsSet(Alphabet):
    """The discrete observation alphabet (size M)."""

    @property
    def m(self) -> int:
        return len(self)


@dataclass(frozen=True, eq=False)
class LabeledSequence:
    """One observation sequence with (optionally) its hidden labels.

    Attributes:
        y: Observation indices, shape (T,), or feature vectors, shape (T, d)
        x: Label indices; shape (T,) for the HMC family, (1,) for the NB
            family (the single class), or None when unlabeled

    """

    y: np.ndarray
    x: np.ndarray | None = None

    def __post_init__(self) -> None:
        y = np.array(self.y)
        if y.ndim == 1:
            y = y.astype(np.int64, copy=False)
        elif y.ndim == 2:
            y = y.astype(np.float64, copy=False)
        else:
            raise ShapeError(f"observations must be 1-D indices or 2-D features, got {y.shape}")
        if y.shape[0] < 1:
            raise ShapeError("a sequence needs at least one observation")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if self.x is not None:
            x = np.atleast_1d(np.array(self.x, dtype=np.int64))
            x.setflags(write=False)
            object.__setattr__(self, "x", x)

    @property
    def length(self) -> int:
        """Number of observations T."""
        return int(self.y.shape[0])

    @property
    def is_featurized(self) -> bool:
        return self.y.ndim == 2

    @property
    def is_labeled(self) -> bool:
        return self.x is not None

    def check(self, kind: ModelKind, n_labels: int, n_symbols: int | None = None) -> None:
        """Raise if the sequence does not fit ``kind`` and the alphabet sizes."""
        if n_symbols is not None:
            if self.is_featurized:
                raise ShapeError("featurized observations given where discrete symbols are needed")
            if self.y.min() < 0 or self.y.max() >= n_symbols:
                raise AlphabetError(f"observation index outside 0..{n_symbols - 1}")
        if self.x is None:
            return
        expected = self.length if kind.is_sequence else 1
        if self.x.shape != (expected,):
            raise ShapeError(
                f"{kind.value} expects {expected} label(s) for T={self.length}, "
                f"got {self.x.shape[0]}"
            )
        if self.x.min() < 0 or self.x.max() >= n_labels:
            raise AlphabetError(f"label index outside 0..{n_labels - 1}")


@dataclass(frozen=True, eq=False)
class PosteriorMarginals:
    """Per-position posterior distributions p(x_t | y_{1:T}), shape (T, N)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ShapeError(f"marginals must be (T, N), got {probs.shape}")
        sums = probs.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=PROB_TOL, rtol=0.0):
            raise ValueError(f"marginals rows do not sum to one: {sums}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def length(self) -> int:
        return int(self.probs.shape[0])

    def argmax(self) -> np.ndarray:
        """Per-position argmax, lowest index on ties."""
        return np.argmax(self.probs, axis=1)


@dataclass(frozen=True)
class DecodeResult:
    """Output of a classifier.

    Attributes:
        labels: Label indices (length 1 for the NB family, T otherwise)
        score: Log-domain objective of the chosen answer; only comparable
            within one construction
        ties_broken: Number of argmax ties resolved toward the lowest index

    """

    labels: np.ndarray
    score: float
    ties_broken: int = 0

    def __post_init__(self) -> None:
        labels = np.atleast_1d(np.array(self.labels, dtype=np.int64))
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecodeResult):
            return NotImplemented
        return (
            np.array_equal(self.labels, other.labels)
            and (self.score == other.score or (np.isnan(self.score) and np.isnan(other.score)))
            and self.ties_broken == other.ties_broken
        )

    def __hash__(self) -> int:
        return hash((tuple(self.labels.tolist()), self.score, self.ties_broken))

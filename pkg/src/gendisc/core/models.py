"""Model parameterizations and their validation.

A :class:`GenerativeModel` holds the probability tables of one of the six
joint laws. A :class:`DiscriminativeUnits` holds what the discriminative
construction consumes instead: structural priors over labels, label
marginals, and posterior units ``p(label-context | observation-context)``
given either as tables over a discrete observation alphabet or as
:class:`FeatureHead` objects over real feature vectors.

Posterior-unit tables and marginals carry a leading *row* axis of length
``H >= 1``. Position ``t`` (0-based) reads row ``min(t, H - 1)``; a numerator
unit and the denominator it is divided by always come from the same row.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.special import log_softmax

from gendisc.core.types import PROB_TOL, LabelSet, ModelKind, ObsSet
from gendisc.exceptions import ModelValidationError, ShapeError

logger = logging.getLogger(__name__)


def safe_log(values: np.ndarray | float) -> np.ndarray:
    """Natural log with log(0) = -inf and no warning."""
    with np.errstate(divide="ignore"):
        return np.log(values)


@dataclass(frozen=True)
class TableSpec:
    """Shape and constraints of one named table.

    ``axes`` uses the symbols N (labels), M (observations) and H (rows).
    The trailing ``dist_axes`` axes form one probability distribution.
    ``context`` is the number of observation axes a posterior unit is
    conditioned on (0 for structural tables).
    """

    name: str
    axes: tuple[str, ...]
    notation: str
    dist_axes: int = 1
    context: int = 0
    positive: bool = False

    @property
    def is_unit(self) -> bool:
        """True for posterior units (tables that may be replaced by a head)."""
        return self.context > 0


GENERATIVE_SCHEMA: dict[ModelKind, tuple[TableSpec, ...]] = {
    ModelKind.NB: (
        TableSpec("prior", ("N",), "p(x)"),
        TableSpec("emission", ("N", "M"), "p(y_t|x)"),
    ),
    ModelKind.POOLED_MC: (
        TableSpec("prior", ("N",), "p(x)"),
        TableSpec("first_emission", ("N", "M"), "p(y_1|x)"),
        TableSpec("emission_transition", ("N", "M", "M"), "p(y_{t+1}|x,y_t)"),
    ),
    ModelKind.POOLED_MC2: (
        TableSpec("prior", ("N",), "p(x)"),
        TableSpec("first_emission", ("N", "M"), "p(y_1|x)"),
        TableSpec("second_emission", ("N", "M", "M"), "p(y_2|x,y_1)"),
        TableSpec("emission_transition2", ("N", "M", "M", "M"), "p(y_{t+2}|x,y_t,y_{t+1})"),
    ),
    ModelKind.HMC: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_{t+1}|x_t)"),
        TableSpec("emission", ("N", "M"), "p(y_t|x_t)"),
    ),
    ModelKind.HMC2: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_2|x_1)"),
        TableSpec("transition2", ("N", "N", "N"), "p(x_{t+2}|x_t,x_{t+1})"),
        TableSpec("emission", ("N", "M"), "p(y_t|x_t)"),
    ),
    ModelKind.HMC_PLUS: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_{t+1}|x_t)"),
        TableSpec("first_emission", ("N", "M"), "p(y_1|x_1)"),
        TableSpec("pair_emission", ("N", "N", "M"), "p(y_{t+1}|x_t,x_{t+1})"),
    ),
}

_POSTERIOR = TableSpec("posterior", ("H", "M", "N"), "p(x|y_t)", context=1)
_PAIR_POSTERIOR = TableSpec("pair_posterior", ("H", "M", "M", "N"), "p(x|y_{t-1},y_t)", context=2)
_MARGINALS = TableSpec("marginals", ("H", "N"), "p(x_t)", positive=True)

UNITS_SCHEMA: dict[ModelKind, tuple[TableSpec, ...]] = {
    ModelKind.NB: (
        TableSpec("prior", ("N",), "p(x)", positive=True),
        _POSTERIOR,
    ),
    ModelKind.POOLED_MC: (
        TableSpec("prior", ("N",), "p(x)"),
        _POSTERIOR,
        _PAIR_POSTERIOR,
    ),
    ModelKind.POOLED_MC2: (
        TableSpec("prior", ("N",), "p(x)"),
        _POSTERIOR,
        _PAIR_POSTERIOR,
        TableSpec(
            "triple_posterior", ("H", "M", "M", "M", "N"), "p(x|y_{t-2},y_{t-1},y_t)", context=3
        ),
    ),
    ModelKind.HMC: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_{t+1}|x_t)"),
        _MARGINALS,
        TableSpec("posterior", ("H", "M", "N"), "p(x_t|y_t)", context=1),
    ),
    ModelKind.HMC2: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_2|x_1)"),
        TableSpec("transition2", ("N", "N", "N"), "p(x_{t+2}|x_t,x_{t+1})"),
        _MARGINALS,
        TableSpec("posterior", ("H", "M", "N"), "p(x_t|y_t)", context=1),
    ),
    ModelKind.HMC_PLUS: (
        TableSpec("prior", ("N",), "p(x_1)"),
        TableSpec("transition", ("N", "N"), "p(x_{t+1}|x_t)"),
        _MARGINALS,
        TableSpec(
            "pair_marginals", ("H", "N", "N"), "p(x_t,x_{t+1})", dist_axes=2, positive=True
        ),
        TableSpec("first_posterior", ("H", "M", "N"), "p(x_1|y_1)", context=1),
        TableSpec(
            "pair_posterior", ("H", "M", "N", "N"), "p(x_{t-1},x_t|y_t)", dist_axes=2, context=1
        ),
    ),
}


def unit_specs(kind: ModelKind) -> tuple[TableSpec, ...]:
    """Posterior-unit specs of ``kind`` (the tables a FeatureHead may replace)."""
    return tuple(s for s in UNITS_SCHEMA[kind] if s.is_unit)


def _freeze(tables: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    frozen = {}
    for name, value in tables.items():
        arr = np.array(value, dtype=np.float64)
        arr.setflags(write=False)
        frozen[name] = arr
    return frozen


@dataclass(frozen=True, eq=False)
class GenerativeModel:
    """Probability tables of one joint law, reused at every position.

    Attributes:
        kind: Which of the six laws
        labels: Label alphabet (N)
        observations: Observation alphabet (M)
        tables: Named tables, see :data:`GENERATIVE_SCHEMA`

    """

    kind: ModelKind
    labels: LabelSet
    observations: ObsSet
    tables: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        object.__setattr__(self, "tables", _freeze(self.tables))

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def n_symbols(self) -> int:
        return len(self.observations)

    def table(self, name: str) -> np.ndarray:
        """Return table ``name`` or raise ShapeError if the kind lacks it."""
        try:
            return self.tables[name]
        except KeyError as err:
            raise ShapeError(f"{self.kind.value} model has no table '{name}'") from err

    def log(self, name: str) -> np.ndarray:
        """Natural log of table ``name``."""
        return safe_log(self.table(name))

    def with_tables(self, **tables: np.ndarray) -> GenerativeModel:
        """Return a copy with some tables replaced."""
        merged = dict(self.tables)
        merged.update(tables)
        return replace(self, tables=merged)

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}={v.shape}" for k, v in self.tables.items())
        return (
            f"GenerativeModel({self.kind.value}, N={self.n_labels}, M={self.n_symbols}, {shapes})"
        )


@dataclass(frozen=True, eq=False)
class FeatureHead:
    """Affine map from a feature vector to a Categorical by softmax.

    Attributes:
        W: Weights, shape (K, d)
        b: Biases, shape (K,)

    """

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        W = np.array(self.W, dtype=np.float64)
        b = np.array(self.b, dtype=np.float64)
        if W.ndim != 2 or b.shape != (W.shape[0],):
            raise ShapeError(f"FeatureHead expects W (K, d) and b (K,), got {W.shape}, {b.shape}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @classmethod
    def zeros(cls, n_outputs: int, d: int) -> FeatureHead:
        """All-zero head: uniform output for every input."""
        return cls(np.zeros((n_outputs, d)), np.zeros(n_outputs))

    @property
    def d(self) -> int:
        return int(self.W.shape[1])

    @property
    def n_outputs(self) -> int:
        return int(self.W.shape[0])

    def _check_input(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        if features.shape[-1] != self.d:
            raise ShapeError(f"FeatureHead expects {self.d} features, got {features.shape[-1]}")
        return features

    def logits(self, features: np.ndarray) -> np.ndarray:
        """Raw scores, shape (n, K)."""
        features = self._check_input(features)
        return features @ self.W.T + self.b

    def log_predict(self, features: np.ndarray) -> np.ndarray:
        """Log-probabilities, shape (n, K)."""
        return log_softmax(self.logits(features), axis=-1)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Probabilities, shape (n, K)."""
        return np.exp(self.log_predict(features))

    def loss_and_gradients(
        self, features: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray, np.ndarray]:
        """Mean cross-entropy of ``targets`` and its gradient wrt (W, b)."""
        features = self._check_input(features)
        targets = np.asarray(targets, dtype=np.int64)
        log_p = self.log_predict(features)
        n = features.shape[0]
        loss = float(-log_p[np.arange(n), targets].mean())
        delta = np.exp(log_p)
        delta[np.arange(n), targets] -= 1.0
        delta /= n
        return loss, delta.T @ features, delta.sum(axis=0)


@dataclass(frozen=True, eq=False)
class DiscriminativeUnits:
    """Priors, marginals and posterior units consumed by the discriminative construction.

    Attributes:
        kind: Which of the six laws these units stand in for
        labels: Label alphabet (N)
        observations: Observation alphabet when units are tables; None for
            purely feature-based units
        tables: Structural tables, marginals and table-valued posterior units
        heads: Feature-head posterior units, keyed like the tables they replace
        marginal_mode: How marginals were obtained ("propagated",
            "reference" or "empirical")

    """

    kind: ModelKind
    labels: LabelSet
    observations: ObsSet | None
    tables: Mapping[str, np.ndarray]
    heads: Mapping[str, FeatureHead] = field(default_factory=dict)
    marginal_mode: str = "propagated"

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        object.__setattr__(self, "tables", _freeze(self.tables))
        object.__setattr__(self, "heads", dict(self.heads))

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def is_featurized(self) -> bool:
        """True when every posterior unit is a FeatureHead."""
        return all(s.name in self.heads for s in unit_specs(self.kind))

    @property
    def feature_dim(self) -> int | None:
        """Per-observation feature dimension, or None for table units."""
        for spec in unit_specs(self.kind):
            head = self.heads.get(spec.name)
            if head is not None:
                return head.d // spec.context
        return None

    @property
    def horizon(self) -> int:
        """Largest row count among positional tables."""
        rows = [v.shape[0] for k, v in self.tables.items() if _spec(self.kind, k, "H")]
        return max(rows, default=1)

    def table(self, name: str) -> np.ndarray:
        try:
            return self.tables[name]
        except KeyError as err:
            raise ShapeError(f"{self.kind.value} units have no table '{name}'") from err

    def log(self, name: str) -> np.ndarray:
        return safe_log(self.table(name))

    def rows(self, name: str, positions: np.ndarray) -> np.ndarray:
        """Row indices of positional table ``name`` for 0-based ``positions``."""
        n_rows = self.table(name).shape[0] if name in self.tables else 1
        return np.minimum(np.asarray(positions, dtype=np.int64), n_rows - 1)

    def log_unit(self, name: str, contexts: np.ndarray, positions: np.ndarray) -> np.ndarray:
        """Log-probabilities of posterior unit ``name``.

        Args:
            name: Unit name (e.g. "posterior", "pair_posterior")
            contexts: Observation contexts, int (n, k) for tables or float
                (n, k, d) for heads
            positions: 0-based positions selecting the table row, shape (n,)

        Returns:
            Array (n, *outputs) of log-probabilities

        """
        spec = _spec(self.kind, name)
        if spec is None or not spec.is_unit:
            raise ShapeError(f"'{name}' is not a posterior unit of {self.kind.value}")
        contexts = np.asarray(contexts)
        n_out = (self.n_labels,) * spec.dist_axes
        head = self.heads.get(name)
        if head is not None:
            if contexts.ndim != 3:
                raise ShapeError(f"unit '{name}' is a FeatureHead and needs feature contexts")
            flat = contexts.reshape(contexts.shape[0], -1)
            return head.log_predict(flat).reshape((contexts.shape[0],) + n_out)
        if contexts.ndim != 2 or np.issubdtype(contexts.dtype, np.floating):
            raise ShapeError(f"unit '{name}' is a table and needs discrete contexts")
        table = self.table(name)
        rows = self.rows(name, positions)
        index = (rows,) + tuple(contexts[:, j] for j in range(contexts.shape[1]))
        return safe_log(table[index])

    def with_tables(self, **tables: np.ndarray) -> DiscriminativeUnits:
        merged = dict(self.tables)
        merged.update(tables)
        return replace(self, tables=merged)

    def __repr__(self) -> str:
        parts = [f"{k}={v.shape}" for k, v in self.tables.items()]
        parts += [f"{k}=head({h.n_outputs}x{h.d})" for k, h in self.heads.items()]
        return f"DiscriminativeUnits({self.kind.value}, N={self.n_labels}, {', '.join(parts)})"


def _spec(kind: ModelKind, name: str, axis: str | None = None) -> TableSpec | None:
    for spec in UNITS_SCHEMA[kind]:
        if spec.name == name and (axis is None or axis in spec.axes):
            return spec
    return None


AnyModel = Union[GenerativeModel, DiscriminativeUnits]


@dataclass(frozen=True)
class Violation:
    """One failed invariant: which table, where, and what."""

    table: str
    index: tuple[int, ...] | None
    message: str

    def __str__(self) -> str:
        where = f"[{', '.join(str(i) for i in self.index)}]" if self.index is not None else ""
        return f"{self.table}{where}: {self.message}"


def _check_table(
    spec: TableSpec, arr: np.ndarray, sizes: dict[str, int], out: list[Violation]
) -> None:
    expected = tuple(sizes.get(a, -1) for a in spec.axes)
    shape_ok = arr.ndim == len(spec.axes) and all(
        e == s or (a == "H" and s >= 1) for a, e, s in zip(spec.axes, expected, arr.shape)
    )
    if not shape_ok:
        shown = tuple("H" if a == "H" else e for a, e in zip(spec.axes, expected))
        out.append(Violation(spec.name, None, f"shape {arr.shape} does not match {shown}"))
        return

    bad = ~np.isfinite(arr) | (arr < 0)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        out.append(Violation(spec.name, idx, f"entry {arr[idx]} is not a probability"))
        return

    lead = arr.shape[: arr.ndim - spec.dist_axes]
    sums = arr.reshape(lead + (-1,)).sum(axis=-1)
    for flat in np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL):
        idx = tuple(int(i) for i in np.unravel_index(flat, lead)) if lead else ()
        out.append(Violation(spec.name, idx, f"row sum {sums[idx]:.10g} ≠ 1"))

    if spec.positive and (arr <= 0).any():
        for idx in np.argwhere(arr <= 0):
            where = tuple(int(i) for i in idx)
            out.append(Violation(spec.name, where, "zero denominator marginal"))


def _check_head(
    spec: TableSpec, head: FeatureHead, n_labels: int, dims: set[int], out: list[Violation]
) -> None:
    k = n_labels**spec.dist_axes
    if head.n_outputs != k:
        out.append(Violation(spec.name, None, f"head has {head.n_outputs} outputs, expected {k}"))
    if head.d % spec.context:
        out.append(
            Violation(spec.name, None, f"head input {head.d} not a multiple of {spec.context}")
        )
    else:
        dims.add(head.d // spec.context)
    if not (np.isfinite(head.W).all() and np.isfinite(head.b).all()):
        out.append(Violation(spec.name, None, "head has non-finite parameters"))


def validate(model: AnyModel) -> list[Violation]:
    """List every invariant violated by ``model``; empty means valid."""
    violations: list[Violation] = []
    n = len(model.labels)

    if isinstance(model, GenerativeModel):
        schema = GENERATIVE_SCHEMA[model.kind]
        sizes = {"N": n, "M": len(model.observations)}
        heads: Mapping[str, FeatureHead] = {}
    else:
        schema = UNITS_SCHEMA[model.kind]
        sizes = {"N": n, "M": len(model.observations) if model.observations is not None else -1}
        heads = model.heads

    known = {s.name for s in schema}
    for name in sorted(set(model.tables) - known):
        violations.append(Violation(name, None, f"unexpected table for {model.kind.value}"))
    for name in sorted(set(heads) - known):
        violations.append(Violation(name, None, f"unexpected head for {model.kind.value}"))

    head_dims: set[int] = set()
    for spec in schema:
        if spec.name in heads:
            if spec.name in model.tables:
                violations.append(Violation(spec.name, None, "given both as table and as head"))
            _check_head(spec, heads[spec.name], n, head_dims, violations)
        elif spec.name in model.tables:
            if spec.is_unit and sizes["M"] < 0:
                violations.append(Violation(spec.name, None, "table unit without observations"))
                continue
            _check_table(spec, model.tables[spec.name], sizes, violations)
        else:
            violations.append(Violation(spec.name, None, "missing"))
    if len(head_dims) > 1:
        message = f"inconsistent feature dims {sorted(head_dims)}"
        violations.append(Violation("heads", None, message))

    if violations:
        logger.debug(f"validate({model.kind.value}): {len(violations)} violation(s)")
    return violations


def require_valid(model: AnyModel, source: str | None = None) -> None:
    """Raise ModelValidationError if ``model`` has violations."""
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations, source=source)

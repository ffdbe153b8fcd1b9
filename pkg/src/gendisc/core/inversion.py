"""Exact Bayes inversion of a discrete generative model into discriminative units."""

from __future__ import annotations

import logging

import numpy as np

from gendisc.core.joint import label_marginals, observation_marginals
from gendisc.core.models import DiscriminativeUnits, GenerativeModel, require_valid
from gendisc.core.types import ModelKind
from gendisc.exceptions import InversionError

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 64


def _posterior(joint: np.ndarray, n_out: int, unit: str) -> np.ndarray:
    """Normalize ``joint`` over its trailing ``n_out`` axes, refusing zero evidence."""
    axes = tuple(range(joint.ndim - n_out, joint.ndim))
    evidence = joint.sum(axis=axes, keepdims=True)
    zero = evidence == 0
    if zero.any():
        idx = tuple(int(i) for i in np.argwhere(zero)[0][: joint.ndim - n_out])
        raise InversionError(unit, f"context (row, obs...) {idx} has zero evidence")
    return joint / evidence


def bayes_invert(
    model: GenerativeModel,
    horizon: int | None = None,
    marginals: np.ndarray | None = None,
) -> DiscriminativeUnits:
    """Compute the discriminative units implied by ``model``'s joint law.

    Args:
        model: Valid discrete generative model
        horizon: Number of positional rows H. Rows are exact for positions
            1..H; later positions reuse row H, which keeps classifiers exact
            because numerators and denominators share a row
        marginals: Optional fixed label reference p(x) for the HMC family.
            Posterior units and marginals are then built from this single
            reference (H = 1) instead of chain propagation

    Returns:
        DiscriminativeUnits whose classifiers reproduce the generative argmax

    Raises:
        InversionError: An observation context has zero evidence

    """
    require_valid(model, source="bayes_invert")
    H = DEFAULT_HORIZON if horizon is None else int(horizon)
    if H < 1:
        raise ValueError(f"horizon must be >= 1, got {H}")
    kind = model.kind
    prior = model.table("prior")
    tables: dict[str, np.ndarray] = {"prior": prior}
    mode = "propagated"

    if marginals is not None:
        if not kind.is_sequence:
            raise ValueError("a marginal reference only applies to the HMC family")
        ref = np.asarray(marginals, dtype=np.float64).reshape(1, -1)
        if ref.shape[1] != model.n_labels:
            raise ValueError(f"reference has {ref.shape[1]} labels, model has {model.n_labels}")
        label_marg = ref
        mode = "reference"
    elif kind.is_sequence:
        label_marg = label_marginals(model, H)

    if kind is ModelKind.NB:
        joint = prior[None, :] * model.table("emission").T
        tables["posterior"] = _posterior(joint[None], 1, "posterior")

    elif kind is ModelKind.POOLED_MC:
        context = observation_marginals(model, H)
        single = prior[None, None, :] * context.transpose(0, 2, 1)
        step = model.table("emission_transition").transpose(1, 2, 0)
        tables["posterior"] = _posterior(single, 1, "posterior")
        pair = single[:, :, None, :] * step[None]
        tables["pair_posterior"] = _posterior(pair, 1, "pair_posterior")

    elif kind is ModelKind.POOLED_MC2:
        context = observation_marginals(model, H)
        first = prior[None, :] * model.table("first_emission").T
        pair = prior[None, None, None, :] * context.transpose(0, 2, 3, 1)
        step = model.table("emission_transition2").transpose(1, 2, 3, 0)
        tables["posterior"] = _posterior(first[None], 1, "posterior")
        tables["pair_posterior"] = _posterior(pair, 1, "pair_posterior")
        tables["triple_posterior"] = _posterior(
            pair[:, :, :, None, :] * step[None], 1, "triple_posterior"
        )

    elif kind in (ModelKind.HMC, ModelKind.HMC2):
        tables["transition"] = model.table("transition")
        if kind is ModelKind.HMC2:
            tables["transition2"] = model.table("transition2")
        emission = model.table("emission").T
        tables["marginals"] = label_marg
        tables["posterior"] = _posterior(label_marg[:, None, :] * emission[None], 1, "posterior")

    else:
        transition = model.table("transition")
        pair_marg = label_marg[:, :, None] * transition[None]
        pair_emission = model.table("pair_emission").transpose(2, 0, 1)
        first = prior[None, :] * model.table("first_emission").T
        tables["transition"] = transition
        tables["marginals"] = label_marg
        tables["pair_marginals"] = pair_marg
        tables["first_posterior"] = _posterior(first[None], 1, "first_posterior")
        tables["pair_posterior"] = _posterior(
            pair_marg[:, None, :, :] * pair_emission[None], 2, "pair_posterior"
        )

    units = DiscriminativeUnits(
        kind=kind,
        labels=model.labels,
        observations=model.observations,
        tables=tables,
        marginal_mode=mode,
    )
    logger.debug(f"bayes_invert({kind.value}): horizon={units.horizon}, mode={mode}")
    return units


def as_units(
    source: GenerativeModel | DiscriminativeUnits, length: int | None = None
) -> DiscriminativeUnits:
    """Return ``source`` if it already is a unit set, else invert it.

    ``length`` sizes the inversion horizon so that every position of a
    sequence of that length gets its own exact row.
    """
    if isinstance(source, DiscriminativeUnits):
        return source
    horizon = max(DEFAULT_HORIZON, length or 0)
    logger.info(f"inverting {source.kind.value} model for the discriminative construction")
    return bayes_invert(source, horizon=horizon)

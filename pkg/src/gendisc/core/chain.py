"""Dynamic programming over a first-order chain of states.

Every HMC-family classifier, in either construction, reduces to a chain
with log initial weights ``w_0(s)`` and log step weights ``W_t(s, s')``.
Max-sum gives the MAP path, sum-product gives the posterior marginals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from gendisc.core.models import safe_log
from gendisc.exceptions import ShapeError, ZeroProbabilityError

logger = logging.getLogger(__name__)

# Absolute tolerance under which two log scores count as a tie.
TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChainPotentials:
    """Log weights of a state chain of length T.

    Attributes:
        log_init: Initial log weights, shape (S,)
        log_steps: Step log weights, shape (T-1, S, S), indexed [t, from, to]

    """

    log_init: np.ndarray
    log_steps: np.ndarray

    def __post_init__(self) -> None:
        n_states = self.log_init.shape[0]
        if self.log_steps.ndim != 3 or self.log_steps.shape[1:] != (n_states, n_states):
            raise ShapeError(
                f"steps must be (T-1, {n_states}, {n_states}), got {self.log_steps.shape}"
            )

    @property
    def length(self) -> int:
        return int(self.log_steps.shape[0]) + 1

    @property
    def n_states(self) -> int:
        return int(self.log_init.shape[0])

    def path_score(self, path: np.ndarray) -> float:
        """Log weight of one state path."""
        path = np.asarray(path, dtype=np.int64)
        steps = self.log_steps[np.arange(self.length - 1), path[:-1], path[1:]]
        return float(self.log_init[path[0]] + steps.sum())


@dataclass(frozen=True, eq=False)
class ForwardBackward:
    """Messages and posteriors from :func:`forward_backward`.

    ``alpha`` and ``beta`` are in the linear domain, rescaled per step when
    requested; ``log_evidence`` is the log of the total chain weight.
    """

    alpha: np.ndarray
    beta: np.ndarray
    posteriors: np.ndarray
    log_evidence: float


def _is_tie(values: np.ndarray, best: float) -> bool:
    if not np.isfinite(best):
        return False
    return int(np.count_nonzero(values >= best - TIE_TOL)) > 1


def max_sum(potentials: ChainPotentials, rescale: bool = True) -> tuple[np.ndarray, float, int]:
    """Viterbi over the chain.

    Args:
        potentials: Chain log weights
        rescale: Subtract the running maximum after every step

    Returns:
        (path, score, ties_broken); ties resolve to the lowest state index
        at every step

    """
    T, S = potentials.length, potentials.n_states
    delta = potentials.log_init.astype(np.float64).copy()
    offset = 0.0
    back = np.zeros((T - 1, S), dtype=np.int64)
    tie = np.zeros((T - 1, S), dtype=bool)
    cols = np.arange(S)

    for t in range(T - 1):
        cand = delta[:, None] + potentials.log_steps[t]
        back[t] = np.argmax(cand, axis=0)
        best = cand[back[t], cols]
        tie[t] = [_is_tie(cand[:, j], best[j]) for j in range(S)]
        delta = best
        if rescale:
            top = delta.max()
            if np.isfinite(top):
                delta = delta - top
                offset += top

    last = int(np.argmax(delta))
    ties = int(_is_tie(delta, delta[last]))
    path = np.empty(T, dtype=np.int64)
    path[-1] = last
    for t in range(T - 2, -1, -1):
        ties += int(tie[t, path[t + 1]])
        path[t] = back[t, path[t + 1]]
    return path, float(delta[last] + offset), ties


def forward_backward(potentials: ChainPotentials, rescale: bool = True) -> ForwardBackward:
    """Sum-product over the chain.

    With ``rescale`` every alpha and beta vector (except the terminal
    beta, which stays at one) is divided by its sum, and step weights are
    exponentiated after subtracting their maximum. Without it the raw
    linear-domain recursion is run, which underflows for long chains.

    Raises:
        ZeroProbabilityError: The chain weight vanishes at some position

    """
    T, S = potentials.length, potentials.n_states
    alpha = np.empty((T, S))
    beta = np.empty((T, S))
    kernels = np.empty((T - 1, S, S))
    shifts = np.zeros(T)

    def _exp(log_w: np.ndarray, position: int) -> tuple[np.ndarray, float]:
        top = log_w.max()
        if not np.isfinite(top):
            raise ZeroProbabilityError(position)
        shift = float(top) if rescale else 0.0
        return np.exp(log_w - shift), shift

    alpha[0], shifts[0] = _exp(potentials.log_init, 1)
    for t in range(T - 1):
        kernels[t], shifts[t + 1] = _exp(potentials.log_steps[t], t + 2)

    log_evidence = float(shifts.sum())
    for t in range(T):
        if t > 0:
            alpha[t] = alpha[t - 1] @ kernels[t - 1]
        total = alpha[t].sum()
        if total <= 0:
            raise ZeroProbabilityError(t + 1)
        if rescale:
            alpha[t] /= total
            log_evidence += float(np.log(total))
    if not rescale:
        log_evidence = float(safe_log(alpha[-1].sum()))

    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = kernels[t] @ beta[t + 1]
        if rescale:
            total = beta[t].sum()
            if total <= 0:
                raise ZeroProbabilityError(t + 1)
            beta[t] /= total

    gamma = alpha * beta
    norms = gamma.sum(axis=1, keepdims=True)
    if (norms <= 0).any():
        raise ZeroProbabilityError(int(np.flatnonzero(norms[:, 0] <= 0)[0]) + 1)
    logger.debug(f"forward_backward: T={T}, S={S}, log_evidence={log_evidence:.6g}")
    return ForwardBackward(
        alpha=alpha, beta=beta, posteriors=gamma / norms, log_evidence=log_evidence
    )

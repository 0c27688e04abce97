"""Exact inference for small discrete models.

These are the reference answers that every approximate filter in the package
is scored against.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .models import DiscreteHMM, check_evidence

__all__ = [
    "ImpossibleEvidenceError",
    "FilterResult",
    "forward_filter",
    "smooth",
    "brute_force_posterior",
    "slice_marginals",
    "evidence_probability",
]

MAX_ENUMERATION = 10**7


class ImpossibleEvidenceError(ValueError):
    """Evidence has probability zero under the model."""

    def __init__(self, t: int):
        super().__init__(f"impossible evidence at t={t}")
        self.t = t


class FilterResult(NamedTuple):
    beliefs: np.ndarray  # (T, n_states); row t-1 is P(X_t | y_1:t)
    log_likelihood: float
    normalizers: np.ndarray  # (T,); P(y_t | y_1:t-1)


def forward_filter(model: DiscreteHMM, evidence) -> FilterResult:
    """Rescaled forward recursion.

    Returns the filtered beliefs for every prefix of ``evidence`` together
    with ``log P(y_1:T)``.  Raises :class:`ImpossibleEvidenceError` carrying
    the first ``t`` whose symbol has zero probability given the past.
    """
    ev = check_evidence(model, evidence)
    T = ev.shape[0]
    beliefs = np.empty((T, model.n_states))
    norms = np.empty(T)
    pred = model.prior
    for t in range(T):
        if t > 0:
            pred = beliefs[t - 1] @ model.transition
        alpha = pred * model.observation[:, ev[t]]
        c = alpha.sum()
        if not c > 0:
            raise ImpossibleEvidenceError(t + 1)
        beliefs[t] = alpha / c
        norms[t] = c
    return FilterResult(beliefs, float(np.log(norms).sum()), norms)


def smooth(model: DiscreteHMM, evidence) -> np.ndarray:
    """Forward-backward single-slice marginals ``P(X_t | y_1:T)``, shape (T, n_states)."""
    fwd = forward_filter(model, evidence)
    ev = check_evidence(model, evidence)
    T = ev.shape[0]
    out = np.empty_like(fwd.beliefs)
    if T == 0:
        return out
    beta = np.ones(model.n_states)
    out[T - 1] = fwd.beliefs[T - 1]
    for t in range(T - 2, -1, -1):
        beta = model.transition @ (model.observation[:, ev[t + 1]] * beta) / fwd.normalizers[t + 1]
        g = fwd.beliefs[t] * beta
        out[t] = g / g.sum()
    return out


def _enumerate(model: DiscreteHMM, ev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    T = ev.shape[0]
    n = model.n_states
    if n**T > MAX_ENUMERATION:
        raise ValueError(f"{n}^{T} trajectories exceeds the enumeration limit {MAX_ENUMERATION}")
    trajs = np.array(list(itertools.product(range(n), repeat=T)), dtype=np.int64).reshape(-1, T)
    if T == 0:
        return trajs, np.ones(1)
    w = model.prior[trajs[:, 0]] * model.observation[trajs[:, 0], ev[0]]
    for t in range(1, T):
        w = w * model.transition[trajs[:, t - 1], trajs[:, t]] * model.observation[trajs[:, t], ev[t]]
    return trajs, w


def brute_force_posterior(model: DiscreteHMM, evidence) -> dict[tuple[int, ...], float]:
    """Exhaustive ``P(x_1:T | y_1:T)`` over all ``n_states**T`` trajectories.

    Returns a dict keyed by state tuples.  Zero-probability trajectories are
    included.  Refuses instances with more than 10**7 trajectories.
    """
    ev = check_evidence(model, evidence)
    trajs, w = _enumerate(model, ev)
    z = w.sum()
    if not z > 0:
        raise ImpossibleEvidenceError(ev.shape[0])
    w = w / z
    return {tuple(int(v) for v in row): float(p) for row, p in zip(trajs, w)}


def evidence_probability(model: DiscreteHMM, evidence) -> float:
    """``P(y_1:T)`` by enumeration; the brute-force counterpart of the filter likelihood."""
    return float(_enumerate(model, check_evidence(model, evidence))[1].sum())


def slice_marginals(posterior: dict, n_states: int) -> np.ndarray:
    """Marginalize a trajectory distribution onto each slice, shape (T, n_states)."""
    T = len(next(iter(posterior)))
    out = np.zeros((T, n_states))
    for traj, p in posterior.items():
        out[np.arange(T), list(traj)] += p
    return out

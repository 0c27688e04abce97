"""Discrete partially observable Markov processes.

A :class:`DiscreteHMM` holds the three conditional tables of a stationary
single-variable process: the prior over ``X_1``, the transition table
``P(X_{t+1} | X_t)`` and the sensor table ``P(Y_t | X_t)``.  Time is indexed
from 1 in the documentation and from 0 in arrays, so ``evidence[0]`` is
``y_1``.

Trajectories, evidence sequences and beliefs are plain numpy arrays
(``int64`` for the first two, ``float64`` for beliefs).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PROB_TOL",
    "DiscreteHMM",
    "validate",
    "make_random_hmm",
    "simulate",
    "check_evidence",
    "save_model",
    "load_model",
    "canonical_model",
    "model_from_dict",
]

PROB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteHMM:
    """Stationary hidden Markov model over finite state and symbol alphabets.

    Attributes
    ----------
    prior : ndarray, shape (n_states,)
        ``P(X_1)``.
    transition : ndarray, shape (n_states, n_states)
        Row ``i`` is ``P(X_{t+1} | X_t = i)``.
    observation : ndarray, shape (n_states, n_obs)
        Row ``i`` is ``P(Y_t | X_t = i)``.

    The arrays are copied and made read-only on construction.  Construction
    does not check stochasticity; call :func:`validate` for that.
    """

    prior: np.ndarray
    transition: np.ndarray
    observation: np.ndarray

    def __post_init__(self):
        for name in ("prior", "transition", "observation"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.prior.shape[0]
        if self.prior.ndim != 1 or n < 1:
            raise ValueError("prior must be a nonempty vector")
        if self.transition.shape != (n, n):
            raise ValueError(f"transition must have shape ({n}, {n}), got {self.transition.shape}")
        if self.observation.ndim != 2 or self.observation.shape[0] != n or self.observation.shape[1] < 1:
            raise ValueError(f"observation must have shape ({n}, n_obs), got {self.observation.shape}")

    @property
    def n_states(self) -> int:
        return self.prior.shape[0]

    @property
    def n_obs(self) -> int:
        return self.observation.shape[1]

    def __eq__(self, other):
        if not isinstance(other, DiscreteHMM):
            return NotImplemented
        return (
            np.array_equal(self.prior, other.prior)
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.observation, other.observation)
        )

    __hash__ = None

    def fingerprint(self) -> str:
        """Short content hash, stable across processes."""
        h = hashlib.sha256()
        for arr in (self.prior, self.transition, self.observation):
            h.update(np.asarray(arr.shape, dtype=np.int64).tobytes())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:12]

    def permuted(self, state_perm, symbol_perm=None) -> DiscreteHMM:
        """Relabel states (and optionally symbols).

        New state ``state_perm[i]`` plays the role of old state ``i``.
        """
        sp = np.argsort(np.asarray(state_perm))
        obs = self.observation[sp]
        if symbol_perm is not None:
            obs = obs[:, np.argsort(np.asarray(symbol_perm))]
        return DiscreteHMM(self.prior[sp], self.transition[np.ix_(sp, sp)], obs)

    # Simulable contract used by the particle filter.

    def sample_initial(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return _inverse_cdf(np.cumsum(self.prior), rng.random(n))

    def sample_transition(self, particles: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.transition, axis=1)[particles]
        return _rowwise_inverse_cdf(cum, rng.random(particles.shape[0]))

    def likelihood(self, particles: np.ndarray, y) -> np.ndarray:
        return self.observation[particles, int(y)]


def _inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    return np.minimum(idx, cum.shape[0] - 1).astype(np.int64)


def _rowwise_inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    scaled = u * cum[:, -1]
    idx = (cum <= scaled[:, None]).sum(axis=1)
    return np.minimum(idx, cum.shape[1] - 1).astype(np.int64)


def _check_distribution(label: str, p: np.ndarray, tol: float) -> list[str]:
    out = []
    neg = np.flatnonzero(p < 0)
    if neg.size:
        out.append(f"{label} has negative entries at {neg.tolist()}")
    big = np.flatnonzero(p > 1.0 + tol)
    if big.size:
        out.append(f"{label} has entries above 1 at {big.tolist()}")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        out.append(f"{label} sums to {total:.12g} (residual {total - 1.0:+.3g})")
    return out


def validate(model: DiscreteHMM, tol: float = PROB_TOL) -> list[str]:
    """Return all stochasticity violations of ``model``; empty means valid.

    >>> validate(canonical_model())
    []
    """
    problems = _check_distribution("prior", model.prior, tol)
    for name, table in (("transition", model.transition), ("observation", model.observation)):
        for i, row in enumerate(table):
            problems += _check_distribution(f"{name} row {i}", row, tol)
    return problems


def canonical_model() -> DiscreteHMM:
    """The two-state symmetric model used as a running fixture.

    Stays in place with probability 0.7 and reports the true state with
    probability 0.8; the prior is uniform.
    """
    return DiscreteHMM(
        prior=[0.5, 0.5],
        transition=[[0.7, 0.3], [0.3, 0.7]],
        observation=[[0.8, 0.2], [0.2, 0.8]],
    )


def _sharp_rows(n_rows: int, n_cols: int, sharpness: float, rng: np.random.Generator) -> np.ndarray:
    # one-hot column per row comes from a permutation of the columns (cycled
    # when there are more rows than columns)
    perm = rng.permutation(max(n_rows, n_cols)) % n_cols
    onehot = np.zeros((n_rows, n_cols))
    onehot[np.arange(n_rows), perm[:n_rows]] = 1.0
    return sharpness * onehot + (1.0 - sharpness) / n_cols


def make_random_hmm(
    n_states: int,
    n_obs: int,
    transition_sharpness: float,
    observation_sharpness: float,
    seed=None,
) -> DiscreteHMM:
    """Generate a model whose determinism is set by two sharpness knobs.

    Each transition row is ``a * onehot + (1 - a) * uniform`` with the one-hot
    columns drawn from a seeded permutation; observation rows use the same
    construction with ``b``.  The prior is uniform.  Sharpness 0 gives a model
    whose evidence and dynamics carry no information; sharpness 1 gives
    deterministic tables.
    """
    if n_states < 2 or n_obs < 2:
        raise ValueError("n_states and n_obs must both be at least 2")
    for name, val in (("transition_sharpness", transition_sharpness), ("observation_sharpness", observation_sharpness)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {val}")
    rng = np.random.default_rng(seed)
    transition = _sharp_rows(n_states, n_states, transition_sharpness, rng)
    observation = _sharp_rows(n_states, n_obs, observation_sharpness, rng)
    return DiscreteHMM(np.full(n_states, 1.0 / n_states), transition, observation)


def simulate(model: DiscreteHMM, T: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw a state trajectory and its evidence, each of length ``T``."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = np.random.default_rng(seed)
    xs = np.empty(T, dtype=np.int64)
    if T == 0:
        return xs, np.empty(0, dtype=np.int64)
    u = rng.random(T)
    cum_trans = np.cumsum(model.transition, axis=1)
    xs[0] = _inverse_cdf(np.cumsum(model.prior), u[:1])[0]
    for t in range(1, T):
        row = cum_trans[xs[t - 1]]
        xs[t] = min(np.searchsorted(row, u[t] * row[-1], side="right"), model.n_states - 1)
    cum_obs = np.cumsum(model.observation, axis=1)[xs]
    ys = _rowwise_inverse_cdf(cum_obs, rng.random(T))
    return xs, ys


def check_evidence(model: DiscreteHMM, evidence) -> np.ndarray:
    """Coerce ``evidence`` to an int64 array and check every symbol is valid."""
    ev = np.asarray(evidence, dtype=np.int64).reshape(-1)
    bad = np.flatnonzero((ev < 0) | (ev >= model.n_obs))
    if bad.size:
        raise ValueError(f"invalid observation symbol {int(ev[bad[0]])} at t={int(bad[0]) + 1}")
    return ev


def save_model(model: DiscreteHMM, path) -> None:
    """Write ``model`` as JSON.

    Keys: ``n_states``, ``n_obs``, ``prior`` (list), ``transition`` and
    ``observation`` (lists of rows, row-major).  Floats are written with
    shortest round-trip repr, so :func:`load_model` reproduces the tables
    exactly.
    """
    doc = {
        "n_states": model.n_states,
        "n_obs": model.n_obs,
        "prior": model.prior.tolist(),
        "transition": model.transition.tolist(),
        "observation": model.observation.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def model_from_dict(doc: dict) -> DiscreteHMM:
    model = DiscreteHMM(doc["prior"], doc["transition"], doc["observation"])
    if "n_states" in doc and int(doc["n_states"]) != model.n_states:
        raise ValueError(f"n_states={doc['n_states']} disagrees with prior length {model.n_states}")
    if "n_obs" in doc and int(doc["n_obs"]) != model.n_obs:
        raise ValueError(f"n_obs={doc['n_obs']} disagrees with observation width {model.n_obs}")
    return model


def load_model(path) -> DiscreteHMM:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

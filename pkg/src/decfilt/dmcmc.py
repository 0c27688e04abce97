"""Decayed MCMC filtering for discrete hidden Markov models.

The sampler's state is a whole trajectory ``x_1..x_T``.  Each step picks a
slice ``t`` from a :class:`~decfilt.decay.DecaySchedule`, redraws ``x_t`` from
its conditional given ``x_{t-1}``, ``x_{t+1}`` and ``y_t``, and tallies the
current value of ``x_T``.  The tallies, normalized, estimate the filtering
distribution ``P(X_T | y_1:T)``.

Typical online use::

    chain = new_chain(model, ChainConfig(steps_per_update=1000, seed=0))
    for y in evidence:
        observe(chain, model, y)
        belief = estimate(chain)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .decay import DecaySchedule, quadratic
from .models import DiscreteHMM, check_evidence

__all__ = [
    "InconsistentBlanketError",
    "ChainConfig",
    "ChainState",
    "gibbs_conditional",
    "new_chain",
    "chain_from_evidence",
    "mcmc_step",
    "run",
    "observe",
    "estimate",
    "run_many",
    "run_recording",
]

_CHUNK = 1 << 16


class InconsistentBlanketError(ValueError):
    """Every value of a slice has zero probability given its Markov blanket."""

    def __init__(self, t: int):
        super().__init__(f"inconsistent Markov blanket at t={t}")
        self.t = t


@dataclass
class ChainConfig:
    """Sampler settings.

    ``steps_per_update`` is the number of Gibbs steps run after each new
    observation; the first ``burn_in`` of them are not tallied.
    """

    steps_per_update: int = 1000
    burn_in: int = 0
    schedule: DecaySchedule = field(default_factory=quadratic)
    seed: int | None = None

    def __post_init__(self):
        if self.steps_per_update < 1:
            raise ValueError("steps_per_update must be positive")
        if not 0 <= self.burn_in < self.steps_per_update:
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps_per_update")


class ChainState:
    """Current trajectory, stored evidence and ``x_T`` tallies of one chain.

    ``steps_taken`` and ``counts`` refer to the current evidence length; both
    reset when :func:`observe` appends a slice.  ``total_steps`` never resets.
    """

    def __init__(self, n_states: int, config: ChainConfig, capacity: int = 16):
        self.n_states = n_states
        self.config = config
        self.schedule = config.schedule.copy()
        self.rng = np.random.default_rng(config.seed)
        self.counts = np.zeros(n_states, dtype=np.int64)
        self.steps_taken = 0
        self.total_steps = 0
        self.T = 0
        self._x = np.zeros(capacity, dtype=np.int64)
        self._y = np.zeros(capacity, dtype=np.int64)

    @property
    def trajectory(self) -> np.ndarray:
        return self._x[: self.T]

    @property
    def evidence(self) -> np.ndarray:
        return self._y[: self.T]

    def _append(self, x: int, y: int) -> None:
        if self.T == self._x.shape[0]:
            self._x = np.concatenate([self._x, np.zeros_like(self._x)])
            self._y = np.concatenate([self._y, np.zeros_like(self._y)])
        self._x[self.T] = x
        self._y[self.T] = y
        self.T += 1

    def reset_counts(self) -> None:
        self.counts[:] = 0
        self.steps_taken = 0


def gibbs_conditional(model: DiscreteHMM, t: int, x_prev, x_next, y_t: int) -> np.ndarray:
    """``P(X_t | x_prev, x_next, y_t)``.

    Pass ``x_prev=None`` for the first slice (the prior replaces the
    transition factor) and ``x_next=None`` for the last slice (the forward
    factor is dropped).  ``t`` is used only in error messages.
    """
    w = model.prior.copy() if x_prev is None else model.transition[int(x_prev)].copy()
    w *= model.observation[:, int(y_t)]
    if x_next is not None:
        w *= model.transition[:, int(x_next)]
    total = w.sum()
    if not total > 0:
        raise InconsistentBlanketError(t)
    return w / total


@numba.njit(cache=True)
def _draw(w, total, u):
    r = u * total
    acc = 0.0
    last = 0
    for k in range(w.shape[0]):
        if w[k] > 0.0:
            acc += w[k]
            last = k
            if r < acc:
                return k
    return last


@numba.njit(cache=True)
def _bisect(cdf, T, r):
    # first index i < T with cdf[i] > r
    lo = 0
    hi = T - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] > r:
            hi = mid
        else:
            lo = mid + 1
    return lo


@numba.njit(cache=True)
def _gibbs_kernel(traj, ev, T, prior, trans, obs, cdf, u, counts, first_counted):
    """Run ``u.shape[0]`` Gibbs steps in place.

    Returns the zero-based slice of an inconsistent blanket, or -1.
    """
    n = prior.shape[0]
    w = np.empty(n)
    total_w = cdf[T - 1]
    for s in range(u.shape[0]):
        i = _bisect(cdf, T, u[s, 0] * total_w)
        y = ev[i]
        tot = 0.0
        for k in range(n):
            if i == 0:
                a = prior[k]
            else:
                a = trans[traj[i - 1], k]
            a *= obs[k, y]
            if i < T - 1:
                a *= trans[k, traj[i + 1]]
            w[k] = a
            tot += a
        if not tot > 0.0:
            return i
        traj[i] = _draw(w, tot, u[s, 1])
        if s >= first_counted:
            counts[traj[T - 1]] += 1
    return -1


@numba.njit(cache=True)
def _gibbs_many(trajs, ev, prior, trans, obs, cdf, u, counts):
    T = trajs.shape[1]
    for r in range(trajs.shape[0]):
        bad = _gibbs_kernel(trajs[r], ev, T, prior, trans, obs, cdf, u[r], counts, u.shape[1])
        if bad >= 0:
            return bad
    return -1


@numba.njit(cache=True)
def _gibbs_record(traj, ev, T, prior, trans, obs, cdf, u, counts, first_counted, occupancy, paths):
    n = prior.shape[0]
    code = 0
    for t in range(T):
        code = code * n + traj[t]
    place = np.empty(T, dtype=np.int64)
    p = 1
    for t in range(T - 1, -1, -1):
        place[t] = p
        p *= n
    before = traj.copy()
    for s in range(u.shape[0]):
        counted = s >= first_counted
        bad = _gibbs_kernel(traj, ev, T, prior, trans, obs, cdf, u[s : s + 1], counts, 0 if counted else 1)
        if bad >= 0:
            return bad
        for t in range(T):
            if traj[t] != before[t]:
                code += (traj[t] - before[t]) * place[t]
                before[t] = traj[t]
        if counted:
            for t in range(T):
                occupancy[t, traj[t]] += 1
            if paths.shape[0] > 0:
                paths[code] += 1
    return -1


def _initial_value(model: DiscreteHMM, x_prev, y: int, u: float, t: int) -> int:
    w = (model.prior if x_prev is None else model.transition[x_prev]) * model.observation[:, y]
    total = w.sum()
    if not total > 0:
        raise InconsistentBlanketError(t)
    return int(_draw(w, total, u))


def new_chain(model: DiscreteHMM, config: ChainConfig | None = None) -> ChainState:
    """An empty chain (``T = 0``) ready for :func:`observe`."""
    return ChainState(model.n_states, config or ChainConfig())


def chain_from_evidence(model: DiscreteHMM, evidence, config: ChainConfig | None = None, trajectory=None) -> ChainState:
    """A chain holding a whole evidence sequence, without running any steps.

    With ``trajectory=None`` the slices are initialized left to right, each
    from ``P(x_t | x_{t-1}) P(y_t | x_t)`` normalized, the same rule
    :func:`observe` uses for a new slice.
    """
    ev = check_evidence(model, evidence)
    chain = ChainState(model.n_states, config or ChainConfig(), capacity=max(16, ev.shape[0]))
    if trajectory is not None:
        traj = np.asarray(trajectory, dtype=np.int64)
        if traj.shape != ev.shape:
            raise ValueError("trajectory and evidence lengths differ")
        if np.any((traj < 0) | (traj >= model.n_states)):
            raise ValueError("trajectory contains invalid states")
        chain._x[: ev.shape[0]] = traj
        chain._y[: ev.shape[0]] = ev
        chain.T = ev.shape[0]
        return chain
    u = chain.rng.random(ev.shape[0])
    x_prev = None
    for t, y in enumerate(ev):
        x_prev = _initial_value(model, x_prev, int(y), u[t], t + 1)
        chain._append(x_prev, int(y))
    return chain


def run(chain: ChainState, model: DiscreteHMM, n_steps: int) -> ChainState:
    """Apply ``n_steps`` Gibbs steps to ``chain`` in place."""
    if chain.T < 1:
        raise ValueError("chain has no evidence yet")
    cdf = chain.schedule.cdf(chain.T)
    done = 0
    while done < n_steps:
        m = min(_CHUNK, n_steps - done)
        u = chain.rng.random((m, 2))
        first = max(0, chain.config.burn_in - chain.steps_taken)
        bad = _gibbs_kernel(
            chain._x, chain._y, chain.T, model.prior, model.transition, model.observation, cdf, u, chain.counts, first
        )
        if bad >= 0:
            raise InconsistentBlanketError(bad + 1)
        chain.steps_taken += m
        chain.total_steps += m
        done += m
    return chain


def mcmc_step(chain: ChainState, model: DiscreteHMM) -> ChainState:
    """One Gibbs update: choose a slice from the schedule and redraw it."""
    return run(chain, model, 1)


def observe(chain: ChainState, model: DiscreteHMM, y_new: int) -> ChainState:
    """Append an observation, initialize its slice, and run one update's worth of steps.

    Tallies restart because they estimated the previous last slice.
    """
    y = int(check_evidence(model, [y_new])[0])
    x_prev = int(chain._x[chain.T - 1]) if chain.T > 0 else None
    chain._append(_initial_value(model, x_prev, y, chain.rng.random(), chain.T + 1), y)
    chain.reset_counts()
    return run(chain, model, chain.config.steps_per_update)


def estimate(chain: ChainState) -> np.ndarray:
    """Normalized ``x_T`` tallies."""
    total = chain.counts.sum()
    if total == 0:
        raise ValueError("no tallied steps yet; run past the burn-in first")
    return chain.counts / total


def run_many(trajectories: np.ndarray, model: DiscreteHMM, evidence, schedule: DecaySchedule, n_steps: int, rngs) -> np.ndarray:
    """Advance ``R`` independent chains on shared evidence, in place.

    ``trajectories`` has shape ``(R, T)``; chain ``r`` draws its randomness
    from ``rngs[r]``.  No tallies are kept; the caller reads the chains'
    states directly.
    """
    ev = check_evidence(model, evidence)
    R, T = trajectories.shape
    if T != ev.shape[0] or T < 1:
        raise ValueError("trajectories must have shape (R, len(evidence)) with len(evidence) >= 1")
    if n_steps <= 0:
        return trajectories
    u = np.stack([rng.random((n_steps, 2)) for rng in rngs])
    dummy = np.zeros(model.n_states, dtype=np.int64)
    bad = _gibbs_many(trajectories, ev, model.prior, model.transition, model.observation, schedule.cdf(T), u, dummy)
    if bad >= 0:
        raise InconsistentBlanketError(bad + 1)
    return trajectories


def run_recording(chain: ChainState, model: DiscreteHMM, n_steps: int, max_paths: int = 1 << 20):
    """Like :func:`run`, but also record what every tallied step visited.

    Returns ``(occupancy, paths)``: ``occupancy[t, k]`` counts tallied steps
    with ``x_{t+1} = k``, and ``paths`` counts whole trajectories, indexed by
    their base-``n_states`` code with ``x_1`` as the most significant digit.
    ``paths`` is ``None`` when there are more than ``max_paths`` trajectories.
    Costs ``O(T)`` per step, so it is meant for short evidence sequences.
    """
    if chain.T < 1:
        raise ValueError("chain has no evidence yet")
    n, T = model.n_states, chain.T
    occupancy = np.zeros((T, n), dtype=np.int64)
    n_paths = n**T if T * np.log2(n) <= np.log2(max_paths) else 0
    paths = np.zeros(n_paths, dtype=np.int64)
    cdf = chain.schedule.cdf(T)
    done = 0
    while done < n_steps:
        m = min(_CHUNK, n_steps - done)
        u = chain.rng.random((m, 2))
        first = max(0, chain.config.burn_in - chain.steps_taken)
        bad = _gibbs_record(
            chain._x, chain._y, T, model.prior, model.transition, model.observation,
            cdf, u, chain.counts, first, occupancy, paths,
        )
        if bad >= 0:
            raise InconsistentBlanketError(bad + 1)
        chain.steps_taken += m
        chain.total_steps += m
        done += m
    return occupancy, (paths if n_paths else None)

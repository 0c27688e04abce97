"""Decayed MCMC for a scalar switching Kalman filter.

The model is a random walk whose drift is chosen by a discrete switch::

    X_0 ~ N(x0_mean, x0_std**2)
    S_t ~ switch_prior            (or switch_markov[S_{t-1}] for t >= 2)
    X_t = X_{t-1} + values[S_t] + v_t,    v_t ~ N(0, sigma_v**2)
    Y_t = X_t + w_t,                      w_t ~ N(0, sigma_w**2)

for ``t = 1..T``.  ``X_0`` is never observed and is integrated out, so the
first slice sees the Gaussian ``N(x0_mean + values[S_1], x0_std**2 + sigma_v**2)``
in place of a predecessor.

Each Gibbs step updates one slice ``(S_t, X_t)``: first the switch from its
categorical conditional, then the position from its Gaussian conditional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from .decay import DecaySchedule, quadratic
from .dmcmc import _bisect

__all__ = [
    "SwitchingKF",
    "HybridTrajectory",
    "SKFConfig",
    "SKFChain",
    "skf_simulate",
    "skf_cond_x",
    "skf_cond_s",
    "skf_chain_from_evidence",
    "skf_mcmc_step",
    "skf_run",
    "skf_observe",
    "skf_estimate",
]


@dataclass(frozen=True, eq=False)
class SwitchingKF:
    switch_values: np.ndarray
    switch_prior: np.ndarray
    sigma_v: float = 1.0
    sigma_w: float = 1.0
    x0_mean: float = 0.0
    x0_std: float = 1.0
    switch_markov: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.switch_values, dtype=np.float64).reshape(-1)
        prior = np.array(self.switch_prior, dtype=np.float64).reshape(-1)
        if vals.shape != prior.shape or vals.size == 0:
            raise ValueError("switch_values and switch_prior must be nonempty and equally long")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-9:
            raise ValueError("switch_prior must be a probability vector")
        for name in ("sigma_v", "sigma_w", "x0_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        object.__setattr__(self, "switch_values", vals)
        object.__setattr__(self, "switch_prior", prior)
        if self.switch_markov is not None:
            mk = np.array(self.switch_markov, dtype=np.float64)
            if mk.shape != (vals.size, vals.size):
                raise ValueError("switch_markov must be square with one row per switch value")
            if np.any(mk < 0) or np.any(np.abs(mk.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError("switch_markov rows must be probability vectors")
            object.__setattr__(self, "switch_markov", mk)

    @property
    def n_switch(self) -> int:
        return self.switch_values.shape[0]

    def _switch_table(self) -> np.ndarray:
        # row k is P(S_t | S_{t-1} = k); i.i.d. switches repeat the prior
        if self.switch_markov is None:
            return np.tile(self.switch_prior, (self.n_switch, 1))
        return self.switch_markov

    def _require_noise(self):
        if not (self.sigma_v > 0 and self.sigma_w > 0):
            raise ValueError("inference needs sigma_v > 0 and sigma_w > 0")

    # Simulable contract for the particle filter; particles are rows (x, s).

    def sample_initial(self, n: int, rng: np.random.Generator) -> np.ndarray:
        s = rng.choice(self.n_switch, size=n, p=self.switch_prior)
        sd = np.hypot(self.x0_std, self.sigma_v)
        x = self.x0_mean + self.switch_values[s] + sd * rng.standard_normal(n)
        return np.column_stack([x, s.astype(np.float64)])

    def sample_transition(self, particles: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = particles.shape[0]
        if self.switch_markov is None:
            s = rng.choice(self.n_switch, size=n, p=self.switch_prior)
        else:
            cum = np.cumsum(self.switch_markov, axis=1)[particles[:, 1].astype(np.int64)]
            s = np.minimum((cum <= rng.random(n)[:, None]).sum(axis=1), self.n_switch - 1)
        x = particles[:, 0] + self.switch_values[s] + self.sigma_v * rng.standard_normal(n)
        return np.column_stack([x, s.astype(np.float64)])

    def likelihood(self, particles: np.ndarray, y) -> np.ndarray:
        z = (float(y) - particles[:, 0]) / self.sigma_w
        return np.exp(-0.5 * z * z)


class HybridTrajectory(NamedTuple):
    xs: np.ndarray
    ss: np.ndarray


def skf_simulate(model: SwitchingKF, T: int, seed=None) -> tuple[HybridTrajectory, np.ndarray]:
    """Draw positions, switch indices and observations for ``t = 1..T``.

    Zero noise levels are allowed here (they give deterministic paths).
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = np.random.default_rng(seed)
    ss = np.empty(T, dtype=np.int64)
    xs = np.empty(T)
    x = model.x0_mean + model.x0_std * rng.standard_normal()
    table = model._switch_table()
    for t in range(T):
        p = model.switch_prior if t == 0 else table[ss[t - 1]]
        ss[t] = rng.choice(model.n_switch, p=p)
        x = x + model.switch_values[ss[t]] + model.sigma_v * rng.standard_normal()
        xs[t] = x
    ys = xs + model.sigma_w * rng.standard_normal(T)
    return HybridTrajectory(xs, ss), ys


def skf_cond_x(model: SwitchingKF, t, x_prev, x_next, s_t: int, s_next, y_t: float) -> tuple[float, float]:
    """Gaussian conditional of ``X_t`` given its blanket, as ``(mean, std)``.

    ``x_prev=None`` marks the first slice, ``x_next=None`` the last one
    (``s_next`` is then ignored).
    """
    model._require_noise()
    vals = model.switch_values
    vv = model.sigma_v**2
    if x_prev is None:
        var0 = model.x0_std**2 + vv
        prec, num = 1.0 / var0, (model.x0_mean + vals[s_t]) / var0
    else:
        prec, num = 1.0 / vv, (x_prev + vals[s_t]) / vv
    if x_next is not None:
        prec += 1.0 / vv
        num += (x_next - vals[s_next]) / vv
    ww = model.sigma_w**2
    prec += 1.0 / ww
    num += y_t / ww
    return num / prec, float(np.sqrt(1.0 / prec))


def skf_cond_s(model: SwitchingKF, t, s_prev, s_next, x_t: float, x_prev) -> np.ndarray:
    """Categorical conditional of ``S_t`` given ``x_t``, ``x_{t-1}`` and neighbouring switches.

    ``x_prev=None`` marks the first slice; ``s_prev`` and ``s_next`` only
    matter with Markov switch dynamics.
    """
    model._require_noise()
    vals = model.switch_values
    if x_prev is None:
        var = model.x0_std**2 + model.sigma_v**2
        step = x_t - model.x0_mean
    else:
        var = model.sigma_v**2
        step = x_t - x_prev
    table = model._switch_table()
    with np.errstate(divide="ignore"):
        logw = np.log(model.switch_prior if x_prev is None or s_prev is None else table[s_prev])
        if model.switch_markov is not None and s_next is not None:
            logw = logw + np.log(table[:, s_next])
    logw = logw - 0.5 * (step - vals) ** 2 / var
    if not np.isfinite(logw.max()):
        raise ValueError(f"switch conditional at t={t} has no support")
    w = np.exp(logw - logw.max())
    return w / w.sum()


@dataclass
class SKFConfig:
    """Sampler settings; ``gap`` tallies ``x_T`` on every ``gap``-th counted step."""

    steps_per_update: int = 1500
    burn_in: int = 0
    gap: int = 1
    schedule: DecaySchedule = field(default_factory=quadratic)
    seed: int | None = None

    def __post_init__(self):
        if self.steps_per_update < 1 or self.gap < 1:
            raise ValueError("steps_per_update and gap must be positive")
        if not 0 <= self.burn_in < self.steps_per_update:
            raise ValueError("burn_in must satisfy 0 <= burn_in < steps_per_update")


class SKFChain:
    """Hybrid trajectory, stored evidence and running ``x_T`` moments."""

    def __init__(self, config: SKFConfig, capacity: int = 16):
        self.config = config
        self.schedule = config.schedule.copy()
        self.rng = np.random.default_rng(config.seed)
        self.T = 0
        self.steps_taken = 0
        self.total_steps = 0
        self.tally = np.zeros(3)  # count, sum, sum of squares
        self._x = np.zeros(capacity)
        self._s = np.zeros(capacity, dtype=np.int64)
        self._y = np.zeros(capacity)

    @property
    def xs(self) -> np.ndarray:
        return self._x[: self.T]

    @property
    def ss(self) -> np.ndarray:
        return self._s[: self.T]

    @property
    def ys(self) -> np.ndarray:
        return self._y[: self.T]

    def _append(self, x, s, y):
        if self.T == self._x.shape[0]:
            self._x = np.concatenate([self._x, np.zeros_like(self._x)])
            self._s = np.concatenate([self._s, np.zeros_like(self._s)])
            self._y = np.concatenate([self._y, np.zeros_like(self._y)])
        self._x[self.T], self._s[self.T], self._y[self.T] = x, s, y
        self.T += 1

    def reset_tally(self):
        self.tally[:] = 0.0
        self.steps_taken = 0


@numba.njit(cache=True)
def _skf_kernel(xs, ss, ys, T, vals, log_prior, log_table, markov, sv, sw, m0, s0, cdf, u, z, tally, first_counted, gap):
    K = vals.shape[0]
    lw = np.empty(K)
    vv = sv * sv
    ww = sw * sw
    var0 = s0 * s0 + vv
    total_w = cdf[T - 1]
    for s in range(u.shape[0]):
        i = _bisect(cdf, T, u[s, 0] * total_w)
        # switch
        if i == 0:
            step = xs[0] - m0
            var = var0
        else:
            step = xs[i] - xs[i - 1]
            var = vv
        best = -np.inf
        for k in range(K):
            if i == 0 or not markov:
                a = log_prior[k]
            else:
                a = log_table[ss[i - 1], k]
            if markov and i < T - 1:
                a += log_table[k, ss[i + 1]]
            d = step - vals[k]
            a -= 0.5 * d * d / var
            lw[k] = a
            if a > best:
                best = a
        tot = 0.0
        for k in range(K):
            lw[k] = np.exp(lw[k] - best)
            tot += lw[k]
        r = u[s, 1] * tot
        acc = 0.0
        pick = K - 1
        for k in range(K):
            acc += lw[k]
            if r < acc:
                pick = k
                break
        ss[i] = pick
        # position
        if i == 0:
            prec = 1.0 / var0
            num = (m0 + vals[pick]) / var0
        else:
            prec = 1.0 / vv
            num = (xs[i - 1] + vals[pick]) / vv
        if i < T - 1:
            prec += 1.0 / vv
            num += (xs[i + 1] - vals[ss[i + 1]]) / vv
        prec += 1.0 / ww
        num += ys[i] / ww
        xs[i] = num / prec + z[s] / np.sqrt(prec)
        if s >= first_counted and (s - first_counted) % gap == 0:
            xT = xs[T - 1]
            tally[0] += 1.0
            tally[1] += xT
            tally[2] += xT * xT


def _logs(model: SwitchingKF):
    with np.errstate(divide="ignore"):
        return np.log(model.switch_prior), np.log(model._switch_table())


def _init_slice(chain: SKFChain, model: SwitchingKF, y: float) -> tuple[float, int]:
    rng = chain.rng
    if chain.T == 0:
        s = int(rng.choice(model.n_switch, p=model.switch_prior))
        mean, sd = skf_cond_x(model, 1, None, None, s, None, y)
    else:
        s = int(rng.choice(model.n_switch, p=model._switch_table()[chain._s[chain.T - 1]]))
        mean, sd = skf_cond_x(model, chain.T + 1, chain._x[chain.T - 1], None, s, None, y)
    return mean + sd * rng.standard_normal(), s


def skf_chain_from_evidence(model: SwitchingKF, ys, config: SKFConfig | None = None) -> SKFChain:
    """A chain over a whole observation sequence, slices initialized left to right."""
    model._require_noise()
    ys = np.asarray(ys, dtype=np.float64).reshape(-1)
    chain = SKFChain(config or SKFConfig(), capacity=max(16, ys.shape[0]))
    for y in ys:
        x, s = _init_slice(chain, model, float(y))
        chain._append(x, s, float(y))
    return chain


def skf_run(chain: SKFChain, model: SwitchingKF, n_steps: int) -> SKFChain:
    """Apply ``n_steps`` two-stage Gibbs updates in place."""
    model._require_noise()
    if chain.T < 1:
        raise ValueError("chain has no evidence yet")
    cdf = chain.schedule.cdf(chain.T)
    log_prior, log_table = _logs(model)
    cfg = chain.config
    done = 0
    while done < n_steps:
        m = min(1 << 16, n_steps - done)
        u = chain.rng.random((m, 2))
        z = chain.rng.standard_normal(m)
        # first counted step index within this chunk, aligned to the gap grid
        counted_before = max(0, chain.steps_taken - cfg.burn_in)
        first = max(0, cfg.burn_in - chain.steps_taken) + (-counted_before) % cfg.gap
        _skf_kernel(
            chain._x, chain._s, chain._y, chain.T, model.switch_values, log_prior, log_table,
            model.switch_markov is not None, model.sigma_v, model.sigma_w, model.x0_mean, model.x0_std,
            cdf, u, z, chain.tally, first, cfg.gap,
        )
        chain.steps_taken += m
        chain.total_steps += m
        done += m
    return chain


def skf_mcmc_step(chain: SKFChain, model: SwitchingKF) -> SKFChain:
    return skf_run(chain, model, 1)


def skf_observe(chain: SKFChain, model: SwitchingKF, y: float) -> SKFChain:
    """Append an observation, initialize its slice, reset tallies, run one update."""
    model._require_noise()
    x, s = _init_slice(chain, model, float(y))
    chain._append(x, s, float(y))
    chain.reset_tally()
    return skf_run(chain, model, chain.config.steps_per_update)


def skf_estimate(chain: SKFChain) -> tuple[float, float]:
    """Mean and variance of the tallied ``x_T`` values."""
    n, s1, s2 = chain.tally
    if n == 0:
        raise ValueError("no tallied steps yet; run past the burn-in first")
    mean = s1 / n
    return mean, max(s2 / n - mean * mean, 0.0)

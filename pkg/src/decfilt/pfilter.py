"""Bootstrap particle filter.

Works with any model exposing the simulable contract::

    model.sample_initial(n, rng)         -> particles
    model.sample_transition(particles, rng) -> particles
    model.likelihood(particles, y)       -> nonnegative weights

Particles are numpy arrays whose first axis indexes the particle.  For a
:class:`~decfilt.models.DiscreteHMM` they are state indices; for a
:class:`~decfilt.skf.SwitchingKF` they are ``(x, s)`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParticleCollapseError",
    "ParticleSet",
    "systematic_resample",
    "pf_init",
    "pf_step",
    "pf_estimate",
    "pf_filter",
]


class ParticleCollapseError(RuntimeError):
    """All importance weights vanished."""

    def __init__(self, t: int):
        super().__init__(f"particle collapse at t={t}: every particle has zero likelihood")
        self.t = t


@dataclass
class ParticleSet:
    particles: np.ndarray
    weights: np.ndarray
    t: int = 0  # number of observations absorbed

    @property
    def N(self) -> int:
        return self.weights.shape[0]


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``N`` survivors drawn with one shared uniform offset."""
    n = weights.shape[0]
    cum = np.cumsum(weights)
    cum /= cum[-1]
    positions = (rng.random() + np.arange(n)) / n
    return np.minimum(np.searchsorted(cum, positions, side="right"), n - 1)


def pf_init(model, N: int, seed=None) -> tuple[ParticleSet, np.random.Generator]:
    """Draw ``N`` particles from the prior.

    Returns the set together with the generator to pass to :func:`pf_step`.
    """
    if N < 1:
        raise ValueError("N must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    particles = model.sample_initial(N, rng)
    return ParticleSet(particles, np.full(N, 1.0 / N)), rng


def pf_step(ps: ParticleSet, model, y, rng: np.random.Generator) -> ParticleSet:
    """Propagate, weight by the likelihood of ``y``, and resample.

    The first observation weights the prior draws directly (``X_1`` has no
    predecessor to propagate from).
    """
    particles = ps.particles if ps.t == 0 else model.sample_transition(ps.particles, rng)
    w = ps.weights * model.likelihood(particles, y)
    total = w.sum()
    if not total > 0:
        raise ParticleCollapseError(ps.t + 1)
    w = w / total
    idx = systematic_resample(w, rng)
    return ParticleSet(particles[idx], np.full(ps.N, 1.0 / ps.N), ps.t + 1)


def pf_estimate(ps: ParticleSet, n_states: int | None = None):
    """Weighted empirical belief (discrete) or ``(mean, variance)`` of ``x`` (continuous).

    Discrete particles are recognized by an integer dtype; pass ``n_states``
    to fix the length of the returned belief.
    """
    w = ps.weights / ps.weights.sum()
    if np.issubdtype(ps.particles.dtype, np.integer):
        n = n_states if n_states is not None else int(ps.particles.max()) + 1
        return np.bincount(ps.particles, weights=w, minlength=n)
    x = ps.particles[:, 0] if ps.particles.ndim == 2 else ps.particles
    mean = float(np.dot(w, x))
    return mean, float(np.dot(w, (x - mean) ** 2))


def pf_filter(model, evidence, N: int, seed=None, n_states: int | None = None) -> list:
    """Run the filter over ``evidence``, returning the estimate after every step."""
    ps, rng = pf_init(model, N, seed)
    out = []
    for y in evidence:
        ps = pf_step(ps, model, y, rng)
        out.append(pf_estimate(ps, n_states))
    return out

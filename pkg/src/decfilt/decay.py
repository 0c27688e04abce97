"""Decay schedules: distributions over timeslices ``1..T``.

A schedule decides which slice of the trajectory the Gibbs sampler revisits
next.  Four families are provided:

==================  =========================================  ===========
kind                raw weight of slice ``t`` (``1 <= t <= T``)  CLI spelling
==================  =========================================  ===========
uniform             ``1``                                      ``uniform``
window              ``1`` if ``t > T - W`` else ``0``          ``window:W``
exponential         ``exp(-beta * (T - t))``                   ``exp:BETA``
inverse polynomial  ``(T - t + 1) ** -(1 + delta)``            ``poly:DELTA``
==================  =========================================  ===========

An optional evidence limit ``L`` additionally zeroes every ``t <= T - L``.
Probabilities are raw weights renormalized over the finite support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DecaySchedule", "parse_decay", "uniform", "window", "exponential", "inverse_polynomial", "quadratic"]

_KINDS = ("uniform", "window", "exponential", "polynomial")


@dataclass
class DecaySchedule:
    """A decay family, its parameter and an optional evidence limit.

    Parameters
    ----------
    kind : {"uniform", "window", "exponential", "polynomial"}
    param : float
        ``W`` for window, ``beta`` for exponential, ``delta`` for polynomial;
        ignored for uniform.
    limit : int or None
        Evidence limit ``L``; ``None`` means unbounded.

    The cumulative weight table for the most recent ``T`` is cached and
    rebuilt when a different ``T`` is requested.
    """

    kind: str
    param: float = 0.0
    limit: int | None = None
    _cache_T: int = field(default=-1, init=False, repr=False, compare=False)
    _cache_cdf: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown decay kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "window":
            if self.param < 1 or int(self.param) != self.param:
                raise ValueError(f"window size must be a positive integer, got {self.param}")
            self.param = int(self.param)
        elif self.kind in ("exponential", "polynomial") and not self.param > 0:
            raise ValueError(f"{self.kind} decay parameter must be positive, got {self.param}")
        if self.limit is not None:
            if self.limit < 1 or int(self.limit) != self.limit:
                raise ValueError(f"evidence limit must be a positive integer, got {self.limit}")
            self.limit = int(self.limit)

    @property
    def label(self) -> str:
        """Spelling accepted by :func:`parse_decay` (without the limit)."""
        if self.kind == "uniform":
            return "uniform"
        prefix = {"window": "window", "exponential": "exp", "polynomial": "poly"}[self.kind]
        return f"{prefix}:{self.param:g}"

    def copy(self) -> DecaySchedule:
        return DecaySchedule(self.kind, self.param, self.limit)

    def weights(self, T: int) -> np.ndarray:
        """Raw weights for ``t = 1..T`` as an array of length ``T``."""
        if T < 0:
            raise ValueError("T must be nonnegative")
        age = np.arange(T - 1, -1, -1, dtype=np.float64)  # T - t
        if self.kind == "uniform":
            w = np.ones(T)
        elif self.kind == "window":
            w = (age < self.param).astype(np.float64)
        elif self.kind == "exponential":
            w = np.exp(-self.param * age)
        else:
            w = (age + 1.0) ** -(1.0 + self.param)
        if self.limit is not None:
            w[age >= self.limit] = 0.0
        return w

    def raw_weight(self, t: int, T: int) -> float:
        if not 1 <= t <= T:
            raise ValueError(f"timeslice t={t} outside [1, {T}]")
        age = T - t
        if self.limit is not None and age >= self.limit:
            return 0.0
        if self.kind == "uniform":
            return 1.0
        if self.kind == "window":
            return 1.0 if age < self.param else 0.0
        if self.kind == "exponential":
            return math.exp(-self.param * age)
        return float(age + 1) ** -(1.0 + self.param)

    def cdf(self, T: int) -> np.ndarray:
        """Cumulative raw weights over ``t = 1..T`` (cached per ``T``)."""
        if T != self._cache_T:
            if T < 1:
                raise ValueError("T must be at least 1")
            self._cache_cdf = np.cumsum(self.weights(T))
            self._cache_T = T
        return self._cache_cdf

    def normalizer(self, T: int) -> float:
        return float(self.cdf(T)[-1])

    def probabilities(self, T: int) -> np.ndarray:
        w = self.weights(T)
        return w / w.sum()

    def sample_timeslice(self, T: int, rng: np.random.Generator) -> int:
        """Draw ``t`` in ``1..T`` with probability proportional to its raw weight."""
        return int(self.sample_index(T, rng.random())) + 1

    def sample_index(self, T: int, u):
        """Zero-based slice index(es) for uniform variate(s) ``u``."""
        cdf = self.cdf(T)
        return np.minimum(np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right"), T - 1)


def uniform(limit=None) -> DecaySchedule:
    return DecaySchedule("uniform", limit=limit)


def window(W: int, limit=None) -> DecaySchedule:
    return DecaySchedule("window", W, limit)


def exponential(beta: float, limit=None) -> DecaySchedule:
    return DecaySchedule("exponential", beta, limit)


def inverse_polynomial(delta: float = 1.0, limit=None) -> DecaySchedule:
    return DecaySchedule("polynomial", delta, limit)


def quadratic(limit=None) -> DecaySchedule:
    """Inverse-polynomial decay with ``delta = 1``."""
    return inverse_polynomial(1.0, limit)


def parse_decay(spec: str, limit: int | None = None) -> DecaySchedule:
    """Parse ``uniform``, ``window:W``, ``exp:BETA`` or ``poly:DELTA``.

    >>> parse_decay("poly:1").label
    'poly:1'
    """
    name, _, arg = spec.strip().partition(":")
    name = name.lower()
    try:
        if name == "uniform" and not arg:
            return uniform(limit)
        if name == "window":
            return window(int(arg), limit)
        if name in ("exp", "exponential"):
            return exponential(float(arg), limit)
        if name in ("poly", "polynomial"):
            return inverse_polynomial(float(arg) if arg else 1.0, limit)
        if name == "quadratic" and not arg:
            return quadratic(limit)
    except ValueError as exc:
        raise ValueError(f"bad decay spec {spec!r}: {exc}") from None
    raise ValueError(f"bad decay spec {spec!r}; expected uniform|window:W|exp:BETA|poly:DELTA")

"""Total variation distance, the mixing parameter, and empirical mixing times."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .decay import DecaySchedule
from .dmcmc import InconsistentBlanketError, gibbs_conditional, run_many
from .exact import smooth
from .models import DiscreteHMM, check_evidence

__all__ = [
    "tv_distance",
    "mixing_parameter",
    "MixingReport",
    "adversarial_starts",
    "estimate_mixing_time",
]


def tv_distance(p, q) -> float:
    """Half the L1 distance between two distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def mixing_parameter(model: DiscreteHMM, evidence=None) -> float:
    """Largest TV distance between interior Gibbs conditionals with different blankets.

    The maximum runs over all ``(x_prev, x_next)`` pairs and all symbols, or
    only the symbols present in ``evidence`` when it is given.  Blankets with
    zero probability are skipped.
    """
    symbols = range(model.n_obs) if evidence is None else np.unique(check_evidence(model, evidence))
    n = model.n_states
    eta = 0.0
    for y in symbols:
        conds = []
        for a, b in itertools.product(range(n), repeat=2):
            try:
                conds.append(gibbs_conditional(model, 2, a, b, int(y)))
            except InconsistentBlanketError:
                continue
        if len(conds) < 2:
            continue
        c = np.array(conds)
        # pairwise TV via broadcasting; n**2 conditionals keeps this small
        d = 0.5 * np.abs(c[:, None, :] - c[None, :, :]).sum(axis=2)
        eta = max(eta, float(d.max()))
    return min(eta, 1.0)


@dataclass
class MixingReport:
    """Outcome of :func:`estimate_mixing_time`.

    ``per_step_tv`` maps each start label to a list of ``(step, tv)`` pairs;
    ``worst`` holds the maximum over starts at each checkpoint.  ``tau_m`` is
    ``None`` when the chains did not mix within the step budget.
    """

    epsilon: float
    tau_m: int | None
    n_chains: int
    checkpoints: list[int]
    per_step_tv: dict[str, list[tuple[int, float]]]
    worst: list[float]
    bias_floor: float
    start_labels: list[str] = field(default_factory=list)

    @property
    def mixed(self) -> bool:
        return self.tau_m is not None

    def to_csv(self) -> str:
        """CSV with columns ``start_label,step,tv_estimate`` and a trailing summary row."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_label", "step", "tv_estimate"])
        for label in self.start_labels:
            for step, tv in self.per_step_tv[label]:
                w.writerow([label, step, repr(tv)])
        w.writerow(["summary:tau_m", "" if self.tau_m is None else self.tau_m, "not mixed within budget" if self.tau_m is None else repr(self.epsilon)])
        return buf.getvalue()


def adversarial_starts(model: DiscreteHMM, T: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Constant trajectories for every state plus one uniformly random trajectory."""
    starts = {f"const{k}": np.full(T, k, dtype=np.int64) for k in range(model.n_states)}
    starts["random"] = rng.integers(0, model.n_states, size=T)
    return starts


def checkpoint_grid(max_steps: int) -> list[int]:
    grid = []
    s = 1
    while s <= max_steps:
        grid.append(s)
        s *= 2
    return grid


def estimate_mixing_time(
    model: DiscreteHMM,
    evidence,
    schedule: DecaySchedule,
    epsilon: float = 0.05,
    n_chains: int = 1000,
    start_set: dict[str, np.ndarray] | None = None,
    max_steps: int = 1 << 14,
    seed=None,
) -> MixingReport:
    """Measure the marginal mixing time of the last slice.

    For every start trajectory, ``n_chains`` chains with independent random
    streams are run from that start.  At geometric checkpoints
    ``1, 2, 4, ...`` up to ``max_steps`` the distribution of ``x_T`` across chains is
    compared with the exact smoothed marginal.  ``tau_m`` is the first
    checkpoint at which the worst start is below ``epsilon`` and stays below
    it at the following checkpoint (or the last checkpoint, if it is the
    final one).

    ``start_set`` maps labels to trajectories, or to arrays of shape
    ``(n_chains, T)`` for per-chain starts; the default is
    :func:`adversarial_starts`.
    """
    ev = check_evidence(model, evidence)
    T = ev.shape[0]
    target = smooth(model, ev)[-1]
    root = np.random.SeedSequence(seed)
    start_seed, chain_seed = root.spawn(2)
    if start_set is None:
        start_set = adversarial_starts(model, T, np.random.default_rng(start_seed))
    grid = checkpoint_grid(max_steps)
    labels = list(start_set)
    schedule = schedule.copy()
    per_start: dict[str, list[tuple[int, float]]] = {}
    for label, seq in zip(labels, chain_seed.spawn(len(labels))):
        start = np.asarray(start_set[label], dtype=np.int64)
        trajs = np.array(np.broadcast_to(start, (n_chains, T)), order="C")
        rngs = [np.random.default_rng(s) for s in seq.spawn(n_chains)]
        rows = []
        done = 0
        for step in grid:
            run_many(trajs, model, ev, schedule, step - done, rngs)
            done = step
            hist = np.bincount(trajs[:, -1], minlength=model.n_states) / n_chains
            rows.append((step, tv_distance(hist, target)))
        per_start[label] = rows
    worst = [max(per_start[lab][i][1] for lab in labels) for i in range(len(grid))]
    tau = None
    for i, step in enumerate(grid):
        if worst[i] < epsilon and (i + 1 == len(grid) or worst[i + 1] < epsilon):
            tau = step
            break
    # expected TV of an R-sample histogram against its source is O(sqrt(n / R))
    bias = 0.5 * float(np.sum(np.sqrt(target * (1 - target) * 2 / (np.pi * n_chains))))
    return MixingReport(epsilon, tau, n_chains, grid, per_start, worst, bias, labels)

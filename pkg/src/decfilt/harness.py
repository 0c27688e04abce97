"""Seeded experiment sweeps that write one CSV row per measurement.

Configs are JSON documents.  Schema (keys not needed by a scenario are
ignored)::

    {
      "scenario": "error_vs_samples",   # see SCENARIOS
      "model": {"preset": "slow"},      # or {"file": "m.json"}
                                        # or {"generate": {"n_states": 3, "n_obs": 3,
                                        #     "transition_sharpness": 0.9,
                                        #     "observation_sharpness": 0.3, "seed": 0}}
      "T": [1000],                      # history lengths (checkpoints for online scenarios)
      "budgets": [1000, 10000],         # MCMC steps (total, or per update when online)
      "decays": ["poly:1", "window:5"], # decay specs, see decfilt.decay.parse_decay
      "limit": null,                    # evidence limit L applied to every decay
      "particles": [1000],              # particle counts (pf_compare, skf_track)
      "replications": 20,
      "seed": 0,
      "burn_in": 0,
      "gap": 1,                         # skf_track: tally x_T every gap-th step
      "mixing": {"epsilon": 0.05, "chains": 1000, "max_steps": 16384},
      "skf": {"switch_values": [-1, 1], "switch_prior": [0.5, 0.5],
              "sigma_v": 0.5, "sigma_w": 1.0, "x0_mean": 0.0, "x0_std": 1.0,
              "switch_markov": null},
      "output": "results.csv"
    }

Scenarios
---------
stationarity
    Batch chain on simulated evidence of each length in ``T``; ``budgets``
    are total steps (after ``burn_in``).  Rows: ``tv_slice_max`` (worst slice
    marginal vs forward-backward) and, when enumerable, ``tv_path`` (whole
    trajectory vs brute force).
error_vs_samples
    Batch chain on evidence of each length in ``T``, slices initialized left
    to right, then run; the estimate is read after each cumulative budget.
    Metric ``tv_last``: TV to the exact filtered belief.
error_vs_history, pf_compare
    Online filtering: every observation is followed by ``budget`` Gibbs
    steps and the error is read at each ``T``.  ``pf_compare`` adds one
    bootstrap particle filter per entry of ``particles``.  Budgets are
    equalized per update: ``S`` Gibbs steps against ``N`` particles, since
    one particle propagation plus weighting costs about one Gibbs step.
mixing_vs_history
    Empirical marginal mixing time (column ``tau_m``) per ``T`` and decay.
skf_track
    Online switching Kalman filter tracking; metric ``abs_err`` is
    ``|estimated mean - true x_T|``.  With ``gap`` ``G`` and budget ``B``
    the chain runs ``B * G`` steps per update and tallies every ``G``-th.

Every row carries the cell seed.  Evidence is drawn from
``default_rng([seed, 0])``, the MCMC chain from ``[seed, 1]`` and the
particle filter from ``[seed, 2]``, so any single cell can be re-run.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .decay import parse_decay
from .diagnostics import estimate_mixing_time, mixing_parameter, tv_distance
from .dmcmc import ChainConfig, chain_from_evidence, estimate, new_chain, observe, run, run_recording
from .exact import MAX_ENUMERATION, brute_force_posterior, forward_filter, smooth
from .models import DiscreteHMM, canonical_model, load_model, make_random_hmm, simulate
from .pfilter import ParticleCollapseError, pf_estimate, pf_init, pf_step
from .skf import SKFConfig, SKFChain, SwitchingKF, skf_estimate, skf_observe, skf_simulate

__all__ = [
    "SCENARIOS",
    "COLUMNS",
    "PRESETS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "compare_report",
    "format_report",
]

SCENARIOS = ("stationarity", "error_vs_samples", "error_vs_history", "mixing_vs_history", "pf_compare", "skf_track")
COLUMNS = ("scenario", "model_id", "T", "decay", "budget", "replication", "seed", "metric", "error", "tau_m", "eta", "status")


def _presets() -> dict:
    return {
        "canonical": canonical_model,
        # three states, weak evidence; differ only in how sticky the dynamics are
        "slow": lambda: make_random_hmm(3, 3, 0.9, 0.3, seed=0),
        "fast": lambda: make_random_hmm(3, 3, 0.2, 0.3, seed=0),
        "large": lambda: make_random_hmm(8, 8, 0.5, 0.5, seed=0),
    }


PRESETS = tuple(_presets())


class ConfigError(ValueError):
    """Invalid experiment config; the message starts with the offending field path."""


@dataclass
class ExperimentConfig:
    scenario: str
    model: dict = field(default_factory=lambda: {"preset": "canonical"})
    T: list[int] = field(default_factory=lambda: [1000])
    budgets: list[int] = field(default_factory=lambda: [1000])
    decays: list[str] = field(default_factory=lambda: ["poly:1"])
    limit: int | None = None
    particles: list[int] = field(default_factory=list)
    replications: int = 1
    seed: int = 0
    burn_in: int = 0
    gap: int = 1
    mixing: dict = field(default_factory=dict)
    skf: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown {self.scenario!r}; expected one of {SCENARIOS}")
        for name in ("T", "budgets", "decays"):
            val = getattr(self, name)
            if not isinstance(val, list) or not val:
                raise ConfigError(f"{name}: must be a nonempty list")
        for name in ("T", "budgets", "particles"):
            for i, v in enumerate(getattr(self, name)):
                if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                    raise ConfigError(f"{name}[{i}]: must be a positive integer, got {v!r}")
        for i, d in enumerate(self.decays):
            try:
                parse_decay(d, self.limit)
            except ValueError as exc:
                raise ConfigError(f"decays[{i}]: {exc}") from None
        if self.scenario == "pf_compare" and not self.particles:
            raise ConfigError("particles: must be a nonempty list for pf_compare")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigError("replications: must be a positive integer")
        if self.burn_in < 0 or self.gap < 1:
            raise ConfigError("burn_in/gap: burn_in must be >= 0 and gap >= 1")
        if self.scenario != "skf_track":
            if not isinstance(self.model, dict) or len(set(self.model) & {"preset", "file", "generate"}) != 1:
                raise ConfigError("model: needs exactly one of 'preset', 'file', 'generate'")
            if "preset" in self.model and self.model["preset"] not in PRESETS:
                raise ConfigError(f"model.preset: unknown {self.model['preset']!r}; expected one of {PRESETS}")

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if not isinstance(doc, dict):
            raise ConfigError("<root>: config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config key")
        if "scenario" not in doc:
            raise ConfigError("scenario: missing")
        return cls(**doc)


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: not valid JSON ({exc})") from None
    cfg = ExperimentConfig.from_dict(doc)
    if "file" in cfg.model:
        # model paths are relative to the config file
        cfg.model = {"file": str(Path(path).parent / cfg.model["file"])}
    return cfg


def build_model(cfg: ExperimentConfig) -> DiscreteHMM:
    spec = cfg.model
    if "preset" in spec:
        return _presets()[spec["preset"]]()
    if "file" in spec:
        return load_model(spec["file"])
    try:
        return make_random_hmm(**spec["generate"])
    except TypeError as exc:
        raise ConfigError(f"model.generate: {exc}") from None


def build_skf(cfg: ExperimentConfig) -> SwitchingKF:
    params = {"switch_values": [-1.0, 1.0], "switch_prior": [0.5, 0.5], "sigma_v": 0.5, "sigma_w": 1.0}
    params.update(cfg.skf)
    try:
        return SwitchingKF(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"skf: {exc}") from None


def _skf_id(model: SwitchingKF) -> str:
    doc = {
        "values": model.switch_values.tolist(),
        "prior": model.switch_prior.tolist(),
        "markov": None if model.switch_markov is None else model.switch_markov.tolist(),
        "sv": model.sigma_v, "sw": model.sigma_w, "m0": model.x0_mean, "s0": model.x0_std,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]


def cell_seed(root: int, T: int, rep: int) -> int:
    return int(np.random.SeedSequence([root, T, rep]).generate_state(1, np.uint32)[0])


def _row(**kw) -> dict:
    row = dict.fromkeys(COLUMNS, "")
    row["status"] = "ok"
    row.update(kw)
    return row


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


# scenario runners -----------------------------------------------------------


def _stationarity(cfg, model, mid, eta):
    for T in cfg.T:
        for rep in range(cfg.replications):
            seed = cell_seed(cfg.seed, T, rep)
            _, ev = simulate(model, T, seed=[seed, 0])
            marg = smooth(model, ev)
            post = brute_force_posterior(model, ev) if model.n_states**T <= MAX_ENUMERATION else None
            for d in cfg.decays:
                sched = parse_decay(d, cfg.limit)
                for budget in cfg.budgets:
                    chain = chain_from_evidence(
                        model, ev, ChainConfig(budget + cfg.burn_in, cfg.burn_in, sched, [seed, 1])
                    )
                    occ, paths = run_recording(chain, model, budget + cfg.burn_in)
                    base = dict(scenario=cfg.scenario, model_id=mid, T=T, decay=sched.label, budget=budget,
                                replication=rep, seed=seed, eta=eta)
                    worst = max(tv_distance(occ[t] / occ[t].sum(), marg[t]) for t in range(T))
                    yield _row(metric="tv_slice_max", error=worst, **base)
                    if post is not None and paths is not None:
                        probs = np.fromiter(post.values(), float, len(post))
                        yield _row(metric="tv_path", error=tv_distance(paths / paths.sum(), probs), **base)


def _error_vs_samples(cfg, model, mid, eta):
    budgets = sorted(cfg.budgets)
    for T in cfg.T:
        for rep in range(cfg.replications):
            seed = cell_seed(cfg.seed, T, rep)
            _, ev = simulate(model, T, seed=[seed, 0])
            target = forward_filter(model, ev).beliefs[-1]
            for d in cfg.decays:
                sched = parse_decay(d, cfg.limit)
                chain = chain_from_evidence(model, ev, ChainConfig(budgets[-1] + cfg.burn_in, cfg.burn_in, sched, [seed, 1]))
                done = 0
                for budget in budgets:
                    run(chain, model, budget + cfg.burn_in - done)
                    done = budget + cfg.burn_in
                    yield _row(scenario=cfg.scenario, model_id=mid, T=T, decay=sched.label, budget=budget,
                               replication=rep, seed=seed, metric="tv_last",
                               error=tv_distance(estimate(chain), target), eta=eta)


def _online(cfg, model, mid, eta):
    checkpoints = set(cfg.T)
    T_max = max(cfg.T)
    particles = cfg.particles if cfg.scenario == "pf_compare" else []
    for rep in range(cfg.replications):
        seed = cell_seed(cfg.seed, 0, rep)
        _, ev = simulate(model, T_max, seed=[seed, 0])
        beliefs = forward_filter(model, ev).beliefs
        for d in cfg.decays:
            sched = parse_decay(d, cfg.limit)
            for budget in cfg.budgets:
                chain = new_chain(model, ChainConfig(budget + cfg.burn_in, cfg.burn_in, sched, [seed, 1]))
                for t, y in enumerate(ev, 1):
                    observe(chain, model, y)
                    if t in checkpoints:
                        yield _row(scenario=cfg.scenario, model_id=mid, T=t, decay=sched.label, budget=budget,
                                   replication=rep, seed=seed, metric="tv_last",
                                   error=tv_distance(estimate(chain), beliefs[t - 1]), eta=eta)
        for N in particles:
            ps, rng = pf_init(model, N, [seed, 2])
            base = dict(scenario=cfg.scenario, model_id=mid, decay="pf", budget=N, replication=rep, seed=seed,
                        metric="tv_last", eta=eta)
            try:
                for t, y in enumerate(ev, 1):
                    ps = pf_step(ps, model, y, rng)
                    if t in checkpoints:
                        yield _row(T=t, error=tv_distance(pf_estimate(ps, model.n_states), beliefs[t - 1]), **base)
            except ParticleCollapseError as exc:
                for t in sorted(checkpoints):
                    if t >= exc.t:
                        yield _row(T=t, status=str(exc), **base)


def _mixing(cfg, model, mid, eta):
    mix = {"epsilon": 0.05, "chains": 1000, "max_steps": 1 << 14}
    mix.update(cfg.mixing)
    for T in cfg.T:
        for rep in range(cfg.replications):
            seed = cell_seed(cfg.seed, T, rep)
            _, ev = simulate(model, T, seed=[seed, 0])
            for d in cfg.decays:
                sched = parse_decay(d, cfg.limit)
                rep_ = estimate_mixing_time(model, ev, sched, mix["epsilon"], mix["chains"],
                                            max_steps=mix["max_steps"], seed=[seed, 1])
                yield _row(scenario=cfg.scenario, model_id=mid, T=T, decay=sched.label, budget=mix["max_steps"],
                           replication=rep, seed=seed, metric="tau_m",
                           tau_m="" if rep_.tau_m is None else rep_.tau_m, eta=eta,
                           status="ok" if rep_.mixed else "not mixed within budget")


def _skf_track(cfg, _model, _mid, _eta):
    model = build_skf(cfg)
    mid = _skf_id(model)
    checkpoints = set(cfg.T)
    T_max = max(cfg.T)
    for rep in range(cfg.replications):
        seed = cell_seed(cfg.seed, 0, rep)
        (xs, _), ys = skf_simulate(model, T_max, seed=[seed, 0])
        for d in cfg.decays:
            sched = parse_decay(d, cfg.limit)
            for budget in cfg.budgets:
                steps = budget * cfg.gap
                chain = SKFChain(SKFConfig(steps + cfg.burn_in, cfg.burn_in, cfg.gap, sched, [seed, 1]))
                for t, y in enumerate(ys, 1):
                    skf_observe(chain, model, y)
                    if t in checkpoints:
                        yield _row(scenario=cfg.scenario, model_id=mid, T=t, decay=sched.label, budget=budget,
                                   replication=rep, seed=seed, metric="abs_err",
                                   error=abs(skf_estimate(chain)[0] - xs[t - 1]))
        for N in cfg.particles:
            ps, rng = pf_init(model, N, [seed, 2])
            base = dict(scenario=cfg.scenario, model_id=mid, decay="pf", budget=N, replication=rep, seed=seed,
                        metric="abs_err")
            try:
                for t, y in enumerate(ys, 1):
                    ps = pf_step(ps, model, y, rng)
                    if t in checkpoints:
                        yield _row(T=t, error=abs(pf_estimate(ps)[0] - xs[t - 1]), **base)
            except ParticleCollapseError as exc:
                for t in sorted(checkpoints):
                    if t >= exc.t:
                        yield _row(T=t, status=str(exc), **base)


_RUNNERS = {
    "stationarity": _stationarity,
    "error_vs_samples": _error_vs_samples,
    "error_vs_history": _online,
    "pf_compare": _online,
    "mixing_vs_history": _mixing,
    "skf_track": _skf_track,
}


def iter_rows(cfg: ExperimentConfig):
    """Yield result rows (dicts keyed by :data:`COLUMNS`) in sweep order."""
    if cfg.scenario == "skf_track":
        model, mid, eta = None, "", ""
    else:
        model = build_model(cfg)
        mid = model.fingerprint()
        eta = mixing_parameter(model)
    yield from _RUNNERS[cfg.scenario](cfg, model, mid, eta)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, output=None) -> list[dict]:
    """Run every sweep cell, write the CSV (if an output path is set) and return the rows."""
    rows = list(iter_rows(cfg))
    out = output or cfg.output
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(rows_to_csv(rows).encode("utf-8"))
    return rows


# reporting ------------------------------------------------------------------


class SummaryRow(NamedTuple):
    scenario: str
    model_id: str
    metric: str
    decay: str
    budget: str
    T: str
    n: int
    mean: float
    stderr: float
    failures: int


def _read_rows(paths) -> list[dict]:
    rows = []
    for p in paths:
        with open(p, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != COLUMNS:
                raise ValueError(f"{p}: unexpected CSV header {header}; expected {COLUMNS}")
            rows.extend(dict(zip(COLUMNS, r)) for r in reader)
    return rows


def compare_report(paths=None, rows=None) -> list[SummaryRow]:
    """Mean and standard error per (scenario, model, metric, estimator, budget, T)."""
    if rows is None:
        rows = _read_rows(paths)
    else:
        rows = [{c: _fmt(r[c]) for c in COLUMNS} for r in rows]
    groups: dict[tuple, list] = defaultdict(list)
    fails: dict[tuple, int] = defaultdict(int)
    for r in rows:
        key = (r["scenario"], r["model_id"], r["metric"], r["decay"], r["budget"], r["T"])
        val = r["tau_m"] if r["metric"] == "tau_m" else r["error"]
        if r["status"] != "ok" or val == "":
            fails[key] += 1
            groups.setdefault(key, [])
        else:
            groups[key].append(float(val))

    def order(key):
        return tuple((0, float(k)) if k.replace(".", "", 1).isdigit() else (1, k) for k in key)

    out = []
    for key in sorted(groups, key=order):
        vals = np.asarray(groups[key])
        n = vals.size
        mean = float(vals.mean()) if n else math.nan
        se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else (0.0 if n else math.nan)
        out.append(SummaryRow(*key, n, mean, se, fails[key]))
    return out


def format_report(summary: list[SummaryRow]) -> str:
    head = f"{'scenario':<18} {'metric':<13} {'estimator':<11} {'budget':>8} {'T':>6} {'n':>4}  {'mean':>10} ± {'stderr':<10} fail"
    lines = [head, "-" * len(head)]
    for s in summary:
        lines.append(
            f"{s.scenario:<18} {s.metric:<13} {s.decay:<11} {s.budget:>8} {s.T:>6} {s.n:>4}  "
            f"{s.mean:>10.5g} ± {s.stderr:<10.3g} {s.failures}"
        )
    return "\n".join(lines)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from decfilt.decay import quadratic
from decfilt.diagnostics import adversarial_starts, estimate_mixing_time, mixing_parameter, tv_distance
from decfilt.exact import brute_force_posterior
from decfilt.models import DiscreteHMM, make_random_hmm, simulate

from conftest import random_model
from oracles import enumerate_eta


def test_tv_examples():
    assert tv_distance([0.3, 0.7], [0.3, 0.7]) == 0
    assert tv_distance([1, 0, 0], [0, 0, 1]) == 1
    assert tv_distance([0.5, 0.5], [0.9, 0.1]) == pytest.approx(0.4)


def test_tv_length_mismatch():
    with pytest.raises(ValueError):
        tv_distance([0.5, 0.5], [1.0, 0.0, 0.0])


def _simplex(n):
    return arrays(np.float64, n, elements=st.floats(0.001, 1)).map(lambda a: a / a.sum())


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(_simplex(n), _simplex(n), _simplex(n))))
def test_tv_is_a_metric(triple):
    p, q, r = triple
    assert 0 <= tv_distance(p, q) <= 1 + 1e-12
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p))
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12
    assert tv_distance(p, p) == 0


def test_eta_zero_when_rows_equal():
    m = DiscreteHMM([0.5, 0.5], [[0.3, 0.7], [0.3, 0.7]], [[0.9, 0.1], [0.2, 0.8]])
    assert mixing_parameter(m) == 0


def test_eta_one_for_deterministic_permutation():
    m = DiscreteHMM([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]], [[0.8, 0.2], [0.2, 0.8]])
    assert mixing_parameter(m) == 1.0


def test_eta_canonical(c1):
    assert mixing_parameter(c1) == pytest.approx(0.533, abs=1e-3)
    assert mixing_parameter(c1) == pytest.approx(enumerate_eta(c1), abs=1e-12)


def test_eta_matches_enumeration_on_random_models():
    rng = np.random.default_rng(4)
    for _ in range(25):
        m = random_model(rng, int(rng.integers(2, 5)), int(rng.integers(2, 4)))
        assert mixing_parameter(m) == pytest.approx(enumerate_eta(m), abs=1e-12)


def test_eta_data_dependent_is_tighter():
    m = make_random_hmm(3, 3, 0.6, 0.5, seed=2)
    full = mixing_parameter(m)
    assert all(mixing_parameter(m, [y]) <= full + 1e-15 for y in range(3))
    assert max(mixing_parameter(m, [y]) for y in range(3)) == pytest.approx(full)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), sp=st.permutations([0, 1, 2]), op=st.permutations([0, 1]))
def test_eta_relabel_invariant(seed, sp, op):
    m = random_model(np.random.default_rng(seed), 3, 2)
    assert mixing_parameter(m.permuted(sp, op)) == pytest.approx(mixing_parameter(m), abs=1e-12)


@pytest.mark.parametrize("T", [10, 100, 1000])
def test_eta_zero_model_mixes_immediately(T):
    m = make_random_hmm(2, 2, 0.0, 0.6, seed=1)
    assert mixing_parameter(m) == 0
    _, ev = simulate(m, T, seed=T)
    rep = estimate_mixing_time(m, ev, quadratic(), epsilon=0.05, n_chains=1000, max_steps=64, seed=T)
    assert rep.mixed and rep.tau_m <= 10


def test_zero_budget_is_not_mixed(c1):
    rep = estimate_mixing_time(c1, [0, 1, 0], quadratic(), n_chains=50, max_steps=0, seed=0)
    assert not rep.mixed and rep.tau_m is None
    assert "not mixed within budget" in rep.to_csv()


def test_exact_starts_report_first_checkpoint(c1):
    ev = [0, 0, 1, 1, 0, 1, 0, 0]
    post = brute_force_posterior(c1, ev)
    keys = list(post)
    rng = np.random.default_rng(6)
    R = 1000
    draws = rng.choice(len(keys), size=R, p=np.array([post[k] for k in keys]))
    starts = {"posterior": np.array([keys[i] for i in draws], dtype=np.int64)}
    rep = estimate_mixing_time(c1, ev, quadratic(), n_chains=R, start_set=starts, max_steps=64, seed=1)
    assert rep.tau_m == rep.checkpoints[0] == 1
    assert rep.worst[0] < 0.05


def test_adversarial_starts_cover_constants(c1):
    starts = adversarial_starts(make_random_hmm(3, 2, 0.5, 0.5, seed=0), 5, np.random.default_rng(0))
    assert set(starts) == {"const0", "const1", "const2", "random"}
    assert starts["const2"].tolist() == [2] * 5


def test_report_fields_and_csv(c1):
    rep = estimate_mixing_time(c1, [0, 1, 1, 0], quadratic(), n_chains=200, max_steps=16, seed=3)
    assert rep.checkpoints == [1, 2, 4, 8, 16]
    assert all(0 <= tv <= 1 for rows in rep.per_step_tv.values() for _, tv in rows)
    if rep.mixed:
        i = rep.checkpoints.index(rep.tau_m)
        assert rep.worst[i] < rep.epsilon
    lines = rep.to_csv().splitlines()
    assert lines[0] == "start_label,step,tv_estimate"
    assert len(lines) == 2 + len(rep.start_labels) * len(rep.checkpoints)
    assert lines[-1].startswith("summary:tau_m")
    assert 0 < rep.bias_floor < 0.05


def test_mixing_time_is_reproducible(c1):
    a = estimate_mixing_time(c1, [0, 1, 1, 0, 1], quadratic(), n_chains=100, max_steps=32, seed=9)
    b = estimate_mixing_time(c1, [0, 1, 1, 0, 1], quadratic(), n_chains=100, max_steps=32, seed=9)
    assert a.per_step_tv == b.per_step_tv

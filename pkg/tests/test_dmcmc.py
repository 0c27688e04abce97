import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decfilt.decay import quadratic, uniform, window
from decfilt.diagnostics import tv_distance
from decfilt.dmcmc import (
    ChainConfig,
    InconsistentBlanketError,
    chain_from_evidence,
    estimate,
    gibbs_conditional,
    mcmc_step,
    new_chain,
    observe,
    run,
    run_recording,
    run_many,
)
from decfilt.exact import brute_force_posterior, forward_filter, smooth
from decfilt.models import DiscreteHMM, make_random_hmm

from conftest import random_model


def test_interior_conditional(c1):
    assert gibbs_conditional(c1, 2, 0, 0, 0) == pytest.approx([0.9561, 0.0439], abs=1e-3)


def test_first_slice_conditional_uses_prior(c1):
    assert gibbs_conditional(c1, 1, None, 0, 0) == pytest.approx([0.9032, 0.0968], abs=1e-3)


def test_last_slice_conditional_drops_forward_factor(c1):
    assert gibbs_conditional(c1, 3, 1, None, 0) == pytest.approx(
        np.array([0.3 * 0.8, 0.7 * 0.2]) / (0.3 * 0.8 + 0.7 * 0.2)
    )


def test_uniform_transitions_ignore_neighbours():
    m = DiscreteHMM([0.2, 0.8], [[0.5, 0.5], [0.5, 0.5]], [[0.9, 0.1], [0.3, 0.7]])
    ref = np.array([0.9, 0.3]) / 1.2
    for a in (0, 1):
        for b in (0, 1):
            assert gibbs_conditional(m, 2, a, b, 0) == pytest.approx(ref)


def test_inconsistent_blanket():
    m = DiscreteHMM([0.5, 0.5], np.eye(2), [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InconsistentBlanketError) as info:
        gibbs_conditional(m, 4, 0, 1, 0)
    assert info.value.t == 4


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(steps_per_update=10, burn_in=10)
    with pytest.raises(ValueError):
        ChainConfig(steps_per_update=0)


def test_T1_counts_converge_to_posterior(c1):
    chain = chain_from_evidence(c1, [1], ChainConfig(seed=3))
    run(chain, c1, 20000)
    assert tv_distance(estimate(chain), [0.2, 0.8]) < 0.01


def test_frozen_chain_with_identity_dynamics():
    m = DiscreteHMM([1.0, 0.0], np.eye(2), [[0.6, 0.4], [0.4, 0.6]])
    chain = chain_from_evidence(m, [0, 1, 1, 0, 1], ChainConfig(seed=0, schedule=uniform()))
    run(chain, m, 5000)
    assert np.all(chain.trajectory == 0)
    assert np.array_equal(estimate(chain), [1.0, 0.0])


def test_window_one_only_touches_last_slice(c1):
    ev = [0, 1, 0, 0, 1, 1, 0, 1]
    chain = chain_from_evidence(c1, ev, ChainConfig(seed=5, schedule=window(1)))
    before = chain.trajectory.copy()
    occ, _ = run_recording(chain, c1, 2000)
    assert np.array_equal(chain.trajectory[:-1], before[:-1])
    assert np.array_equal(occ[:-1].argmax(axis=1), before[:-1])


def test_observe_from_empty_matches_filter(c1):
    chain = new_chain(c1, ChainConfig(steps_per_update=10**4, seed=1))
    observe(chain, c1, 0)
    assert chain.T == 1
    assert tv_distance(estimate(chain), forward_filter(c1, [0]).beliefs[-1]) < 0.05


def test_two_observations_match_filter(c1):
    chain = new_chain(c1, ChainConfig(steps_per_update=10**5, seed=2))
    observe(chain, c1, 0)
    observe(chain, c1, 0)
    assert tv_distance(estimate(chain), [0.8671, 0.1329]) < 0.02


def test_identical_seeds_identical_chains(c1):
    a = new_chain(c1, ChainConfig(steps_per_update=500, seed=42))
    b = new_chain(c1, ChainConfig(steps_per_update=500, seed=42))
    for y in [0, 1, 1, 0, 1]:
        observe(a, c1, y)
        observe(b, c1, y)
    assert np.array_equal(a.trajectory, b.trajectory)
    assert np.array_equal(a.counts, b.counts)


def test_run_chunks_do_not_change_totals(c1):
    chain = chain_from_evidence(c1, [0, 1, 1], ChainConfig(seed=9, burn_in=30))
    for _ in range(25):
        mcmc_step(chain, c1)
    assert chain.counts.sum() == 0
    run(chain, c1, 100)
    assert chain.counts.sum() == 125 - 30
    assert chain.steps_taken == chain.total_steps == 125


def test_estimate_of_given_counts():
    chain = ChainConfig()
    state = new_chain(DiscreteHMM([0.5, 0.5], np.full((2, 2), 0.5), np.full((2, 2), 0.5)), chain)
    with pytest.raises(ValueError):
        estimate(state)
    state.counts[:] = [30, 10]
    assert estimate(state) == pytest.approx([0.75, 0.25])


def test_run_without_evidence_is_an_error(c1):
    with pytest.raises(ValueError):
        run(new_chain(c1), c1, 10)


def test_invalid_symbol_rejected(c1):
    with pytest.raises(ValueError):
        observe(new_chain(c1), c1, 2)


@settings(max_examples=30, deadline=None)
@given(
    burn_in=st.integers(0, 40),
    extra=st.integers(1, 80),
    updates=st.lists(st.integers(0, 1), min_size=1, max_size=4),
    seed=st.integers(0, 10**6),
)
def test_count_bookkeeping(burn_in, extra, updates, seed):
    model = DiscreteHMM([0.5, 0.5], [[0.7, 0.3], [0.3, 0.7]], [[0.8, 0.2], [0.2, 0.8]])
    cfg = ChainConfig(steps_per_update=burn_in + extra, burn_in=burn_in, seed=seed)
    chain = new_chain(model, cfg)
    for y in updates:
        observe(chain, model, y)
        assert chain.counts.sum() == max(0, chain.steps_taken - burn_in)
    run(chain, model, 7)
    assert chain.counts.sum() == max(0, chain.steps_taken - burn_in)
    assert np.all((chain.trajectory >= 0) & (chain.trajectory < 2))


def _sample_posterior(post, rng):
    keys = list(post)
    probs = np.array([post[k] for k in keys])
    return np.array(keys[rng.choice(len(keys), p=probs / probs.sum())])


@pytest.mark.slow
def test_stationarity_from_exact_posterior():
    # moderate sharpness: a near-deterministic draw mixes too slowly for a
    # single chain of this length to resolve every slice
    rng = np.random.default_rng(11)
    for n, T in ((2, 6), (3, 4)):
        model = make_random_hmm(n, 2, 0.5, 0.5, seed=int(rng.integers(1 << 30)))
        ev = rng.integers(0, 2, size=T)
        post = brute_force_posterior(model, ev)
        chain = chain_from_evidence(model, ev, ChainConfig(seed=int(rng.integers(1 << 30)), schedule=uniform()),
                                    trajectory=_sample_posterior(post, rng))
        occ, _ = run_recording(chain, model, 10**5)
        emp = occ / occ.sum(axis=1, keepdims=True)
        exact = smooth(model, ev)
        assert max(tv_distance(emp[t], exact[t]) for t in range(T)) < 0.02


@pytest.mark.slow
def test_posterior_ensemble_is_preserved_under_decay():
    # a single chain barely touches early slices under quadratic decay, so
    # check stationarity on an ensemble drawn from the exact posterior
    rng = np.random.default_rng(12)
    model = random_model(rng, 3, 2)
    ev = rng.integers(0, 2, size=5)
    post = brute_force_posterior(model, ev)
    R = 20000
    trajs = np.stack([_sample_posterior(post, rng) for _ in range(R)])
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(3).spawn(R)]
    run_many(trajs, model, ev, quadratic(), 5, rngs)
    exact = smooth(model, ev)
    for t in range(5):
        emp = np.bincount(trajs[:, t], minlength=3) / R
        assert tv_distance(emp, exact[t]) < 0.02


@pytest.mark.slow
@pytest.mark.parametrize("start", ["zeros", "ones", "alternating"])
def test_ergodicity_over_trajectories(start):
    rng = np.random.default_rng(5)
    model = random_model(rng, 2, 2)
    ev = [0, 1, 1, 0]
    init = {"zeros": [0, 0, 0, 0], "ones": [1, 1, 1, 1], "alternating": [0, 1, 0, 1]}[start]
    chain = chain_from_evidence(model, ev, ChainConfig(seed=8, schedule=uniform()), trajectory=init)
    _, paths = run_recording(chain, model, 10**6)
    post = brute_force_posterior(model, ev)
    exact = np.zeros(16)
    for traj, p in post.items():
        exact[int("".join(map(str, traj)), 2)] = p
    assert tv_distance(paths / paths.sum(), exact) < 0.05


def test_evidence_limit_freezes_old_slices(c1):
    ev = [0, 1, 1, 0, 0, 1, 0, 1, 1, 0]
    chain = chain_from_evidence(c1, ev, ChainConfig(seed=4, schedule=uniform(limit=3)))
    before = chain.trajectory.copy()
    run(chain, c1, 5000)
    assert np.array_equal(chain.trajectory[:7], before[:7])


def test_memory_independent_of_steps(c1):
    chain = chain_from_evidence(c1, [0, 1, 0], ChainConfig(seed=0))
    sizes = (chain._x.nbytes, chain.counts.nbytes)
    run(chain, c1, 200000)
    assert (chain._x.nbytes, chain.counts.nbytes) == sizes

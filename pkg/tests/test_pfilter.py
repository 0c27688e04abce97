import numpy as np
import pytest

from decfilt.diagnostics import tv_distance
from decfilt.exact import forward_filter
from decfilt.models import DiscreteHMM, simulate
from decfilt.pfilter import (
    ParticleCollapseError,
    ParticleSet,
    pf_estimate,
    pf_filter,
    pf_init,
    pf_step,
    systematic_resample,
)


def test_point_mass_prior():
    m = DiscreteHMM([0.0, 1.0, 0.0], np.full((3, 3), 1 / 3), np.full((3, 2), 0.5))
    ps, _ = pf_init(m, 50, seed=0)
    assert np.all(ps.particles == 1)


def test_single_particle(c1):
    ps, _ = pf_init(c1, 1, seed=0)
    assert ps.N == 1 and ps.weights.tolist() == [1.0]


def test_zero_particles_rejected(c1):
    with pytest.raises(ValueError):
        pf_init(c1, 0)


def test_initial_fraction_is_binomial(c1):
    N = 10**5
    ps, _ = pf_init(c1, N, seed=17)
    assert abs(np.mean(ps.particles == 0) - 0.5) < 3 * np.sqrt(0.25 / N)


def test_collapse_reports_timestep():
    m = DiscreteHMM([1.0, 0.0], np.eye(2), [[1.0, 0.0], [0.0, 1.0]])
    ps, rng = pf_init(m, 100, seed=0)
    ps = pf_step(ps, m, 0, rng)
    ps = pf_step(ps, m, 0, rng)
    with pytest.raises(ParticleCollapseError) as info:
        pf_step(ps, m, 1, rng)
    assert info.value.t == 3


def test_uninformative_observations_give_predictive():
    m = DiscreteHMM([0.9, 0.1], [[0.6, 0.4], [0.1, 0.9]], [[0.5, 0.5], [0.5, 0.5]])
    N = 10**5
    est = pf_filter(m, [0, 1, 1], N, seed=3, n_states=2)[-1]
    pred = m.prior @ m.transition @ m.transition
    assert tv_distance(est, pred) < 3 * np.sqrt(pred[0] * pred[1] / N) * 3


def test_two_observations_match_filter(c1):
    est = pf_filter(c1, [0, 0], 10**5, seed=1, n_states=2)[-1]
    assert tv_distance(est, [0.8671, 0.1329]) < 0.01


def test_weights_stay_normalized(c1):
    ps, rng = pf_init(c1, 300, seed=2)
    for y in [0, 1, 1, 0]:
        ps = pf_step(ps, c1, y, rng)
        assert ps.weights.sum() == pytest.approx(1.0, abs=1e-9)
        assert ps.N == 300


def test_estimate_examples():
    equal = ParticleSet(np.array([0, 0, 1]), np.full(3, 1 / 3))
    assert pf_estimate(equal) == pytest.approx([2 / 3, 1 / 3])
    skewed = ParticleSet(np.array([0, 1, 1]), np.array([1.0, 0.0, 0.0]))
    assert pf_estimate(skewed) == pytest.approx([1.0, 0.0])


def test_continuous_estimate_moments():
    ps = ParticleSet(np.array([[1.0, 0], [3.0, 1]]), np.array([0.25, 0.75]))
    mean, var = pf_estimate(ps)
    assert mean == pytest.approx(2.5) and var == pytest.approx(0.75)


def test_systematic_resampling_is_unbiased():
    w = np.array([0.05, 0.3, 0.15, 0.42, 0.08])
    N, reps = w.size, 10**4
    rng = np.random.default_rng(21)
    copies = np.zeros((reps, N))
    for r in range(reps):
        copies[r] = np.bincount(systematic_resample(w, rng), minlength=N)
    mean = copies.mean(axis=0)
    se = copies.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(mean - N * w) <= 3 * se + 1e-12)


def test_error_shrinks_with_more_particles(c1):
    _, ys = simulate(c1, 20, seed=4)
    exact = forward_filter(c1, ys).beliefs[-1]
    wins = 0
    for seed in range(20):
        small = tv_distance(pf_filter(c1, ys, 100, seed=seed, n_states=2)[-1], exact)
        big = tv_distance(pf_filter(c1, ys, 10**4, seed=seed, n_states=2)[-1], exact)
        wins += big < small
    assert wins > 10

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import UNIFORM
from powss.core import (
    WeightedParticleSet,
    check_belief,
    density_batch,
    exact_bayes_update,
    normalize_weights,
    particles_from_belief,
    sample_initial_particles,
    step_batch,
)
from powss.errors import ZeroLikelihood, ZeroTotalWeight
from powss.problems import CoTigerAction, CoTigerState, co_tiger

LISTEN, WAIT = CoTigerAction.LISTEN, CoTigerAction.WAIT

weights_st = st.lists(st.floats(0.0, 1e3, allow_nan=False), min_size=1, max_size=30).filter(
    lambda w: sum(w) > 1e-6
)


def test_initial_particles_tiger(tiger, rng):
    b = sample_initial_particles(tiger, 4, rng)
    assert len(b) == 4 and b.depth == 0
    assert set(b.states.tolist()) <= {CoTigerState.TIGER_L, CoTigerState.TIGER_R}
    assert np.all(b.weights == 0.25)


def test_initial_particles_single(chain, rng):
    b = sample_initial_particles(chain, 1, rng)
    assert len(b) == 1
    assert b.weights[0] == 1.0


def test_initial_particles_fraction(tiger, rng):
    b = sample_initial_particles(tiger, 10_000, rng)
    frac = np.mean(b.states == CoTigerState.TIGER_L)
    assert 0.47 <= frac <= 0.53


@given(st.integers(1, 500))
def test_initial_weights_exact(width):
    b = sample_initial_particles(co_tiger(), width, np.random.default_rng(width))
    assert np.all(b.weights == 1.0 / width)


def test_initial_particles_rejects_zero_width(tiger, rng):
    with pytest.raises(ValueError):
        sample_initial_particles(tiger, 0, rng)


@pytest.mark.parametrize(
    "weights, expected",
    [([2, 2], [0.5, 0.5]), ([1.7, 0.3], [0.85, 0.15])],
)
def test_normalize(weights, expected):
    b = normalize_weights(WeightedParticleSet([0, 1], weights))
    np.testing.assert_allclose(b.weights, expected, rtol=0, atol=1e-15)


def test_zero_total_weight():
    with pytest.raises(ZeroTotalWeight):
        WeightedParticleSet([0, 1], [0.0, 0.0])


@given(weights_st)
def test_normalize_idempotent_and_ratio_preserving(weights):
    b = WeightedParticleSet(np.arange(len(weights)), weights)
    once = normalize_weights(b)
    twice = normalize_weights(once)
    assert abs(once.weights.sum() - 1.0) <= 1e-9
    np.testing.assert_allclose(twice.weights, once.weights, rtol=1e-15, atol=1e-300)
    w = np.asarray(weights)
    i = int(np.argmax(w))
    np.testing.assert_allclose(once.weights * w[i], w * once.weights[i], rtol=1e-12, atol=1e-300)


def test_particle_set_iterates_pairs():
    b = WeightedParticleSet([3, 4], [0.25, 0.75], depth=2)
    assert list(b) == [(3, 0.25), (4, 0.75)]
    assert b.total_weight == 1.0


@pytest.mark.parametrize(
    "prior, action, obs, expected",
    [
        (UNIFORM, LISTEN, 0.3, [0.85, 0.15, 0.0]),
        (UNIFORM, WAIT, 0.7, [0.5, 0.5, 0.0]),
        ([0.85, 0.15, 0.0], LISTEN, 0.8, [0.5, 0.5, 0.0]),
    ],
)
def test_exact_bayes_examples(tiger, prior, action, obs, expected):
    np.testing.assert_allclose(exact_bayes_update(tiger, prior, action, obs), expected, atol=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from(list(CoTigerAction)))
def test_exact_bayes_preserves_simplex(p_left, obs, action):
    tiger = co_tiger()
    post = exact_bayes_update(tiger, [p_left, 1 - p_left, 0.0], action, obs)
    assert np.all(post >= 0)
    assert abs(post.sum() - 1.0) <= 1e-12


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_uninformative_action_keeps_prior(p_left, obs):
    tiger = co_tiger()
    prior = np.array([p_left, 1 - p_left, 0.0])
    np.testing.assert_allclose(exact_bayes_update(tiger, prior, WAIT, obs), prior, atol=1e-12)


def test_zero_likelihood():
    tiger = co_tiger()
    blind = dataclasses.replace(tiger, obs_density=lambda a, s, o: 0.0, obs_density_batch=None)
    with pytest.raises(ZeroLikelihood):
        exact_bayes_update(blind, UNIFORM, LISTEN, 0.2)


def test_check_belief_rejects_non_simplex():
    with pytest.raises(ValueError):
        check_belief([0.5, 0.6])
    with pytest.raises(ValueError):
        check_belief([1.5, -0.5])


def test_particles_from_belief(rng):
    b = particles_from_belief(np.array([0.0, 1.0, 0.0]), 7, rng)
    assert np.all(b.states == 1)
    assert np.all(b.weights == 1 / 7)


def test_scalar_fallback_matches_batched_density(tiger):
    scalar = dataclasses.replace(tiger, obs_density_batch=None, generative_batch=None)
    s = np.array([[0, 1, 2], [1, 0, 2]])
    o = np.array([[0.1, 0.7, 0.3], [0.5, 0.51, 0.9]])
    for a in CoTigerAction:
        np.testing.assert_array_equal(density_batch(scalar, a, s, o), density_batch(tiger, a, s, o))
    out = step_batch(scalar, s, LISTEN, np.random.default_rng(0))
    assert out.next_states.shape == s.shape
    np.testing.assert_array_equal(out.rewards, np.where(s == 2, 0.0, -2.0))


@settings(max_examples=25)
@given(st.integers(0, 2), st.sampled_from(list(CoTigerAction)), st.integers(0, 2**32))
def test_generative_rewards_bounded(state, action, seed):
    tiger = co_tiger()
    out = tiger.generative(state, action, np.random.default_rng(seed))
    assert abs(out.reward) <= tiger.r_max
    assert 0.0 <= out.observation <= 1.0

"""Bundled benchmark problems.

``co_tiger`` is the continuous-observation tiger problem: two doors, a tiger
behind one, and observations in ``[0, 1]``. Listening lands in the half of the
interval matching the tiger's side 85% of the time; waiting yields a uniform,
uninformative observation. Opening a door ends the episode, modelled here as
a move to an absorbing ``Done`` state that pays nothing and emits uniform
observations, so every particle weight stays strictly positive.

``chain_test`` is a one-state problem with a zero-reward and a unit-reward
action; its values are known in closed form for every solver and width.
"""
from __future__ import annotations

import enum

import numpy as np

from powss.core import BatchOutcome, GenerativeOutcome, IntervalBins, ProblemDefinition
from powss.errors import DomainError


class CoTigerState(enum.IntEnum):
    TIGER_L = 0
    TIGER_R = 1
    DONE = 2


class CoTigerAction(enum.IntEnum):
    OPEN_L = 0
    OPEN_R = 1
    WAIT = 2
    LISTEN = 3


LISTEN_ACCURACY = 0.85
TIGER_REWARD = 10.0
WAIT_REWARD = -1.0
LISTEN_REWARD = -2.0

# expected reward R[s, a]; rows TigerL, TigerR, Done
_TIGER_R = np.array(
    [
        [-TIGER_REWARD, TIGER_REWARD, WAIT_REWARD, LISTEN_REWARD],
        [TIGER_REWARD, -TIGER_REWARD, WAIT_REWARD, LISTEN_REWARD],
        [0.0, 0.0, 0.0, 0.0],
    ]
)


def _tiger_transition() -> np.ndarray:
    t = np.zeros((4, 3, 3))
    for a in (CoTigerAction.OPEN_L, CoTigerAction.OPEN_R):
        t[a, :, CoTigerState.DONE] = 1.0
    for a in (CoTigerAction.WAIT, CoTigerAction.LISTEN):
        t[a] = np.eye(3)
    return t


def co_tiger_obs_density(action, next_state, o):
    """Piecewise-uniform observation density of CO-tiger.

    Scalar or array arguments (broadcast together). Listening from ``TigerL``
    has density 1.7 on ``[0, 0.5]`` and 0.3 on ``(0.5, 1]``; ``TigerR`` is
    mirrored; everything else is uniform with density 1.
    """
    o_arr = np.asarray(o, dtype=float)
    if np.any((o_arr < 0.0) | (o_arr > 1.0)) or np.any(np.isnan(o_arr)):
        raise DomainError(f"CO-tiger observations lie in [0, 1], got {o}")
    s = np.asarray(next_state)
    if action != CoTigerAction.LISTEN:
        out = np.ones(np.broadcast(s, o_arr).shape)
    else:
        left_obs = o_arr <= 0.5
        hi, lo = 2 * LISTEN_ACCURACY, 2 * (1 - LISTEN_ACCURACY)
        out = np.where(
            s == CoTigerState.DONE,
            1.0,
            np.where((s == CoTigerState.TIGER_L) == left_obs, hi, lo),
        )
    return float(out) if out.ndim == 0 else out


def _tiger_step_batch(states, action, rng: np.random.Generator) -> BatchOutcome:
    states = np.asarray(states)
    shape = states.shape
    done = states == CoTigerState.DONE
    action = CoTigerAction(action)
    if action in (CoTigerAction.OPEN_L, CoTigerAction.OPEN_R):
        tiger_behind = CoTigerState.TIGER_L if action == CoTigerAction.OPEN_L else CoTigerState.TIGER_R
        rewards = np.where(states == tiger_behind, -TIGER_REWARD, TIGER_REWARD)
        rewards = np.where(done, 0.0, rewards)
        return BatchOutcome(
            np.full(shape, CoTigerState.DONE, dtype=states.dtype),
            rng.random(shape),
            rewards,
            np.ones(shape, dtype=bool),
        )
    if action == CoTigerAction.WAIT:
        obs = rng.random(shape)
        rewards = np.where(done, 0.0, WAIT_REWARD)
    else:
        correct = rng.random(shape) < LISTEN_ACCURACY
        u = rng.random(shape)
        left = (states == CoTigerState.TIGER_L) == correct
        # left bin [0, 0.5], right bin (0.5, 1]
        obs = np.where(left, 0.5 * u, 1.0 - 0.5 * u)
        obs = np.where(done, u, obs)
        rewards = np.where(done, 0.0, LISTEN_REWARD)
    return BatchOutcome(states.copy(), obs, rewards.astype(float), done.copy())


def _tiger_step(state, action, rng) -> GenerativeOutcome:
    out = _tiger_step_batch(np.array([state]), action, rng)
    return GenerativeOutcome(
        int(out.next_states[0]), float(out.observations[0]), float(out.rewards[0]), bool(out.terminal[0])
    )


def _tiger_initial(rng: np.random.Generator) -> int:
    return int(rng.integers(2))


def co_tiger(discount: float = 0.95, horizon: int = 3) -> ProblemDefinition:
    return ProblemDefinition(
        action_count=4,
        discount=discount,
        horizon=horizon,
        r_max=TIGER_REWARD,
        generative=_tiger_step,
        obs_density=co_tiger_obs_density,
        initial_sampler=_tiger_initial,
        lossless_obs_bins=IntervalBins((0.0, 0.5, 1.0)),
        state_count=3,
        transition=_tiger_transition(),
        reward_matrix=_TIGER_R.copy(),
        initial_belief=np.array([0.5, 0.5, 0.0]),
        generative_batch=_tiger_step_batch,
        obs_density_batch=co_tiger_obs_density,
        name="co-tiger",
        action_names=("open-left", "open-right", "wait", "listen"),
        state_names=("tiger-left", "tiger-right", "done"),
    )


def _chain_density(action, next_state, o):
    shape = np.broadcast(np.asarray(next_state), np.asarray(o)).shape
    return 1.0 if shape == () else np.ones(shape)


def _chain_step_batch(states, action, rng: np.random.Generator) -> BatchOutcome:
    states = np.asarray(states)
    return BatchOutcome(
        states.copy(),
        rng.random(states.shape),
        np.full(states.shape, float(action == 1)),
        np.zeros(states.shape, dtype=bool),
    )


def _chain_step(state, action, rng) -> GenerativeOutcome:
    return GenerativeOutcome(state, float(rng.random()), float(action == 1), False)


def _chain_initial(rng) -> int:
    return 0


def chain_test(discount: float = 0.5, horizon: int = 3) -> ProblemDefinition:
    """One state, action 0 pays 0 and action 1 pays 1; Q(a1) = sum of discount**d for d < horizon."""
    return ProblemDefinition(
        action_count=2,
        discount=discount,
        horizon=horizon,
        r_max=1.0,
        generative=_chain_step,
        obs_density=_chain_density,
        initial_sampler=_chain_initial,
        lossless_obs_bins=IntervalBins((0.0, 1.0)),
        state_count=1,
        transition=np.ones((2, 1, 1)),
        reward_matrix=np.array([[0.0, 1.0]]),
        initial_belief=np.array([1.0]),
        generative_batch=_chain_step_batch,
        obs_density_batch=_chain_density,
        name="chain",
        action_names=("a0", "a1"),
        state_names=("s0",),
    )


PROBLEMS = {"co-tiger": co_tiger, "chain": chain_test}


def get_problem(name: str) -> ProblemDefinition:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None

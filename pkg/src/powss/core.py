"""POMDP problem contract, weighted particle sets and the exact Bayes filter.

Problems expose a scalar generative model ``G(s, a, rng) -> (s', o, r, done)``
and an evaluable observation density ``Z(o | a, s')``. Planners work on whole
arrays of particles at once, so a problem may also supply vectorized versions
of both callables; :func:`step_batch` and :func:`density_batch` fall back to
element-wise loops over the scalar ones when it does not.

Finite-state problems can additionally carry a transition tensor, an expected
reward matrix and an initial belief, which enables QMDP, the exact filter and
the exhaustive oracle.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

from powss.errors import ZeroLikelihood, ZeroTotalWeight

State = Any


class GenerativeOutcome(NamedTuple):
    next_state: State
    observation: float
    reward: float
    terminal: bool


class BatchOutcome(NamedTuple):
    """Array-valued counterpart of :class:`GenerativeOutcome` (same shape as the input states)."""

    next_states: np.ndarray
    observations: np.ndarray
    rewards: np.ndarray
    terminal: np.ndarray


@dataclass(frozen=True)
class IntervalBins:
    """Partition of a real observation interval into bins ``[e0, e1], (e1, e2], ...``.

    The first bin is closed, every later bin is left-open, so a boundary value
    belongs to the bin on its left. ``cells`` yields one representative point
    and the Lebesgue measure of each bin; the partition is lossless when the
    observation density is constant within every bin.
    """

    edges: tuple[float, ...]

    def __post_init__(self):
        if len(self.edges) < 2 or any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("edges must be strictly increasing with at least two entries")

    def __call__(self, action: int, observation: float) -> int:
        idx = int(np.searchsorted(self.edges, observation, side="left")) - 1
        return min(max(idx, 0), len(self.edges) - 2)

    def cells(self, action: int) -> list[tuple[float, float]]:
        e = self.edges
        return [(0.5 * (lo + hi), hi - lo) for lo, hi in zip(e, e[1:])]


@dataclass(frozen=True)
class PointBins:
    """Discrete observations embedded as distinct reals (counting measure)."""

    values: tuple[float, ...]

    def __call__(self, action: int, observation: float) -> int:
        return self.values.index(observation)

    def cells(self, action: int) -> list[tuple[float, float]]:
        return [(v, 1.0) for v in self.values]


@dataclass(frozen=True)
class ProblemDefinition:
    """Everything a planner needs to know about a POMDP.

    :param generative: ``(state, action, rng) -> GenerativeOutcome``
    :param obs_density: ``(action, next_state, observation) -> Z(o | a, s')``
    :param initial_sampler: ``rng -> state`` drawing from the initial belief
    :param lossless_obs_bins: observation partition that loses no information
        (required by the exact oracle)
    :param transition: ``T[a, s, s']`` for finite-state problems
    :param reward_matrix: expected reward ``R[s, a]`` for finite-state problems
    :param initial_belief: initial belief over the finite states
    :param generative_batch: ``(states, action, rng) -> BatchOutcome``
    :param obs_density_batch: ``(action, next_states, observations) -> densities``,
        broadcasting its array arguments
    """

    action_count: int
    discount: float
    horizon: int
    r_max: float
    generative: Callable[[State, int, np.random.Generator], GenerativeOutcome]
    obs_density: Callable[[int, State, float], float]
    initial_sampler: Callable[[np.random.Generator], State]
    lossless_obs_bins: Optional[Any] = None
    state_count: Optional[int] = None
    transition: Optional[np.ndarray] = None
    reward_matrix: Optional[np.ndarray] = None
    initial_belief: Optional[np.ndarray] = None
    generative_batch: Optional[Callable[..., BatchOutcome]] = None
    obs_density_batch: Optional[Callable[..., np.ndarray]] = None
    name: str = "problem"
    action_names: Optional[tuple[str, ...]] = None
    state_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if self.action_count < 1:
            raise ValueError("action_count must be at least 1")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")

    @property
    def v_max(self) -> float:
        return self.r_max / (1.0 - self.discount)

    @property
    def is_finite(self) -> bool:
        return self.state_count is not None and self.transition is not None

    def action_name(self, action: int) -> str:
        if self.action_names is None:
            return f"a{action}"
        return self.action_names[action]

    def with_horizon(self, horizon: int) -> ProblemDefinition:
        return dataclasses.replace(self, horizon=horizon)


def step_batch(
    problem: ProblemDefinition, states: np.ndarray, action: int, rng: np.random.Generator
) -> BatchOutcome:
    """Draw one generative outcome per entry of ``states``."""
    states = np.asarray(states)
    if problem.generative_batch is not None:
        return problem.generative_batch(states, action, rng)
    flat = states.reshape(-1)
    outs = [problem.generative(s, action, rng) for s in flat]
    nxt = np.empty(flat.shape, dtype=states.dtype)
    nxt[:] = [o.next_state for o in outs] if outs else []
    shape = states.shape
    return BatchOutcome(
        nxt.reshape(shape),
        np.array([o.observation for o in outs], dtype=float).reshape(shape),
        np.array([o.reward for o in outs], dtype=float).reshape(shape),
        np.array([o.terminal for o in outs], dtype=bool).reshape(shape),
    )


def density_batch(
    problem: ProblemDefinition, action: int, next_states: np.ndarray, observations: np.ndarray
) -> np.ndarray:
    """Evaluate ``Z(o | a, s')`` with numpy broadcasting between the two arrays."""
    if problem.obs_density_batch is not None:
        return problem.obs_density_batch(action, next_states, observations)
    s, o = np.broadcast_arrays(np.asarray(next_states), np.asarray(observations, dtype=float))
    out = np.empty(s.shape, dtype=float)
    for idx in np.ndindex(s.shape):
        out[idx] = problem.obs_density(action, s[idx], float(o[idx]))
    return out


class WeightedParticleSet:
    """Belief particle set: ordered ``(state, weight)`` pairs at a tree depth.

    States and weights are kept as parallel numpy arrays.
    """

    __slots__ = ("states", "weights", "depth")

    def __init__(self, states, weights, depth: int = 0):
        self.states = np.asarray(states)
        self.weights = np.asarray(weights, dtype=float)
        self.depth = depth
        if self.states.shape[:1] != self.weights.shape:
            raise ValueError("states and weights must have the same length")
        if self.weights.size == 0:
            raise ValueError("a particle set needs at least one particle")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")
        if self.weights.sum() <= 0:
            raise ZeroTotalWeight("particle weights sum to zero")

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __iter__(self) -> Iterator[tuple[State, float]]:
        return iter(zip(self.states.tolist(), self.weights.tolist()))

    def __repr__(self) -> str:
        return f"WeightedParticleSet(n={len(self)}, depth={self.depth})"

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def sample_initial_particles(
    problem: ProblemDefinition, width: int, rng: np.random.Generator
) -> WeightedParticleSet:
    """Draw ``width`` particles from the initial belief, each with weight ``1/width``."""
    if width < 1:
        raise ValueError(f"width must be at least 1, got {width}")
    states = [problem.initial_sampler(rng) for _ in range(width)]
    return WeightedParticleSet(np.asarray(states), np.full(width, 1.0 / width), depth=0)


def particles_from_belief(
    belief: np.ndarray, width: int, rng: np.random.Generator
) -> WeightedParticleSet:
    """Draw ``width`` equally weighted particles from a finite-state belief vector."""
    belief = check_belief(belief)
    states = rng.choice(belief.shape[0], size=width, p=belief)
    return WeightedParticleSet(states, np.full(width, 1.0 / width), depth=0)


def normalize_weights(particles: WeightedParticleSet) -> WeightedParticleSet:
    total = particles.weights.sum()
    if total <= 0:
        raise ZeroTotalWeight("cannot normalize a particle set with zero total weight")
    return WeightedParticleSet(particles.states, particles.weights / total, particles.depth)


def check_belief(belief: Sequence[float], atol: float = 1e-12) -> np.ndarray:
    """Validate an exact belief vector (nonnegative, sums to one) and return it as an array."""
    b = np.asarray(belief, dtype=float)
    if b.ndim != 1 or np.any(b < 0) or abs(b.sum() - 1.0) > atol:
        raise ValueError(f"not a probability vector: {b}")
    return b


def _require_finite(problem: ProblemDefinition):
    if not problem.is_finite:
        raise ValueError(f"{problem.name} has no finite state space / transition model")


def predict(problem: ProblemDefinition, belief: np.ndarray, action: int) -> np.ndarray:
    """Push a belief through the transition model: ``sum_s T(s'|s,a) b(s)``."""
    _require_finite(problem)
    return belief @ problem.transition[action]


def exact_bayes_update(
    problem: ProblemDefinition, belief: Sequence[float], action: int, observation: float
) -> np.ndarray:
    """Exact posterior ``b'(s') ∝ Z(o|a,s') sum_s T(s'|s,a) b(s)``.

    :raises ZeroLikelihood: if no successor state can emit ``observation``
    """
    b = check_belief(belief)
    prior = predict(problem, b, action)
    like = density_batch(problem, action, np.arange(problem.state_count), observation)
    post = like * prior
    total = post.sum()
    if total <= 0:
        raise ZeroLikelihood(
            f"observation {observation!r} has zero likelihood after action {action}"
        )
    return post / total

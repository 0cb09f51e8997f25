"""Sparse-sampling tree search over belief particle sets: POSS and POWSS.

Both planners share the recursion

    V(b, d) = 0                            if d >= D
    V(b, d) = max_a Q(b, a, d)             otherwise

and differ in how ``Q`` builds the child belief for each sampled observation:

* POSS groups next states whose sampled observations are exactly equal and
  averages with unit weights. With continuous observations every child holds
  a single particle, so the continuation is evaluated as if the state were
  known (the QMDP value).
* POWSS keeps all ``C`` next states in every child, reweighting particle ``i``
  by ``w_i * Z(o_j | a, s'_i)`` for the observation ``o_j`` that spawned the
  child, and averages with self-normalized weights.

The tree is expanded one level at a time: all nodes at a depth form a batch
``(B, C)`` of particle states and weights, and each node still receives its
own independent generative draws. The random stream is consumed level by
level in action order, so results are a deterministic function of the seed.
"""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from powss.core import (
    ProblemDefinition,
    WeightedParticleSet,
    density_batch,
    sample_initial_particles,
    step_batch,
)
from powss.errors import ZeroTotalWeight

# cap on B * C * C elements materialized per batched call
MAX_BATCH_ELEMENTS = 4_000_000


class SolverKind(str, enum.Enum):
    POSS = "poss"
    POWSS = "powss"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    width: int
    solver_kind: SolverKind
    discount: float
    horizon: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"width must be at least 1, got {self.width}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        object.__setattr__(self, "solver_kind", SolverKind(self.solver_kind))

    @classmethod
    def for_problem(cls, problem: ProblemDefinition, solver_kind, width: int, horizon=None):
        return cls(
            width=width,
            solver_kind=SolverKind(solver_kind),
            discount=problem.discount,
            horizon=problem.horizon if horizon is None else horizon,
        )


@dataclass(frozen=True)
class QEstimates:
    per_action: np.ndarray
    best_action: int
    value: float

    @classmethod
    def from_values(cls, q) -> QEstimates:
        q = np.asarray(q, dtype=float)
        best = int(np.argmax(q))  # first maximum: ties go to the lowest index
        return cls(per_action=q, best_action=best, value=float(q[best]))


@dataclass
class TreeTrace:
    """Optional instrumentation filled in while a tree is expanded.

    ``child_sizes[d]`` lists the number of distinct particles in every belief
    set built at depth ``d``; ``q_range[d]`` tracks the smallest and largest
    Q estimate seen there; ``collisions`` counts POSS observations that matched
    an earlier observation of the same node.
    """

    child_sizes: dict = field(default_factory=lambda: defaultdict(list))
    q_range: dict = field(default_factory=dict)
    collisions: int = 0
    nodes: dict = field(default_factory=lambda: defaultdict(int))

    def _sizes(self, depth, sizes):
        self.child_sizes[depth].append(np.asarray(sizes, dtype=int).ravel())

    def _q(self, depth, q):
        lo, hi = float(np.min(q)), float(np.max(q))
        old = self.q_range.get(depth)
        self.q_range[depth] = (lo, hi) if old is None else (min(old[0], lo), max(old[1], hi))
        self.nodes[depth] += q.shape[0]

    def all_child_sizes(self, depth) -> np.ndarray:
        parts = self.child_sizes.get(depth, [])
        return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


class _TreeExpander:
    def __init__(
        self,
        problem: ProblemDefinition,
        config: SolverConfig,
        rng: np.random.Generator,
        trace: Optional[TreeTrace] = None,
    ):
        self.problem = problem
        self.config = config
        self.rng = rng
        self.trace = trace
        self.weighted = config.solver_kind is SolverKind.POWSS

    def value(self, states: np.ndarray, weights: np.ndarray, depth: int) -> np.ndarray:
        if depth >= self.config.horizon:
            return np.zeros(states.shape[0])
        q = np.stack(
            [self.q_value(states, weights, a, depth) for a in range(self.problem.action_count)],
            axis=1,
        )
        return q.max(axis=1)

    def q_value(self, states, weights, action: int, depth: int) -> np.ndarray:
        b, c = weights.shape
        chunk = max(1, MAX_BATCH_ELEMENTS // (c * c))
        if b > chunk:
            return np.concatenate(
                [
                    self.q_value(states[i : i + chunk], weights[i : i + chunk], action, depth)
                    for i in range(0, b, chunk)
                ]
            )
        out = step_batch(self.problem, states, action, self.rng)
        if depth + 1 >= self.config.horizon:
            # children would only feed V = 0 at the horizon
            cont = 0.0
        elif self.weighted:
            cont = self._powss_children(out, weights, action, depth)
        else:
            cont = self._poss_children(out, depth)
        returns = out.rewards + self.config.discount * cont
        # rescale by the row max: uniform weights become exactly 1
        w = weights / weights.max(axis=1, keepdims=True)
        q = np.einsum("bc,bc->b", w, returns) / w.sum(axis=1)
        if self.trace is not None:
            self.trace._q(depth, q)
        return q

    def _powss_children(self, out, weights, action, depth) -> np.ndarray:
        b, c = weights.shape
        nxt, obs = out.next_states, out.observations
        # z[b, j, i] = Z(o_j | a, s'_i)
        z = density_batch(self.problem, action, nxt[:, None, :], obs[:, :, None])
        child_w = (weights[:, None, :] * z).reshape(b * c, c)
        if np.any(child_w.sum(axis=1) <= 0):
            raise ZeroTotalWeight(
                f"a POWSS child at depth {depth + 1} has zero total weight (action {action})"
            )
        child_s = np.broadcast_to(nxt[:, None, :], (b, c, c)).reshape(b * c, c)
        if self.trace is not None:
            self.trace._sizes(depth + 1, np.full(b * c, c))
        return self.value(child_s, child_w, depth + 1).reshape(b, c)

    def _poss_children(self, out, depth) -> np.ndarray:
        nxt, obs = out.next_states, out.observations
        b, c = obs.shape
        same = obs[:, :, None] == obs[:, None, :]
        first = same.argmax(axis=2)  # earliest index sharing each observation
        is_rep = first == np.arange(c)
        rb, ri = np.nonzero(is_rep)
        members = same[rb, ri]
        k = members.sum(axis=1)
        # member indices in original order, reused cyclically to fill C slots
        order = np.argsort(~members, axis=1, kind="stable")
        slots = np.arange(c)[None, :] % k[:, None]
        pick = np.take_along_axis(order, slots, axis=1)
        child_s = nxt[rb[:, None], pick]
        if self.trace is not None:
            self.trace._sizes(depth + 1, k)
            self.trace.collisions += int(b * c - rb.size)
        v_rep = self.value(child_s, np.ones(child_s.shape), depth + 1)
        slot_of = np.full((b, c), -1)
        slot_of[rb, ri] = np.arange(rb.size)
        return v_rep[slot_of[np.arange(b)[:, None], first]]


def _root_arrays(particles: WeightedParticleSet, config: SolverConfig):
    c = config.width
    if config.solver_kind is SolverKind.POWSS:
        if len(particles) != c:
            raise ValueError(f"POWSS expects exactly C={c} particles, got {len(particles)}")
        return particles.states[None, :], particles.weights[None, :]
    idx = np.arange(c) % len(particles)
    return particles.states[idx][None, :], np.ones((1, c))


def estimate_q(
    problem: ProblemDefinition,
    config: SolverConfig,
    particles: WeightedParticleSet,
    action: int,
    depth: int,
    rng: np.random.Generator,
    trace: Optional[TreeTrace] = None,
) -> float:
    """Q estimate of one action at one belief node, using the configured planner."""
    if depth >= config.horizon:
        raise ValueError(f"depth {depth} is not below the horizon {config.horizon}")
    states, weights = _root_arrays(particles, config)
    return float(_TreeExpander(problem, config, rng, trace).q_value(states, weights, action, depth)[0])


def poss_estimate_q(problem, config, particles, action, depth, rng, trace=None) -> float:
    if config.solver_kind is not SolverKind.POSS:
        raise ValueError("config is not a POSS config")
    return estimate_q(problem, config, particles, action, depth, rng, trace)


def powss_estimate_q(problem, config, particles, action, depth, rng, trace=None) -> float:
    if config.solver_kind is not SolverKind.POWSS:
        raise ValueError("config is not a POWSS config")
    return estimate_q(problem, config, particles, action, depth, rng, trace)


def estimate_v(
    problem: ProblemDefinition,
    config: SolverConfig,
    particles: WeightedParticleSet,
    depth: int,
    rng: np.random.Generator,
    trace: Optional[TreeTrace] = None,
) -> float:
    if depth >= config.horizon:
        return 0.0
    states, weights = _root_arrays(particles, config)
    return float(_TreeExpander(problem, config, rng, trace).value(states, weights, depth)[0])


def select_action(
    problem: ProblemDefinition,
    config: SolverConfig,
    rng: np.random.Generator,
    particles: Optional[WeightedParticleSet] = None,
    trace: Optional[TreeTrace] = None,
) -> QEstimates:
    """Plan from the initial belief (or from ``particles``) and return all root Q estimates.

    Root actions are expanded in index order from one shared particle set.
    """
    if particles is None:
        particles = sample_initial_particles(problem, config.width, rng)
    if config.horizon < 1:
        return QEstimates.from_values(np.zeros(problem.action_count))
    states, weights = _root_arrays(particles, config)
    expander = _TreeExpander(problem, config, rng, trace)
    q = [expander.q_value(states, weights, a, 0)[0] for a in range(problem.action_count)]
    return QEstimates.from_values(q)

"""Exact finite-horizon values for finite-state problems.

``qmdp_q_values`` solves the fully observable relaxation by backward induction
and averages it under the belief. ``exact_q_values`` is the optimal-value
oracle: exhaustive expectimax over actions and lossless observation bins with
exact Bayesian belief updates.
"""
from __future__ import annotations

import numpy as np

from powss.core import ProblemDefinition, check_belief, density_batch
from powss.errors import IntractableSize

DEFAULT_NODE_BUDGET = 10**8


def _require_model(problem: ProblemDefinition):
    if not problem.is_finite or problem.reward_matrix is None:
        raise ValueError(f"{problem.name} does not provide a finite transition/reward model")


def mdp_q_table(problem: ProblemDefinition, depth: int = 0) -> np.ndarray:
    """Optimal fully observable ``Q_depth(s, a)`` for the remaining ``horizon - depth`` steps."""
    _require_model(problem)
    t, r = problem.transition, problem.reward_matrix
    v = np.zeros(problem.state_count)
    q = np.array(r, dtype=float)
    for _ in range(max(problem.horizon - depth, 0)):
        # q[s, a] = R[s, a] + gamma * sum_s' T[a, s, s'] V[s']
        q = r + problem.discount * np.einsum("ast,t->sa", t, v)
        v = q.max(axis=1)
    if problem.horizon - depth <= 0:
        q = np.zeros_like(q)
    return q


def qmdp_q_values(problem: ProblemDefinition, belief, depth: int = 0) -> np.ndarray:
    b = check_belief(belief)
    return b @ mdp_q_table(problem, depth)


def _cells(problem: ProblemDefinition, action: int):
    bins = problem.lossless_obs_bins
    if bins is None:
        raise ValueError(f"{problem.name} has no lossless observation bins")
    return bins.cells(action)


def tree_size(problem: ProblemDefinition, depth: int) -> int:
    """Number of (action, observation-bin) branches the oracle would expand."""
    width = max(problem.action_count * len(_cells(problem, a)) for a in range(problem.action_count))
    return width ** max(problem.horizon - depth, 0)


class _Oracle:
    def __init__(self, problem: ProblemDefinition):
        self.problem = problem
        self.states = np.arange(problem.state_count)
        # likelihood of each bin's representative observation for every successor state
        self.bin_like = [
            [
                (measure, np.asarray(density_batch(problem, a, self.states, rep), dtype=float))
                for rep, measure in _cells(problem, a)
            ]
            for a in range(problem.action_count)
        ]

    def q(self, belief: np.ndarray, depth: int) -> np.ndarray:
        p = self.problem
        out = belief @ p.reward_matrix
        if depth + 1 >= p.horizon:
            return out
        for a in range(p.action_count):
            pred = belief @ p.transition[a]
            cont = 0.0
            for measure, like in self.bin_like[a]:
                joint = like * pred
                mass = joint.sum()
                if mass > 0:
                    cont += measure * mass * self.q(joint / mass, depth + 1).max()
            out[a] += p.discount * cont
        return out


def exact_q_values(
    problem: ProblemDefinition, belief, depth: int = 0, node_budget: int = DEFAULT_NODE_BUDGET
) -> np.ndarray:
    """Optimal ``Q*_depth(b, a)`` for every action.

    :raises IntractableSize: if the expectimax tree exceeds ``node_budget`` branches
    """
    _require_model(problem)
    b = check_belief(belief)
    if depth >= problem.horizon:
        return np.zeros(problem.action_count)
    size = tree_size(problem, depth)
    if size > node_budget:
        raise IntractableSize(f"oracle tree has {size} branches (budget {node_budget})")
    return _Oracle(problem).q(b, depth)


def exact_value(problem: ProblemDefinition, belief, depth: int = 0) -> float:
    return float(exact_q_values(problem, belief, depth).max()) if depth < problem.horizon else 0.0

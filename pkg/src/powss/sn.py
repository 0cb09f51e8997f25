"""Self-normalized importance sampling and the concentration bounds built on it.

The self-normalized (SN) estimator of ``E_P[f]`` from draws ``x_i ~ Q`` is
``sum_i w_i f(x_i) / sum_i w_i`` with ``w_i ∝ P(x_i)/Q(x_i)``. Its error is
controlled by the infinite Rényi divergence ``d_inf = ess sup P/Q``:

* bias at most ``||f||_inf * d_inf / sqrt(N)``
* ``|E_P[f] - estimate| <= lam`` with probability at least ``1 - 3 exp(-N t^2)``
  where ``t = lam / (||f||_inf d_inf) - 1/sqrt(N)`` must be positive.

:func:`theorem2_constants` turns a target accuracy ``epsilon`` for the root
Q-values of the weighted sparse-sampling planner into the accuracy per node,
the failure probability and the smallest tree width that provably achieves it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from powss.errors import InvalidRegime, LengthMismatch, ZeroTotalWeight


def sn_estimate(weights, values) -> float:
    """Self-normalized weighted mean ``sum w f / sum w``."""
    w = np.asarray(weights, dtype=float)
    f = np.asarray(values, dtype=float)
    if w.shape != f.shape or w.ndim != 1:
        raise LengthMismatch(f"weights {w.shape} and values {f.shape} differ")
    if w.size == 0:
        raise LengthMismatch("need at least one sample")
    total = w.sum()
    if total <= 0:
        raise ZeroTotalWeight("importance weights sum to zero")
    est = float(np.dot(w, f) / total)
    # rounding can push a convex combination a hair outside the hull
    return min(max(est, float(f.min())), float(f.max()))


def sn_bias_bound(f_inf: float, d_inf: float, n: int) -> float:
    return f_inf * d_inf / math.sqrt(n)


def concentration_t(lam: float, n: int, f_inf: float, d_inf: float) -> float:
    """``t(lam, N)``; nonpositive values mean the bound does not apply."""
    return lam / (f_inf * d_inf) - 1.0 / math.sqrt(n)


def concentration_failure_bound(lam: float, n: int, f_inf: float, d_inf: float) -> float:
    """Upper bound ``3 exp(-N t^2)`` on ``P(|E_P[f] - estimate| > lam)``.

    May exceed 1; callers clamp for reporting.

    :raises InvalidRegime: when ``t(lam, N) <= 0``
    """
    t = concentration_t(lam, n, f_inf, d_inf)
    if t <= 0:
        raise InvalidRegime(
            f"t(lambda={lam}, N={n}) = {t:.6g} <= 0: need N > (f_inf*d_inf/lambda)^2"
        )
    return 3.0 * math.exp(-n * t * t)


def empirical_d_inf(raw_weights) -> float:
    """Observed ``N max(w) / sum(w)``; a lower-bound proxy for the essential supremum."""
    w = np.asarray(raw_weights, dtype=float)
    if w.size == 0:
        raise ValueError("need at least one weight")
    total = w.sum()
    if total <= 0:
        raise ZeroTotalWeight("weights sum to zero")
    return float(w.size * w.max() / total)


@dataclass(frozen=True)
class BoundsReport:
    """Constants guaranteeing ``epsilon``-accurate POWSS root Q-values.

    ``alpha_sequence[d]`` is the error budget at depth ``d``.
    """

    epsilon: float
    gamma: float
    r_max: float
    depth: int
    action_count: int
    lam: float
    delta: float
    v_max: float
    d_inf_max: float
    min_width: int
    t_max: float
    alpha_sequence: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "r_max": self.r_max,
            "depth": self.depth,
            "action_count": self.action_count,
            "lambda": self.lam,
            "delta": self.delta,
            "v_max": self.v_max,
            "d_inf_max": self.d_inf_max,
            "min_width": self.min_width,
            "t_max": self.t_max,
            "alpha_sequence": list(self.alpha_sequence),
        }


def t_max(lam: float, width: int, v_max: float, d_inf_max: float) -> float:
    return lam / (3.0 * v_max * d_inf_max) - 1.0 / math.sqrt(width)


def log_failure_probability(
    width: int, lam: float, v_max: float, d_inf_max: float, depth: int, action_count: int
) -> float:
    """``log(3|A| (3|A|C)^D exp(-C t_max^2))``, evaluated in log space to avoid overflow."""
    t = t_max(lam, width, v_max, d_inf_max)
    a = action_count
    return math.log(3 * a) + depth * math.log(3 * a * width) - width * t * t


def width_threshold(lam: float, v_max: float, d_inf_max: float) -> int:
    """Smallest integer C with ``C > (3 V_max d_inf / lam)^2``, i.e. ``t_max > 0``."""
    bound = (3.0 * v_max * d_inf_max / lam) ** 2
    c = math.floor(bound) + 1
    while t_max(lam, c, v_max, d_inf_max) <= 0:  # float rounding at the boundary
        c += 1
    return c


def _satisfied(c, lam, v_max, d_inf_max, depth, action_count, log_delta) -> bool:
    return log_failure_probability(c, lam, v_max, d_inf_max, depth, action_count) <= log_delta


def min_width(lam, delta, v_max, d_inf_max, depth, action_count) -> int:
    """Smallest width meeting both the validity threshold and the failure-probability target.

    Past the threshold the log failure bound rises and then falls monotonically,
    so doubling until satisfied and then bisecting finds the first crossing.
    """
    log_delta = math.log(delta)
    args = (lam, v_max, d_inf_max, depth, action_count, log_delta)
    lo = width_threshold(lam, v_max, d_inf_max)
    if _satisfied(lo, *args):
        return lo
    hi = lo
    step = max(lo, 1)
    while not _satisfied(hi, *args):
        lo = hi
        hi = hi + step
        step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _satisfied(mid, *args):
            hi = mid
        else:
            lo = mid
    return hi


def alpha_sequence(lam: float, gamma: float, depth: int) -> list[float]:
    """Per-depth error budgets: ``alpha[D-1] = lam``, ``alpha[d] = lam + gamma * alpha[d+1]``."""
    alphas = [0.0] * depth
    nxt = None
    for d in reversed(range(depth)):
        alphas[d] = lam if nxt is None else lam + gamma * nxt
        nxt = alphas[d]
    return alphas


def theorem2_constants(
    epsilon: float,
    gamma: float,
    r_max: float,
    depth: int,
    action_count: int,
    d_inf_max: float,
) -> BoundsReport:
    """Constants for which all POWSS Q estimates are within ``lam/(1-gamma)`` w.p. ``1-delta``.

    ``d_inf_max`` is caller supplied; for CO-tiger it can be read per step (1.7)
    or compounded over the tree depth (1.7**D), and the report simply uses
    whatever is passed.
    """
    if epsilon <= 0 or r_max <= 0 or depth < 1 or action_count < 1:
        raise ValueError("epsilon, r_max, depth and action_count must be positive")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    if d_inf_max < 1.0:
        raise ValueError("d_inf_max is at least 1 for any pair of probability measures")
    one_minus = 1.0 - gamma
    v_max = r_max / one_minus
    lam = epsilon * one_minus**2 / 5.0
    delta = lam / (v_max * depth * one_minus**2)
    width = min_width(lam, delta, v_max, d_inf_max, depth, action_count)
    return BoundsReport(
        epsilon=epsilon,
        gamma=gamma,
        r_max=r_max,
        depth=depth,
        action_count=action_count,
        lam=lam,
        delta=delta,
        v_max=v_max,
        d_inf_max=d_inf_max,
        min_width=width,
        t_max=t_max(lam, width, v_max, d_inf_max),
        alpha_sequence=alpha_sequence(lam, gamma, depth),
    )

"""Preferred order on queue vectors, monotone cost functions, and an
empirical stochastic-dominance comparison between two policies."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .sim import SCHEMA_VERSION, ExperimentConfig, run_seeds

NODE_BUDGET = 10**6


@dataclass(frozen=True)
class CostFunction:
    """A cost on queue-indexed vectors; index 0 (dummy) is ignored."""

    name: str
    fn: Callable[[Sequence[int]], float]

    def __call__(self, x: Sequence[int]) -> float:
        return self.fn(x)


TOTAL = CostFunction("total", lambda x: sum(x[1:]))
MAXIMUM = CostFunction("max", lambda x: max(x[1:]))
COSTS: Dict[str, CostFunction] = {c.name: c for c in (TOTAL, MAXIMUM)}


def _moves(v: Tuple[int, ...]):
    n = len(v)
    for i in range(n):
        if v[i] > 0:
            w = list(v)
            w[i] -= 1
            yield tuple(w)
    for i in range(n):
        for j in range(i + 1, n):
            if v[i] != v[j]:
                w = list(v)
                w[i], w[j] = w[j], w[i]
                yield tuple(w)
    # a unit from i > 0 to any j (including 0) when v_i >= v_j + 1
    for i in range(1, n):
        for j in range(n):
            if i != j and v[i] >= v[j] + 1:
                w = list(v)
                w[i] -= 1
                w[j] += 1
                yield tuple(w)


def reachable(x: Sequence[int], budget: int = NODE_BUDGET, floor_total: int = 0, floor_max: int = 0) -> Tuple[Set[Tuple[int, ...]], bool]:
    """Vectors reachable from ``x`` by reductions, swaps and balancing moves.

    Nodes whose total or maximum fall below the floors are not expanded (no
    move increases either).  Returns the visited set and whether it is
    complete (False when the budget ran out).
    """
    start = tuple(int(v) for v in x)
    seen = {start}
    frontier = deque([start])
    while frontier:
        v = frontier.popleft()
        for w in _moves(v):
            if w in seen or sum(w) < floor_total or max(w) < floor_max:
                continue
            if len(seen) >= budget:
                return seen, False
            seen.add(w)
            frontier.append(w)
    return seen, True


def preferred_leq(xt: Sequence[int], x: Sequence[int], budget: int = NODE_BUDGET) -> Optional[bool]:
    """Whether ``xt`` is preferred to ``x``; None when the search budget runs out."""
    if len(xt) != len(x):
        raise ValueError("vectors differ in length")
    if any(v < 0 for v in (*xt, *x)):
        raise ValueError("entries must be nonnegative")
    target = tuple(int(v) for v in xt)
    if sum(target) > sum(x) or max(target) > max(x):
        return False
    seen, complete = reachable(x, budget, floor_total=sum(target), floor_max=max(target))
    if target in seen:
        return True
    return False if complete else None


# ---------------------------------------------------------------------------
# empirical dominance

DEFAULT_QUANTILES = tuple(round(0.05 * k, 2) for k in range(1, 20))


@dataclass(frozen=True)
class DominanceReport:
    policy_a: str
    policy_b: str
    cost: str
    times: Tuple[int, ...]
    quantile_levels: Tuple[float, ...]
    quantiles_a: Tuple[Tuple[float, ...], ...]
    quantiles_b: Tuple[Tuple[float, ...], ...]
    tolerance: float
    threshold: float
    config: dict

    @property
    def points(self) -> int:
        return len(self.times) * len(self.quantile_levels)

    @property
    def fraction(self) -> float:
        """Share of (t, level) points where A's quantile is at most B's plus the tolerance."""
        ok = sum(
            a <= b + self.tolerance
            for qa, qb in zip(self.quantiles_a, self.quantiles_b)
            for a, b in zip(qa, qb)
        )
        return ok / self.points

    @property
    def identical(self) -> bool:
        return self.quantiles_a == self.quantiles_b

    @property
    def passed(self) -> bool:
        return self.fraction >= self.threshold

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "policy_a": self.policy_a,
            "policy_b": self.policy_b,
            "cost": self.cost,
            "config": self.config,
            "times": list(self.times),
            "quantile_levels": list(self.quantile_levels),
            "quantiles_a": [list(r) for r in self.quantiles_a],
            "quantiles_b": [list(r) for r in self.quantiles_b],
            "comparison": {
                "statistic": "fraction of (t, level) points with quantile_a <= quantile_b + tolerance",
                "tolerance": self.tolerance,
                "threshold": self.threshold,
                "threshold_origin": "calibration choice, not a finite-sample test",
                "fraction": self.fraction,
                "passed": self.passed,
                "identical": self.identical,
            },
            "note": "empirical evidence at finite horizon and seed count; not a proof of stochastic ordering",
        }


def _sample_times(horizon: int, count: int) -> Tuple[int, ...]:
    count = min(count, horizon)
    return tuple(sorted({int(round(horizon * (k + 1) / count)) for k in range(count)}))


def _cost_quantiles(cfg: ExperimentConfig, f: CostFunction, times, levels, jobs: int):
    runs = run_seeds(cfg, keep_states=True, jobs=jobs)
    out = []
    for t in times:
        # X(t) is the state at the start of slot t
        vals = [f(np.concatenate(([0], r.states[t - 1])).tolist()) for r in runs]
        out.append(tuple(float(v) for v in np.quantile(vals, levels, method="inverted_cdf")))
    return tuple(out)


def empirical_dominance(
    policy_a: str,
    policy_b: str,
    f: CostFunction,
    cfg: ExperimentConfig,
    n_times: int = 50,
    levels: Sequence[float] = DEFAULT_QUANTILES,
    tolerance: float = 0.0,
    threshold: float = 0.99,
    jobs: int = 1,
) -> DominanceReport:
    """Compare ``f(X(t))`` under two policies on common random numbers.

    Both policies see the same seeds, hence the same connectivity and
    arrival sequences.  A weakly dominates B at a point when its empirical
    quantile is no larger than B's.
    """
    if cfg.horizon < 1 or not cfg.seeds:
        raise ValueError("dominance needs a positive horizon and at least one seed")
    times = _sample_times(cfg.horizon, n_times)
    levels = tuple(levels)
    qa = _cost_quantiles(cfg.with_policy(policy_a), f, times, levels, jobs)
    qb = _cost_quantiles(cfg.with_policy(policy_b), f, times, levels, jobs)
    config = cfg.to_dict()
    config.pop("policy")
    return DominanceReport(policy_a, policy_b, f.name, times, levels, qa, qb, tolerance, threshold, config)

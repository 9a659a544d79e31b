"""Per-slot scheduling policies.

Every policy maps ``(x, g, rng)`` to a scheduling control ``q`` (one queue
index per server, 0 = idle).  ``x`` and ``g`` are queue-indexed with the
dummy queue at index 0; they may be tuples from a :class:`SystemState` or the
plain lists the simulator passes around.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import SystemState, Vector, withdrawal_from_schedule
from .interchange import reallocation_tree
from .imbalance import kappa, updated_queue_sizes

ENUMERATION_CAP = 10**8
# per-slot candidate controls scored as one dense table; more fall back to a pruned DFS
TABLE_ROWS = 1 << 17


class EnumerationCapExceeded(ValueError):
    def __init__(self, queues: int, servers: int, cap: int):
        self.candidates = (queues + 1) ** servers
        super().__init__(
            f"(L+1)^K = {queues + 1}^{servers} = {self.candidates} controls exceeds the "
            f"enumeration cap {cap}; shrink L or K for brute-force policies"
        )


Kernel = Callable[[Sequence[int], Sequence[Sequence[int]], Optional[np.random.Generator]], List[int]]


@dataclass(frozen=True)
class Policy:
    name: str
    kernel: Kernel
    deterministic: bool = True

    def __call__(self, s: SystemState, rng: Optional[np.random.Generator] = None) -> Tuple[Vector, Vector]:
        q = tuple(self.kernel(s.x, s.g, rng))
        return withdrawal_from_schedule(q, s.queues), q


# ---------------------------------------------------------------------------
# brute force


def _check_cap(queues: int, servers: int, cap: int) -> None:
    if (queues + 1) ** servers > cap:
        raise EnumerationCapExceeded(queues, servers, cap)


def _candidates(x, g, queues: int, servers: int) -> List[List[int]]:
    """Per server, the dummy plus connected nonempty queues, ascending."""
    return [[i for i in range(queues + 1) if g[i][j] and (i == 0 or x[i] > 0)] for j in range(servers)]


def _table_scores(x, choices, queues: int):
    """Controls from the per-server choices (lexicographic), with feasibility, served count and kappa."""
    q = np.array(list(itertools.product(*choices)), dtype=np.int64)
    rows = np.arange(len(q))
    y = np.zeros((len(q), queues + 1), dtype=np.int64)
    for j in range(q.shape[1]):
        y[rows, q[:, j]] += 1
    xs = np.asarray(x, dtype=np.int64)
    ok = (y[:, 1:] <= xs[1:]).all(axis=1)
    xhat = xs - y
    real = -np.sort(-xhat[:, 1:], axis=1)
    weights = queues + 2 - 2 * np.arange(1, queues + 1)
    kap = real @ weights - queues * xhat[:, 0]
    return q, ok, q.shape[1] - y[:, 0], kap


def feasible_controls(x: Sequence[int], g: Sequence[Sequence[int]]):
    """Yield every feasible control in lexicographic order (pruned DFS)."""
    queues, servers = len(x) - 1, len(g[0])
    choices = [[i for i in range(queues + 1) if g[i][j]] for j in range(servers)]
    used = [0] * (queues + 1)
    q = [0] * servers

    def rec(j):
        if j == servers:
            yield tuple(q)
            return
        for i in choices[j]:
            if i and used[i] >= x[i]:
                continue
            used[i] += 1
            q[j] = i
            yield from rec(j + 1)
            used[i] -= 1

    yield from rec(0)


def _search(x, g, maximize: bool, work_conserving: bool, cap: int) -> List[int]:
    queues, servers = len(x) - 1, len(g[0])
    _check_cap(queues, servers, cap)
    choices = _candidates(x, g, queues, servers)
    if math.prod(len(c) for c in choices) <= TABLE_ROWS:
        q, ok, served, kap = _table_scores(x, choices, queues)
        if work_conserving:
            ok = ok & (served == served[ok].max())
        score = np.where(ok, -kap if maximize else kap, np.iinfo(np.int64).max)
        return q[int(np.argmin(score))].tolist()
    best, best_key = None, None
    cands = list(feasible_controls(x, g)) if work_conserving else feasible_controls(x, g)
    if work_conserving:
        top = max(servers - c.count(0) for c in cands)
        cands = [c for c in cands if servers - c.count(0) == top]
    for c in cands:
        k = kappa(updated_queue_sizes(x, withdrawal_from_schedule(c, queues)))
        key = -k if maximize else k
        if best_key is None or key < best_key:
            best, best_key = c, key
    return list(best)


def mb_kernel(x, g, rng=None, cap: int = ENUMERATION_CAP) -> List[int]:
    """Minimum-imbalance control; lexicographically smallest among ties."""
    return _search(x, g, maximize=False, work_conserving=False, cap=cap)


def lb_kernel(x, g, rng=None, cap: int = ENUMERATION_CAP) -> List[int]:
    """Maximum-imbalance control among the work-conserving ones.

    Work conservation here means the control serves the largest possible
    number of real packets, which is equivalent to the absence of a
    reallocation path from an idle server to a nonempty queue.
    """
    return _search(x, g, maximize=True, work_conserving=True, cap=cap)


# ---------------------------------------------------------------------------
# sequential heuristics


def _connected(g, queues: int, servers: int) -> List[List[int]]:
    return [[i for i in range(1, queues + 1) if g[i][j]] for j in range(servers)]


def _sequential(x, g, most_connected_first: bool, longest: bool) -> List[int]:
    queues, servers = len(x) - 1, len(g[0])
    conn = _connected(g, queues, servers)
    order = sorted(range(servers), key=lambda j: (-len(conn[j]) if most_connected_first else len(conn[j]), j))
    rem = list(x)
    q = [0] * servers
    for j in order:
        best = 0
        bv = 0
        for i in conn[j]:
            v = rem[i]
            if v > 0 and (best == 0 or (v > bv if longest else v < bv)):
                best, bv = i, v
        if best:
            rem[best] -= 1
            q[j] = best
    return q


def lcsf_lcq_kernel(x, g, rng=None) -> List[int]:
    return _sequential(x, g, most_connected_first=False, longest=True)


def mcsf_scq_kernel(x, g, rng=None) -> List[int]:
    return _sequential(x, g, most_connected_first=True, longest=False)


def mcsf_lcq_kernel(x, g, rng=None) -> List[int]:
    return _sequential(x, g, most_connected_first=True, longest=True)


def lcsf_scq_kernel(x, g, rng=None) -> List[int]:
    return _sequential(x, g, most_connected_first=False, longest=False)


def random_kernel(x, g, rng: np.random.Generator) -> List[int]:
    """Servers in index order, each uniform over its connected nonempty queues.

    Draws exactly K uniforms per call so stream consumption is state-free.
    """
    queues, servers = len(x) - 1, len(g[0])
    u = rng.random(servers).tolist()
    rem = list(x)
    q = [0] * servers
    for j in range(servers):
        cands = [i for i in range(1, queues + 1) if g[i][j] and rem[i] > 0]
        if cands:
            i = cands[int(u[j] * len(cands))]
            rem[i] -= 1
            q[j] = i
    return q


POLICIES: Dict[str, Policy] = {
    "mb": Policy("mb", mb_kernel),
    "lb": Policy("lb", lb_kernel),
    "lcsf-lcq": Policy("lcsf-lcq", lcsf_lcq_kernel),
    "mcsf-scq": Policy("mcsf-scq", mcsf_scq_kernel),
    "mcsf-lcq": Policy("mcsf-lcq", mcsf_lcq_kernel),
    "lcsf-scq": Policy("lcsf-scq", lcsf_scq_kernel),
    "random": Policy("random", random_kernel, deterministic=False),
}

BRUTE_FORCE = frozenset({"mb", "lb"})


def require_enumerable(name: str, queues: int, servers: int, cap: int = ENUMERATION_CAP) -> None:
    """Raise :class:`EnumerationCapExceeded` before running a brute-force policy on an oversized system."""
    get_policy(name)
    if name in BRUTE_FORCE:
        _check_cap(queues, servers, cap)


def get_policy(name: str) -> Policy:
    try:
        return POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def mb_bruteforce(s: SystemState, cap: int = ENUMERATION_CAP) -> Tuple[Vector, Vector]:
    q = tuple(mb_kernel(s.x, s.g, cap=cap))
    return withdrawal_from_schedule(q, s.queues), q


def lb_bruteforce(s: SystemState, cap: int = ENUMERATION_CAP) -> Tuple[Vector, Vector]:
    q = tuple(lb_kernel(s.x, s.g, cap=cap))
    return withdrawal_from_schedule(q, s.queues), q


def lcsf_lcq(s: SystemState) -> Tuple[Vector, Vector]:
    return POLICIES["lcsf-lcq"](s)


def mcsf_scq(s: SystemState) -> Tuple[Vector, Vector]:
    return POLICIES["mcsf-scq"](s)


def mcsf_lcq(s: SystemState) -> Tuple[Vector, Vector]:
    return POLICIES["mcsf-lcq"](s)


def lcsf_scq(s: SystemState) -> Tuple[Vector, Vector]:
    return POLICIES["lcsf-scq"](s)


def randomized(s: SystemState, rng: np.random.Generator) -> Tuple[Vector, Vector]:
    return POLICIES["random"](s, rng)


def is_work_conserving(s: SystemState, q: Sequence[int]) -> bool:
    """False iff an idle server can be chained onto a nonempty real queue."""
    if 0 not in q:
        return True
    xhat = updated_queue_sizes(s.x, withdrawal_from_schedule(q, s.queues))
    reach = reallocation_tree(s, q, 0)
    return not any(f != 0 and xhat[f] >= 1 for f in reach)

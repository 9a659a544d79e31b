"""Interchanges I(f, t), single-server reallocation paths, and the
constructive conversion of an arbitrary control into a most-balancing one."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .core import ContractViolation, SystemState, Vector, withdrawal_from_schedule
from .imbalance import updated_queue_sizes


@dataclass(frozen=True)
class Interchange:
    """Withdraw one more packet from ``f`` and one fewer from ``t``."""

    f: int
    t: int

    def vector(self, queues: int) -> Vector:
        v = [0] * (queues + 1)
        if self.f != self.t:
            v[self.f] += 1
            v[self.t] -= 1
        return tuple(v)


@dataclass(frozen=True)
class ReallocationPath:
    """``servers[i]`` moves from ``queues[i + 1]`` to ``queues[i]``.

    ``queues[0]`` is the from-queue f, ``queues[-1]`` the to-queue t.
    """

    queues: Tuple[int, ...]
    servers: Tuple[int, ...]

    def __post_init__(self):
        if len(self.queues) != len(self.servers) + 1 or not self.servers:
            raise ContractViolation("a path needs m >= 1 servers and m + 1 queues")

    @property
    def f(self) -> int:
        return self.queues[0]

    @property
    def t(self) -> int:
        return self.queues[-1]

    def __len__(self) -> int:
        return len(self.servers)

    def reversed(self) -> "ReallocationPath":
        return ReallocationPath(self.queues[::-1], self.servers[::-1])


@dataclass(frozen=True)
class PolicyDelta:
    d: Vector
    h: int


def classify(xhat: Sequence[int], ic: Interchange) -> str:
    if ic.f == ic.t:
        raise ContractViolation("null interchange has no classification")
    return "balancing" if xhat[ic.f] >= xhat[ic.t] + 1 else "unbalancing"


def _updated(s: SystemState, q: Sequence[int]) -> Vector:
    return updated_queue_sizes(s.x, withdrawal_from_schedule(q, s.queues))


def reallocation_tree(s: SystemState, q: Sequence[int], t: int) -> Dict[int, Tuple[int, int]]:
    """Breadth-first search outward from the to-queue ``t``.

    Edge ``u -> v`` exists when some server currently on ``u`` is also
    connected to ``v``; the server can be moved onto ``v``.  Returns a
    parent map ``v -> (u, server)``.
    """
    on_queue: Dict[int, List[int]] = {}
    for k, i in enumerate(q):
        on_queue.setdefault(i, []).append(k)
    parent: Dict[int, Tuple[int, int]] = {t: (-1, -1)}
    frontier = deque([t])
    n = len(s.x)
    while frontier:
        u = frontier.popleft()
        for k in on_queue.get(u, ()):
            for v in range(n):
                if v not in parent and s.g[v][k]:
                    parent[v] = (u, k)
                    frontier.append(v)
    return parent


def _path_to(parent: Dict[int, Tuple[int, int]], f: int) -> ReallocationPath:
    queues, servers = [f], []
    node = f
    while parent[node][0] != -1:
        node, k = parent[node]
        servers.append(k)
        queues.append(node)
    return ReallocationPath(tuple(queues), tuple(servers))


def _can_withdraw(xhat: Sequence[int], f: int) -> bool:
    return f == 0 or xhat[f] >= 1


def find_reallocation_path(s: SystemState, q: Sequence[int], f: int, t: int) -> Optional[ReallocationPath]:
    """Shortest chain of single-server moves realizing I(f, t), or None."""
    if f == t:
        raise ContractViolation("f and t must differ")
    if not _can_withdraw(_updated(s, q), f):
        return None
    parent = reallocation_tree(s, q, t)
    if f not in parent:
        return None
    return _path_to(parent, f)


def apply_interchange(q: Sequence[int], path: ReallocationPath) -> Vector:
    out = list(q)
    for i, k in enumerate(path.servers):
        if q[k] != path.queues[i + 1]:
            raise ContractViolation(f"stale path: server {k} is not on queue {path.queues[i + 1]}")
        out[k] = path.queues[i]
    return tuple(out)


def policy_delta(y: Sequence[int], y_mb: Sequence[int]) -> PolicyDelta:
    if len(y) != len(y_mb):
        raise ContractViolation("withdrawal vectors differ in length")
    d = tuple(b - a for a, b in zip(y, y_mb))
    total = sum(abs(v) for v in d)
    if sum(d) != 0 or total % 2:
        raise ContractViolation("withdrawal vectors must withdraw the same number of servers")
    return PolicyDelta(d, total // 2)


def feasible_pairs(s: SystemState, q: Sequence[int], delta: PolicyDelta) -> List[Tuple[Interchange, ReallocationPath]]:
    """Every (f, t) with ``d_f >= 1``, ``d_t <= -1`` and a realizing path."""
    xhat = _updated(s, q)
    sources = [i for i, v in enumerate(delta.d) if v >= 1]
    out = []
    for t in (i for i, v in enumerate(delta.d) if v <= -1):
        parent = reallocation_tree(s, q, t)
        for f in sources:
            if f in parent and _can_withdraw(xhat, f):
                out.append((Interchange(f, t), _path_to(parent, f)))
    return out


def select_balancing_interchange(
    s: SystemState, q: Sequence[int], delta: PolicyDelta
) -> Optional[Tuple[Interchange, ReallocationPath]]:
    """Pick the feasible pair with the largest ``xhat_f - xhat_t``.

    Ties go to the lowest f, then the lowest t.
    """
    if delta.h == 0:
        return None
    xhat = _updated(s, q)
    pairs = feasible_pairs(s, q, delta)
    if not pairs:
        return None
    return min(pairs, key=lambda p: (xhat[p[0].t] - xhat[p[0].f], p[0].f, p[0].t))


def convert_to_mb(
    s: SystemState, q: Sequence[int], q_mb: Sequence[int]
) -> List[Tuple[Interchange, ReallocationPath]]:
    """Interchanges that carry ``q``'s withdrawal vector onto ``q_mb``'s.

    The delta is recomputed after every step; each step lowers h by one.
    """
    y_mb = withdrawal_from_schedule(q_mb, s.queues)
    steps = []
    current = tuple(q)
    while True:
        delta = policy_delta(withdrawal_from_schedule(current, s.queues), y_mb)
        if delta.h == 0:
            return steps
        chosen = select_balancing_interchange(s, current, delta)
        if chosen is None:
            raise RuntimeError(f"no feasible interchange toward {y_mb} from control {current}")
        steps.append(chosen)
        current = apply_interchange(current, chosen[1])

"""Queues, servers, connectivity and the one-slot evolution law.

Queue index 0 is the dummy queue: it is permanently connected to every
server and allocating a server to it means the server idles.  Vectors are
plain tuples of ints of length ``L + 1`` (queue-indexed) or ``K``
(server-indexed); the connectivity matrix is a tuple of ``L + 1`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

Vector = Tuple[int, ...]
Matrix = Tuple[Tuple[int, ...], ...]


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


@dataclass(frozen=True)
class SystemState:
    """Queue lengths ``x`` and connectivity ``g`` at the start of a slot."""

    x: Vector
    g: Matrix
    slot: int = 0

    def __post_init__(self):
        x = tuple(int(v) for v in self.x)
        g = tuple(tuple(int(b) for b in row) for row in self.g)
        if len(x) < 2:
            raise ContractViolation("need at least one real queue besides the dummy")
        if len(g) != len(x):
            raise ContractViolation(f"g has {len(g)} rows, expected {len(x)}")
        if not g[0]:
            raise ContractViolation("need at least one server")
        k = len(g[0])
        if any(len(row) != k for row in g):
            raise ContractViolation("ragged connectivity matrix")
        if any(b not in (0, 1) for row in g for b in row):
            raise ContractViolation("connectivity entries must be 0 or 1")
        if any(b != 1 for b in g[0]):
            raise ContractViolation("dummy queue must be connected to every server")
        if x[0] != 0:
            raise ContractViolation("dummy queue must be empty at a slot boundary")
        if any(v < 0 for v in x):
            raise ContractViolation("queue lengths must be nonnegative")
        if self.slot < 0:
            raise ContractViolation("slot index must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "g", g)

    @classmethod
    def build(cls, real_x: Sequence[int], real_g: Sequence[Sequence[int]], slot: int = 0) -> "SystemState":
        """Build a state from real-queue data only; the dummy row/entry is added."""
        real_g = [tuple(row) for row in real_g]
        k = len(real_g[0]) if real_g else 0
        return cls((0, *real_x), ((1,) * k, *real_g), slot)

    @classmethod
    def fully_connected(cls, real_x: Sequence[int], servers: int, slot: int = 0) -> "SystemState":
        return cls.build(real_x, [(1,) * servers for _ in real_x], slot)

    @property
    def queues(self) -> int:
        """Number of real queues ``L``."""
        return len(self.x) - 1

    @property
    def servers(self) -> int:
        return len(self.g[0])

    def connected_queues(self, server: int) -> Vector:
        """Real queues connected to ``server``, ascending."""
        return tuple(i for i in range(1, len(self.x)) if self.g[i][server])


def withdrawal_from_schedule(q: Sequence[int], queues: int) -> Vector:
    """Count servers per queue: ``y[i] = #{j : q[j] == i}``."""
    y = [0] * (queues + 1)
    for i in q:
        if not 0 <= i <= queues:
            raise ContractViolation(f"queue index {i} out of range 0..{queues}")
        y[i] += 1
    return tuple(y)


def _check_schedule_shape(s: SystemState, q: Sequence[int]) -> None:
    if len(q) != s.servers:
        raise ContractViolation(f"control has {len(q)} entries, expected K={s.servers}")
    if any(not 0 <= i <= s.queues for i in q):
        raise ContractViolation("control entry out of range")


def is_feasible_schedule(s: SystemState, q: Sequence[int]) -> bool:
    """True iff every server sits on a connected queue and no real queue gets
    more servers than it has packets."""
    _check_schedule_shape(s, q)
    if any(not s.g[i][j] for j, i in enumerate(q)):
        return False
    y = withdrawal_from_schedule(q, s.queues)
    return all(y[i] <= s.x[i] for i in range(1, len(y)))


def satisfies_necessary_conditions(s: SystemState, y: Sequence[int]) -> bool:
    """Per-queue caps ``0 <= y_i <= min(x_i, deg_i)`` and ``sum(y) == K``."""
    if len(y) != len(s.x):
        raise ContractViolation("withdrawal vector has the wrong length")
    if sum(y) != s.servers or any(v < 0 for v in y):
        return False
    return all(y[i] <= min(s.x[i], sum(s.g[i])) for i in range(1, len(y)))


def implement_withdrawal(s: SystemState, y: Sequence[int]) -> Optional[Vector]:
    """Return a feasible control ``q`` with withdrawal vector ``y``, or None.

    Each real queue ``i`` is expanded into ``y[i]`` demand slots; ``y`` is
    implementable iff a matching saturates every slot (leftover servers idle).
    """
    if not satisfies_necessary_conditions(s, y):
        return None
    slots = [i for i in range(1, len(y)) for _ in range(y[i])]
    q = [0] * s.servers
    if slots:
        rows, cols = [], []
        for r, i in enumerate(slots):
            for j in range(s.servers):
                if s.g[i][j]:
                    rows.append(r)
                    cols.append(j)
        graph = csr_matrix(
            (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(slots), s.servers)
        )
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.any(match < 0):
            return None
        for r, j in enumerate(match):
            q[int(j)] = slots[r]
    return tuple(q)


def is_feasible_withdrawal(s: SystemState, y: Sequence[int]) -> bool:
    return implement_withdrawal(s, y) is not None


def evolve(s: SystemState, y: Sequence[int], z: Sequence[int], g_next: Sequence[Sequence[int]]) -> SystemState:
    """Apply ``X(n+1) = X(n) - Y(n) + Z(n)``; ``z[0]`` must equal ``y[0]``."""
    y = tuple(y)
    z = tuple(z)
    if len(z) != len(s.x):
        raise ContractViolation("arrival vector has the wrong length")
    if z[0] != y[0]:
        raise ContractViolation("dummy arrivals must equal dummy withdrawals")
    if any(v < 0 for v in z):
        raise ContractViolation("arrivals must be nonnegative")
    if not is_feasible_withdrawal(s, y):
        raise ContractViolation(f"withdrawal {y} is infeasible for state {s.x}")
    x_next = tuple(a - b + c for a, b, c in zip(s.x, y, z))
    return SystemState(x_next, tuple(tuple(r) for r in g_next), s.slot + 1)

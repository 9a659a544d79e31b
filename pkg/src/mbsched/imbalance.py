"""Imbalance index of an updated queue vector and its interchange algebra.

An updated vector ``xhat = x - y`` is queue-indexed with the dummy queue at
index 0.  The dummy may be negative (``-y[0]``) and always ranks last in the
descending order.  Ranks are 1-based, as in the ordered-sum definition.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

from .core import ContractViolation, Vector


def updated_queue_sizes(x: Sequence[int], y: Sequence[int]) -> Vector:
    return tuple(a - b for a, b in zip(x, y))


def rank_order(xhat: Sequence[int]) -> List[int]:
    """Queue indices by descending updated size, dummy forced last.

    Ties among real queues go to the lower index first.
    """
    if len(xhat) < 2:
        raise ContractViolation("updated vector needs the dummy plus one real queue")
    if any(v < 0 for v in xhat[1:]):
        raise ContractViolation("real updated queue sizes must be nonnegative")
    real = sorted(range(1, len(xhat)), key=lambda i: (-xhat[i], i))
    return real + [0]


def ordered_values(xhat: Sequence[int]) -> List[int]:
    return [xhat[i] for i in rank_order(xhat)]


def kappa(xhat: Sequence[int]) -> int:
    """Sum of pairwise differences over the ranked vector.

    Rank ``k`` (of ``L + 1``) appears ``L + 1 - k`` times as the larger and
    ``k - 1`` times as the smaller element, hence weight ``L + 2 - 2k``.
    """
    v = ordered_values(xhat)
    n = len(v)
    return sum((n + 1 - 2 * k) * val for k, val in enumerate(v, start=1))


def kappa_pairwise(xhat: Sequence[int]) -> int:
    """Direct double sum over the ranked vector; slow reference for tests."""
    v = ordered_values(xhat)
    return sum(v[i] - v[j] for i in range(len(v) - 1) for j in range(i + 1, len(v)))


def kappa_bounds(xhat: Sequence[int]) -> Tuple[int, int]:
    """``(L * xhat_[L], 2(L-1) xhat_[1] - (L-2) xhat_[L])`` over the real ranks.

    The upper value is the closed form for vectors whose ``L - 1`` longest
    queues are equal; it is not a valid bound on the index for ``L >= 5``.
    """
    v = ordered_values(xhat)
    n_real = len(v) - 1
    top, bottom = v[0], v[n_real - 1]
    return n_real * bottom, 2 * (n_real - 1) * top - (n_real - 2) * bottom


def _check_ranks(v: Sequence[int], l: int, s: int) -> None:
    n = len(v)
    if not 1 <= l < s <= n:
        raise ContractViolation(f"need 1 <= l < s <= {n}, got l={l}, s={s}")
    a, b = v[l - 1], v[s - 1]
    if a <= b:
        raise ContractViolation("rank l must hold a strictly larger value than rank s")
    if v[l] == a:
        raise ContractViolation("l must be the last rank holding its value")
    if s > 1 and v[s - 2] == b:
        raise ContractViolation("s must be the first rank holding its value")


def kappa_delta(xhat: Sequence[int], l: int, s: int) -> int:
    """Change of the index when one unit moves from rank ``l`` to rank ``s``."""
    v = ordered_values(xhat)
    _check_ranks(v, l, s)
    return -2 * (s - l) if v[l - 1] >= v[s - 1] + 2 else 0


def ranks_of(xhat: Sequence[int], f: int, t: int) -> Tuple[int, int]:
    """Ranks ``(l, s)`` used by :func:`kappa_delta` for an interchange I(f, t).

    ``l`` is the last rank carrying ``xhat[f]`` and ``s`` the first rank
    carrying ``xhat[t]``; only values matter, so any queue in a tie works.
    """
    order = rank_order(xhat)
    v = [xhat[i] for i in order]
    pos_f = order.index(f)
    pos_t = order.index(t)
    l = pos_f
    while l + 1 < len(v) and v[l + 1] == v[pos_f]:
        l += 1
    s = pos_t
    while s > 0 and v[s - 1] == v[pos_t]:
        s -= 1
    return l + 1, s + 1


def move_between_ranks(xhat: Sequence[int], l: int, s: int) -> Vector:
    """Queue-indexed vector after moving one unit from rank ``l`` to rank ``s``."""
    order = rank_order(xhat)
    out = list(xhat)
    out[order[l - 1]] -= 1
    out[order[s - 1]] += 1
    return tuple(out)

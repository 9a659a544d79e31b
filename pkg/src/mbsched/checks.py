"""Exhaustive small-instance property suites and worked examples.

Every suite enumerates a bounded grid and returns :class:`CheckResult`
records; nothing here samples at random except :func:`policy_suite`, whose
sample is drawn from a fixed seed.  The brute-force enumeration in
:func:`_controls_by_withdrawal` is the oracle: it does not use matching,
interchanges or any policy code.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .core import SystemState, Vector, is_feasible_schedule, withdrawal_from_schedule
from .imbalance import (
    kappa,
    kappa_delta,
    kappa_pairwise,
    move_between_ranks,
    ordered_values,
    ranks_of,
    updated_queue_sizes,
)
from .interchange import apply_interchange, classify, convert_to_mb, feasible_pairs, policy_delta
from .order import reachable
from .policies import (
    POLICIES,
    is_work_conserving,
    lb_bruteforce,
    lcsf_lcq,
    mb_bruteforce,
)

MAX_FAILURES = 5


@dataclass
class CheckResult:
    name: str
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    failed: int = 0
    # informational results are reported but never fail a run
    informational: bool = False
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.informational or self.failed == 0

    def fail(self, instance: str) -> None:
        self.failed += 1
        if len(self.failures) < MAX_FAILURES:
            self.failures.append(instance)

    def row(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        line = f"{status:4}  {self.name:<40} checked={self.checked:<9} failed={self.failed}"
        if self.note:
            line += f"  ({self.note})"
        return line


def all_passed(results: Sequence[CheckResult]) -> bool:
    return all(r.passed for r in results)


# ---------------------------------------------------------------------------
# grids


def states(max_queues: int, max_servers: int, max_entry: int) -> Iterator[SystemState]:
    """Every state with 1..max_queues queues, 1..max_servers servers, entries 0..max_entry."""
    for L in range(1, max_queues + 1):
        for K in range(1, max_servers + 1):
            for xs in itertools.product(range(max_entry + 1), repeat=L):
                for bits in itertools.product((0, 1), repeat=L * K):
                    g = [bits[i * K:(i + 1) * K] for i in range(L)]
                    yield SystemState.build(xs, g)


def _controls_by_withdrawal(s: SystemState) -> Dict[Vector, Vector]:
    """Each achievable withdrawal vector with its lexicographically first control."""
    L, K = s.queues, s.servers
    out: Dict[Vector, Vector] = {}
    for q in itertools.product(range(L + 1), repeat=K):
        if not all(s.g[i][j] for j, i in enumerate(q)):
            continue
        y = withdrawal_from_schedule(q, L)
        if any(y[i] > s.x[i] for i in range(1, L + 1)):
            continue
        out.setdefault(y, q)
    return out


def _fmt(s: SystemState) -> str:
    return f"x={s.x[1:]} g={[tuple(r) for r in s.g[1:]]}"


# ---------------------------------------------------------------------------
# kappa-delta identity


def kappa_delta_suite(max_queues: int = 5, max_entry: int = 6, dummy_values: Sequence[int] = (0, -1, -2)) -> CheckResult:
    """Recomputed index after a rank-to-rank move equals index plus the predicted delta.

    All vectors with up to ``max_queues`` real entries in ``0..max_entry``
    and each listed dummy value; all valid (l, s) rank pairs.  Moves that
    would leave a real queue negative or the dummy positive (an idle server
    that does not exist) are outside the domain and skipped.
    The recomputation uses the direct pairwise sum.
    """
    res = CheckResult("kappa-delta identity")
    for L in range(1, max_queues + 1):
        for real in itertools.product(range(max_entry + 1), repeat=L):
            for d in dummy_values:
                xhat = (d, *real)
                v = ordered_values(xhat)
                base = kappa_pairwise(xhat)
                n = len(v)
                for l in range(1, n):
                    if v[l] == v[l - 1]:
                        continue
                    for s_ in range(l + 1, n + 1):
                        if v[s_ - 1] >= v[l - 1] or (v[s_ - 2] == v[s_ - 1]):
                            continue
                        moved = move_between_ranks(xhat, l, s_)
                        # reals stay nonnegative; the dummy can only absorb a unit it gave up
                        if min(moved[1:]) < 0 or moved[0] > 0:
                            continue
                        res.checked += 1
                        pred = base + kappa_delta(xhat, l, s_)
                        got = kappa_pairwise(moved)
                        if got != pred:
                            res.fail(f"xhat={xhat} l={l} s={s_}: {got} != {pred}")
    res.note = "dummy in " + str(tuple(dummy_values))
    return res


# ---------------------------------------------------------------------------
# interchange lemmas and lexicographic minimization


def lemma_suite(max_queues: int = 3, max_servers: int = 3, max_entry: int = 3) -> List[CheckResult]:
    r_min_diff = CheckResult("min-kappa controls differ by at most 1")
    r_delta = CheckResult("delta sums to 0 with 0 <= h <= K")
    r_selected = CheckResult("selected interchange is balancing")
    r_steps = CheckResult("conversion takes exactly h steps")
    r_lands = CheckResult("conversion lands on minimal kappa")
    r_mono = CheckResult("kappa non-increasing along conversion")
    r_bridge = CheckResult("step kappa change matches rank delta")
    r_lex = CheckResult("lex-min control minimizes kappa")
    r_lex_wc = CheckResult("lex-min control is work-conserving")
    r_mb_wc = CheckResult("mb control is work-conserving")
    r_literal = CheckResult(
        "every feasible F x T pair is balancing",
        informational=True,
        note="counts counterexamples; only the selected pair is claimed balancing",
    )

    for s in states(max_queues, max_servers, max_entry):
        L, K = s.queues, s.servers
        ys = _controls_by_withdrawal(s)
        kap = {y: kappa(updated_queue_sizes(s.x, y)) for y in ys}
        kmin = min(kap.values())
        minimizers = [y for y in ys if kap[y] == kmin]

        r_min_diff.checked += 1
        if any(abs(a - b) > 1 for y1, y2 in itertools.combinations(minimizers, 2) for a, b in zip(y1, y2)):
            r_min_diff.fail(_fmt(s))

        y_mb, q_mb = mb_bruteforce(s)
        r_mb_wc.checked += 1
        if kap[y_mb] != kmin or not is_work_conserving(s, q_mb):
            r_mb_wc.fail(_fmt(s))

        for y, q in ys.items():
            delta = policy_delta(y, y_mb)
            r_delta.checked += 1
            if sum(delta.d) != 0 or not 0 <= delta.h <= K:
                r_delta.fail(f"{_fmt(s)} q={q}")

            xh = updated_queue_sizes(s.x, y)
            for ic, _ in feasible_pairs(s, q, delta):
                r_literal.checked += 1
                if classify(xh, ic) != "balancing":
                    r_literal.fail(f"{_fmt(s)} q={q} I({ic.f},{ic.t})")

            steps = convert_to_mb(s, q, q_mb)
            r_steps.checked += 1
            if len(steps) != delta.h:
                r_steps.fail(f"{_fmt(s)} q={q}: {len(steps)} steps, h={delta.h}")
            cur = q
            k_cur = kap[y]
            for ic, path in steps:
                xh_cur = updated_queue_sizes(s.x, withdrawal_from_schedule(cur, L))
                r_selected.checked += 1
                if classify(xh_cur, ic) != "balancing":
                    r_selected.fail(f"{_fmt(s)} q={cur} I({ic.f},{ic.t})")
                    break
                l, t_rank = ranks_of(xh_cur, ic.f, ic.t)
                cur = apply_interchange(cur, path)
                k_next = kappa(updated_queue_sizes(s.x, withdrawal_from_schedule(cur, L)))
                r_bridge.checked += 1
                if k_next != k_cur + kappa_delta(xh_cur, l, t_rank):
                    r_bridge.fail(f"{_fmt(s)} q={cur} I({ic.f},{ic.t})")
                r_mono.checked += 1
                if k_next > k_cur:
                    r_mono.fail(f"{_fmt(s)} q={cur}")
                k_cur = k_next
            r_lands.checked += 1
            if kappa(updated_queue_sizes(s.x, withdrawal_from_schedule(cur, L))) != kmin:
                r_lands.fail(f"{_fmt(s)} q={q}")

        # lexicographic minimization of the descending real updated vector
        key = {y: sorted(updated_queue_sizes(s.x, y)[1:], reverse=True) for y in ys}
        best = min(key.values())
        for y, q in ys.items():
            if key[y] != best:
                continue
            r_lex.checked += 1
            if kap[y] != kmin:
                r_lex.fail(f"{_fmt(s)} y={y}")
            r_lex_wc.checked += 1
            if not is_work_conserving(s, q):
                r_lex_wc.fail(f"{_fmt(s)} q={q}")

    return [r_min_diff, r_delta, r_selected, r_steps, r_lands, r_mono, r_bridge, r_lex, r_lex_wc, r_mb_wc, r_literal]


# ---------------------------------------------------------------------------
# policies


def _policy_checks(s: SystemState, results: Dict[str, CheckResult], rng: np.random.Generator) -> None:
    k = lambda y: kappa(updated_queue_sizes(s.x, y))
    y_mb, _ = mb_bruteforce(s)
    y_lb, q_lb = lb_bruteforce(s)
    k_mb, k_lb = k(y_mb), k(y_lb)
    r = results["lb is work-conserving"]
    r.checked += 1
    if not is_work_conserving(s, q_lb):
        r.fail(_fmt(s))
    for name, pol in POLICIES.items():
        if name in ("mb", "lb"):
            continue
        y, q = pol(s, rng)
        r = results["heuristics feasible, kappa >= mb"]
        r.checked += 1
        if not is_feasible_schedule(s, q) or k(y) < k_mb:
            r.fail(f"{name} {_fmt(s)} q={q}")
        if is_work_conserving(s, q):
            r = results["work-conserving heuristics: kappa <= lb"]
            r.checked += 1
            if k(y) > k_lb:
                r.fail(f"{name} {_fmt(s)} q={q}")


def policy_suite(
    max_queues: int = 3, max_servers: int = 3, max_entry: int = 3, sample_queues: int = 4, sample_servers: int = 4, samples: int = 2000, seed: int = 0
) -> List[CheckResult]:
    """Policy invariants: exhaustive on the small grid plus a seeded sample of larger states."""
    names = ["heuristics feasible, kappa >= mb", "work-conserving heuristics: kappa <= lb", "lb is work-conserving"]
    results = {n: CheckResult(n) for n in names}
    rng = np.random.default_rng(seed)
    for s in states(max_queues, max_servers, max_entry):
        _policy_checks(s, results, rng)
    for _ in range(samples):
        L = int(rng.integers(1, sample_queues + 1))
        K = int(rng.integers(1, sample_servers + 1))
        xs = rng.integers(0, max_entry + 2, size=L).tolist()
        g = (rng.random((L, K)) < 0.5).astype(int).tolist()
        _policy_checks(SystemState.build(xs, g), results, rng)
    for r in results.values():
        r.note = f"exhaustive L,K<={max_queues},{max_servers}; {samples} sampled up to L,K<={sample_queues},{sample_servers}"
    return list(results.values())


# ---------------------------------------------------------------------------
# preferred order


def order_suite(max_len: int = 3, max_entry: int = 3) -> List[CheckResult]:
    r_refl = CheckResult("preferred order reflexive")
    r_trans = CheckResult("preferred order transitive")
    r_anti = CheckResult("preferred order antisymmetric up to permutation")
    r_mono = CheckResult("sum and max monotone along the order")
    r_r3 = CheckResult("balancing move never raises kappa")
    for n in range(1, max_len + 1):
        vecs = list(itertools.product(range(max_entry + 1), repeat=n))
        reach = {}
        for v in vecs:
            seen, complete = reachable(v)
            assert complete
            reach[v] = seen
        for v in vecs:
            r_refl.checked += 1
            if v not in reach[v]:
                r_refl.fail(str(v))
        for a in vecs:
            for b in vecs:
                if a not in reach[b]:
                    continue
                r_mono.checked += 1
                if sum(a) > sum(b) or max(a) > max(b):
                    r_mono.fail(f"{a} <= {b}")
                if b in reach[a]:
                    r_anti.checked += 1
                    if sorted(a) != sorted(b):
                        r_anti.fail(f"{a} ~ {b}")
                for c in vecs:
                    if b in reach[c]:
                        r_trans.checked += 1
                        if a not in reach[c]:
                            r_trans.fail(f"{a} <= {b} <= {c}")
        for v in vecs:
            for i in range(n):
                for j in range(n):
                    if i != j and v[i] >= v[j] + 1:
                        w = list(v)
                        w[i] -= 1
                        w[j] += 1
                        r_r3.checked += 1
                        if kappa((0, *w)) > kappa((0, *v)):
                            r_r3.fail(f"{v} -> {tuple(w)}")
    return [r_refl, r_trans, r_anti, r_mono, r_r3]


# ---------------------------------------------------------------------------
# worked examples


@dataclass(frozen=True)
class CaseOutcome:
    label: str
    q: Tuple[int, ...]
    xhat: Tuple[int, ...]
    kappa: int


def lemma5_state() -> SystemState:
    """Four queues at (5,5,5,4); servers 1-6 see queues 1-3, server 7 sees queues 1 and 4."""
    g = [[1] * 6 + [1], [1] * 6 + [0], [1] * 6 + [0], [0] * 6 + [1]]
    return SystemState.build((5, 5, 5, 4), g)


def remark1_state() -> SystemState:
    return SystemState.fully_connected((6, 5, 4), 3)


def _outcome(label: str, s: SystemState, q: Sequence[int]) -> CaseOutcome:
    xh = updated_queue_sizes(s.x, withdrawal_from_schedule(q, s.queues))
    return CaseOutcome(label, tuple(q), xh, kappa(xh))


def case_outcomes(name: str) -> List[CaseOutcome]:
    if name == "lemma5":
        s = lemma5_state()
        return [
            _outcome("lcsf-lcq", s, lcsf_lcq(s)[1]),
            _outcome("mb", s, mb_bruteforce(s)[1]),
            _outcome("pi", s, (1, 2, 3, 1, 2, 3, 4)),
        ]
    if name == "remark1":
        s = remark1_state()
        return [
            _outcome("mb", s, mb_bruteforce(s)[1]),
            _outcome("all-to-longest", s, (1, 1, 1)),
            _outcome("lb", s, lb_bruteforce(s)[1]),
        ]
    raise ValueError(f"unknown case {name!r}; choose lemma5 or remark1")


CASES = ("lemma5", "remark1")

# expected (real updated vector with dummy first, kappa) per outcome label
EXPECTED = {
    "lemma5": {"lcsf-lcq": ((0, 2, 3, 3, 4), 18), "mb": ((0, 3, 3, 3, 3), 12), "pi": ((0, 3, 3, 3, 3), 12)},
    "remark1": {"mb": ((0, 4, 4, 4), 12), "all-to-longest": ((0, 3, 5, 4), 16), "lb": ((0, 6, 5, 1), 22)},
}


def case_suite(name: str) -> List[CheckResult]:
    out = []
    for o in case_outcomes(name):
        want_x, want_k = EXPECTED[name][o.label]
        r = CheckResult(f"{name}: {o.label} xhat={o.xhat[1:]} kappa={o.kappa}", checked=1)
        if o.xhat != want_x or o.kappa != want_k:
            r.fail(f"expected xhat={want_x[1:]} kappa={want_k}")
        out.append(r)
    return out


def default_suites() -> List[CheckResult]:
    results = [kappa_delta_suite()]
    results += lemma_suite()
    results += policy_suite()
    results += order_suite()
    for c in CASES:
        results += case_suite(c)
    return results

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mbsched.checks import kappa_delta_suite
from mbsched.core import ContractViolation
from mbsched.imbalance import (
    kappa,
    kappa_bounds,
    kappa_delta,
    kappa_pairwise,
    move_between_ranks,
    rank_order,
    ranks_of,
)


def pairwise_oracle(real, dummy=0):
    """Sum of |a - b| over real pairs plus each real's gap to the dummy."""
    diffs = sum(abs(a - b) for a, b in itertools.combinations(real, 2))
    return diffs + sum(a - dummy for a in real)


@pytest.mark.parametrize(
    "real, expected",
    [
        ((5, 4, 3), 16),
        ((4, 3, 3, 2), 18),
        ((2, 3, 3, 4), 18),
        ((3, 3, 3, 3), 12),
        ((4, 5), 10),
        ((5, 4), 10),
        ((0, 0, 0), 0),
        ((4, 4, 4), 12),
        ((6, 5, 1), 22),
    ],
)
def test_kappa_values(real, expected):
    assert kappa((0, *real)) == expected
    assert pairwise_oracle(real) == expected


def test_kappa_two_queue_arithmetic():
    # (5, 2) -> (4, 3) with an empty dummy: 10 -> 8
    assert kappa((0, 5, 2)) == 10
    assert kappa((0, 4, 3)) == 8


def test_negative_dummy_ranks_last():
    assert rank_order((-2, 0, 1)) == [2, 1, 0]
    assert kappa((-2, 0, 0)) == 4


def test_negative_real_rejected():
    with pytest.raises(ContractViolation):
        kappa((0, -1, 2))


@given(st.lists(st.integers(0, 8), min_size=1, max_size=6), st.integers(-4, 0))
def test_kappa_matches_oracles(real, dummy):
    xhat = (dummy, *real)
    assert kappa(xhat) == kappa_pairwise(xhat) == pairwise_oracle(real, dummy)


@given(st.lists(st.integers(0, 8), min_size=1, max_size=6), st.randoms())
def test_permutation_invariance(real, rnd):
    shuffled = list(real)
    rnd.shuffle(shuffled)
    assert kappa((0, *real)) == kappa((0, *shuffled))


@given(st.lists(st.integers(0, 8), min_size=1, max_size=6))
def test_nonnegative_and_equality_case(real):
    xhat = (0, *real)
    k = kappa(xhat)
    assert k >= 0
    assert (k == len(real) * min(real)) == (len(set(real)) == 1)


class TestBounds:
    def test_equal_queues(self):
        assert kappa_bounds((0, 4, 4, 4))[0] == 12

    def test_max_formula(self):
        assert kappa_bounds((0, 5, 5, 0))[1] == 20

    def test_zero(self):
        assert kappa_bounds((0, 0, 0, 0)) == (0, 0)

    @pytest.mark.parametrize("L", [1, 2, 3, 4])
    def test_redistributions_within_bounds(self, L):
        # every vector with the same total and the same extreme values stays inside
        for v in itertools.product(range(6), repeat=L):
            lo, hi = kappa_bounds((0, *v))
            for w in itertools.product(range(max(v) + 1), repeat=L):
                if sum(w) == sum(v) and max(w) == max(v) and min(w) == min(v):
                    assert lo <= kappa((0, *w)) <= hi

    def test_max_formula_fails_for_five_queues(self):
        lo, hi = kappa_bounds((0, 2, 2, 2, 0, 0))
        assert kappa((0, 2, 2, 2, 0, 0)) == 18 > hi == 16


class TestKappaDelta:
    def test_two_queue_example(self):
        assert kappa_delta((0, 5, 2), 1, 2) == -2
        assert kappa(move_between_ranks((0, 5, 2), 1, 2)) == kappa((0, 5, 2)) - 2

    def test_unit_gap_is_a_permutation(self):
        assert kappa_delta((0, 3, 2), 1, 2) == 0

    @pytest.mark.parametrize("real", [(2,), (4, 1), (3, 3, 2), (5, 2, 2, 2)])
    def test_move_to_dummy(self, real):
        xhat = (-1, *real)
        L = len(real)
        l = max(k for k in range(1, L + 1) if sorted(real, reverse=True)[k - 1] == max(real))
        d = kappa_delta(xhat, l, L + 1)
        assert d == -2 * (L + 1 - l) < 0
        assert kappa(move_between_ranks(xhat, l, L + 1)) == kappa(xhat) + d

    @pytest.mark.parametrize("l, s", [(2, 1), (1, 1), (0, 2), (1, 5)])
    def test_invalid_ranks(self, l, s):
        with pytest.raises(ContractViolation):
            kappa_delta((0, 5, 3, 1), l, s)

    def test_equal_values_rejected(self):
        with pytest.raises(ContractViolation):
            kappa_delta((0, 2, 2), 1, 2)

    def test_l_not_last_of_its_value(self):
        with pytest.raises(ContractViolation):
            kappa_delta((0, 4, 4, 1), 1, 3)

    def test_ranks_of(self):
        xhat = (0, 3, 4, 3, 1)
        assert ranks_of(xhat, 2, 4) == (1, 4)
        assert ranks_of(xhat, 1, 4) == (3, 4)
        assert ranks_of(xhat, 2, 0) == (1, 5)


def test_kappa_delta_identity_small_grid():
    r = kappa_delta_suite(max_queues=3, max_entry=4)
    assert r.checked > 1000
    assert r.passed, r.failures

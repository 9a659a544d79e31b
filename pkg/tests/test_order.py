import json

import pytest

from mbsched.checks import order_suite
from mbsched.imbalance import kappa
from mbsched.order import MAXIMUM, TOTAL, empirical_dominance, preferred_leq, reachable
from mbsched.sim import BernoulliTraffic, ExperimentConfig


class TestPreferredOrder:
    def test_two_swaps(self):
        assert preferred_leq((3, 4, 5), (4, 5, 3)) is True

    def test_balancing_interchange(self):
        assert preferred_leq((0, 4, 3), (0, 5, 2)) is True

    def test_unbalancing_unreachable(self):
        assert preferred_leq((5, 0), (4, 1)) is False

    def test_reduction(self):
        assert preferred_leq((1, 1), (2, 3)) is True
        assert preferred_leq((2, 3), (1, 1)) is False

    def test_reflexive(self):
        assert preferred_leq((2, 0, 1), (2, 0, 1)) is True

    def test_balancing_move_into_index_zero(self):
        # moves from i > 0 may target index 0
        assert preferred_leq((1, 1), (0, 2)) is True

    def test_budget_exhaustion_is_unknown(self):
        assert preferred_leq((0, 0, 0, 0), (5, 5, 5, 5), budget=10) is None

    def test_bad_input(self):
        with pytest.raises(ValueError):
            preferred_leq((1,), (1, 2))
        with pytest.raises(ValueError):
            preferred_leq((-1, 0), (1, 2))

    def test_closure_complete(self):
        seen, complete = reachable((2, 1))
        assert complete
        assert (1, 2) in seen and (0, 0) in seen and (3, 0) not in seen


def test_costs_ignore_dummy():
    assert TOTAL((7, 1, 2)) == 3
    assert MAXIMUM((7, 1, 2)) == 2


def test_order_suite():
    for r in order_suite(max_len=3, max_entry=3):
        assert r.checked > 0
        assert r.passed, (r.name, r.failures)


def test_balancing_moves_never_raise_kappa():
    v = (0, 6, 1, 3)
    for i in range(1, 4):
        for j in range(1, 4):
            if i != j and v[i] >= v[j] + 1:
                w = list(v)
                w[i] -= 1
                w[j] += 1
                assert kappa(tuple(w)) <= kappa(v)


def small_cfg(**kw):
    args = dict(queues=4, servers=2, conn_prob=0.3, traffic=BernoulliTraffic(0.25), horizon=200, seeds=tuple(range(1, 41)))
    args.update(kw)
    return ExperimentConfig(**args)


class TestDominance:
    def test_self_comparison_identical(self):
        r = empirical_dominance("random", "random", TOTAL, small_cfg(), n_times=10)
        assert r.identical
        assert r.fraction == 1.0 and r.passed

    def test_report_json(self):
        r = empirical_dominance("mb", "mcsf-scq", MAXIMUM, small_cfg(horizon=100, seeds=(1, 2, 3)), n_times=5)
        d = json.loads(json.dumps(r.to_dict()))
        assert d["schema_version"] == 1
        assert d["cost"] == "max"
        assert len(d["quantiles_a"]) == len(d["times"]) == 5
        assert len(d["quantiles_a"][0]) == len(d["quantile_levels"]) == 19
        assert "not a proof" in d["note"]
        assert "policy" not in d["config"]

    def test_mb_beats_mcsf_scq(self):
        r = empirical_dominance("mb", "mcsf-scq", TOTAL, small_cfg(), n_times=10)
        assert r.passed

    def test_degenerate(self):
        with pytest.raises(ValueError):
            ExperimentConfig(4, 2, 0.3, BernoulliTraffic(0.2), 0)
        with pytest.raises(ValueError):
            ExperimentConfig(4, 2, 0.3, BernoulliTraffic(0.2), 10, seeds=())

"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test appends one PASS/FAIL line to the terminal summary (see
conftest.py) before asserting, so a full ``pytest -v`` run lists all ten.
"""

import functools
import time

import pytest

from mbsched import checks, cli
from mbsched.imbalance import kappa, updated_queue_sizes
from mbsched.order import TOTAL, empirical_dominance
from mbsched.policies import lcsf_lcq, mb_bruteforce
from mbsched.sim import BernoulliTraffic, ExperimentConfig, occupancy_trend, run_seeds, stability_bound, summarize


def record(log, n, title, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    limit_text = f" < {limit:g}s" if limit is not None else ""
    status = "PASS" if ok and within else "FAIL"
    log.append(f"[C{n:02d}] {status}  {title}: {detail} ({elapsed:.1f}s{limit_text})")
    print(log[-1])
    return ok and within


def xhat_kappa(s, y):
    xh = updated_queue_sizes(s.x, y)
    return xh, kappa(xh)


def test_c01_lemma5_counterexample(acceptance_log):
    t0 = time.perf_counter()
    s = checks.lemma5_state()
    xh_h, k_h = xhat_kappa(s, lcsf_lcq(s)[0])
    xh_m, k_m = xhat_kappa(s, mb_bruteforce(s)[0])
    elapsed = time.perf_counter() - t0
    ok = (xh_h, k_h, xh_m, k_m) == ((0, 2, 3, 3, 4), 18, (0, 3, 3, 3, 3), 12)
    detail = f"lcsf-lcq {xh_h} kappa={k_h}; mb {xh_m} kappa={k_m}"
    assert record(acceptance_log, 1, "greedy-vs-MB counterexample", ok, detail, elapsed, 1.0)


def test_c02_remark1(acceptance_log):
    t0 = time.perf_counter()
    s = checks.remark1_state()
    xh_m, k_m = xhat_kappa(s, mb_bruteforce(s)[0])
    k_543 = kappa((0, 5, 4, 3))
    k_444 = kappa((0, 4, 4, 4))
    elapsed = time.perf_counter() - t0
    ok = xh_m == (0, 4, 4, 4) and k_m == 12 and k_543 == 16 and k_444 == 12
    detail = f"mb xhat={xh_m[1:]} kappa={k_m}; kappa(5,4,3)={k_543}; kappa(4,4,4)={k_444}"
    assert record(acceptance_log, 2, "three-queue MB example", ok, detail, elapsed, 1.0)


def test_c03_kappa_delta_identity(acceptance_log):
    t0 = time.perf_counter()
    r = checks.kappa_delta_suite(max_queues=5, max_entry=6)
    elapsed = time.perf_counter() - t0
    detail = f"{r.checked} (vector, l, s) cases, {r.failed} mismatches"
    assert record(acceptance_log, 3, "kappa-delta identity, L<=5, entries<=6", r.passed and r.checked > 0, detail, elapsed, 60.0), r.failures


@functools.lru_cache(maxsize=1)
def lemma_results():
    t0 = time.perf_counter()
    results = {r.name: r for r in checks.lemma_suite(3, 3, 3)}
    return results, time.perf_counter() - t0


def test_c04_interchange_lemmas(acceptance_log):
    results, elapsed = lemma_results()
    names = [
        "min-kappa controls differ by at most 1",
        "selected interchange is balancing",
        "conversion takes exactly h steps",
        "conversion lands on minimal kappa",
    ]
    rs = [results[n] for n in names]
    ok = all(r.passed and r.checked > 0 for r in rs)
    detail = "; ".join(f"{r.name} {r.checked - r.failed}/{r.checked}" for r in rs)
    assert record(acceptance_log, 4, "interchange suite, L,K<=3, x<=3", ok, detail, elapsed, 300.0), [r.failures for r in rs]


def test_c05_lexicographic_minimizer(acceptance_log):
    results, elapsed = lemma_results()
    rs = [results["lex-min control minimizes kappa"], results["lex-min control is work-conserving"]]
    ok = all(r.passed and r.checked > 0 for r in rs)
    detail = "; ".join(f"{r.name} {r.checked - r.failed}/{r.checked}" for r in rs)
    assert record(acceptance_log, 5, "lex-min suite, L,K<=3, x<=3", ok, detail, elapsed), [r.failures for r in rs]


def test_c06_mb_matches_lcsf_lcq(acceptance_log):
    t0 = time.perf_counter()
    base = ExperimentConfig(4, 3, 0.3, BernoulliTraffic(0.15), 20_000, tuple(range(1, 31)), "mb")
    mb = summarize(base, run_seeds(base))
    lc = summarize(base.with_policy("lcsf-lcq"), run_seeds(base.with_policy("lcsf-lcq")))
    elapsed = time.perf_counter() - t0
    ok = abs(mb.eq - lc.eq) <= mb.ci_half_width + lc.ci_half_width
    detail = f"EQ(mb)={mb.eq:.4f}+/-{mb.ci_half_width:.4f}, EQ(lcsf-lcq)={lc.eq:.4f}+/-{lc.ci_half_width:.4f}"
    assert record(acceptance_log, 6, "MB vs LCSF/LCQ CIs overlap", ok, detail, elapsed, 300.0)


def _leq_or_overlap(a, b):
    return a.eq <= b.eq or abs(a.eq - b.eq) <= a.ci_half_width + b.ci_half_width


def _strictly_below(a, b):
    return a.eq + a.ci_half_width < b.eq - b.ci_half_width


def test_c07_figure3_ordering(acceptance_log):
    t0 = time.perf_counter()
    policies = ("lcsf-lcq", "mcsf-lcq", "random", "lcsf-scq", "mcsf-scq")
    chains = [("lcsf-lcq", "mcsf-lcq"), ("mcsf-lcq", "random"), ("lcsf-scq", "mcsf-scq")]
    failed = []
    eqs = {}
    for load in (0.3, 0.5, 0.7):
        m = {}
        for pol in policies:
            cfg = ExperimentConfig(16, 16, 0.2, BernoulliTraffic(load), 20_000, tuple(range(1, 31)), pol)
            m[pol] = summarize(cfg, run_seeds(cfg))
        eqs[load] = m
        for a, b in chains:
            if not _leq_or_overlap(m[a], m[b]):
                failed.append(f"{a}<={b}@{load} ({m[a].eq:.3f}+/-{m[a].ci_half_width:.3f} vs {m[b].eq:.3f}+/-{m[b].ci_half_width:.3f})")
        if load == 0.7:
            for other in policies:
                if other != "lcsf-lcq" and not _strictly_below(m["lcsf-lcq"], m[other]):
                    failed.append(f"lcsf-lcq strictly below {other}@0.7")
                if other != "mcsf-scq" and not _strictly_below(m[other], m["mcsf-scq"]):
                    failed.append(f"mcsf-scq strictly above {other}@0.7")
    elapsed = time.perf_counter() - t0
    summary = ", ".join(f"{p}={eqs[0.7][p].eq:.2f}" for p in policies)
    detail = f"EQ@0.7: {summary}; " + ("all orderings hold" if not failed else "violated: " + "; ".join(failed))
    assert record(acceptance_log, 7, "heuristic ordering, L=K=16, p=0.2", not failed, detail, elapsed, 900.0), failed


def test_c08_stability_bound(acceptance_log):
    t0 = time.perf_counter()
    bound = stability_bound(8, 4, 0.3)
    seeds = tuple(range(1, 11))
    problems = []
    if abs(bound - 0.4712) > 5e-5:
        problems.append(f"bound {bound}")
    below = {}
    for pol in ("lcsf-lcq", "mb"):
        cfg = ExperimentConfig(8, 4, 0.3, BernoulliTraffic(0.9 * bound), 10_000, seeds, pol)
        below[pol] = occupancy_trend(run_seeds(cfg))
        if below[pol].positive:
            problems.append(f"{pol} trends up at 0.9x bound")
    above = {}
    for pol in ("mb", "lb", "lcsf-lcq", "mcsf-scq", "mcsf-lcq", "lcsf-scq", "random"):
        cfg = ExperimentConfig(8, 4, 0.3, BernoulliTraffic(1.1 * bound), 10_000, seeds, pol)
        above[pol] = occupancy_trend(run_seeds(cfg))
        if not above[pol].positive:
            problems.append(f"{pol} shows no positive trend at 1.1x bound")
    elapsed = time.perf_counter() - t0
    low = min(t.lower for t in above.values())
    detail = (
        f"bound={bound:.4f}; 0.9x slope lcsf-lcq {below['lcsf-lcq'].mean_slope:.2e} (lower {below['lcsf-lcq'].lower:.2e}); "
        f"1.1x min lower slope bound over 7 policies {low:.3f}"
    )
    if problems:
        detail += "; " + "; ".join(problems)
    assert record(acceptance_log, 8, "Stability bound L=8, K=4, p=0.3", not problems, detail, elapsed, 600.0), problems


DOMINANCE_CFG = ExperimentConfig(4, 2, 0.3, BernoulliTraffic(0.25), 500, tuple(range(1, 201)), "mb")


def test_c09_empirical_dominance(acceptance_log):
    t0 = time.perf_counter()
    fractions = {}
    for other in ("lcsf-lcq", "mcsf-scq", "mcsf-lcq", "lcsf-scq", "random"):
        rep = empirical_dominance("mb", other, TOTAL, DOMINANCE_CFG, n_times=50, tolerance=0.0, threshold=0.99)
        fractions[other] = rep.fraction
    elapsed = time.perf_counter() - t0
    ok = all(f >= 0.99 for f in fractions.values())
    detail = "MB weakly dominates at fraction " + ", ".join(f"{k}={v:.4f}" for k, v in fractions.items()) + " (threshold 0.99)"
    assert record(acceptance_log, 9, "Empirical dominance L=4, K=2, p=0.3, 200 seeds", ok, detail, elapsed, 600.0)


def test_c10_reproducibility(acceptance_log, tmp_path):
    t0 = time.perf_counter()
    runs = {
        "run": ["run", "--queues", "16", "--servers", "16", "--conn-prob", "0.2", "--policy", "lcsf-lcq",
                "--arrival-rate", "0.5", "--horizon", "20000", "--seeds", "1..30"],
        "run-trace": ["run", "--queues", "4", "--servers", "3", "--conn-prob", "0.3", "--policy", "mb",
                      "--arrival-rate", "0.15", "--horizon", "2000", "--seeds", "1..5", "--trace"],
        "compare": ["compare", "mb", "random", "--queues", "4", "--servers", "2", "--conn-prob", "0.3",
                    "--arrival-rate", "0.25", "--horizon", "500", "--seeds", "1..200", "--assert", "0.99"],
        "sweep": ["run", "--preset", "fig6", "--horizon", "500", "--seeds", "1..3", "--loads", "0.2,0.4"],
    }
    mismatched = []
    files = 0
    for name, argv in runs.items():
        hashes = []
        for rep in ("a", "b"):
            assert cli.main([*argv, "--out", str(tmp_path / name / rep)]) == 0
            manifest = (tmp_path / name / rep / "manifest.json").read_bytes()
            hashes.append(manifest)
        if hashes[0] != hashes[1]:
            mismatched.append(name)
        for f in (tmp_path / name / "a").iterdir():
            files += 1
            if f.read_bytes() != (tmp_path / name / "b" / f.name).read_bytes():
                mismatched.append(f"{name}/{f.name}")
    elapsed = time.perf_counter() - t0
    detail = f"{files} files across {len(runs)} commands re-run; " + ("byte-identical" if not mismatched else f"differ: {mismatched}")
    assert record(acceptance_log, 10, "Reproducibility", not mismatched, detail, elapsed), mismatched


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

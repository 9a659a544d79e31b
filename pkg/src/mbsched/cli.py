"""Command-line front end: ``run``, ``compare`` and ``verify``.

Exit codes: 0 success, 2 bad flags, 3 enumeration-cap refusal, 4 a checked
property (verification suite or ``--assert`` threshold) failed.  Errors are
printed to stderr as a single JSON object.  All randomness comes from
``--seeds``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import checks
from .order import COSTS, DEFAULT_QUANTILES, empirical_dominance
from .policies import POLICIES, EnumerationCapExceeded, require_enumerable
from .sim import (
    SCHEMA_VERSION,
    BatchTraffic,
    BernoulliTraffic,
    ExperimentConfig,
    run_seeds,
    stability_bound,
    summarize,
)

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_PROPERTY = 0, 2, 3, 4

CSV_HEADER = ("policy", "L", "K", "p", "load", "seed", "EQ", "ci_half_width", "throughput")
TRACE_HEADER = ("slot", "seed", "total_occupancy", "kappa", "served")

HEURISTICS = ("lcsf-lcq", "mcsf-scq", "mcsf-lcq", "lcsf-scq", "random")
# arrival rate used when none is given: a moderate load inside the stable region
DEFAULT_LOAD_FRACTION = 0.6


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# seeds


def parse_seeds(text: str) -> Tuple[int, ...]:
    """``"1..30"``, ``"1,2,5"`` or mixtures such as ``"1..3,7"``; order kept, duplicates rejected."""
    out: List[int] = []
    for part in text.split(","):
        part = part.strip()
        m = re.fullmatch(r"(\d+)\.\.(\d+)", part)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            if b < a:
                raise UsageError(f"empty seed range {part!r}")
            out.extend(range(a, b + 1))
        elif re.fullmatch(r"\d+", part):
            out.append(int(part))
        else:
            raise UsageError(f"bad seed list {text!r}; use e.g. 1..30 or 1,2,5")
    if len(set(out)) != len(out):
        raise UsageError(f"duplicate seeds in {text!r}")
    return tuple(out)


def format_seeds(seeds: Sequence[int]) -> str:
    """Canonical compact form: maximal ascending runs of length >= 3 become ``a..b``."""
    parts: List[str] = []
    i = 0
    seeds = list(seeds)
    while i < len(seeds):
        j = i
        while j + 1 < len(seeds) and seeds[j + 1] == seeds[j] + 1:
            j += 1
        if j - i >= 2:
            parts.append(f"{seeds[i]}..{seeds[j]}")
        else:
            parts.extend(str(s) for s in seeds[i:j + 1])
        i = j + 1
    return ",".join(parts)


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Panel:
    queues: int
    servers: int
    conn_prob: float
    batch_max: Optional[int] = None  # None: Bernoulli arrivals
    loads: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Preset:
    name: str
    figure: str
    panels: Tuple[Panel, ...]
    policies: Tuple[str, ...] = HEURISTICS
    horizon: int = 2000
    seeds: str = "1..5"
    description: str = ""


def _grid(step: float, count: int) -> Tuple[float, ...]:
    return tuple(round(step * k, 6) for k in range(1, count + 1))


PRESETS: Dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("fig3", "Figure 3", (Panel(16, 16, 0.2, loads=_grid(0.1, 9)),), description="L=16, K=16, p=0.2"),
        Preset("fig4-k8", "Figure 4", (Panel(16, 8, 0.2, loads=_grid(0.05, 9)),), description="L=16, K=8, p=0.2"),
        Preset("fig5-k4", "Figure 5", (Panel(16, 4, 0.2, loads=_grid(0.025, 9)),), description="L=16, K=4, p=0.2"),
        Preset(
            "fig6",
            "Figure 6(a)-(c)",
            tuple(Panel(8, 4, p, loads=_grid(0.05, 9)) for p in (0.3, 0.5, 0.9)),
            description="L=8, K=4, p in {0.3, 0.5, 0.9}",
        ),
        Preset(
            "fig7",
            "Figure 7(a)-(c)",
            tuple(Panel(12, 4, p, loads=_grid(0.03, 10)) for p in (0.3, 0.5, 0.9)),
            description="L=12, K=4, p in {0.3, 0.5, 0.9}",
        ),
        Preset(
            "fig8-batch",
            "Figure 8(a)-(c)",
            tuple(Panel(16, 16, p, batch_max=u, loads=_grid(0.1, 9)) for p, u in ((0.5, 2), (0.6, 5), (0.8, 10))),
            description="L=16, K=16, batch sizes uniform on 1..U with U in {2, 5, 10}; load = per-queue offered load",
        ),
    )
}
# the batch-arrival figure is also known under this name
PRESET_ALIASES = {"fig7-batch": "fig8-batch"}


def get_preset(name: str) -> Preset:
    name = PRESET_ALIASES.get(name, name)
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + sorted(PRESET_ALIASES)}")
    return PRESETS[name]


def _traffic_for_load(load: float, batch_max: Optional[int]):
    if batch_max is None:
        return BernoulliTraffic(load)
    prob = load * 2 / (batch_max + 1)
    if prob > 1:
        raise UsageError(f"load {load} needs batch probability {prob:.3f} > 1 with U={batch_max}")
    return BatchTraffic(round(prob, 12), batch_max)


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_env_flags(p: argparse.ArgumentParser, horizon: int, seeds: str) -> None:
    p.add_argument("--preset", help="figure preset supplying L, K, p (and loads for run)")
    p.add_argument("--queues", "-L", type=_positive_int)
    p.add_argument("--servers", "-K", type=_positive_int)
    p.add_argument("--conn-prob", type=float)
    traffic = p.add_mutually_exclusive_group()
    traffic.add_argument("--arrival-rate", type=float, help="Bernoulli arrivals, probability per queue per slot")
    traffic.add_argument("--batch-prob", type=float, help="batch arrivals: probability of a batch per queue per slot")
    p.add_argument("--batch-max", type=_positive_int, help="batch arrivals: size uniform on 1..U")
    p.add_argument("--horizon", type=_positive_int, default=None, help=f"slots per seed (default {horizon})")
    p.add_argument("--warmup", type=int, default=None, help="slots discarded (default 10%% of horizon)")
    p.add_argument("--seeds", default=None, help=f"seed list such as 1..30 or 1,2,5 (default {seeds})")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes across seeds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbsched", description="Multi-server queue scheduling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one configuration or a preset sweep")
    _add_env_flags(run, horizon=2000, seeds="1")
    run.add_argument("--policy", choices=sorted(POLICIES), default=None, help="policy (default lcsf-lcq)")
    run.add_argument("--policies", help="comma-separated policies for a preset sweep")
    run.add_argument("--loads", help="comma-separated per-queue loads for a preset sweep")
    run.add_argument("--trace", action="store_true", help="also write trace.csv (single configuration only)")

    cmp_ = sub.add_parser("compare", help="empirical dominance of policy A over policy B")
    cmp_.add_argument("policy_a", choices=sorted(POLICIES))
    cmp_.add_argument("policy_b", choices=sorted(POLICIES))
    _add_env_flags(cmp_, horizon=500, seeds="1..200")
    cmp_.add_argument("--cost", choices=sorted(COSTS), default="total")
    cmp_.add_argument("--times", type=_positive_int, default=50, help="number of evenly spaced sample slots")
    cmp_.add_argument("--tolerance", type=float, default=0.0)
    cmp_.add_argument("--threshold", type=float, default=0.99, help="fraction of points required to pass")
    cmp_.add_argument(
        "--assert",
        dest="assert_threshold",
        nargs="?",
        const=-1.0,
        type=float,
        default=None,
        help="exit 4 unless the dominance fraction reaches THRESH (default: --threshold)",
    )

    ver = sub.add_parser("verify", help="run the exhaustive small-instance property suites")
    ver.add_argument("--case", choices=checks.CASES, help="reproduce one worked example only")
    ver.add_argument(
        "--suite",
        choices=("all", "kappa-delta", "lemmas", "policies", "order", "cases"),
        default="all",
    )
    return parser


def config_from_args(args: argparse.Namespace, default_horizon: int, default_seeds: str, policy: str) -> ExperimentConfig:
    """Environment flags (optionally filled from a preset's first panel) as a config."""
    panel = None
    if args.preset:
        preset = get_preset(args.preset)
        panel = preset.panels[0]
    L = args.queues if args.queues is not None else (panel.queues if panel else None)
    K = args.servers if args.servers is not None else (panel.servers if panel else None)
    p = args.conn_prob if args.conn_prob is not None else (panel.conn_prob if panel else None)
    missing = [n for n, v in (("--queues", L), ("--servers", K), ("--conn-prob", p)) if v is None]
    if missing:
        raise UsageError(f"missing {', '.join(missing)} (or give --preset)")
    if args.batch_prob is not None:
        if args.batch_max is None:
            raise UsageError("--batch-prob needs --batch-max")
        traffic = BatchTraffic(args.batch_prob, args.batch_max)
    elif args.batch_max is not None:
        raise UsageError("--batch-max needs --batch-prob")
    elif args.arrival_rate is not None:
        traffic = BernoulliTraffic(args.arrival_rate)
    else:
        traffic = BernoulliTraffic(round(DEFAULT_LOAD_FRACTION * stability_bound(L, K, p), 6))
    horizon = args.horizon if args.horizon is not None else default_horizon
    seeds = parse_seeds(args.seeds if args.seeds is not None else default_seeds)
    return ExperimentConfig(L, K, p, traffic, horizon, seeds, policy, args.warmup)


def config_to_flags(cfg: ExperimentConfig) -> List[str]:
    """Canonical ``run`` flags that rebuild ``cfg`` exactly."""
    flags = ["--queues", str(cfg.queues), "--servers", str(cfg.servers), "--conn-prob", repr(cfg.conn_prob)]
    if isinstance(cfg.traffic, BatchTraffic):
        flags += ["--batch-prob", repr(cfg.traffic.prob), "--batch-max", str(cfg.traffic.max_size)]
    else:
        flags += ["--arrival-rate", repr(cfg.traffic.rate)]
    flags += [
        "--policy", cfg.policy,
        "--horizon", str(cfg.horizon),
        "--warmup", str(cfg.warmup),
        "--seeds", format_seeds(cfg.seeds),
    ]
    return flags


def parse_run_flags(flags: Sequence[str]) -> ExperimentConfig:
    args = build_parser().parse_args(["run", *flags])
    return config_from_args(args, 2000, "1", args.policy or "lcsf-lcq")


# ---------------------------------------------------------------------------
# output


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class OutputDir:
    """Collects emitted files so the manifest can list every one with its hash."""

    def __init__(self, path: str):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.files: Dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode()
        (self.path / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def manifest(self, command: List[str], preset: Optional[str]) -> dict:
        m = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "preset": preset,
            "files": [{"name": n, "sha256": h} for n, h in sorted(self.files.items())],
        }
        self.write("manifest.json", _dumps(m))
        return m


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _point(cfg: ExperimentConfig, jobs: int, keep_trace: bool = False):
    runs = run_seeds(cfg, keep_trace=keep_trace, jobs=jobs)
    return summarize(cfg, runs), runs


def _csv_row(cfg: ExperimentConfig, m) -> list:
    return [cfg.policy, cfg.queues, cfg.servers, repr(cfg.conn_prob), repr(cfg.load), format_seeds(cfg.seeds),
            repr(m.eq), repr(m.ci_half_width), repr(m.throughput)]


def _point_json(cfg: ExperimentConfig, m) -> dict:
    return {
        "config": cfg.to_dict(),
        "load": cfg.load,
        "stability_bound": stability_bound(cfg.queues, cfg.servers, cfg.conn_prob),
        "metrics": m.to_dict(),
    }


def _emit_error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True), file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def cmd_run(args: argparse.Namespace, argv: List[str]) -> int:
    out = OutputDir(args.out)
    if args.preset and args.queues is None and args.servers is None and args.conn_prob is None:
        return _run_preset(args, argv, out)
    if args.policies or args.loads:
        raise UsageError("--policies/--loads apply to preset sweeps only")
    cfg = config_from_args(args, 2000, "1", args.policy or "lcsf-lcq")
    require_enumerable(cfg.policy, cfg.queues, cfg.servers)
    m, runs = _point(cfg, args.jobs, keep_trace=args.trace)
    out.write("metrics.json", _dumps({"schema_version": SCHEMA_VERSION, "kind": "run", **_point_json(cfg, m)}))
    out.write("results.csv", _csv_text(CSV_HEADER, [_csv_row(cfg, m)]))
    if args.trace:
        rows = ([t.slot, t.seed, t.total_occupancy, t.kappa, t.served] for r in runs for t in r.trace)
        out.write("trace.csv", _csv_text(TRACE_HEADER, rows))
    out.manifest(["run", *config_to_flags(cfg)], None)
    print(f"EQ={m.eq:.6g} +/- {m.ci_half_width:.3g}  throughput={m.throughput:.6g}  -> {out.path}")
    return EXIT_OK


def _run_preset(args: argparse.Namespace, argv: List[str], out: OutputDir) -> int:
    preset = get_preset(args.preset)
    if args.trace:
        raise UsageError("--trace is only available for a single configuration")
    if args.arrival_rate is not None or args.batch_prob is not None:
        raise UsageError("use --loads to choose the loads of a preset sweep")
    policies = tuple(args.policies.split(",")) if args.policies else ((args.policy,) if args.policy else preset.policies)
    for pol in policies:
        if pol not in POLICIES:
            raise UsageError(f"unknown policy {pol!r}")
    horizon = args.horizon or preset.horizon
    seeds = parse_seeds(args.seeds or preset.seeds)
    loads = tuple(float(v) for v in args.loads.split(",")) if args.loads else None
    rows, points = [], []
    for panel in preset.panels:
        for pol in policies:
            require_enumerable(pol, panel.queues, panel.servers)
        for load in loads or panel.loads:
            traffic = _traffic_for_load(load, panel.batch_max)
            for pol in policies:
                cfg = ExperimentConfig(panel.queues, panel.servers, panel.conn_prob, traffic, horizon, seeds, pol, args.warmup)
                m, _ = _point(cfg, args.jobs)
                rows.append(_csv_row(cfg, m))
                points.append({"policy": pol, **_point_json(cfg, m)})
                print(f"{pol:>9} L={cfg.queues} K={cfg.servers} p={cfg.conn_prob} load={cfg.load:.4g}  EQ={m.eq:.6g}")
    out.write("results.csv", _csv_text(CSV_HEADER, rows))
    out.write(
        "metrics.json",
        _dumps({
            "schema_version": SCHEMA_VERSION,
            "kind": "sweep",
            "preset": preset.name,
            "figure": preset.figure,
            "description": preset.description,
            "points": points,
        }),
    )
    command = ["run", "--preset", preset.name, "--policies", ",".join(policies), "--horizon", str(horizon),
               "--seeds", format_seeds(seeds)]
    if loads:
        command += ["--loads", ",".join(repr(v) for v in loads)]
    if args.warmup is not None:
        command += ["--warmup", str(args.warmup)]
    out.manifest(command, preset.name)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, argv: List[str]) -> int:
    cfg = config_from_args(args, 500, "1..200", args.policy_a)
    for pol in (args.policy_a, args.policy_b):
        require_enumerable(pol, cfg.queues, cfg.servers)
    report = empirical_dominance(
        args.policy_a, args.policy_b, COSTS[args.cost], cfg,
        n_times=args.times, tolerance=args.tolerance, threshold=args.threshold, jobs=args.jobs,
    )
    out = OutputDir(args.out)
    out.write("dominance.json", _dumps(report.to_dict()))
    flags = config_to_flags(cfg)
    i = flags.index("--policy")
    del flags[i:i + 2]
    out.manifest(["compare", args.policy_a, args.policy_b, *flags, "--cost", args.cost, "--times", str(args.times),
                  "--tolerance", repr(args.tolerance), "--threshold", repr(args.threshold)], args.preset)
    print(f"{args.policy_a} vs {args.policy_b}: fraction={report.fraction:.4f} over {report.points} points "
          f"(identical={report.identical}) -> {out.path / 'dominance.json'}")
    if args.assert_threshold is not None:
        thresh = args.threshold if args.assert_threshold < 0 else args.assert_threshold
        if report.fraction < thresh:
            _emit_error("assertion", f"dominance fraction {report.fraction:.4f} below {thresh}", fraction=report.fraction)
            return EXIT_PROPERTY
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, argv: List[str]) -> int:
    if args.case:
        suites = [("cases", lambda: checks.case_suite(args.case))]
    else:
        table = {
            "kappa-delta": lambda: [checks.kappa_delta_suite()],
            "lemmas": checks.lemma_suite,
            "policies": checks.policy_suite,
            "order": checks.order_suite,
            "cases": lambda: [r for c in checks.CASES for r in checks.case_suite(c)],
        }
        suites = [(k, f) for k, f in table.items() if args.suite in ("all", k)]
    results = []
    for name, fn in suites:
        t0 = time.perf_counter()
        rs = fn()
        for r in rs:
            print(r.row())
            for inst in r.failures if not r.passed else ():
                print(f"      failing instance: {inst}")
        print(f"      [{name}: {time.perf_counter() - t0:.1f}s]")
        results += rs
    ok = checks.all_passed(results)
    print("ALL PASS" if ok else "FAILURES PRESENT")
    if not ok:
        first = next(r for r in results if not r.passed)
        _emit_error("property", f"{first.name} failed", instance=first.failures[0] if first.failures else None)
    return EXIT_OK if ok else EXIT_PROPERTY


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except EnumerationCapExceeded as e:
        _emit_error("enumeration_cap", str(e), candidates=e.candidates)
        return EXIT_CAP
    except (UsageError, ValueError) as e:
        _emit_error("usage", str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

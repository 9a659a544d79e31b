"""Slotted-time simulation of L queues served by K randomly connected servers.

Each slot: observe ``(X, G)``, let the policy pick a control, withdraw, then
add arrivals.  Randomness is split per seed into three independent streams
(connectivity, arrivals, policy) so that different policies run on identical
environments; connectivity and arrivals are drawn in fixed-size blocks that
do not depend on the policy.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .imbalance import kappa
from .policies import get_policy

SCHEMA_VERSION = 1
BLOCK = 512


@dataclass(frozen=True)
class BernoulliTraffic:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"arrival rate must be in [0, 1], got {self.rate}")

    @property
    def mean_rate(self) -> float:
        return self.rate

    def draw(self, rng: np.random.Generator, slots: int, queues: int) -> np.ndarray:
        return (rng.random((slots, queues)) < self.rate).astype(np.int64)

    def describe(self) -> dict:
        return {"kind": "bernoulli", "rate": self.rate, "load_definition": "per-queue arrival probability"}


@dataclass(frozen=True)
class BatchTraffic:
    """A batch arrives w.p. ``prob``; its size is uniform on 1..max_size."""

    prob: float
    max_size: int

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"batch probability must be in [0, 1], got {self.prob}")
        if self.max_size < 1:
            raise ValueError("max batch size must be at least 1")

    @property
    def mean_rate(self) -> float:
        return self.prob * (self.max_size + 1) / 2

    def draw(self, rng: np.random.Generator, slots: int, queues: int) -> np.ndarray:
        occurs = rng.random((slots, queues)) < self.prob
        sizes = rng.integers(1, self.max_size + 1, size=(slots, queues))
        return np.where(occurs, sizes, 0).astype(np.int64)

    def describe(self) -> dict:
        return {
            "kind": "batch",
            "prob": self.prob,
            "max_size": self.max_size,
            "load_definition": "per-queue offered load prob * (max_size + 1) / 2",
        }


Traffic = Union[BernoulliTraffic, BatchTraffic]


@dataclass(frozen=True)
class ExperimentConfig:
    queues: int
    servers: int
    conn_prob: float
    traffic: Traffic
    horizon: int
    seeds: Tuple[int, ...] = (1,)
    policy: str = "lcsf-lcq"
    warmup: Optional[int] = None

    def __post_init__(self):
        if self.queues < 1 or self.servers < 1:
            raise ValueError("need at least one queue and one server")
        if not 0.0 <= self.conn_prob <= 1.0:
            raise ValueError(f"connectivity probability must be in [0, 1], got {self.conn_prob}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be nonnegative")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must satisfy 0 <= warmup < horizon")
        get_policy(self.policy)

    @property
    def load(self) -> float:
        return self.traffic.mean_rate

    def with_policy(self, policy: str) -> "ExperimentConfig":
        return ExperimentConfig(
            self.queues, self.servers, self.conn_prob, self.traffic, self.horizon, self.seeds, policy, self.warmup
        )

    def to_dict(self) -> dict:
        return {
            "queues": self.queues,
            "servers": self.servers,
            "conn_prob": self.conn_prob,
            "traffic": self.traffic.describe(),
            "horizon": self.horizon,
            "warmup": self.warmup,
            "seeds": list(self.seeds),
            "policy": self.policy,
        }


@dataclass(frozen=True)
class SlotTrace:
    slot: int
    seed: int
    x: Tuple[int, ...]
    y: Tuple[int, ...]
    q: Tuple[int, ...]
    z: Tuple[int, ...]
    kappa: int
    total_occupancy: int
    served: int


@dataclass
class SeedRun:
    seed: int
    occupancy: np.ndarray
    served: np.ndarray
    states: Optional[np.ndarray] = None
    trace: Optional[List[SlotTrace]] = None


@dataclass(frozen=True)
class MetricsSummary:
    eq: float
    per_seed_eq: Tuple[float, ...]
    ci_half_width: float
    throughput: float
    per_seed_throughput: Tuple[float, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_seed_eq"] = list(self.per_seed_eq)
        d["per_seed_throughput"] = list(self.per_seed_throughput)
        return d


def stability_bound(queues: int, servers: int, conn_prob: float) -> float:
    """Per-queue arrival rate above which no policy can keep the system stable."""
    if queues < 1 or servers < 1:
        raise ValueError("need at least one queue and one server")
    if not 0.0 <= conn_prob <= 1.0:
        raise ValueError("connectivity probability must be in [0, 1]")
    return servers / queues * (1.0 - (1.0 - conn_prob) ** queues)


def _streams(seed: int):
    return tuple(np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))) for i in range(3))


def simulate_seed(cfg: ExperimentConfig, seed: int, keep_states: bool = False, keep_trace: bool = False) -> SeedRun:
    """One replication from an empty system."""
    L, K, p = cfg.queues, cfg.servers, cfg.conn_prob
    kernel = get_policy(cfg.policy).kernel
    g_rng, z_rng, pol_rng = _streams(seed)
    horizon = cfg.horizon
    occupancy = np.empty(horizon, dtype=np.int64)
    served = np.empty(horizon, dtype=np.int64)
    states = np.empty((horizon, L), dtype=np.int64) if keep_states else None
    trace: Optional[List[SlotTrace]] = [] if keep_trace else None
    dummy_row = [1] * K
    x = [0] * (L + 1)
    n = 0
    while n < horizon:
        conn = (g_rng.random((BLOCK, L, K)) < p).astype(np.int8)
        arrivals = cfg.traffic.draw(z_rng, BLOCK, L)
        for b in range(min(BLOCK, horizon - n)):
            g = [dummy_row, *conn[b].tolist()]
            total = sum(x)
            occupancy[n] = total
            if keep_states:
                states[n] = x[1:]
            q = kernel(x, g, pol_rng)
            done = 0
            x_before = tuple(x) if keep_trace else None
            for i in q:
                if i:
                    x[i] -= 1
                    done += 1
            if x and min(x) < 0:
                raise RuntimeError(f"policy {cfg.policy} withdrew from an empty queue at slot {n + 1}")
            served[n] = done
            z = arrivals[b].tolist()
            if keep_trace:
                y = [0] * (L + 1)
                for i in q:
                    y[i] += 1
                xhat = [-y[0], *x[1:]]
                trace.append(
                    SlotTrace(
                        slot=n + 1,
                        seed=seed,
                        x=x_before,
                        y=tuple(y),
                        q=tuple(q),
                        z=(y[0], *z),
                        kappa=kappa(xhat),
                        total_occupancy=total,
                        served=done,
                    )
                )
            for i in range(L):
                x[i + 1] += z[i]
            n += 1
    return SeedRun(seed, occupancy, served, states, trace)


def _simulate_job(args):
    cfg, seed, keep_states, keep_trace = args
    return simulate_seed(cfg, seed, keep_states, keep_trace)


def run_seeds(cfg: ExperimentConfig, keep_states: bool = False, keep_trace: bool = False, jobs: int = 1) -> List[SeedRun]:
    """All replications of ``cfg``, returned in seed order."""
    work = [(cfg, s, keep_states, keep_trace) for s in cfg.seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_simulate_job, work))
    return [_simulate_job(w) for w in work]


def summarize(cfg: ExperimentConfig, runs: Sequence[SeedRun]) -> MetricsSummary:
    w = cfg.warmup
    per_eq = tuple(float(r.occupancy[w:].mean()) for r in runs)
    per_tp = tuple(float(r.served[w:].mean()) for r in runs)
    eq = math.fsum(per_eq) / len(per_eq)
    return MetricsSummary(
        eq=eq,
        per_seed_eq=per_eq,
        ci_half_width=ci_half_width(per_eq),
        throughput=math.fsum(per_tp) / len(per_tp),
        per_seed_throughput=per_tp,
    )


def ci_half_width(values: Sequence[float], level: float = 0.95) -> float:
    """Student-t half width of the mean; 0 for fewer than two values."""
    n = len(values)
    if n < 2:
        return 0.0
    sd = float(np.std(values, ddof=1))
    return float(stats.t.ppf(0.5 + level / 2, n - 1)) * sd / math.sqrt(n)


def run(cfg: ExperimentConfig, trace: bool = False, jobs: int = 1) -> Tuple[MetricsSummary, Optional[List[SlotTrace]]]:
    runs = run_seeds(cfg, keep_trace=trace, jobs=jobs)
    traces = [t for r in runs for t in r.trace] if trace else None
    return summarize(cfg, runs), traces


@dataclass(frozen=True)
class Trend:
    mean_slope: float
    lower: float
    upper: float
    per_seed_slope: Tuple[float, ...]

    @property
    def positive(self) -> bool:
        """Slope above zero at the one-sided confidence level."""
        return self.lower > 0.0


def occupancy_trend(runs: Sequence[SeedRun], start_fraction: float = 0.5, level: float = 0.95) -> Trend:
    """Least-squares slope of total occupancy over the tail of each run.

    Seeds are independent, so the interval is a t-interval over the per-seed
    slopes; ``lower`` and ``upper`` are one-sided bounds at ``level``.
    """
    slopes = []
    for r in runs:
        start = int(len(r.occupancy) * start_fraction)
        tail = r.occupancy[start:].astype(float)
        t = np.arange(len(tail), dtype=float)
        slopes.append(float(np.polyfit(t, tail, 1)[0]))
    mean = float(np.mean(slopes))
    if len(slopes) < 2:
        return Trend(mean, mean, mean, tuple(slopes))
    half = float(stats.t.ppf(level, len(slopes) - 1)) * float(np.std(slopes, ddof=1)) / math.sqrt(len(slopes))
    return Trend(mean, mean - half, mean + half, tuple(slopes))

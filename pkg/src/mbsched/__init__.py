"""Scheduling parallel queues on randomly connected servers: imbalance-index
policies, exhaustive property checks and a seeded simulator."""

from .core import ContractViolation, SystemState, evolve, implement_withdrawal, is_feasible_withdrawal
from .imbalance import kappa, kappa_delta, updated_queue_sizes
from .interchange import Interchange, ReallocationPath, convert_to_mb, find_reallocation_path
from .order import CostFunction, empirical_dominance, preferred_leq
from .policies import POLICIES, EnumerationCapExceeded, get_policy, lb_bruteforce, mb_bruteforce
from .sim import BatchTraffic, BernoulliTraffic, ExperimentConfig, run, stability_bound

__version__ = "0.1.0"

"""Learning-augmented preemptive FIFO buffer management: simulator, policies, offline optimum."""
from .engine import PolicyDecision, PolicyViolation, simulate
from .metrics import ErrorReport, RunRecord, bound_suite, prediction_error
from .model import ArrivalSequence, BufferState, Packet, Schedule, Trace, ValidationError, prefix_value, validate_sequence
from .offline import OptResult, opt_bruteforce, opt_dp, opt_from_arrivals_only
from .policies import (PG_BETA, SQRT3, FollowPrediction, Greedy, GuardedPolicy, PreemptiveGreedy,
                       make_policy)

__all__ = [
    "ArrivalSequence", "BufferState", "ErrorReport", "FollowPrediction", "Greedy", "GuardedPolicy",
    "OptResult", "PG_BETA", "Packet", "PolicyDecision", "PolicyViolation", "PreemptiveGreedy",
    "RunRecord", "SQRT3", "Schedule", "Trace", "ValidationError", "bound_suite", "make_policy",
    "opt_bruteforce", "opt_dp", "opt_from_arrivals_only", "prediction_error", "prefix_value",
    "simulate", "validate_sequence",
]

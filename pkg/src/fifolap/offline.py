"""Exact offline optimum, plus an exhaustive oracle for small instances.

Offline, preemption is never needed: a packet that would later be
preempted can be rejected on arrival instead, and dropping packets only
lowers occupancy. Feasibility of an accept set therefore depends only on
per-step counts, which the DP tracks as buffer occupancy.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate

from .engine import ACCEPT_ONLY, REJECT_ONLY, Policy, PolicyViolation, simulate
from .model import ArrivalSequence, BufferState, Packet, Schedule

BRUTEFORCE_LIMIT = 22
TIE_BREAKS = ("canonical", "alternate")


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OptResult:
    value: int
    accepted_ids: frozenset[int]
    schedule: Schedule


class AcceptSet(Policy):
    """Accept exactly the packets in ``ids``.

    Residents of the initial buffer outside ``ids`` are discarded at the
    start of step 1. Accepting into a full buffer is left to the engine to
    reject, which is how infeasible sets are detected.
    """

    name = "accept-set"

    def __init__(self, ids):
        self.ids = frozenset(ids)

    def on_step_start(self, step, buffer):
        if step == 1:
            return tuple(p.id for p in buffer.queue if p.id not in self.ids)
        return ()

    def on_arrival(self, packet, buffer, step):
        return ACCEPT_ONLY if packet.id in self.ids else REJECT_ONLY


def _order(tie_break: str):
    if tie_break == "canonical":
        return lambda p: (-p.value, p.id)
    if tie_break == "alternate":
        return lambda p: (-p.value, -p.id)
    raise ValueError(f"unknown tie_break {tie_break!r}; expected one of {TIE_BREAKS}")


def opt_dp(seq: ArrivalSequence, initial: BufferState | None = None, tie_break: str = "canonical") -> OptResult:
    """Maximum transmitted value over all feasible schedules, with one optimal schedule.

    States are (step, occupancy at end of step). Accepting ``m`` of a step's
    arrivals is best done with the ``m`` most valuable ones. Backtracking
    prefers the larger acceptance count (``canonical``) or the smaller one
    (``alternate``); within a step, equal values are broken by lower id
    (``canonical``) or higher id (``alternate``).
    """
    cap = seq.capacity
    key = _order(tie_break)
    prefer_more = tie_break == "canonical"
    residents = tuple(initial.queue) if initial is not None else ()
    if initial is not None and initial.capacity != cap:
        raise ValueError("initial buffer capacity differs from the sequence capacity")

    res_sorted = sorted(residents, key=key)
    res_gain = [0, *accumulate(p.value for p in res_sorted)]
    ranked = [sorted(step, key=key) for step in seq.steps]
    gains = [[0, *accumulate(p.value for p in r)] for r in ranked]

    # best[t][o]: max gain with occupancy o at the end of step t (t=0: before step 1)
    best: list[list[int | None]] = [[None] * (cap + 1)]
    for j in range(len(residents) + 1):
        best[0][j] = res_gain[j]
    for t, g in enumerate(gains, start=1):
        prev = best[-1]
        cur: list[int | None] = [None] * (cap + 1)
        k = len(g) - 1
        for o, base in enumerate(prev):
            if base is None:
                continue
            for m in range(min(k, cap - o) + 1):
                occ = o + m
                end = occ - 1 if occ > 0 else 0
                val = base + g[m]
                if cur[end] is None or val > cur[end]:
                    cur[end] = val
        best.append(cur)

    value = best[-1][0]
    # backtrack from occupancy 0 at the end of step T
    accepted: list[Packet] = []
    e = 0
    for t in range(seq.T, 0, -1):
        g = gains[t - 1]
        prev = best[t - 1]
        target = best[t][e]
        candidates = []
        for occ in ((0, 1) if e == 0 else (e + 1,)):
            if occ > cap:
                continue
            for m in range(min(len(g) - 1, occ) + 1):
                o = occ - m
                if prev[o] is not None and prev[o] + g[m] == target:
                    candidates.append((m, o))
        if not candidates:
            raise AssertionError(f"DP backtrack failed at step {t}")
        m, o = max(candidates) if prefer_more else min(candidates)
        accepted.extend(ranked[t - 1][:m])
        e = o
    kept = [p for p in res_sorted[:e]] if best[0][e] is not None else None
    if kept is None or best[0][e] != res_gain[e]:
        raise AssertionError("DP backtrack ended in an unreachable initial state")
    accepted.extend(kept)

    ids = frozenset(p.id for p in accepted)
    trace = simulate(AcceptSet(ids), seq, initial)
    if trace.value != value or trace.schedule.ids() != ids:
        raise AssertionError("replay of the optimal accept set does not reproduce the DP value")
    return OptResult(value, ids, trace.schedule)


def _check_size(seq: ArrivalSequence, initial: BufferState | None) -> tuple[list[Packet], list[Packet]]:
    residents = list(initial.queue) if initial is not None else []
    arrivals = seq.packets()
    n = len(residents) + len(arrivals)
    if n > BRUTEFORCE_LIMIT:
        raise InstanceTooLarge(f"{n} packets exceeds the brute-force limit of {BRUTEFORCE_LIMIT}")
    return residents, arrivals


def _enumerate(seq: ArrivalSequence, initial: BufferState | None, counted: set[int] | None) -> int:
    residents, arrivals = _check_size(seq, initial)
    pool = residents + arrivals
    n = len(pool)
    weight = [p.value if counted is None or p.id in counted else 0 for p in pool]
    # subset weight sums, built incrementally by lowest set bit
    sums = [0] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + weight[low.bit_length() - 1]
    best = 0
    for mask in sorted(range(1 << n), key=sums.__getitem__, reverse=True):
        if sums[mask] <= best:
            break  # no remaining subset can beat the incumbent
        ids = [pool[i].id for i in range(n) if mask >> i & 1]
        try:
            trace = simulate(AcceptSet(ids), seq, initial)
        except PolicyViolation:
            continue
        got = sum(p.value for p in trace.schedule.packets() if counted is None or p.id in counted)
        best = max(best, got)
    return best


def opt_bruteforce(seq: ArrivalSequence, initial: BufferState | None = None) -> int:
    """Best transmitted value over every keep/accept subset replayed through the engine."""
    return _enumerate(seq, initial, None)


def opt_from_arrivals_only(seq: ArrivalSequence, initial: BufferState | None = None) -> int:
    """Best value counting only packets that arrive in ``seq``.

    Residents of ``initial`` may be kept (occupying slots) or discarded, but
    never add to the total.
    """
    return _enumerate(seq, initial, {p.id for p in seq.packets()})

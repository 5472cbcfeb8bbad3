"""Online admission policies.

``Greedy`` and ``PreemptiveGreedy`` are the classical baselines.
``FollowPrediction`` replays the offline optimum of a predicted sequence.
``GuardedPolicy`` follows the prediction while it keeps up with both the
predicted optimum and a virtual baseline, and otherwise clears the buffer
and hands over, permanently, to a fresh baseline instance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .engine import ACCEPT, ACCEPT_ONLY, CLEAR, REJECT_ONLY, OnlineRun, Policy, PolicyDecision
from .model import ArrivalSequence, BufferState, Packet
from .offline import OptResult, opt_dp

SQRT3 = math.sqrt(3.0)
PG_BETA = 2.0 + SQRT3


def _cheapest(buffer: BufferState) -> Packet | None:
    # min value, ties go to the packet closest to the head
    best = None
    for p in buffer.queue:
        if best is None or p.value < best.value:
            best = p
    return best


def greedy_decide(p: Packet, buffer: BufferState) -> PolicyDecision:
    if len(buffer.queue) < buffer.capacity:
        return ACCEPT_ONLY
    q = _cheapest(buffer)
    if q is not None and q.value < p.value:
        return PolicyDecision(ACCEPT, (q.id,))
    return REJECT_ONLY


@dataclass(frozen=True)
class PGParams:
    beta: float = PG_BETA

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError(f"beta must be > 1, got {self.beta}")


def pg_decide(p: Packet, buffer: BufferState, params: PGParams = PGParams()) -> PolicyDecision:
    """Preemptive greedy: drop the head-most resident worth at most v(p)/beta, then admit greedily."""
    queue = buffer.queue
    for q in queue:
        if params.beta * q.value <= p.value:
            rest = BufferState(buffer.capacity, tuple(r for r in queue if r is not q))
            d = greedy_decide(p, rest)
            return PolicyDecision(d.action, (q.id, *d.preemptions))
    return greedy_decide(p, buffer)


class Greedy(Policy):
    name = "greedy"
    competitive_ratio = 2.0

    def on_arrival(self, packet, buffer, step):
        return greedy_decide(packet, buffer)


class PreemptiveGreedy(Policy):
    name = "pg"

    def __init__(self, beta: float = PG_BETA):
        self.params = PGParams(beta)

    @property
    def competitive_ratio(self) -> float | None:
        # only the 2+sqrt(3) setting carries the sqrt(3) guarantee
        return SQRT3 if self.params.beta == PG_BETA else None

    def on_arrival(self, packet, buffer, step):
        return pg_decide(packet, buffer, self.params)


def follow_prediction_decide(p: Packet, buffer: BufferState, predicted_accept) -> PolicyDecision:
    if p.id not in predicted_accept:
        return REJECT_ONLY
    if len(buffer.queue) < buffer.capacity:
        return ACCEPT_ONLY
    # overflow only happens when the prediction got the timing wrong
    q = _cheapest(buffer)
    if q is not None and q.value < p.value:
        return PolicyDecision(ACCEPT, (q.id,))
    return REJECT_ONLY


def _predicted_opt(prediction: ArrivalSequence | OptResult) -> OptResult:
    if isinstance(prediction, OptResult):
        return prediction
    return opt_dp(prediction)


class FollowPrediction(Policy):
    """Accept exactly what the offline optimum of the prediction accepts."""

    name = "follow"

    def __init__(self, prediction: ArrivalSequence | OptResult):
        self.predicted = _predicted_opt(prediction)
        self.accept = self.predicted.accepted_ids

    def on_arrival(self, packet, buffer, step):
        return follow_prediction_decide(packet, buffer, self.accept)


@dataclass
class StepCheck:
    """What the guard saw at the end of one step."""

    step: int
    predicted_prefix: int
    cum_alg: int
    cum_fallback: int
    fired: str | None = None


@dataclass
class GuardState:
    switched: bool = False
    switch_step: int | None = None
    switch_reason: str | None = None
    cum_alg: int = 0
    cum_fallback: int = 0


FallbackFactory = Callable[[], Policy]


def _fallback_ratio(factory: FallbackFactory) -> float | None:
    return getattr(factory(), "competitive_ratio", None)


class GuardedPolicy(Policy):
    """Follow the prediction; switch permanently to a fallback when it falls behind.

    At the end of each step ``i`` (before any switch) two checks run:

    * prediction consistency: ``predicted_prefix(i) > rho * cum_alg(i)``
    * baseline: ``cum_fallback(i) > cum_alg(i)``, where ``cum_fallback`` is
      the value of a virtual fallback instance running on the true arrivals
      from step 1 on its own buffer.

    If either fires, the physical buffer is cleared at the end of step ``i``
    and a fresh fallback instance, started on the empty buffer, makes every
    decision from step ``i + 1`` on.

    ``fallback`` is a zero-argument factory; ``beta`` defaults to the
    fallback's ``competitive_ratio`` and bounds the admissible ``rho``.
    """

    name = "guarded"

    def __init__(
        self,
        prediction: ArrivalSequence | OptResult,
        rho: float = SQRT3,
        fallback: FallbackFactory = PreemptiveGreedy,
        beta: float | None = None,
    ):
        if beta is None:
            beta = _fallback_ratio(fallback)
            if beta is None:
                raise ValueError("fallback declares no competitive ratio; pass beta explicitly")
        if not 1.0 <= rho <= beta:
            raise ValueError(f"rho must lie in [1, {beta:.6g}], got {rho}")
        self.rho = float(rho)
        self.beta = float(beta)
        self.fallback_factory = fallback
        self.predicted = _predicted_opt(prediction)
        self._predicted_cum = self.predicted.schedule.cumulative(
            max((t for t, _ in self.predicted.schedule.entries), default=0)
        )
        self.follow = FollowPrediction(self.predicted)
        self.name = f"guarded:{getattr(fallback(), 'name', 'custom')}"

    def predicted_prefix(self, step: int) -> int:
        cum = self._predicted_cum
        return cum[min(step, len(cum) - 1)]

    def start(self, capacity):
        self.capacity = capacity
        self.state = GuardState()
        self.checks: list[StepCheck] = []
        self.virtual = OnlineRun(self.fallback_factory(), capacity)
        self.active: Policy = self.follow
        self.follow.start(capacity)

    @property
    def switched(self) -> bool:
        return self.state.switched

    @property
    def switch_step(self) -> int | None:
        return self.state.switch_step

    def on_step_start(self, step, buffer):
        self.virtual.begin_step()
        return self.active.on_step_start(step, buffer)

    def on_arrival(self, packet, buffer, step):
        self.virtual.offer(packet)
        return self.active.on_arrival(packet, buffer, step)

    def on_step_end(self, step, transmitted):
        self.virtual.end_step()
        st = self.state
        st.cum_fallback = self.virtual.cum_value
        if transmitted is not None:
            st.cum_alg += transmitted.value
        if st.switched:
            return self.active.on_step_end(step, transmitted)
        check = StepCheck(step, self.predicted_prefix(step), st.cum_alg, st.cum_fallback)
        if check.predicted_prefix > self.rho * st.cum_alg:
            check.fired = "prediction"
        elif st.cum_fallback > st.cum_alg:
            check.fired = "baseline"
        self.checks.append(check)
        if check.fired is None:
            return self.active.on_step_end(step, transmitted)
        st.switched = True
        st.switch_step = step + 1
        st.switch_reason = check.fired
        self.active = self.fallback_factory()
        self.active.start(self.capacity)
        return CLEAR


def make_policy(spec: str, prediction: ArrivalSequence | OptResult | None = None,
                rho: float = SQRT3, beta: float = PG_BETA) -> Policy:
    """Build a policy from a CLI selection string: greedy, pg, follow, guarded:pg, guarded:greedy."""
    if spec == "greedy":
        return Greedy()
    if spec == "pg":
        return PreemptiveGreedy(beta)
    if spec in ("follow", "guarded:pg", "guarded:greedy") and prediction is None:
        raise ValueError(f"policy {spec!r} needs a prediction")
    if spec == "follow":
        return FollowPrediction(prediction)
    if spec == "guarded:pg":
        if beta == PG_BETA:
            return GuardedPolicy(prediction, rho, PreemptiveGreedy)
        # non-default beta: keep the sqrt(3) range for rho, no guarantee implied
        return GuardedPolicy(prediction, rho, lambda: PreemptiveGreedy(beta), beta=SQRT3)
    if spec == "guarded:greedy":
        return GuardedPolicy(prediction, rho, Greedy)
    raise ValueError(f"unknown policy {spec!r}")

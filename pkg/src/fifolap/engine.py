"""Two-phase time-step simulator for FIFO buffer admission policies.

Each step first offers the step's arrivals to the policy one at a time
(accept / reject, with optional preemption of residents), then transmits
the head of the buffer. Policies may also discard residents at the start
of a step and may ask for the buffer to be cleared at the end of a step.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import ArrivalSequence, BufferState, Packet, Schedule, StepRecord, Trace

ACCEPT = "accept"
REJECT = "reject"
CLEAR = "clear"


class PolicyViolation(RuntimeError):
    def __init__(self, message: str, step: int | None = None, packet_id: int | None = None):
        where = []
        if step is not None:
            where.append(f"step {step}")
        if packet_id is not None:
            where.append(f"packet {packet_id}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.step = step
        self.packet_id = packet_id


@dataclass(frozen=True)
class PolicyDecision:
    action: str
    preemptions: tuple[int, ...] = ()

    def __post_init__(self):
        if self.action not in (ACCEPT, REJECT):
            raise ValueError(f"unknown action {self.action!r}")
        object.__setattr__(self, "preemptions", tuple(self.preemptions))

    @property
    def accepted(self) -> bool:
        return self.action == ACCEPT


ACCEPT_ONLY = PolicyDecision(ACCEPT)
REJECT_ONLY = PolicyDecision(REJECT)


class Policy:
    """Online admission policy.

    Subclasses override ``on_arrival``; the other hooks default to no-ops.
    A policy sees only the arriving packet, the current buffer and the step
    number, never later arrivals.
    """

    name = "policy"

    def start(self, capacity: int) -> None:
        """Called once before step 1."""

    def on_step_start(self, step: int, buffer: BufferState) -> tuple[int, ...]:
        """Ids of residents to discard before the step's arrivals."""
        return ()

    def on_arrival(self, packet: Packet, buffer: BufferState, step: int) -> PolicyDecision:
        raise NotImplementedError

    def on_step_end(self, step: int, transmitted: Packet | None) -> str | None:
        """Return ``CLEAR`` to empty the buffer at the end of this step."""
        return None


def _discard(queue: tuple[Packet, ...], ids, step: int | None, packet_id: int | None) -> tuple[Packet, ...]:
    drop = set(ids)
    if len(drop) != len(ids):
        raise PolicyViolation("preemption list repeats an id", step, packet_id)
    present = {p.id for p in queue}
    missing = drop - present
    if missing:
        raise PolicyViolation(f"preempting ids not in buffer: {sorted(missing)}", step, packet_id)
    return tuple(p for p in queue if p.id not in drop)


def apply_decision(buffer: BufferState, packet: Packet, d: PolicyDecision, step: int | None = None) -> BufferState:
    """Remove the preempted residents, then enqueue ``packet`` at the tail if accepted."""
    queue = _discard(buffer.queue, d.preemptions, step, packet.id) if d.preemptions else buffer.queue
    if d.action == ACCEPT:
        if len(queue) >= buffer.capacity:
            raise PolicyViolation("accepting into a full buffer", step, packet.id)
        queue = queue + (packet,)
    return BufferState(buffer.capacity, queue)


def transmit_head(buffer: BufferState) -> tuple[BufferState, Packet | None]:
    if not buffer.queue:
        return buffer, None
    return BufferState(buffer.capacity, buffer.queue[1:]), buffer.queue[0]


class OnlineRun:
    """Incremental simulation: drive it step by step, or use ``simulate``.

    Guarded policies use this to keep a virtual baseline running alongside
    the physical buffer.
    """

    def __init__(self, policy: Policy, capacity: int, initial: BufferState | None = None):
        if initial is None:
            initial = BufferState(capacity)
        if initial.capacity != capacity:
            raise ValueError(f"initial buffer capacity {initial.capacity} != {capacity}")
        self.policy = policy
        self.buffer = initial
        self.initial = initial.queue
        self.step = 0
        self.cum_value = 0
        self.entries: list[tuple[int, Packet]] = []
        self.records: list[StepRecord] = []
        self._in_step = False
        policy.start(capacity)

    def begin_step(self) -> None:
        if self._in_step:
            raise RuntimeError("begin_step called twice")
        self.step += 1
        self._in_step = True
        drop = tuple(self.policy.on_step_start(self.step, self.buffer))
        if drop:
            self.buffer = BufferState(self.buffer.capacity, _discard(self.buffer.queue, drop, self.step, None))

    def offer(self, packet: Packet) -> PolicyDecision:
        if not self._in_step:
            raise RuntimeError("offer outside a step")
        d = self.policy.on_arrival(packet, self.buffer, self.step)
        if not isinstance(d, PolicyDecision):
            raise PolicyViolation(f"policy returned {d!r}", self.step, packet.id)
        self.buffer = apply_decision(self.buffer, packet, d, self.step)
        return d

    def end_step(self) -> Packet | None:
        if not self._in_step:
            raise RuntimeError("end_step outside a step")
        after_arrivals = self.buffer.queue
        self.buffer, sent = transmit_head(self.buffer)
        if sent is not None:
            self.cum_value += sent.value
            self.entries.append((self.step, sent))
        signal = self.policy.on_step_end(self.step, sent)
        cleared = False
        if signal == CLEAR:
            self.buffer = BufferState(self.buffer.capacity)
            cleared = True
        elif signal is not None:
            raise PolicyViolation(f"unknown control signal {signal!r}", self.step)
        self.records.append(
            StepRecord(self.step, after_arrivals, sent, self.cum_value, self.buffer.queue, cleared)
        )
        self._in_step = False
        return sent

    def run_step(self, arrivals) -> Packet | None:
        self.begin_step()
        for p in arrivals:
            self.offer(p)
        return self.end_step()

    def trace(self) -> Trace:
        return Trace(tuple(self.records), Schedule(tuple(self.entries)), self.initial)


def simulate(policy: Policy, seq: ArrivalSequence, initial: BufferState | None = None) -> Trace:
    """Run ``policy`` over every step of ``seq`` and return the full trace."""
    run = OnlineRun(policy, seq.capacity, initial)
    for arrivals in seq.steps:
        run.run_step(arrivals)
    return run.trace()


def audit_trace(trace: Trace, seq: ArrivalSequence) -> list[str]:
    """Independent re-check of a trace against the instance it claims to simulate.

    Returns human-readable violations; an empty list means the trace has
    bounded occupancy, FIFO transmission order, at most one transmission
    per step, and cumulative values that reconcile with its schedule.
    """
    problems = []
    cap = seq.capacity
    if len(trace.records) != seq.T:
        problems.append(f"trace has {len(trace.records)} steps, instance has {seq.T}")
    order = {p.id: k for k, p in enumerate(trace.initial)}
    base = len(order)
    for k, p in enumerate(seq.packets()):
        order[p.id] = base + k
    prev_end = list(trace.initial)
    cum = 0
    last_pos = -1
    sent_steps = []
    for rec in trace.records:
        if len(rec.buffer) > cap or len(rec.end_buffer) > cap:
            problems.append(f"step {rec.step}: occupancy exceeds capacity {cap}")
        allowed = [p.id for p in prev_end] + [p.id for p in seq.arrivals(rec.step)] if rec.step <= seq.T else []
        if not _is_subsequence([p.id for p in rec.buffer], allowed):
            problems.append(f"step {rec.step}: buffer is not an order-preserving subset of residents+arrivals")
        if rec.transmitted is not None:
            if not rec.buffer or rec.buffer[0].id != rec.transmitted.id:
                problems.append(f"step {rec.step}: transmitted packet was not the head")
            pos = order.get(rec.transmitted.id)
            if pos is None or pos <= last_pos:
                problems.append(f"step {rec.step}: transmission breaks FIFO order")
            else:
                last_pos = pos
            cum += rec.transmitted.value
            sent_steps.append(rec.step)
        elif rec.buffer:
            problems.append(f"step {rec.step}: non-empty buffer but nothing transmitted")
        if rec.cum_value != cum:
            problems.append(f"step {rec.step}: cum_value {rec.cum_value} != {cum}")
        expected_end = [] if rec.cleared else list(rec.buffer[1:] if rec.transmitted else rec.buffer)
        if [p.id for p in rec.end_buffer] != [p.id for p in expected_end]:
            problems.append(f"step {rec.step}: end-of-step buffer inconsistent")
        prev_end = list(rec.end_buffer)
    if sent_steps != [t for t, _ in trace.schedule.entries]:
        problems.append("schedule steps disagree with per-step transmissions")
    if trace.schedule.value != cum:
        problems.append("schedule value disagrees with cumulative value")
    return problems


def _is_subsequence(sub, full) -> bool:
    it = iter(full)
    return all(x in it for x in sub)

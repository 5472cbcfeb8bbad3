import random

import pytest
from hypothesis import settings, strategies as st

from fifolap.engine import ACCEPT, REJECT, Policy, PolicyDecision
from fifolap.model import ArrivalSequence, BufferState, Packet

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@st.composite
def sequences(draw, max_T=8, max_packets=12, max_capacity=3, max_value=10, drain=False):
    T = draw(st.integers(0, max_T))
    cap = draw(st.integers(1, max_capacity))
    n = draw(st.integers(0, max_packets if T else 0))
    where = sorted(draw(st.lists(st.integers(0, T - 1), min_size=n, max_size=n))) if T else []
    values = draw(st.lists(st.integers(1, max_value), min_size=n, max_size=n))
    steps = [[] for _ in range(T)]
    for k, (t, v) in enumerate(zip(where, values), start=1):
        steps[t].append(Packet(k, v))
    if drain:
        steps += [[] for _ in range(cap)]
    return ArrivalSequence(cap, tuple(tuple(s) for s in steps))


@st.composite
def buffer_and_sequence(draw, max_T=6, max_packets=8, max_capacity=3, max_value=10):
    seq = draw(sequences(max_T, max_packets, max_capacity, max_value))
    j = draw(st.integers(0, seq.capacity))
    vals = draw(st.lists(st.integers(1, max_value), min_size=j, max_size=j))
    return BufferState(seq.capacity, tuple(Packet(1000 + k, v) for k, v in enumerate(vals))), seq


class RandomPolicy(Policy):
    """Makes arbitrary but always-legal decisions from a seeded stream."""

    name = "random"

    def __init__(self, seed):
        self.seed = seed

    def start(self, capacity):
        self.rng = random.Random(self.seed)

    def on_step_start(self, step, buffer):
        return tuple(p.id for p in buffer.queue if self.rng.random() < 0.1)

    def on_arrival(self, packet, buffer, step):
        drop = tuple(p.id for p in buffer.queue if self.rng.random() < 0.2)
        room = len(buffer.queue) - len(drop) < buffer.capacity
        action = ACCEPT if room and self.rng.random() < 0.7 else REJECT
        return PolicyDecision(action, drop)


class AcceptAll(Policy):
    """Accept whenever there is room, never preempt."""

    name = "accept-if-space"

    def on_arrival(self, packet, buffer, step):
        return PolicyDecision(ACCEPT if len(buffer.queue) < buffer.capacity else REJECT)


class AcceptBlindly(Policy):
    name = "accept-all"

    def on_arrival(self, packet, buffer, step):
        return PolicyDecision(ACCEPT)


@pytest.fixture
def seq_of():
    return ArrivalSequence.from_lists


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])

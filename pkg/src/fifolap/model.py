"""Core value types: packets, arrival sequences, buffers, schedules, traces."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class ValidationError(ValueError):
    """Raised when an instance violates a structural invariant."""


@dataclass(frozen=True)
class Packet:
    id: int
    value: int

    def __repr__(self) -> str:
        return f"Packet({self.id}, v={self.value})"


@dataclass(frozen=True)
class ArrivalSequence:
    """A buffer capacity plus, for each time step, the ordered arrivals of that step.

    Steps are 1-indexed in every API that takes a step number; ``steps[0]``
    holds the arrivals of step 1.
    """

    capacity: int
    steps: tuple[tuple[Packet, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(tuple(s) for s in self.steps))

    @property
    def T(self) -> int:
        return len(self.steps)

    def arrivals(self, step: int) -> tuple[Packet, ...]:
        return self.steps[step - 1]

    def packets(self) -> list[Packet]:
        return [p for step in self.steps for p in step]

    def suffix(self, start: int) -> "ArrivalSequence":
        """Steps ``start..T`` renumbered from 1."""
        return ArrivalSequence(self.capacity, self.steps[start - 1:])

    def total_value(self) -> int:
        return sum(p.value for p in self.packets())

    @classmethod
    def from_lists(cls, capacity: int, steps: Iterable[Iterable[tuple[int, int]]]) -> "ArrivalSequence":
        """Build from nested ``(id, value)`` pairs, mostly for tests and examples."""
        return cls(capacity, tuple(tuple(Packet(i, v) for i, v in s) for s in steps))

    def to_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "steps": [[{"id": p.id, "value": p.value} for p in s] for s in self.steps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArrivalSequence":
        try:
            capacity = data["capacity"]
            steps = tuple(
                tuple(Packet(int(p["id"]), int(p["value"])) for p in s) for s in data["steps"]
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instance: {exc!r}") from exc
        return validate_sequence(cls(capacity, steps))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ArrivalSequence":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def validate_sequence(seq: ArrivalSequence) -> ArrivalSequence:
    """Return ``seq`` unchanged, or raise ValidationError naming the first offending spot."""
    if not isinstance(seq.capacity, int) or seq.capacity < 1:
        raise ValidationError(f"capacity must be >= 1, got {seq.capacity!r}")
    seen: dict[int, int] = {}
    for t, step in enumerate(seq.steps, start=1):
        for pos, p in enumerate(step):
            if not isinstance(p.id, int) or p.id < 0:
                raise ValidationError(f"step {t} position {pos}: id must be a non-negative int, got {p.id!r}")
            if not isinstance(p.value, int) or p.value < 1:
                raise ValidationError(f"step {t} position {pos}: value must be >= 1, got {p.value!r}")
            if p.id in seen:
                raise ValidationError(f"duplicate id {p.id} (steps {seen[p.id]} and {t})")
            seen[p.id] = t
    return seq


@dataclass(frozen=True)
class BufferState:
    """FIFO buffer contents, head first."""

    capacity: int
    queue: tuple[Packet, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "queue", tuple(self.queue))
        if self.capacity < 1:
            raise ValidationError(f"capacity must be >= 1, got {self.capacity}")
        if len(self.queue) > self.capacity:
            raise ValidationError(f"buffer holds {len(self.queue)} packets, capacity {self.capacity}")

    def __len__(self) -> int:
        return len(self.queue)

    @property
    def full(self) -> bool:
        return len(self.queue) >= self.capacity

    @property
    def value(self) -> int:
        return sum(p.value for p in self.queue)

    def ids(self) -> list[int]:
        return [p.id for p in self.queue]


PREFIX_MODES = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Schedule:
    """Transmitted packets as ``(step, packet)`` pairs in transmission order."""

    entries: tuple[tuple[int, Packet], ...] = ()

    def __post_init__(self):
        entries = tuple((int(t), p) for t, p in self.entries)
        object.__setattr__(self, "entries", entries)
        steps = [t for t, _ in entries]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValidationError("schedule steps must be strictly increasing")
        ids = [p.id for _, p in entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("a packet appears twice in the schedule")

    @property
    def value(self) -> int:
        return sum(p.value for _, p in self.entries)

    def ids(self) -> set[int]:
        return {p.id for _, p in self.entries}

    def packets(self) -> list[Packet]:
        return [p for _, p in self.entries]

    def cumulative(self, T: int) -> list[int]:
        """``out[i]`` is the value transmitted in steps ``1..i``; ``out[0] == 0``."""
        out = [0] * (T + 1)
        for t, p in self.entries:
            if t <= T:
                out[t] += p.value
        for i in range(1, T + 1):
            out[i] += out[i - 1]
        return out


def prefix_value(s: Schedule, t: int, mode: str = "<=") -> int:
    """Sum of values of entries whose step is ``mode`` relative to ``t``."""
    if mode == "<":
        return sum(p.value for step, p in s.entries if step < t)
    if mode == "<=":
        return sum(p.value for step, p in s.entries if step <= t)
    if mode == ">":
        return sum(p.value for step, p in s.entries if step > t)
    if mode == ">=":
        return sum(p.value for step, p in s.entries if step >= t)
    raise ValueError(f"unknown mode {mode!r}; expected one of {PREFIX_MODES}")


@dataclass(frozen=True)
class StepRecord:
    step: int
    buffer: tuple[Packet, ...]  # after the arrival phase
    transmitted: Packet | None
    cum_value: int
    end_buffer: tuple[Packet, ...]  # after transmission and any clearing
    cleared: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "step": self.step,
                "transmitted": None if self.transmitted is None else self.transmitted.id,
                "cum_value": self.cum_value,
                "buffer": [p.id for p in self.buffer],
            }
        )


@dataclass(frozen=True)
class Trace:
    records: tuple[StepRecord, ...] = ()
    schedule: Schedule = field(default_factory=Schedule)
    initial: tuple[Packet, ...] = ()

    @property
    def value(self) -> int:
        return self.schedule.value

    def cumulative(self) -> list[int]:
        return [0] + [r.cum_value for r in self.records]

    def end_buffer(self, step: int) -> tuple[Packet, ...]:
        """Buffer contents at the end of ``step``; step 0 is the initial buffer."""
        if step <= 0:
            return self.initial
        return self.records[step - 1].end_buffer

    def clear_steps(self) -> list[int]:
        return [r.step for r in self.records if r.cleared]

    def dump_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)


def packets_by_id(packets: Sequence[Packet]) -> dict[int, Packet]:
    return {p.id: p for p in packets}

"""Seeded instance generators and prediction perturbation models."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..model import ArrivalSequence, BufferState, Packet


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for (master seed, instance index, ...)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


@dataclass(frozen=True)
class GenConfig:
    """Instance shape.

    ``arrivals`` is a fixed count or an inclusive ``[lo, hi]`` range per step.
    ``values`` is ``{"kind": "uniform", "low", "high"}`` or
    ``{"kind": "two-point", "alpha", "scale", "p_high"}`` (values 1 and alpha*scale).
    ``drain`` appends ``capacity`` empty steps so every buffer can empty out.
    """

    T: int = 20
    capacity: int = 3
    arrivals: int | tuple[int, int] = (0, 4)
    values: dict = field(default_factory=lambda: {"kind": "uniform", "low": 1, "high": 20})
    seed: int = 0
    drain: bool = True

    def __post_init__(self):
        if isinstance(self.arrivals, list):
            object.__setattr__(self, "arrivals", tuple(self.arrivals))
        if self.T < 0 or self.capacity < 1:
            raise ValueError(f"need T >= 0 and capacity >= 1, got T={self.T}, capacity={self.capacity}")
        lo, hi = self.arrival_range
        if lo < 0 or hi < lo:
            raise ValueError(f"empty arrivals range {self.arrivals!r}")
        kind = self.values.get("kind")
        if kind == "uniform":
            if not 1 <= self.values["low"] <= self.values["high"]:
                raise ValueError(f"bad uniform value range {self.values!r}")
        elif kind == "two-point":
            if self.values.get("alpha", 0) * self.values.get("scale", 1) < 1:
                raise ValueError(f"bad two-point values {self.values!r}")
            if not 0 <= self.values.get("p_high", 0.5) <= 1:
                raise ValueError(f"bad two-point probability {self.values!r}")
        else:
            raise ValueError(f"unknown value distribution {kind!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def arrival_range(self) -> tuple[int, int]:
        if isinstance(self.arrivals, int):
            return self.arrivals, self.arrivals
        lo, hi = self.arrivals
        return int(lo), int(hi)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arrivals"] = list(self.arrival_range) if not isinstance(self.arrivals, int) else self.arrivals
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        return cls(**d)


def _draw_values(rng: np.random.Generator, spec: dict, n: int) -> list[int]:
    if spec["kind"] == "uniform":
        return [int(v) for v in rng.integers(spec["low"], spec["high"] + 1, size=n)]
    high = max(1, int(round(spec["alpha"] * spec.get("scale", 1))))
    hits = rng.random(n) < spec.get("p_high", 0.5)
    return [high if h else 1 for h in hits]


def generate(cfg: GenConfig, index: int = 0) -> ArrivalSequence:
    """Deterministic sequence for ``(cfg.seed, index)``; ids run from 1 in arrival order."""
    rng = rng_for(cfg.seed, index, 0)
    lo, hi = cfg.arrival_range
    counts = rng.integers(lo, hi + 1, size=cfg.T) if cfg.T else np.zeros(0, dtype=int)
    values = _draw_values(rng, cfg.values, int(counts.sum()))
    steps, k = [], 0
    for c in counts:
        steps.append(tuple(Packet(k + j + 1, values[k + j]) for j in range(int(c))))
        k += int(c)
    if cfg.drain:
        steps.extend(() for _ in range(cfg.capacity))
    return ArrivalSequence(cfg.capacity, tuple(steps))


NOISE_KINDS = (
    "none", "value-noise", "drop", "insert", "shift", "adversarial-empty", "adversarial-inflate",
)


@dataclass(frozen=True)
class NoiseModel:
    """How a prediction departs from the truth.

    value-noise rescales a ``p`` fraction of values by a factor drawn from
    ``[1/(1+magnitude), 1+magnitude]``; drop removes packets; insert adds a
    fresh packet to a step with probability ``p``; shift moves packets up to
    ``max_shift`` steps; the adversarial kinds ignore ``p``.
    """

    kind: str = "none"
    p: float = 0.0
    magnitude: float = 1.0
    max_shift: int = 2
    factor: float = 3.0
    value_low: int = 1
    value_high: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.p}")
        if self.factor <= 0 or self.magnitude < 0 or self.max_shift < 0:
            raise ValueError("factor must be > 0, magnitude and max_shift >= 0")
        if not 1 <= self.value_low <= self.value_high:
            raise ValueError("bad insert value range")

    def with_seed(self, seed: int) -> "NoiseModel":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(**d)


def perturb(sigma: ArrivalSequence, m: NoiseModel) -> ArrivalSequence:
    """Prediction over the same id universe as ``sigma``."""
    if m.kind == "none":
        return sigma
    if m.kind == "adversarial-empty":
        return ArrivalSequence(sigma.capacity, tuple(() for _ in sigma.steps))
    if m.kind == "adversarial-inflate":
        return ArrivalSequence(
            sigma.capacity,
            tuple(tuple(Packet(p.id, max(1, int(round(p.value * m.factor)))) for p in s) for s in sigma.steps),
        )
    rng = rng_for(m.seed, 1)
    if m.kind == "value-noise":
        lo, hi = 1.0 / (1.0 + m.magnitude), 1.0 + m.magnitude
        steps = []
        for s in sigma.steps:
            row = []
            for p in s:
                if rng.random() < m.p:
                    p = Packet(p.id, max(1, int(round(p.value * rng.uniform(lo, hi)))))
                row.append(p)
            steps.append(tuple(row))
        return ArrivalSequence(sigma.capacity, tuple(steps))
    if m.kind == "drop":
        return ArrivalSequence(
            sigma.capacity, tuple(tuple(p for p in s if not rng.random() < m.p) for s in sigma.steps)
        )
    if m.kind == "insert":
        next_id = max((p.id for p in sigma.packets()), default=0) + 1
        steps = []
        for s in sigma.steps:
            row = list(s)
            if rng.random() < m.p:
                pos = int(rng.integers(0, len(row) + 1))
                row.insert(pos, Packet(next_id, int(rng.integers(m.value_low, m.value_high + 1))))
                next_id += 1
            steps.append(tuple(row))
        return ArrivalSequence(sigma.capacity, tuple(steps))
    if m.kind == "shift":
        T = sigma.T
        rows: list[list[Packet]] = [[] for _ in range(T)]
        for t, s in enumerate(sigma.steps):
            for p in s:
                target = t
                if m.max_shift and rng.random() < m.p:
                    off = int(rng.integers(1, m.max_shift + 1)) * (1 if rng.random() < 0.5 else -1)
                    target = min(max(t + off, 0), T - 1)
                rows[target].append(p)
        return ArrivalSequence(sigma.capacity, tuple(tuple(r) for r in rows))
    raise AssertionError(m.kind)


# small random instances for oracle checks


def oracle_instance(rng: np.random.Generator, max_T: int = 8, max_packets: int = 12,
                    max_capacity: int = 3, max_value: int = 10) -> ArrivalSequence:
    T = int(rng.integers(1, max_T + 1))
    cap = int(rng.integers(1, max_capacity + 1))
    n = int(rng.integers(0, max_packets + 1))
    where = sorted(int(x) for x in rng.integers(0, T, size=n))
    values = rng.integers(1, max_value + 1, size=n)
    steps: list[list[Packet]] = [[] for _ in range(T)]
    for k, (t, v) in enumerate(zip(where, values), start=1):
        steps[t].append(Packet(k, int(v)))
    return ArrivalSequence(cap, tuple(tuple(s) for s in steps))


def buffer_instance(rng: np.random.Generator, max_T: int = 6, max_arrivals: int = 8,
                    max_capacity: int = 3, max_value: int = 10) -> tuple[BufferState, ArrivalSequence]:
    """An initial buffer plus an arrival sequence, ids disjoint."""
    seq = oracle_instance(rng, max_T, max_arrivals, max_capacity, max_value)
    j = int(rng.integers(0, seq.capacity + 1))
    residents = tuple(Packet(1000 + k, int(rng.integers(1, max_value + 1))) for k in range(j))
    return BufferState(seq.capacity, residents), seq


def mixed_instance(rng: np.random.Generator, max_T: int = 40) -> ArrivalSequence:
    """A drained instance with a randomly drawn shape, for bound checks."""
    if rng.random() < 0.5:
        values = {"kind": "uniform", "low": 1, "high": int(rng.integers(2, 60))}
    else:
        values = {"kind": "two-point", "alpha": float(rng.integers(2, 20)), "scale": 1,
                  "p_high": float(rng.uniform(0.1, 0.6))}
    lo = int(rng.integers(0, 3))
    cfg = GenConfig(
        T=int(rng.integers(1, max_T + 1)),
        capacity=int(rng.integers(1, 6)),
        arrivals=(lo, lo + int(rng.integers(0, 5))),
        values=values,
        seed=int(rng.integers(0, 2**63)),
    )
    return generate(cfg)


def unbounded_demo(T: int = 20, low: int = 1, high: int = 100, capacity: int = 1) -> tuple[ArrivalSequence, ArrivalSequence]:
    """True sequence and a prediction that swaps the cheap and costly packet of every step.

    Following the prediction transmits only cheap packets.
    """
    sigma, sigma_hat = [], []
    k = 0
    for _ in range(T):
        a, b = k + 1, k + 2
        k += 2
        sigma.append((Packet(a, low), Packet(b, high)))
        sigma_hat.append((Packet(a, high), Packet(b, low)))
    drain = [()] * capacity
    return (ArrivalSequence(capacity, tuple(sigma + drain)), ArrivalSequence(capacity, tuple(sigma_hat + drain)))

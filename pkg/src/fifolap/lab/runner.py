"""Experiment runner and parameter sweeps, with CSV output."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import mean
from typing import Callable, Iterable, Sequence

from ..engine import audit_trace, simulate
from ..metrics import RunRecord, _error_from, bound_suite
from ..model import ArrivalSequence
from ..offline import AcceptSet, opt_dp
from ..policies import SQRT3, FollowPrediction, Greedy, GuardedPolicy, PreemptiveGreedy
from .generate import GenConfig, NoiseModel, generate, perturb, rng_for

FALLBACKS: dict[str, Callable] = {"pg": PreemptiveGreedy, "greedy": Greedy}


def worker_count() -> int:
    n = int(os.environ.get("FIFOLAP_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn, items: Sequence, workers: int | None = None) -> list:
    """Order-preserving map; runs in-process when one worker is requested."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def run_experiment(
    sigma: ArrivalSequence,
    sigma_hat: ArrivalSequence,
    rho: float = SQRT3,
    fallbacks: Iterable[str] = ("pg",),
    instance_id: str = "",
    seed: int = 0,
) -> list[RunRecord]:
    """One RunRecord per fallback: OPT, Greedy, PG, follow-prediction and the guarded policy on ``sigma``.

    Every simulated trace is audited; the number of audit violations and
    the clear events of the guarded run are kept in ``record.extras``.
    """
    opt_true = opt_dp(sigma)
    opt_pred = opt_dp(sigma_hat)
    err = _error_from(opt_true, opt_pred)

    opt_trace = simulate(AcceptSet(opt_true.accepted_ids), sigma)
    traces = {
        "opt": opt_trace,
        "pg": simulate(PreemptiveGreedy(), sigma),
        "greedy": simulate(Greedy(), sigma),
        "follow": simulate(FollowPrediction(opt_pred), sigma),
    }
    records = []
    for fb in fallbacks:
        factory = FALLBACKS[fb]
        guard = GuardedPolicy(opt_pred, rho, factory)
        g_trace = simulate(guard, sigma)
        all_traces = {**traces, "guarded": g_trace}
        problems = {k: audit_trace(tr, sigma) for k, tr in all_traces.items()}
        t_star = guard.switch_step
        buf = sum(p.value for p in opt_trace.end_buffer(t_star - 1)) if t_star is not None else 0
        # what OPT sends in the step whose check fired; not covered by the prefix argument
        boundary = sum(p.value for t, p in opt_true.schedule.entries if t_star is not None and t == t_star - 1)
        rec = bound_suite(
            v_opt_true=opt_true.value,
            v_opt_pred=opt_pred.value,
            v_alg=g_trace.value,
            v_pg=traces["pg"].value,
            v_greedy=traces["greedy"].value,
            eta=err.eta,
            switch_step=t_star,
            v_opt_buf_switch=buf,
            rho=rho,
            beta=guard.beta,
            fallback=fb,
            instance_id=instance_id,
            seed=seed,
            v_follow=traces["follow"].value,
            switch_reason=guard.state.switch_reason,
        )
        rec.extras.update(
            audit_violations=sum(len(v) for v in problems.values()),
            audit_details=[f"{k}: {m}" for k, v in problems.items() for m in v],
            clear_steps=g_trace.clear_steps(),
            v_opt_boundary_step=boundary,
            error=err,
            schedule_matches_opt=g_trace.schedule == opt_true.schedule,
            follow_matches_opt=traces["follow"].schedule == opt_true.schedule,
        )
        records.append(rec)
    return records


def records_to_csv(records: Iterable[RunRecord], prefix_cols: Sequence[str] = (), prefix_vals=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*prefix_cols, *RunRecord.CSV_COLUMNS])
    for k, r in enumerate(records):
        pre = prefix_vals[k] if prefix_vals is not None else []
        w.writerow([*pre, *r.csv_row()])
    return buf.getvalue()


@dataclass
class ExperimentConfig:
    """A corpus: how to draw instances, how to perturb them, and what to run."""

    gen: GenConfig = field(default_factory=GenConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    instances: int = 20
    seed: int = 0
    rho: float = SQRT3
    fallback: str = "pg"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        gen = GenConfig.from_dict(d.pop("gen", {}))
        noise = NoiseModel.from_dict(d.pop("noise", {}))
        return cls(gen=gen, noise=noise, **d)

    def instance(self, index: int) -> tuple[ArrivalSequence, ArrivalSequence]:
        gen = replace(self.gen, seed=self.seed)
        sigma = generate(gen, index)
        noise_seed = int(rng_for(self.seed, index, 1).integers(0, 2**63))
        return sigma, perturb(sigma, self.noise.with_seed(noise_seed))


def _run_one(job) -> list[RunRecord]:
    cfg, index = job
    sigma, sigma_hat = cfg.instance(index)
    recs = run_experiment(sigma, sigma_hat, cfg.rho, (cfg.fallback,), instance_id=str(index), seed=cfg.seed)
    for r in recs:
        r.extras.pop("error", None)
    return recs


def run_corpus(cfg: ExperimentConfig, workers: int | None = None) -> list[RunRecord]:
    jobs = [(cfg, i) for i in range(cfg.instances)]
    return [r for recs in parallel_map(_run_one, jobs, workers) for r in recs]


SWEEP_AXES = ("eta-noise", "rho", "T")


def _at(base: ExperimentConfig, axis: str, x: float) -> ExperimentConfig:
    if axis == "rho":
        return replace(base, rho=float(x))
    if axis == "T":
        return replace(base, gen=replace(base.gen, T=int(x)))
    if axis == "eta-noise":
        if base.noise.kind == "adversarial-inflate":
            return replace(base, noise=replace(base.noise, factor=float(x)))
        return replace(base, noise=replace(base.noise, p=float(x)))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


@dataclass
class SweepPoint:
    axis: str
    value: float
    records: list[RunRecord]

    def summary(self) -> dict:
        rs = self.records
        finite = [r.ratio for r in rs if r.ratio != float("inf")]
        return {
            "axis": self.axis,
            "grid_value": self.value,
            "instances": len(rs),
            "max_ratio": max(finite, default=0.0),
            "mean_ratio": mean(finite) if finite else 0.0,
            "switch_frequency": mean(r.switched for r in rs) if rs else 0.0,
            "mean_additive_share": mean(r.additive_share for r in rs) if rs else 0.0,
            "max_eta": max((r.eta for r in rs), default=0),
            "flag_failures": sum(not r.all_flags for r in rs),
        }


SUMMARY_COLUMNS = (
    "axis", "grid_value", "instances", "max_ratio", "mean_ratio", "switch_frequency",
    "mean_additive_share", "max_eta", "flag_failures",
)


def sweep(axis: str, grid: Sequence[float], base: ExperimentConfig, workers: int | None = None) -> list[SweepPoint]:
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    return [SweepPoint(axis, x, run_corpus(_at(base, axis, x), workers)) for x in grid]


def sweep_csv(points: Sequence[SweepPoint]) -> tuple[str, str]:
    """Per-run CSV (axis and grid value prepended) and per-grid-point summary CSV."""
    recs, pre = [], []
    for pt in points:
        for r in pt.records:
            recs.append(r)
            pre.append([pt.axis, _num(pt.value)])
    runs = records_to_csv(recs, ("axis", "grid_value"), pre)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for pt in points:
        s = pt.summary()
        w.writerow([_num(s[c]) if isinstance(s[c], float) else s[c] for c in SUMMARY_COLUMNS])
    return runs, buf.getvalue()


def _num(x: float) -> str:
    return repr(round(float(x), 12))

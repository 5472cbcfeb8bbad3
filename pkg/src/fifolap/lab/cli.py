"""Command line entry point: ``fifolap {gen,run,sweep,verify}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..engine import audit_trace, simulate
from ..model import ArrivalSequence, Schedule, StepRecord, Trace
from ..policies import SQRT3, GuardedPolicy
from .checks import SCALES, run_all
from .runner import FALLBACKS, SWEEP_AXES, ExperimentConfig, records_to_csv, run_experiment, sweep, sweep_csv


def _real(text: str) -> float:
    t = text.strip().lower()
    if t in ("sqrt3", "sqrt(3)", "√3"):
        return SQRT3
    return float(t)


def _load_config(path: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(cfg.instances):
        sigma, hat = cfg.instance(i)
        sigma.save(out / f"sigma_{i:04d}.json")
        hat.save(out / f"sigma_hat_{i:04d}.json")
    print(f"wrote {cfg.instances} instance/prediction pairs to {out}")
    return 0


def cmd_run(args) -> int:
    sigma = ArrivalSequence.load(args.sigma)
    hat = ArrivalSequence.load(args.sigma_hat)
    recs = run_experiment(sigma, hat, args.rho, (args.fallback,), instance_id=args.instance_id, seed=args.seed)
    _write(args.out, records_to_csv(recs))
    if args.trace:
        tr = simulate(GuardedPolicy(hat, args.rho, FALLBACKS[args.fallback]), sigma)
        _write(args.trace, tr.dump_jsonl())
    return 0 if all(r.all_flags for r in recs) else 1


def cmd_sweep(args) -> int:
    base = _load_config(args.config)
    grid = [_real(x) for x in args.grid.split(",") if x.strip()] if args.grid else []
    points = sweep(args.axis, grid, base)
    runs, summary = sweep_csv(points)
    _write(args.out, runs)
    summary_path = None if args.out in (None, "-") else str(Path(args.out).with_suffix("")) + "_summary.csv"
    _write(summary_path, summary)
    return 0


def load_trace_jsonl(path: str, sigma: ArrivalSequence) -> Trace:
    """Rebuild a Trace from its JSON Lines dump, resolving ids against ``sigma``."""
    by_id = {p.id: p for p in sigma.packets()}
    rows = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    records, entries = [], []
    for row in rows:
        buffer = tuple(by_id[i] for i in row["buffer"])
        sent = by_id[row["transmitted"]] if row["transmitted"] is not None else None
        # the dump does not mark clears; to the audit they look like preemptions in the next step
        end = buffer[1:] if sent is not None else buffer
        records.append(StepRecord(row["step"], buffer, sent, row["cum_value"], end))
        if sent is not None:
            entries.append((row["step"], sent))
    return Trace(tuple(records), Schedule(tuple(entries)))


def cmd_verify(args) -> int:
    if args.replay:
        if not args.sigma:
            print("--replay needs --sigma", file=sys.stderr)
            return 2
        sigma = ArrivalSequence.load(args.sigma)
        problems = audit_trace(load_trace_jsonl(args.replay, sigma), sigma)
        for p in problems:
            print(p)
        print(f"[{'PASS' if not problems else 'FAIL'}] trace replay: {len(problems)} problems")
        return 0 if not problems else 1
    results = run_all(args.scale)
    for r in results:
        print(r.line())
    if args.report_dir:
        d = Path(args.report_dir)
        d.mkdir(parents=True, exist_ok=True)
        for r in results:
            ce = r.data.get("counterexamples")
            if ce:
                (d / "perfect_prediction_counterexamples.json").write_text(json.dumps(ce, indent=1))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fifolap", description="Learning-augmented FIFO buffer management lab.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write instance and prediction JSON files")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run every policy on one instance/prediction pair")
    r.add_argument("--sigma", required=True)
    r.add_argument("--sigma-hat", required=True)
    r.add_argument("--rho", type=_real, default=SQRT3)
    r.add_argument("--fallback", choices=sorted(FALLBACKS), default="pg")
    r.add_argument("--out", default="-")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--instance-id", default="0")
    r.add_argument("--trace", help="also dump the guarded policy's trace as JSON Lines")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="sweep one parameter over a generated corpus")
    s.add_argument("--axis", choices=SWEEP_AXES, required=True)
    s.add_argument("--grid", default="", help="comma-separated values, e.g. 1,1.2,sqrt3")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="oracle, buffer and bound suites; exit 0 iff all pass")
    v.add_argument("--scale", choices=sorted(SCALES), default="small")
    v.add_argument("--replay", help="audit a JSON Lines trace instead")
    v.add_argument("--sigma", help="instance the replayed trace belongs to")
    v.add_argument("--report-dir", help="write counterexample reports here")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

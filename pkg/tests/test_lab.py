import json
from pathlib import Path

import pytest

from fifolap.lab.cli import main
from fifolap.lab.generate import GenConfig, NoiseModel, generate, perturb, unbounded_demo
from fifolap.lab.runner import ExperimentConfig, run_corpus, run_experiment, sweep, sweep_csv, records_to_csv
from fifolap.metrics import prediction_error
from fifolap.model import ArrivalSequence
from fifolap.offline import opt_dp
from fifolap.policies import SQRT3

DATA = Path(__file__).parent / "data"
CORPORA = Path(__file__).parent.parent / "corpora"


def test_generate_empty():
    assert generate(GenConfig(T=0, drain=False)) == ArrivalSequence(3, ())


def test_generate_deterministic_and_drained():
    cfg = GenConfig(T=15, capacity=3, seed=99)
    a, b = generate(cfg, 4), generate(cfg, 4)
    assert a == b and a != generate(cfg, 5)
    assert a.steps[-3:] == ((), (), ())
    assert [p.id for p in a.packets()] == list(range(1, len(a.packets()) + 1))


def test_generate_golden():
    cfg = GenConfig(T=4, capacity=2, arrivals=2, values={"kind": "uniform", "low": 1, "high": 10}, seed=7, drain=False)
    assert generate(cfg) == ArrivalSequence.load(DATA / "golden_gen_seed7.json")


def test_two_point_values():
    cfg = GenConfig(T=50, arrivals=3, values={"kind": "two-point", "alpha": 6, "scale": 2, "p_high": 0.5})
    assert {p.value for p in generate(cfg).packets()} == {1, 12}


@pytest.mark.parametrize("bad", [
    dict(T=-1), dict(capacity=0), dict(arrivals=(3, 1)),
    dict(values={"kind": "uniform", "low": 5, "high": 2}), dict(values={"kind": "zipf"}),
])
def test_gen_config_validation(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad)


@pytest.mark.parametrize("bad", [dict(kind="gauss"), dict(kind="drop", p=1.5), dict(kind="adversarial-inflate", factor=0)])
def test_noise_validation(bad):
    with pytest.raises(ValueError):
        NoiseModel(**bad)


SIGMA = generate(GenConfig(T=30, capacity=3, seed=5))


def test_perturb_none_is_identity():
    hat = perturb(SIGMA, NoiseModel())
    assert hat == SIGMA and hat.dumps() == SIGMA.dumps()
    assert prediction_error(SIGMA, hat).eta == 0


def test_perturb_adversarial_empty():
    hat = perturb(SIGMA, NoiseModel("adversarial-empty"))
    assert hat.T == SIGMA.T and hat.capacity == SIGMA.capacity and not hat.packets()
    assert prediction_error(SIGMA, hat).eta == opt_dp(SIGMA).value


def test_drop_everything_matches_empty():
    assert perturb(SIGMA, NoiseModel("drop", p=1.0)) == perturb(SIGMA, NoiseModel("adversarial-empty"))


def test_perturb_kinds_keep_id_universe():
    ids = {p.id for p in SIGMA.packets()}
    vn = perturb(SIGMA, NoiseModel("value-noise", p=1.0, seed=1))
    assert {p.id for p in vn.packets()} == ids
    assert any(a.value != b.value for a, b in zip(SIGMA.packets(), vn.packets()))
    ins = perturb(SIGMA, NoiseModel("insert", p=1.0, seed=1))
    new = {p.id for p in ins.packets()} - ids
    assert len(new) == SIGMA.T and min(new) > max(ids)
    sh = perturb(SIGMA, NoiseModel("shift", p=1.0, max_shift=2, seed=1))
    assert sorted(p.id for p in sh.packets()) == sorted(ids) and sh.T == SIGMA.T
    infl = perturb(SIGMA, NoiseModel("adversarial-inflate", factor=3))
    assert [p.value for p in infl.packets()] == [3 * p.value for p in SIGMA.packets()]
    assert perturb(SIGMA, NoiseModel("drop", p=0.5, seed=3)) == perturb(SIGMA, NoiseModel("drop", p=0.5, seed=3))


def test_run_experiment_perfect():
    (r,) = run_experiment(SIGMA, SIGMA, 1.0, ("pg",))
    if not r.switched:
        assert r.ratio == 1.0 and r.v_alg == r.v_opt_true
    assert r.eta == 0 and r.extras["audit_violations"] == 0


def test_run_experiment_empty():
    empty = ArrivalSequence(2, ())
    recs = run_experiment(empty, empty, SQRT3, ("pg", "greedy"))
    assert len(recs) == 2
    for r in recs:
        assert (r.v_opt_true, r.v_alg, r.v_pg, r.v_greedy, r.eta) == (0, 0, 0, 0, 0)
        assert r.all_flags


def test_unbounded_demo_shape():
    sigma, hat = unbounded_demo(10)
    (r,) = run_experiment(sigma, hat, SQRT3, ("pg",))
    assert r.v_follow == 10 and r.v_opt_true == 1000
    assert r.switched and r.flag_c


BASE = ExperimentConfig(gen=GenConfig(T=20, capacity=3), noise=NoiseModel("value-noise", p=0.3),
                        instances=6, seed=12)


def test_sweep_rho():
    points = sweep("rho", [1.0, 1.2, SQRT3], BASE, workers=1)
    runs, summary = sweep_csv(points)
    rows = summary.strip().splitlines()
    assert len(rows) == 4
    assert len(runs.strip().splitlines()) == 1 + 3 * BASE.instances
    for pt in points:
        for r in pt.records:
            bound = r.f_eta if not r.switched else SQRT3 + r.additive_share
            assert r.flag_b and r.flag_a
            if not r.switched:
                assert r.ratio <= bound + 1e-9


def test_sweep_empty_grid():
    runs, summary = sweep_csv(sweep("T", [], BASE, workers=1))
    assert runs.count("\n") == 1 and summary.count("\n") == 1


def test_sweep_bad_axis():
    with pytest.raises(ValueError):
        sweep("capacity", [1], BASE)


def test_parallel_matches_serial(monkeypatch):
    monkeypatch.setenv("FIFOLAP_THREADS", "2")
    assert records_to_csv(run_corpus(BASE)) == records_to_csv(run_corpus(BASE, workers=1))


@pytest.mark.parametrize("name", sorted(p.name for p in CORPORA.glob("*.json")))
def test_shipped_corpora_pass_flags(name):
    cfg = ExperimentConfig.from_dict(json.loads((CORPORA / name).read_text()))
    recs = run_corpus(cfg, workers=1)
    assert len(recs) == cfg.instances
    assert all(r.flag_a and r.flag_b and r.flag_d for r in recs)
    assert all(r.extras["audit_violations"] == 0 for r in recs)


def test_cli_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gen": {"T": 12, "capacity": 2}, "noise": {"kind": "drop", "p": 0.3},
                               "instances": 3, "seed": 4}))
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "inst")]) == 0
    sigma, hat = tmp_path / "inst" / "sigma_0001.json", tmp_path / "inst" / "sigma_hat_0001.json"
    assert sigma.exists() and hat.exists()
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        main(["run", "--sigma", str(sigma), "--sigma-hat", str(hat), "--rho", "sqrt3", "--fallback", "greedy",
              "--seed", "4", "--out", str(out), "--trace", str(tmp_path / "t.jsonl")])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0]
    assert header.startswith("instance_id,seed,rho,fallback,v_opt_true")
    assert main(["verify", "--replay", str(tmp_path / "t.jsonl"), "--sigma", str(sigma)]) == 0
    assert main(["sweep", "--axis", "eta-noise", "--grid", "0.1,0.5", "--config", str(cfg),
                 "--out", str(tmp_path / "sw.csv")]) == 0
    assert (tmp_path / "sw_summary.csv").read_text().count("\n") == 3


def test_cli_replay_detects_corruption(tmp_path, capsys):
    sigma = ArrivalSequence.from_lists(1, [[(1, 5)], [(2, 6)]])
    sigma.save(tmp_path / "s.json")
    (tmp_path / "t.jsonl").write_text(
        '{"step": 1, "transmitted": 1, "cum_value": 5, "buffer": [1]}\n'
        '{"step": 2, "transmitted": 2, "cum_value": 12, "buffer": [2]}\n'
    )
    assert main(["verify", "--replay", str(tmp_path / "t.jsonl"), "--sigma", str(tmp_path / "s.json")]) == 1
    assert "cum_value" in capsys.readouterr().out

import csv
import io
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from collidenet import analysis, harness
from collidenet.cli import main
from collidenet.errors import ChecksumError, ConfigError, ReplayMismatch, SchemaError
from collidenet.harness import (CSV_COLUMNS, SimConfig, TrialResult, aggregate, read_trace,
                                replay, results_csv, run_experiment, sweep, sweep_csv)


@pytest.mark.parametrize("kw", [
    dict(p=1.5), dict(scheme="mesh"), dict(mode="fast"), dict(p=0.3),
    dict(m=-1), dict(trials=0), dict(field_modulus=12), dict(field_modulus=2**31 + 11),
    dict(seed=-1), dict(segment=0), dict(scheme="tdma", p=0.0, m=5),
])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw).validate()


def test_is_prime():
    primes = [n for n in range(60) if harness.is_prime(n)]
    assert primes == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
    assert harness.is_prime(2**31 - 1) and not harness.is_prime(2**31 - 3)


def test_yaml_config(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("p: 0.5\nm: 40\nscheme: tdma\ntrials: 2\n")
    cfg = SimConfig.from_file(f, seed=9, m=None)
    assert (cfg.m, cfg.seed, cfg.scheme, cfg.trials) == (40, 9, "tdma", 2)
    f.write_text("p: 0.5\ncolour: red\n")
    with pytest.raises(ConfigError):
        SimConfig.from_file(f)
    f.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        SimConfig.from_file(f)


def test_csv_columns_and_halted_rates():
    r = TrialResult("theorem1", 0.5, 10, 0, 0, "paper", 20, 0, 20, None, None,
                    False, False, "type-I")
    text = results_csv([r])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == CSV_COLUMNS
    row = dict(zip(rows[0], rows[1]))
    assert row["r1"] == "" and row["r2"] == "" and row["halt_kind"] == "type-I"
    assert row["decode_ok_rx1"] == "false"


def test_halted_trials_reported_apart():
    ok = TrialResult("tdma", 0.5, 10, 0, 0, "adaptive", 40, 0, 40, 0.25, 0.25, True, True)
    bad = TrialResult("theorem1", 0.5, 10, 0, 1, "paper", 20, 0, 20, None, None,
                      False, False, "type-II")
    agg = aggregate([ok, bad])
    assert agg["halted"] == 1 and agg["decoded"] == 1 and agg["r1"] == 0.25
    assert agg["halt_rate"] == 0.5 and agg["failure_rate"] == 0.0


def test_rates_match_definition():
    exp = run_experiment(SimConfig(m=300, trials=2, seed=4))
    for r in exp.trials:
        assert r.ok and r.r1 == r.r2 == 300 / r.total_slots
        assert r.total_slots == r.phase1_slots + r.phase2_slots


def test_paper_total_equals_prediction():
    m = 3375
    exp = run_experiment(SimConfig(m=m, mode="paper", trials=3, seed=1))
    pred = analysis.predict_total_time(m)
    for r in exp.trials:
        assert r.halt_kind is None
        assert (r.phase1_slots, r.phase2_slots, r.total_slots) == (
            pred["phase1"], pred["phase2"], pred["total"])


def _trace(tmp_path, **kw):
    cfg = SimConfig(trace=str(tmp_path / "t.jsonl"), **kw)
    exp = run_experiment(cfg)
    return Path(cfg.trace), exp


@pytest.mark.parametrize("scheme,mode", [("theorem1", "adaptive"), ("theorem1", "paper"),
                                         ("tdma", "adaptive"), ("rateless", "adaptive")])
def test_trace_and_replay(tmp_path, scheme, mode):
    m = 125 if mode == "paper" else 60
    path, exp = _trace(tmp_path, m=m, seed=3, scheme=scheme, mode=mode)
    head, recs = read_trace(path)
    assert head["schema"] == harness.SCHEMA and head["config"]["m"] == m
    res = replay(path)
    assert res == exp.trials[0]
    if scheme == "theorem1":
        slots = [r for r in recs if "t" in r]
        assert len(slots) == exp.trials[0].total_slots
        assert [r["t"] for r in slots] == list(range(len(slots)))
        for r in slots:
            assert set(r) == {"t", "phase", "alpha", "case", "tx1", "tx2", "transitions"}
            assert 1 <= r["case"] <= 16 and len(r["alpha"]) == 4


def test_trace_truncated(tmp_path):
    path, _ = _trace(tmp_path, m=40, seed=1)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(SchemaError):
        replay(path)
    path.write_bytes(b"")
    with pytest.raises(SchemaError):
        read_trace(path)


def test_trace_mutated_alpha(tmp_path):
    path, _ = _trace(tmp_path, m=40, seed=1)
    lines = path.read_text().splitlines(keepends=True)
    k = next(i for i, x in enumerate(lines) if '"alpha":[' in x)
    rec = json.loads(lines[k])
    rec["alpha"][0] ^= 1
    lines[k] = json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"
    path.write_text("".join(lines))
    with pytest.raises(ChecksumError):
        replay(path)


def test_trace_schema_version(tmp_path):
    path, _ = _trace(tmp_path, m=20, seed=1)
    text = path.read_text().replace(harness.SCHEMA, "collidenet-trace/0", 1)
    path.write_text(text)
    with pytest.raises(SchemaError):
        read_trace(path)


def test_replay_detects_changed_results(tmp_path):
    # a self-consistent trace whose content the simulator would not produce
    path, _ = _trace(tmp_path, m=20, seed=1)
    lines = path.read_text().splitlines(keepends=True)[:-1]
    k = next(i for i, x in enumerate(lines) if '"alpha":[' in x)
    rec = json.loads(lines[k])
    rec["alpha"][0] ^= 1
    lines[k] = json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"
    import hashlib
    body = "".join(lines)
    digest = hashlib.sha256(body.encode()).hexdigest()
    path.write_text(body + json.dumps({"checksum": digest}, separators=(",", ":")) + "\n")
    with pytest.raises(ReplayMismatch):
        replay(path)


@pytest.mark.parametrize("scheme", ["theorem1", "tdma", "rateless"])
def test_determinism_across_workers(tmp_path, scheme):
    outs = []
    for workers, tag in ((1, "a"), (1, "b"), (3, "c")):
        d = tmp_path / tag
        d.mkdir()
        cfg = SimConfig(m=80, trials=4, seed=5, scheme=scheme, out=str(d / "r.csv"),
                        trace=str(d / "t.jsonl"), workers=workers)
        run_experiment(cfg)
        outs.append([(d / "r.csv").read_bytes()] +
                    [(d / f"t-{k}.jsonl").read_bytes() for k in range(4)])
    assert outs[0] == outs[1] == outs[2]


def test_trial_order_independent():
    cfg = SimConfig(m=60, trials=3, seed=2).validate()
    fwd = [harness.run_trial(cfg, t) for t in range(3)]
    rev = [harness.run_trial(cfg, t) for t in reversed(range(3))][::-1]
    assert fwd == rev
    assert aggregate(fwd) == aggregate(rev[::-1])


def test_sweep_empty_grid():
    assert sweep_csv(sweep([])) == ",".join(harness.SWEEP_COLUMNS) + "\n"


def test_sweep_points_inside_capacity():
    rows = sweep([0.25, 0.5, 0.75], m=600, trials=4, seed=1)
    pts = [r for r in rows if r[0] == "empirical"]
    assert {(r[1], r[2]) for r in pts} >= {("tdma", 0.25), ("rateless", 0.75), ("theorem1", 0.5)}
    for _, name, p, r1, r2, s1, s2, _ in pts:
        reg = analysis.capacity_region(p)
        assert reg.contains((r1 - 3 * s1, r2 - 3 * s2), tol=1e-12)
    regs = [r for r in rows if r[0] == "region" and r[2] == 0.5]
    assert {r[1] for r in regs} == {"capacity", "tdma", "rateless"}
    assert ["region", "capacity", 0.5, 0.45, 0.45, "", "", "R1+(2-p)R2;(2-p)R1+R2"] in rows


# -- command line ------------------------------------------------------------------

def test_cli_simulate_stdout():
    res = CliRunner().invoke(main, ["simulate", "--scheme", "tdma", "--m", "30", "--trials", "2"])
    assert res.exit_code == 0, res.output
    rows = list(csv.reader(io.StringIO(res.stdout)))
    assert rows[0] == CSV_COLUMNS and len(rows) == 3


def test_cli_simulate_config_and_trace(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("m: 40\nseed: 3\n")
    out, tr = tmp_path / "r.csv", tmp_path / "t.jsonl"
    r = CliRunner()
    res = r.invoke(main, ["simulate", "--config", str(f), "--out", str(out), "--trace", str(tr)])
    assert res.exit_code == 0, res.output
    assert out.read_text().startswith("scheme,p,m,")
    res = r.invoke(main, ["replay", "--trace", str(tr)])
    assert res.exit_code == 0 and json.loads(res.stdout)["m"] == 40
    tr.write_text(tr.read_text()[:-5])
    assert r.invoke(main, ["replay", "--trace", str(tr)]).exit_code == 2


def test_cli_bad_config():
    res = CliRunner().invoke(main, ["simulate", "--p", "0.3"])
    assert res.exit_code != 0 and "p = 1/2" in res.output


def test_cli_region_and_sweep(tmp_path):
    r = CliRunner()
    res = r.invoke(main, ["region", "--p", "0.5"])
    assert res.exit_code == 0
    assert "capacity,0.5,0.45,0.45,R1+(2-p)R2;(2-p)R1+R2" in res.stdout
    assert r.invoke(main, ["region", "--p", "2"]).exit_code != 0
    out = tmp_path / "s.csv"
    res = r.invoke(main, ["sweep", "--p-grid", "0.5", "--schemes", "tdma", "--m", "50",
                          "--trials", "2", "--out", str(out)])
    assert res.exit_code == 0 and "empirical,tdma" in out.read_text()
    assert r.invoke(main, ["sweep", "--schemes", "bogus"]).exit_code != 0


def test_cli_verify():
    res = CliRunner().invoke(main, ["verify"])
    assert res.exit_code == 0 and "FAIL" not in res.output

import csv
import json

import numpy as np
import pytest

from irsnoma.harness import cli, config as hc, figures, runner, schemes
from irsnoma.harness.config import ConfigError, ExperimentConfig, parse_config


def cheap(tmp_path, **kw):
    base = dict(name="t", schemes=("no-irs",), trials=1, sweep="M", values=(10, 30, 50),
                output=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_defaults_and_validation():
    c = ExperimentConfig()
    assert (c.N, c.K, c.M, c.p_dbm) == (2, 4, 30, 10.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(values=())
    with pytest.raises(ConfigError):
        ExperimentConfig(schemes=("magic",))
    with pytest.raises(ConfigError):
        ExperimentConfig(sweep="Q")
    with pytest.raises(ConfigError):
        ExperimentConfig(schemes=("discrete(0)",))
    assert hc.parse_scheme("discrete(3)") == ("discrete", 3)
    assert hc.parse_scheme("discrete") == ("discrete", None)


def test_parse_and_hash():
    text = """[experiment]
name = demo
schemes = ideal, discrete(2)
values = 0, 5.5, 10
sweep = P_T
trials = 3
output = /tmp/x
"""
    c = parse_config(text)
    assert c.schemes == ("ideal", "discrete(2)") and c.values == (0, 5.5, 10)
    assert c.point(5.5)["P_T"] == 5.5 and c.point(0)["M"] == 30
    assert parse_config(c.to_ini()) == c
    assert c.hash() == c.with_output("/elsewhere").hash()
    assert len(c.hash()) == 16
    assert c.hash() != parse_config(text.replace("trials = 3", "trials = 4")).hash()
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[other]\n")


def test_fnv1a_reference_values():
    assert hc.fnv1a64(b"") == 0xCBF29CE484222325
    assert hc.fnv1a64(b"a") == 0xAF63DC4C8601EC8C


def test_output_env(monkeypatch):
    monkeypatch.setenv(hc.OUTPUT_ENV, "/tmp/somewhere")
    assert ExperimentConfig().output == "/tmp/somewhere"
    monkeypatch.delenv(hc.OUTPUT_ENV)
    assert ExperimentConfig().output == hc.DEFAULT_OUTPUT


def test_no_irs_rows_flat_over_m(tmp_path):
    out = runner.run(cheap(tmp_path))
    rows = read(out / "rows.csv")
    assert list(rows[0]) == list(runner.ROW_COLUMNS)
    assert [r["sweep_value"] for r in rows] == ["10", "30", "50"]
    assert len({r["sum_rate"] for r in rows}) == 1
    assert all(r["flag"] == "ok" and float(r["audit_worst"]) <= 1e-6 for r in rows)
    assert (out / "config.ini").read_text().startswith("[experiment]")
    assert out.name == f"t-{cheap(tmp_path).hash()}"


def test_rerun_identical_except_wall_time(tmp_path):
    cfg = cheap(tmp_path, schemes=("no-irs", "oma", "random-phase"), values=(10,), trials=2)
    a = read(runner.run(cfg, out_dir=tmp_path / "a") / "rows.csv")
    b = read(runner.run(cfg, out_dir=tmp_path / "b") / "rows.csv")
    for r in a + b:
        r.pop("wall_time")
    assert a == b
    assert (tmp_path / "a" / "aggregate.csv").read_bytes() == (tmp_path / "b" / "aggregate.csv").read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = cheap(tmp_path, schemes=("no-irs", "oma"), values=(10, 20), trials=2)
    a = read(runner.run(cfg, jobs=1, out_dir=tmp_path / "s") / "rows.csv")
    b = read(runner.run(cfg, jobs=2, out_dir=tmp_path / "p") / "rows.csv")
    for r in a + b:
        r.pop("wall_time")
    assert a == b


def test_aggregation_is_exact_and_seeds_recomputable(tmp_path):
    cfg = cheap(tmp_path, schemes=("no-irs", "oma"), values=(10, 20), trials=3, base_seed=40)
    out = runner.run(cfg)
    rows = runner.read_rows(out / "rows.csv")
    assert sorted({r["seed"] for r in rows}) == [40, 41, 42]
    trial = {s: t for t in range(cfg.trials) for s in [runner.trial_seed(cfg.base_seed, t)]}
    for r in rows:
        assert r["seed"] in trial and r["seed"] == cfg.base_seed ^ trial[r["seed"]]
    assert [runner.trial_seed(5, t) for t in range(4)] == [5, 4, 7, 6]
    for a in read(out / "aggregate.csv"):
        xs = [r["sum_rate"] for r in rows
              if r["sweep_value"] == a["sweep_value"] and r["scheme"] == a["scheme"]]
        assert int(a["n"]) == len(xs)
        assert abs(float(a["mean"]) - np.mean(xs)) <= 1e-12
        assert abs(float(a["stderr"]) - np.std(xs, ddof=1) / np.sqrt(len(xs))) <= 1e-12
    lines = (out / "plot.dat").read_text().splitlines()
    assert lines[0].split()[1:] == ["M", "no-irs_mean", "no-irs_stderr", "oma_mean", "oma_stderr"]
    assert [l.split()[0] for l in lines[1:]] == ["10", "20"]


def test_failures_are_flagged_not_dropped(tmp_path, monkeypatch):
    real = runner.run_scheme

    def flaky(name, params, cs, seed, order_irs="continuous"):
        if seed == 1:
            raise RuntimeError("solver exploded")
        return real(name, params, cs, seed, order_irs)

    monkeypatch.setattr(runner, "run_scheme", flaky)
    out = runner.run(cheap(tmp_path, values=(10,), trials=2))
    rows = read(out / "rows.csv")
    assert len(rows) == 2
    assert rows[1]["flag"].startswith("error: RuntimeError")
    agg = read(out / "aggregate.csv")
    assert agg[0]["n"] == "1"


def test_bit_sweep_shares_bit_independent_runs(tmp_path, monkeypatch):
    calls = []
    real = runner.run_scheme

    def counting(name, params, cs, seed, order_irs="continuous"):
        calls.append((name, params["B"]))
        return real(name, params, cs, seed, order_irs)

    monkeypatch.setattr(runner, "run_scheme", counting)
    out = runner.run(cheap(tmp_path, schemes=("no-irs",), sweep="B", values=(1, 2, 3), M=10))
    rows = read(out / "rows.csv")
    assert len(rows) == 3 and len(calls) == 1
    assert [r["sweep_value"] for r in rows] == ["1", "2", "3"]
    assert schemes.depends_on_bits("discrete") and not schemes.depends_on_bits("ideal")


def test_dump_and_audit(tmp_path, capsys):
    cfg = cheap(tmp_path, schemes=("no-irs", "oma", "ideal"), values=(10,), trials=1, K=3)
    out = runner.run(cfg, dump_solutions=True)
    results = runner.audit_results(out)
    assert len(results) == 3 and all(ok for *_, ok, _ in results)
    # tampering is detected
    recs = [json.loads(l) for l in (out / "solutions.jsonl").read_text().splitlines()]
    recs[0]["sum_rate"] += 0.5
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
    assert not runner.audit_results(bad)[0][3]
    assert cli.main(["audit", "--result", str(out)]) == 0
    assert "3/3 solutions pass" in capsys.readouterr().out
    assert cli.main(["audit", "--result", str(bad)]) == 1


def test_audit_without_dump(tmp_path, capsys):
    out = runner.run(cheap(tmp_path, values=(10,)))
    assert cli.main(["audit", "--result", str(out)]) == 2
    assert "--dump-solutions" in capsys.readouterr().err


def test_cli_run(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[experiment]\nname = cli\nschemes = no-irs\ntrials = 1\nvalues = 10\n")
    assert cli.main(["run", "--config", str(ini), "--output", str(tmp_path / "r")]) == 0
    out = capsys.readouterr().out.strip()
    assert (tmp_path / "r").exists() and out.endswith(".") is False
    assert len(read(f"{out}/rows.csv")) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nschemes = nope\n")
    assert cli.main(["run", "--config", str(bad)]) == 2


def test_presets():
    f7 = figures.preset("fig7", "desk")
    assert f7.sweep == "B" and f7.values == (1, 2, 3, 4)
    assert "ideal" in f7.schemes and "continuous" in f7.schemes and "discrete" in f7.schemes
    f3 = figures.preset("fig3", "full")
    assert f3.trials == 1 and set(f3.schemes) == {"ideal", "continuous"}
    f9 = figures.preset("fig9", "desk")
    assert f9.sweep == "M" and set(f9.schemes) == {"continuous", "oma"}
    for fig in figures.FIGURES:
        d = figures.preset(fig, "desk", seed=5)
        assert d.base_seed == 5 and d.K <= 4
        if d.sweep == "M":
            assert max(d.values) <= 40
        if fig != "fig3":
            assert d.trials == 10 and figures.preset(fig, "full").trials == 100
    assert figures.preset("fig8", "desk").order_irs == "ideal"
    assert figures.preset("fig8", "full").order_irs == "continuous"
    with pytest.raises(ConfigError):
        figures.preset("fig2")


def test_fig3_traces(tmp_path):
    cfg = figures.preset("fig3", "desk", output=str(tmp_path))
    cfg = ExperimentConfig(**{**cfg.__dict__, "schemes": ("ideal",), "values": (10,)})
    out = runner.run(cfg)
    traces = [json.loads(l) for l in (out / "traces.jsonl").read_text().splitlines()]
    assert traces[0]["scheme"] == "ideal" and len(traces[0]["objectives"]) >= 2
    assert np.all(np.diff(traces[0]["objectives"]) >= -1e-6)

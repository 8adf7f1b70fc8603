import csv
import io
import json

import numpy as np
import pytest

from fiqsim import cli
from fiqsim.experiments import (ConfigError, ExperimentConfig, ReportWriteError, dumps_report,
                                report_body, run)
from fiqsim.streams import seed_stream

# golden fixture: first draws of seed_stream(0, 0)
FIXTURE_U32 = [614984505, 3097516466, 15903434, 115643172, 240096624]
FIXTURE_UNIFORM = [0.7211967525405779, 0.026925274171797242, 0.4025382164530227]


def test_seed_stream_fixture():
    assert seed_stream(0, 0).integers(2**32, size=5).tolist() == FIXTURE_U32
    assert seed_stream(0, 0).random(3).tolist() == FIXTURE_UNIFORM


def test_seed_stream_reproducible():
    assert np.array_equal(seed_stream(123, 4).random(100), seed_stream(123, 4).random(100))
    assert not np.array_equal(seed_stream(123, 4).random(100), seed_stream(123, 5).random(100))


@pytest.mark.parametrize("i, j", [(0, 1), (1, 2), (0, 1000), (7, 8)])
def test_seed_stream_independence(i, j):
    a = seed_stream(99, i).random(10_000)
    b = seed_stream(99, j).random(10_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_seed_stream_validation():
    with pytest.raises(ValueError):
        seed_stream(-1, 0)
    with pytest.raises(ValueError):
        seed_stream(2**64, 0)
    seed_stream(2**64 - 1, 0)


def test_spread_report():
    rep = run({"scenario": "spread"})
    s = rep["summary"]
    assert s["widths"] == pytest.approx([0, 0.25, 0.5, 1, 1], abs=1e-15)
    assert abs(s["slope"] - 0.01) <= 1e-9
    assert rep["pass"] and rep["schema_version"] == "1"


def test_chsh_brute_force_report():
    rep = run({"scenario": "chsh", "params": {"mode": "brute-force"}})
    assert rep["summary"]["max_abs_S_deterministic"] == 2
    assert rep["verdicts"] == {"deterministic_max_is_2": True}


def test_same_config_same_body():
    cfg = {"scenario": "wigner", "seed": 5, "trials": 2000}
    a, b = run(cfg), run(cfg)
    assert dumps_report(report_body(a)) == dumps_report(report_body(b))
    c = run({**cfg, "seed": 6})
    assert report_body(c) != report_body(a)


def test_config_errors_are_collected():
    with pytest.raises(ConfigError) as info:
        run({"scenario": "spread", "seed": -3, "trials": 0, "output_format": "xml",
             "params": {"bogus": 1}})
    assert len(info.value.errors) == 4
    with pytest.raises(ConfigError) as info:
        run({"scenario": "entangle", "params": {"delta_a": 1.0, "delta_l": 2.0},
             "trials": 500})
    assert len(info.value.errors) == 2
    with pytest.raises(ConfigError):
        run({"scenario": "teleport"})
    with pytest.raises(ConfigError):
        run({"scenario": "spread", "params": {"delta_v0": "fast"}})
    with pytest.raises(ConfigError):
        run({"scenario": "wigner", "params": {"state": "prefix=2;"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"seed": 1})


def test_report_written_and_echoed(tmp_path, capsys):
    out = tmp_path / "r.json"
    rep = run({"scenario": "noclone", "params": {"permutations": 20, "pairs": 20},
               "output_path": str(out)}, echo=True)
    written = json.loads(out.read_text())
    assert written == rep
    assert json.loads(capsys.readouterr().out) == rep


def test_csv_output(tmp_path):
    out = tmp_path / "spread.csv"
    run({"scenario": "spread", "output_format": "csv", "output_path": str(out)})
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["time", "width", "position_lo", "position_hi"]
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([0, 0.25, 0.5, 1, 1])
    out2 = tmp_path / "chsh.csv"
    run({"scenario": "chsh", "params": {"mode": "brute-force"}, "output_format": "csv",
         "output_path": str(out2)})
    assert "verdict.deterministic_max_is_2" in out2.read_text()


def test_io_failure_is_distinct(tmp_path):
    with pytest.raises(ReportWriteError):
        run({"scenario": "spread", "output_path": str(tmp_path / "missing" / "r.json")})


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "chsh", "params": {"mode": "brute-force"}}))
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert cli.main(["run", "--config", str(cfg), "--seed", "-1"]) == 2
    assert cli.main(["run"]) == 2
    assert cli.main(["run", "--scenario", "spread", "--output",
                     str(tmp_path / "nope" / "x.json")]) == 3

    monkeypatch.setattr(cli, "run", lambda cfg, echo: {"pass": False})
    assert cli.main(["run", "--scenario", "spread"]) == 1


def test_cli_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "wigner", "seed": 1, "trials": 50}))
    assert cli.main(["run", "--config", str(cfg), "--seed", "9", "--trials", "300"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["config"]["seed"] == 9 and rep["config"]["trials"] == 300


@pytest.mark.parametrize("scenario", ["einstein", "entangle", "hv-oracle"])
def test_scenarios_pass_small(scenario):
    trials = {"einstein": 3000, "entangle": 10_000, "hv-oracle": 10_000}[scenario]
    params = {"entangle": {"variance_samples": 200_000}, "hv-oracle": {"states": 5}}
    rep = run({"scenario": scenario, "trials": trials, "params": params.get(scenario, {})})
    assert rep["pass"], rep["verdicts"]

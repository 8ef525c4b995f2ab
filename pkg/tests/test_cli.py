"""Command-line interface: subcommands, outputs, exit codes."""

import csv
import json
from dataclasses import replace

import pytest

from prnn_abc.cli import main
from prnn_abc.config import save_scenario
from prnn_abc.plant import PlantState
from prnn_abc.sim import Scenario, Timing, default_scenario
from prnn_abc.traceio import read_trace


@pytest.fixture()
def quick_config(tmp_path):
    scenario = replace(default_scenario(), timing=Timing(0.001, 0.01, 0.5))
    path = tmp_path / "quick.yaml"
    save_scenario(path, scenario)
    return path


def test_simulate_default_config(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--out", str(out)]) == 0
    captured = capsys.readouterr()
    assert "run summary:" in captured.out
    trace = read_trace(out / "trace.csv")
    assert len(trace) == 500  # 5 s at 10 ms
    summary = json.loads((out / "summary.json").read_text())
    assert summary["aborted"] is False


def test_simulate_with_config_and_gnuplot(tmp_path, quick_config):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(quick_config), "--out", str(out), "--gnuplot"]) == 0
    assert (out / "trace.csv").exists()
    assert (out / "summary.json").exists()
    assert (out / "scenario.yaml").exists()
    assert "trace.csv" in (out / "plot.gp").read_text()


def test_simulate_adaptive_flag_toggles_theta_columns(tmp_path, quick_config):
    out_off = tmp_path / "off"
    out_on = tmp_path / "on"
    assert main(["simulate", "--config", str(quick_config), "--out", str(out_off),
                 "--adaptive", "off"]) == 0
    assert main(["simulate", "--config", str(quick_config), "--out", str(out_on),
                 "--adaptive", "on", "--seed", "5"]) == 0
    off_trace = read_trace(out_off / "trace.csv")
    on_trace = read_trace(out_on / "trace.csv")
    assert all(t != t for t in off_trace[-1].theta_hat)  # nan columns
    assert all(t == t for t in on_trace[-1].theta_hat)


def test_simulate_rejects_bad_config(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("gains: {c1: -1.0}\n", encoding="utf-8")
    code = main(["simulate", "--config", str(bad), "--out", str(tmp_path / "out")])
    assert code == 2


def test_simulate_unknown_key_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("weights: {t: 10.0}\n", encoding="utf-8")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "out")]) == 2


def test_simulate_abort_exit_code(tmp_path):
    scenario = Scenario(
        initial=PlantState(1.4, 0.0),
        bounds=(-0.05, 0.05),
        timing=Timing(0.001, 0.01, 2.0),
    )
    path = tmp_path / "doomed.yaml"
    save_scenario(path, scenario)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == 1
    assert (out / "trace.csv").exists()  # partial trace still written


def test_validate_accepts_fresh_trace(tmp_path, quick_config):
    out = tmp_path / "out"
    main(["simulate", "--config", str(quick_config), "--out", str(out)])
    assert main(["validate", str(out / "trace.csv")]) == 0


def test_validate_rejects_tampered_trace(tmp_path, quick_config):
    out = tmp_path / "out"
    main(["simulate", "--config", str(quick_config), "--out", str(out)])
    path = out / "trace.csv"
    lines = path.read_text(encoding="utf-8").splitlines()
    parts = lines[3].split(",")
    parts[12] = "0.125"  # stored V2 no longer matches S1, S2
    lines[3] = ",".join(parts)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["validate", str(path)]) == 1


def test_validate_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.csv")]) == 1


def test_verify_single_suite(capsys):
    assert main(["verify", "--suite", "gradient"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] gradient" in out
    assert "1/1 suites passed" in out


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "nonsense"]) == 2


def test_verify_all_suites_pass(capsys):
    # fresh build: every suite green, exit 0
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "10/10 suites passed" in out


def test_verify_monitor_on_named_scenario(tmp_path, quick_config, capsys):
    code = main(["verify", "--suite", "lyapunov", "--scenario", str(quick_config)])
    assert code == 0
    assert "lyapunov-monitor" in capsys.readouterr().out


def test_sweep_single_cell_matches_simulate(tmp_path, quick_config):
    sim_out = tmp_path / "sim"
    sweep_out = tmp_path / "sweep"
    assert main(["simulate", "--config", str(quick_config), "--out", str(sim_out)]) == 0
    assert main(["sweep", "--config", str(quick_config), "--grid", "vartheta=50",
                 "--out", str(sweep_out)]) == 0
    with open(sweep_out / "sweep.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["status"] == "ok"
    summary = json.loads((sim_out / "summary.json").read_text())
    assert float(rows[0]["max_abs_s1"]) == pytest.approx(summary["max_abs_s1"], rel=1e-15)


def test_sweep_grid_and_failures_recorded(tmp_path, quick_config):
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(quick_config),
                 "--grid", "c1=-1,2", "--grid", "R=0.1,0.01", "--out", str(out)])
    assert code == 0
    with open(out / "sweep.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert rows[0]["status"].startswith("ValueError")
    assert rows[2]["status"] == "ok"
    assert [r["c1"] for r in rows] == ["-1", "-1", "2", "2"]


def test_sweep_bad_grid_spec(tmp_path, quick_config):
    assert main(["sweep", "--config", str(quick_config), "--grid", "vartheta",
                 "--out", str(tmp_path / "o")]) == 2
    assert main(["sweep", "--config", str(quick_config), "--grid", "vartheta=",
                 "--out", str(tmp_path / "o")]) == 2


def test_sweep_requires_grid(tmp_path, quick_config):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", str(quick_config), "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_sweep_thread_env(tmp_path, quick_config, monkeypatch):
    monkeypatch.setenv("PRNN_ABC_THREADS", "2")
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(quick_config), "--grid", "vartheta=25,50",
                 "--out", str(out)]) == 0
    with open(out / "sweep.csv", encoding="utf-8") as fh:
        assert len(list(csv.DictReader(fh))) == 2

import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from spinorlab.cli import ConfigError, RunConfig, expand_sweep, main
from spinorlab.grid import Field, PeriodicGrid

BASE = {"system": "nls", "grid": {"N": 64},
        "evolution": {"dt": 1e-3, "t_final": 0.05, "snapshot_stride": 10},
        "initial": {"family": "plane_wave", "amplitude": 0.5, "mode": 1}}


def _write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return str(p)


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", _write(tmp_path, BASE), "--out", str(out)]) == 0
    for name in ("meta.json", "monitors.csv", "config.yaml", "report.json"):
        assert (out / name).is_file()
    assert len(list((out / "snapshots").glob("*.bin"))) == 6
    rep = json.loads((out / "report.json").read_text())
    assert rep["H"] < 1e-12
    saved = yaml.safe_load((out / "config.yaml").read_text())
    assert saved["evolution"]["scheme"] == "ifrk4" and saved["grid"]["N"] == 64


def test_report_recomputes(tmp_path):
    out = tmp_path / "run"
    main(["simulate", "--config", _write(tmp_path, BASE), "--out", str(out)])
    (out / "report.json").unlink()
    assert main(["report", "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["snapshots"] == 6
    assert main(["report", "--out", str(tmp_path / "missing")]) == 2


@pytest.mark.parametrize("patch", [{"grid": {"N": 100}}, {"system": "kdv"}, {"colour": 1},
                                   {"evolution": {"dt": -1, "t_final": 1}},
                                   {"evolution": {"dt": 1e-3, "t_final": 1, "method": "x"}},
                                   {"initial": {"family": "sech"}},
                                   {"initial": {"family": "file", "path": "/nonexistent.bin"}}])
def test_config_errors_exit_2(tmp_path, patch):
    cfg = dict(BASE, **patch)
    out = tmp_path / "bad"
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 2
    err = json.loads((out / "error.json").read_text())
    assert err["kind"] == "config" and err["exit_code"] == 2


def test_unparsable_config(tmp_path):
    p = tmp_path / "x.yaml"
    p.write_text("system: [nls\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exit_3(tmp_path):
    cfg = {"system": "sys2", "grid": {"N": 64}, "J": {"theta": 0.3, "psi": 0.2},
           "evolution": {"dt": 0.05, "t_final": 5.0, "scheme": "rk4", "check_resolution": False},
           "initial": {"family": "random", "amplitude": 5.0}}
    out = tmp_path / "blow"
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 3
    assert json.loads((out / "error.json").read_text())["kind"] == "blowup"


def test_file_initial_condition(tmp_path):
    g = PeriodicGrid(64)
    Field(g, 0.3 * np.exp(1j * g.x)).save_binary(tmp_path / "u0.bin")
    cfg = dict(BASE, initial={"family": "file", "path": str(tmp_path / "u0.bin")})
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "r")]) == 0


def test_seed_changes_random_data(tmp_path):
    cfg = dict(BASE, system="sys1", initial={"family": "random", "amplitude": 0.3})
    path = _write(tmp_path, cfg)
    for seed in ("1", "2"):
        assert main(["simulate", "--config", path, "--seed", seed, "--out", str(tmp_path / seed)]) == 0
    a = (tmp_path / "1" / "monitors.csv").read_bytes()
    b = (tmp_path / "2" / "monitors.csv").read_bytes()
    assert a != b


def test_run_config_roundtrip():
    cfg = RunConfig.from_dict(BASE)
    again = RunConfig.from_dict(yaml.safe_load(cfg.dump()))
    assert again == cfg
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"system": "nls"})


def test_expand_sweep():
    raw = dict(BASE, sweep={"parameters": {"evolution.dt": [1e-3, 2e-3], "initial.amplitude": [0.1, 0.2, 0.3]}})
    names, rows = expand_sweep(raw)
    assert names == ["evolution.dt", "initial.amplitude"] and len(rows) == 6
    assert rows[-1][1]["evolution"]["dt"] == 2e-3 and rows[-1][1]["initial"]["amplitude"] == 0.3
    assert "sweep" not in rows[0][1]
    assert expand_sweep(dict(BASE))[1] == []


@pytest.mark.parametrize("jobs", ["1", "2"])
def test_sweep(tmp_path, jobs):
    raw = dict(BASE, sweep={"parameters": {"initial.amplitude": [0.1, 0.2], "grid.N": [64, 100]}})
    out = tmp_path / "sw"
    assert main(["sweep", "--config", _write(tmp_path, raw), "--out", str(out), "--jobs", jobs]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert [r["status"] for r in rows] == ["ok", "config_error", "ok", "config_error"]
    assert float(rows[0]["H_drift"]) < 1e-12


def test_verify_suite(tmp_path):
    assert main(["verify", "--suite", "algebra", "--seed", "2", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["passed"] and all(c["passed"] for c in rep["checks"])
    assert main(["verify", "--suite", "nonsense", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("curve,flow", [({"kind": "helix", "N": 64, "a": 1.0, "b": 0.5}, None),
                                        ({"kind": "perturbed_circle", "N": 64, "eps": 0.1},
                                         {"dt": 1e-3, "t_final": 0.01}),
                                        ({"kind": "bump", "N": 64, "dimension": 5}, None),
                                        ({"kind": "random", "N": 128, "dimension": 6}, None)])
def test_reconstruct_curve(tmp_path, curve, flow):
    raw = {"curve": curve, "J": {"theta": 0.7, "psi": 1.3}}
    if flow:
        raw["flow"] = flow
    out = tmp_path / "c"
    assert main(["reconstruct-curve", "--config", _write(tmp_path, raw), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["speed_defect"] < 1e-8
    if curve.get("dimension", 3) > 3:
        assert summary["annihilates_tangent"] < 1e-8


def test_reconstruct_curve_bad_kind(tmp_path):
    raw = {"curve": {"kind": "trefoil"}}
    assert main(["reconstruct-curve", "--config", _write(tmp_path, raw), "--out", str(tmp_path / "c")]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "spinorlab.cli", "simulate", "--config",
                          _write(tmp_path, BASE), "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["H"] < 1e-12


def test_sweep_generator_grid(tmp_path):
    angles = [0.0, 0.8, 1.6, 2.4]
    raw = {"system": "sys1", "grid": {"N": 64},
           "evolution": {"dt": 1e-3, "t_final": 0.1, "snapshot_stride": 20},
           "initial": {"family": "random", "amplitude": 0.3},
           "sweep": {"parameters": {"J.theta": angles, "J.psi": angles}}}
    out = tmp_path / "sw"
    assert main(["sweep", "--config", _write(tmp_path, raw), "--out", str(out), "--jobs", "4"]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert len(rows) == 16
    assert all(r["status"] == "ok" and float(r["H_drift"]) < 1e-6 for r in rows)


def test_sweep_empty_grid(tmp_path):
    raw = dict(BASE, sweep={"parameters": {"initial.amplitude": []}})
    out = tmp_path / "sw"
    assert main(["sweep", "--config", _write(tmp_path, raw), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert rows == []


def test_sweep_isolates_divergent_cell(tmp_path):
    raw = {"system": "sys2", "grid": {"N": 64}, "J": {"theta": 0.3, "psi": 0.2},
           "evolution": {"dt": 1e-3, "t_final": 0.5, "scheme": "rk4", "check_resolution": False},
           "initial": {"family": "random", "amplitude": 0.3},
           "sweep": {"parameters": {"evolution.dt": [1e-3, 0.05]}}}
    out = tmp_path / "sw"
    assert main(["sweep", "--config", _write(tmp_path, raw), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert [r["status"] for r in rows] == ["ok", "blowup"]

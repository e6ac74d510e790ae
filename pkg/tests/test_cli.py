from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from homoclinic.cli import DEFAULT_CONFIG, load_config, main, parse_config, run_pipeline, write_outputs
from homoclinic.errors import ConfigInvalid, IoFailure

BRANCH_HEADER = "lambda,sup_norm,l2_norm,h1_norm,residual,gamma_plus,gamma_minus"


def run(tmp_path, verb, cfg=None, name="out"):
    args = [verb, "--out", str(tmp_path / name)]
    if cfg is not None:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(cfg))
        args += ["--config", str(p)]
    return main(args), tmp_path / name


@pytest.fixture(scope="module")
def default_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    return [run(base, "all", name=f"run{i}") for i in range(2)]


def strip_volatile(report):
    report = dict(report)
    report.pop("wall_times")
    report["config"]["output"].pop("directory")
    return report


def test_default_pipeline(default_runs):
    code, out = default_runs[0]
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert [s["stage"] for s in rep["stages"]] == ["validate", "admissible", "scan", "kernel", "check", "branch"]
    assert all(s["status"] == "ok" for s in rep["stages"])
    assert len(rep["candidates"]) == 1 and abs(rep["candidates"][0]["lambda"] + 1) < 1e-3
    assert rep["kernels"][0]["dimension"] == 1
    assert rep["bifurcation"][0]["parity"] == -1
    assert rep["branches"][0]["n_points"] >= 50
    assert rep["seed"] == 0xB1F0
    assert set(rep["wall_times"]) == {"validate", "admissible", "scan", "kernel", "check", "branch"}


def test_csv_schemas(default_runs):
    _, out = default_runs[0]
    rep = json.loads((out / "report.json").read_text())
    text = (out / "branch_0.csv").read_bytes().decode()
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[0] == BRANCH_HEADER and lines[-1] == ""
    assert len(lines) - 1 == rep["branches"][0]["n_points"] + 1
    assert (out / "sigma_min.csv").read_text().split("\n")[0] == "lambda,sigma_min"
    sols = sorted(p.name for p in out.glob("solution_0_*.csv"))
    assert sols and all(p in rep["manifest"] for p in sols)
    head = (out / sols[0]).read_text().split("\n")[0]
    assert head == "t,x1,x2"


def test_csv_roundtrip(default_runs):
    _, out = default_runs[0]
    rep = json.loads((out / "report.json").read_text())
    with open(out / "branch_0.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["sup_norm"]) for r in rows] == [p["sup_norm"] for p in rep["branches"][0]["points"]]
    assert all(v == "%.17g" % float(v) for r in rows for v in r.values())


def test_determinism(default_runs):
    (_, a), (_, b) = default_runs
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        if n.endswith(".csv"):
            assert (a / n).read_bytes() == (b / n).read_bytes(), n
    ra = strip_volatile(json.loads((a / "report.json").read_text()))
    rb = strip_volatile(json.loads((b / "report.json").read_text()))
    assert ra == rb


def test_inadmissible_window_skips(tmp_path):
    code, out = run(tmp_path, "all", {"lambda_window": {"lo": 1.0, "hi": 2.0}})
    assert code == 3
    rep = json.loads((out / "report.json").read_text())
    status = {s["stage"]: s for s in rep["stages"]}
    assert status["admissible"]["status"] == "failed"
    for name in ("scan", "kernel", "check", "branch"):
        assert status[name]["status"] == "skipped" and status[name]["reason"]
    assert rep["bifurcation"] == [] and rep["candidates"] == []
    assert not list(out.glob("branch_*.csv"))


def test_empty_candidates(tmp_path):
    code, out = run(tmp_path, "check", {"lambda_window": {"lo": -3.0, "hi": -1.5, "n_scan": 10},
                                        "grid": {"n_cells": 1000}})
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["candidates"] == []
    assert not list(out.glob("branch_*.csv"))


def test_prefix_verbs(tmp_path):
    code, out = run(tmp_path, "admissible")
    rep = json.loads((out / "report.json").read_text())
    assert code == 0 and [s["stage"] for s in rep["stages"]] == ["validate", "admissible"]
    assert rep["admissibility"]["admissible"] is True


@pytest.mark.parametrize(
    "cfg, field",
    [
        ({"grid": {"n_cells": 10}}, "grid.n_cells"),
        ({"lambda_window": {"lo": 0.0, "hi": -1.0}}, "lambda_window"),
        ({"tolerances": {"newton_tol": 0.0}}, "tolerances.newton_tol"),
        ({"regularity": {"C_matrix": [[0.0, 1.0], [0.0, 0.0]]}}, "regularity.C_matrix"),
        ({"bogus": 1}, "bogus"),
        ({"model": {"name": "nope"}}, "model.name"),
        ({"grid": {"n_cells": "many"}}, "grid.n_cells"),
    ],
)
def test_config_invalid(cfg, field):
    with pytest.raises(ConfigInvalid) as exc:
        parse_config(cfg)
    assert exc.value.field == field


def test_config_error_exit_code(tmp_path):
    code, _ = run(tmp_path, "all", {"grid": {"n_cells": 10}})
    assert code == 2
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_defaults_roundtrip():
    cfg = parse_config(DEFAULT_CONFIG)
    assert cfg.n_cells == 4000 and cfg.lo == -3.0 and cfg.formats == ("json", "csv")
    assert load_config(None).raw == cfg.raw


def test_write_outputs_io_failure(tmp_path):
    cfg = parse_config({"grid": {"n_cells": 200}})
    report, branches = run_pipeline(cfg, "validate")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure) as exc:
        write_outputs(report, branches, blocker / "sub")
    assert "sub" in exc.value.path


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "homoclinic", "validate", "--out", str(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "validate" in res.stdout

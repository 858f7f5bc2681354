import csv
import json
import math
from pathlib import Path

import pytest

from bicavity.cli import main

from oracles import bare_intensity

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_cfg(tmp_path, data, name="c.cfg", header="# test config\n"):
    path = tmp_path / name
    path.write_text(header + json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


BARE = {"cavity": {"delta_c": 1.0, "u0": 0.1, "epsilon": 2.5e-5}, "feedback": {"kind": "none"}}


def test_steady_scan_without_feedback(tmp_path):
    cfg = write_cfg(tmp_path, {**BARE, "scan": {"n_points": 17}})
    assert main(["steady-scan", "--config", cfg, "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "steady_scan.csv")
    assert list(rows[0]) == ["xi", "delta_hat", "n_roots", "j1", "s1", "j2", "s2", "j3", "s3"]
    for r in rows:
        assert r["n_roots"] == "1" and r["j2"] == ""
        # %.17g text round-trips to the same double
        assert float(r["j1"]) == pytest.approx(bare_intensity(float(r["xi"]), 1.0, 0.1), rel=1e-15)
    assert (tmp_path / "plot_steady_scan.py").exists()


def test_steady_scan_bistable_rows(tmp_path):
    assert main(["steady-scan", "--config", str(CONFIGS / "fig2b.cfg"), "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "steady_scan.csv")
    tri = [r for r in rows if r["n_roots"] == "3"]
    assert tri and all((r["s1"], r["s2"], r["s3"]) == ("1", "0", "1") for r in tri)


def test_missing_key_names_it(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"cavity": {"delta_c": 1.0, "epsilon": 0.0}, "feedback": {"kind": "none"}})
    assert main(["steady-scan", "--config", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "cavity.u0" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {**BARE, "scan": {"n_pts": 3}})
    assert main(["steady-scan", "--config", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "scan.n_pts" in capsys.readouterr().err


def test_domain_error_is_config_error(tmp_path):
    cfg = write_cfg(tmp_path, {"cavity": {"delta_c": 1.0, "u0": 0.1, "epsilon": -1.0}, "feedback": {"kind": "none"}})
    assert main(["steady-scan", "--config", cfg, "--out-dir", str(tmp_path)]) == 2


def test_malformed_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("# comment\n{\n  \"cavity\": {,}\n}\n")
    assert main(["steady-scan", "--config", str(path), "--out-dir", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_non_finite_run_exits_3(tmp_path):
    cfg = write_cfg(tmp_path, {**BARE, "particle": {"u": math.nan}, "run": {"t_max": 1.0}})
    assert main(["single", "--config", cfg, "--out-dir", str(tmp_path)]) == 3


def test_analytic_report(tmp_path):
    assert main(["analytic-report", "--config", str(CONFIGS / "fig2a.cfg"), "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "analytic_report.json").read_text())
    # units = "J" in the config: the switching level on 4J is 4 * 0.53
    assert rep["i_sw_rel"] == pytest.approx(2.12)
    assert rep["delta1_hat"] == pytest.approx(math.sqrt((4 * 0.935 - 2.12) / 2.12), rel=1e-14)
    assert rep["f_stop_small_coupling"] == pytest.approx(-1e-5)
    assert rep["reachable"] is False


def test_analytic_report_without_bistability_exits_4(tmp_path):
    assert main(["analytic-report", "--config", str(CONFIGS / "fig2b.cfg"), "--out-dir", str(tmp_path)]) == 4


def test_hysteresis_outputs(tmp_path):
    assert main(["hysteresis", "--config", str(CONFIGS / "fig2b.cfg"), "--out-dir", str(tmp_path)]) == 0
    jumps = read_csv(tmp_path / "hysteresis_jumps.csv")
    assert sorted(r["direction"] for r in jumps) == ["down", "down", "up", "up"]
    trace = read_csv(tmp_path / "hysteresis.csv")
    assert {r["branch"] for r in trace} == {"lower", "upper"}


def test_single_adiabatic_without_feedback(tmp_path):
    out = tmp_path / "o"
    args = ["single", "--config", str(CONFIGS / "fig2a.cfg"), "--out-dir", str(out),
            "--mode", "adiabatic", "--feedback", "none", "--t-max", "200"]
    assert main(args) == 0
    summary = json.loads((out / "single_summary.json").read_text())
    assert summary["energy_drift"] < 1e-6
    assert "branch" in read_csv(out / "single.csv")[0]


def test_single_compare_and_json_format(tmp_path):
    args = ["single", "--config", str(CONFIGS / "fig2b.cfg"), "--out-dir", str(tmp_path),
            "--t-max", "20", "--compare-no-feedback", "--format", "json"]
    assert main(args) == 0
    data = json.loads((tmp_path / "single.json").read_text())
    assert set(data) == {"tau", "xi", "u", "j", "input_rel"}
    nofb = json.loads((tmp_path / "single_nofb.json").read_text())
    assert len(set(nofb["input_rel"])) == 1


def test_ensemble_with_snapshots(tmp_path):
    args = ["ensemble", "--config", str(CONFIGS / "fig3a.cfg"), "--out-dir", str(tmp_path),
            "--t-max", "10", "--snapshots", "--seed", "2"]
    assert main(args) == 0
    rows = read_csv(tmp_path / "ensemble_snapshots.csv")
    assert {r["particle"] for r in rows} == {str(k) for k in range(5)}
    man = json.loads((tmp_path / "ensemble_manifest.json").read_text())
    assert man["seed"] == 2 and man["config"]["ensemble"]["seed"] == 2


def test_feasibility_flags(tmp_path):
    args = ["feasibility-check", "--out-dir", str(tmp_path), "--delta-i-rel", "0.13", "--photon-energy", "1.9865e-19",
            "--mean-power", "5e-9", "--velocity", "11.48", "--period", "5e-7", "--switch-time", "1e-9"]
    assert main(args) == 0
    rep = json.loads((tmp_path / "feasibility.json").read_text())
    assert rep["v_max"] == 50.0


def test_dimensionless_reference_cavity(tmp_path):
    assert main(["dimensionless", "--config", str(CONFIGS / "rb_cavity.cfg"), "--out-dir", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "dimensionless.json").read_text())
    assert d["u0"] == pytest.approx(0.1, rel=1e-12)
    assert d["epsilon"] == pytest.approx(2.5e-5, rel=1e-12)
    assert d["velocity_scale"] == pytest.approx(120.0, rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["single", "--config", str(CONFIGS / "fig2b.cfg"), "--t-max", "30"],
    ["ensemble", "--config", str(CONFIGS / "fig3a.cfg"), "--t-max", "30", "--snapshots"],
    ["hysteresis", "--config", str(CONFIGS / "fig2b.cfg")],
])
def test_manifest_rerun_is_byte_identical(tmp_path, argv):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(first)]) == 0
    manifest = next(first.glob("*_manifest.json"))
    assert main(["run", str(manifest), "--out-dir", str(second)]) == 0
    outputs = json.loads(manifest.read_text())["outputs"]
    assert outputs
    for name in outputs:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

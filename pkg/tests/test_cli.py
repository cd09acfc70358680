import csv
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from ga_wqed.cli import dispatch, parse_layout_spec


def run(argv):
    out = io.StringIO()
    code = dispatch(argv, out)
    return code, out.getvalue()


def test_point_atom_pole_row():
    code, text = run(["poles", "--layout", "N=1,gamma=0.1"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["re_s", "im_s", "re_residue", "im_residue", "dark"]
    assert [float(v) for v in rows[1]] == pytest.approx([-0.05, -1.0, 1.0, 0.0, 0.0])


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["poles", "--layout", "N=1,colour=red"],
    ["dark", "--layout", "N=2", "--profile", "2"],
    ["catch", "--n-phase", "4"],
    ["evolve", "--layout", "N=2,tau=1", "--dt", "0.5"],
    ["repro", "no_such_case"],
    ["kernel", "--config", "/nonexistent.ini"],
])
def test_configuration_errors_exit_2(argv):
    code, _ = run(argv)
    assert code == 2


def test_layout_shortcut():
    assert parse_layout_spec("N=3, tau=2, gamma=0.1") == {"n_legs": "3", "tau": "2", "gamma": "0.1"}


def test_outputs_are_deterministic_and_use_lf(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["evolve", "--layout", "N=2,tau=1,omega=3,gamma=0.05", "--t-end", "5", "--samples", "11"]
    assert run(argv + ["--out", str(a)])[0] == 0
    assert run(argv + ["--out", str(b)])[0] == 0
    data = (a / "evolve.csv").read_bytes()
    assert data == (b / "evolve.csv").read_bytes()
    assert b"\r\n" not in data
    first = data.decode().splitlines()[1].split(",")
    assert first[0] == "0" and first[1] == "1"
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["subcommand"] == "evolve"
    assert manifest["outputs"] == ["evolve.csv"]
    assert manifest["wall_clock"] >= 0


def test_scatter_spectrum_columns():
    code, text = run(["scatter", "--layout", "N=5,tau=6.283185307179586,gamma=0.02",
                      "--omega-d", "0.9"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 1
    assert float(rows[0]["R"]) + float(rows[0]["T"]) == pytest.approx(1.0, abs=1e-12)


def test_dark_table():
    code, text = run(["dark", "--layout", "N=4", "--gamma-tau", "0.1"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["n"]) for r in rows] == [1, 2, 3]
    assert float(rows[0]["omega_tau"]) == pytest.approx(1.5707963267948966 - 0.2)


def _sweep_config(tmp_path, values):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text("[atom]\nn_legs = 1\nomega = 1\n\n[sweep]\natom.gamma = %s\n" % values)
    return cfg


def test_sweep_serial_and_parallel_agree(tmp_path):
    cfg = _sweep_config(tmp_path, "0.01:0.04:4")
    outs = []
    for par in ("1", "2"):
        d = tmp_path / f"out{par}"
        assert run(["poles", "--config", str(cfg), "--out", str(d), "--parallelism", par])[0] == 0
        outs.append((d / "sweep.jsonl").read_text())
    assert outs[0] == outs[1]
    lines = [json.loads(s) for s in outs[0].splitlines()]
    assert len(lines) == 4
    assert all(rec["status"] == "ok" for rec in lines)
    assert [rec["leading_re"] for rec in lines] == pytest.approx([-0.005, -0.01, -0.015, -0.02])


def test_empty_sweep(tmp_path):
    cfg = tmp_path / "empty.ini"
    cfg.write_text("[atom]\nn_legs = 1\n\n[sweep]\natom.gamma =\n")
    code, text = run(["poles", "--config", str(cfg)])
    assert code == 0 and text == ""


def test_sweep_with_only_failures_exits_3(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[atom]\nn_legs = 1\n\n[sweep]\natom.gamma = -1,-2\n")
    code, text = run(["poles", "--config", str(cfg)])
    assert code == 3
    assert all(json.loads(s)["status"] == "error" for s in text.splitlines())


def test_parallelism_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GA_WQED_PARALLELISM", "many")
    cfg = _sweep_config(tmp_path, "0.01,0.02")
    assert run(["poles", "--config", str(cfg)])[0] == 2


def test_catch_summary():
    code, text = run(["catch", "--dx-over-lambda0", "1"])
    assert code == 0
    rec = json.loads(text)
    assert rec["n_phase"] == 9 and 0.3 < rec["P"] < 0.35


def test_catch_spacetime(tmp_path):
    code, _ = run(["catch", "--dx-over-lambda0", "1", "--spacetime", "5x7", "--out", str(tmp_path)])
    assert code == 0
    rows = list(csv.reader((tmp_path / "catch.csv").open()))
    assert rows[0] == ["t", "x", "abs2_phi"] and len(rows) == 36
    assert json.loads((tmp_path / "summary.json").read_text())["n_phase"] == 9


def test_repro_writes_junit(tmp_path):
    junit = tmp_path / "junit.xml"
    code, _ = run(["repro", "dark_amplitude", "--out", str(tmp_path), "--junit", str(junit)])
    assert code == 0
    rec = json.loads((tmp_path / "repro.jsonl").read_text())
    assert rec["name"] == "dark_amplitude" and rec["passed"]
    suite = ET.parse(junit).getroot()
    assert suite.get("tests") == "1" and suite.get("failures") == "0"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ga_wqed.cli", "kernel", "--layout", "N=3,tau=1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "delay,weight_sum,rate"
    proc = subprocess.run([sys.executable, "-m", "ga_wqed.cli", "kernel", "--layout", "N=0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 2

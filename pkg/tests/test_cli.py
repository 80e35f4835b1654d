import json
import math
import subprocess
import sys

import pytest

from eqstate.cli import dispatch


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pressure_constant_one(capsys):
    code, out, err = run(capsys, "thermo", "pressure", "--counts", "constant_one",
                         "--tol", "1e-10")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["h"] == pytest.approx(0.693147180559945, abs=1e-10)
    assert "0.69314718055994" in err
    man = doc["manifest"]
    assert man["command"] == "thermo pressure"
    assert man["version"]
    assert man["params"]["tol"] == 1e-10


def test_pressure_gouezel(capsys):
    code, out, _ = run(capsys, "thermo", "pressure", "--counts", "gouezel",
                       "--q", "1", "--tol", "1e-10")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["h"] == pytest.approx(2.995732273553991, abs=1e-10)


def test_scheme_build_not_markov_exit1(capsys):
    code, out, err = run(capsys, "scheme", "build", "--map", "doubling",
                         "--base", "0.1,0.7", "--nmax", "3")
    assert code == 1
    assert "NotMarkovCompatible" in err


def test_usage_error_exit2(capsys):
    code, _, _ = run(capsys, "thermo", "nonsense")
    assert code == 2
    code2, _, _ = run(capsys, "bogus")
    assert code2 == 2


def test_maps_list(capsys):
    code, out, _ = run(capsys, "maps", "list")
    assert code == 0
    doc = json.loads(out)
    assert "lsv" in doc["result"]["builtins"]


def test_scheme_build_and_thermo_pipeline(tmp_path, capsys):
    scheme = tmp_path / "s.json"
    code, out, _ = run(capsys, "scheme", "build", "--map", "lsv", "--alpha", "0.6",
                       "--base", "0.5,1", "--nmax", "12", "--out", str(scheme))
    assert code == 0
    assert scheme.exists()
    code, out, _ = run(capsys, "thermo", "pressure", "--scheme", str(scheme),
                       "--tol", "1e-12")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["h"] == pytest.approx(math.log(2), abs=1e-3)
    assert doc["manifest"]["input_digests"][str(scheme)]

    csvp = tmp_path / "mme.csv"
    code, out, _ = run(capsys, "thermo", "mme", "--scheme", str(scheme),
                       "--csv", str(csvp))
    assert code == 0
    body = csvp.read_text()
    assert body.splitlines()[0] == "n,count,weight,level_mass"
    assert (tmp_path / "mme.csv.manifest.json").exists()

    code, out, _ = run(capsys, "thermo", "equilibrium", "--scheme", str(scheme),
                       "--potential", "geometric:t=0.5")
    assert code == 0
    doc = json.loads(out)
    assert math.isfinite(doc["result"]["pressure"])


def test_curve_csv_determinism(tmp_path, capsys):
    scheme = tmp_path / "s.json"
    run(capsys, "scheme", "build", "--map", "doubling", "--base", "0,1",
        "--nmax", "3", "--out", str(scheme))
    out1 = tmp_path / "c1.csv"
    out2 = tmp_path / "c2.csv"
    for out in (out1, out2):
        code, _, _ = run(capsys, "analysis", "pressure-curve", "--scheme", str(scheme),
                         "--potential", "geometric:t=1", "--t", "0:2:0.5",
                         "--out", str(out))
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    header, first = out1.read_text().splitlines()[:2]
    assert header == "t,P,err,left_slope,right_slope"
    assert first.startswith("0,0.69314718055994")


def test_zooming_frequency_cli(capsys):
    code, out, _ = run(capsys, "zooming", "frequency", "--map", "doubling",
                       "--x", "0.3141", "--N", "50",
                       "--lambda", "0.6931471", "--delta", "0.2")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["frequency"] == 1.0
    assert doc["result"]["params"]["delta"] == 0.2


def test_analysis_ce_cli(capsys):
    code, out, _ = run(capsys, "analysis", "ce", "--c", "-2", "--N", "200")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["liminf_estimate"] == pytest.approx(math.log(4), abs=1e-6)
    # escaping orbit is a domain error -> exit 1
    code, _, err = run(capsys, "analysis", "ce", "--c", "0.3", "--N", "200")
    assert code == 1 and "OrbitEscaped" in err


def test_analysis_verify_quick(capsys):
    code, out, _ = run(capsys, "analysis", "verify", "--quick")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["violations"] == []


def test_user_table_counts(tmp_path, capsys):
    table = tmp_path / "t.json"
    table.write_text(json.dumps({"table": {"1": 2}, "complete": True}))
    code, out, _ = run(capsys, "thermo", "pressure", "--counts", "user_table",
                       "--table", str(table))
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["h"] == pytest.approx(math.log(2), abs=1e-10)
    assert doc["manifest"]["input_digests"]


def test_curve_map_mismatch_exit1(tmp_path, capsys):
    scheme = tmp_path / "s.json"
    run(capsys, "scheme", "build", "--map", "doubling", "--base", "0,1",
        "--nmax", "3", "--out", str(scheme))
    code, _, err = run(capsys, "analysis", "pressure-curve", "--map", "lsv",
                       "--alpha", "0.6", "--scheme", str(scheme),
                       "--potential", "geometric", "--t", "0:1:0.5",
                       "--out", str(tmp_path / "c.csv"))
    assert code == 1 and "does not match" in err


def test_json_potential_file(tmp_path, capsys):
    scheme = tmp_path / "s.json"
    run(capsys, "scheme", "build", "--map", "doubling", "--base", "0,1",
        "--nmax", "3", "--out", str(scheme))
    pot = tmp_path / "phi.json"
    pot.write_text(json.dumps({"kind": "constant", "c": 0.25}))
    code, out, _ = run(capsys, "thermo", "equilibrium", "--scheme", str(scheme),
                       "--potential", f"json:{pot}")
    assert code == 0
    doc = json.loads(out)
    # p = log(2 e^{0.25}) = log 2 + 0.25
    assert abs(doc["result"]["pressure"] - (math.log(2) + 0.25)) < 1e-10


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "eqstate.cli", "thermo", "pressure",
         "--counts", "two_at_one"],
        capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["result"]["h"] == pytest.approx(math.log(2), abs=1e-10)
    bad = subprocess.run(
        [sys.executable, "-m", "eqstate.cli", "scheme", "build", "--map",
         "doubling", "--base", "0.1,0.7", "--nmax", "2"],
        capture_output=True, text=True)
    assert bad.returncode == 1 and "NotMarkovCompatible" in bad.stderr

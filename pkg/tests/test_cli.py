import json
import subprocess
import sys

import pytest

from conecalc.cli import main
from conecalc.io import validate

from conftest import COULOMB, EDGE, EDGE_DRIFT, EULER, RESONANT, S1


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


def test_analyze(capsys, spec_file):
    code, out, _ = run_json(capsys, "analyze", "--spec", spec_file(S1))
    assert code == 0 and out["elliptic"]
    roots = sorted(round(r["re"]) for r in out["indicial_roots"])
    assert roots == [-3, -2, -1, 0, 1, 2, 3]


def test_analyze_not_elliptic(capsys, spec_file):
    code, out, _ = run_json(capsys, "analyze", "--spec", spec_file(EULER), "--gamma", "0")
    assert code == 2 and not out["elliptic"]


def test_analyze_table(capsys, spec_file):
    code, out, err = run(capsys, "analyze", "--spec", spec_file(S1))
    assert code == 0 and out.strip() and not err


def test_parametrix_json(capsys, spec_file):
    code, out, _ = run_json(capsys, "parametrix", "--spec", spec_file(EULER), "-N", "3")
    assert code == 0
    validate(out, "hierarchy")
    assert len(out["levels"]) == 4


def test_parametrix_deterministic(capsys, spec_file):
    path = spec_file(S1)
    outs = [run(capsys, "parametrix", "--spec", path, "--format", "json")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_asymptotics_resonance(capsys, spec_file):
    code, out, _ = run_json(capsys, "asymptotics", "--spec", spec_file(RESONANT), "--order", "1")
    assert code == 0 and out["flat_ok"]
    validate(out, "asymptotics")
    terms = {(t["p_re"], t["k"]): t["c"] for t in out["expansion"]["terms"]}
    assert terms[(0.5, 1)] == [-1.0]
    assert terms[(0.5, 0)] == [-1.0]
    assert terms[(-0.5, 0)] == [1.0]


def test_asymptotics_homogeneous(capsys, spec_file):
    code, out, _ = run_json(capsys, "asymptotics", "--spec", spec_file(COULOMB))
    assert code == 0
    assert out["kernel"]["terms"] and out["type"]["points"]
    assert any("homogeneous" in n for n in out["notes"])


def test_asymptotics_rhs_outside_strip(capsys, spec_file):
    code, out, _ = run_json(capsys, "asymptotics", "--spec", spec_file(RESONANT), "--gamma", "1.5")
    assert code == 3 and out["error"] == "schema"


def test_verify_suites(capsys):
    code, out, _ = run_json(capsys, "verify", "--seed", "7")
    assert code == 0


def test_verify_spec(capsys, spec_file):
    code, out, _ = run_json(capsys, "verify", "--spec", spec_file(EULER), "-N", "3")
    assert code == 0


def test_edge_analyze(capsys, spec_file):
    code, out, _ = run_json(capsys, "edge-analyze", "--spec", spec_file(EDGE))
    assert code == 0


def test_edge_analyze_drift(capsys, spec_file):
    code, out, _ = run_json(capsys, "edge-analyze", "--spec", spec_file(EDGE_DRIFT))
    assert code == 0
    assert "per y" in json.dumps(out)


def test_edge_parametrix(capsys, spec_file):
    code, out, _ = run_json(capsys, "edge-parametrix", "--spec", spec_file(EDGE), "-N", "4")
    assert code == 0 and out["passed"]


def test_edge_spec_to_cone_command(capsys, spec_file):
    code, out, _ = run_json(capsys, "analyze", "--spec", spec_file(EDGE))
    assert code == 3


def test_usage_errors(capsys, spec_file):
    assert run(capsys)[0] == 3
    assert run(capsys, "frobnicate")[0] == 3
    assert run(capsys, "analyze", "--order", "x")[0] == 3
    code, out, _ = run_json(capsys, "analyze")
    assert code == 3 and out["error"] == "usage"
    validate(out, "error")


def test_schema_error_table_goes_to_stderr(capsys, spec_file):
    code, out, err = run(capsys, "analyze", "--spec", spec_file({"weight": {"gamma": 0}}))
    assert code == 3 and not out and "schema" in err


def test_cache(capsys, spec_file, tmp_path):
    path, cdir = spec_file(S1), str(tmp_path / "cache")
    a = run(capsys, "parametrix", "--spec", path, "--format", "json", "--cache-dir", cdir)
    b = run(capsys, "parametrix", "--spec", path, "--format", "json", "--cache-dir", cdir)
    assert a[1] == b[1]
    assert "miss" in a[2] and "hit" in b[2]
    c = run(capsys, "parametrix", "--spec", path, "--format", "json", "--cache-dir", cdir, "--gamma", "0.4")
    assert "miss" in c[2]


def test_module_entry_point(spec_file):
    proc = subprocess.run([sys.executable, "-m", "conecalc", "analyze", "--spec", spec_file(EULER),
                           "--gamma", "0", "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["elliptic"] is False

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from jnspace import calibration, cli
from jnspace.duality import Atom, Polymer
from jnspace.funcs import Cube, CubeFamily, DyadicGridFunction, StepFunction


def run(args, capsys):
    code = cli.main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def pm(tmp_path):
    return write(tmp_path / "pm.json", StepFunction([0, 0.5, 1], [-1.0, 1.0]).to_json())


def test_construct_and_norms(tmp_path, capsys):
    out = tmp_path / "f.json"
    tree = tmp_path / "tree.json"
    code, _, _ = run(["construct", "--kind", "full", "--p", 2, "--depth", 3, "--out", out, "--tree", tree], capsys)
    assert code == 0
    f = StepFunction.from_json(json.loads(out.read_text()))
    assert "widths" in json.loads(out.read_text())
    assert len(json.loads(tree.read_text())["nodes"]) == 15
    code, text, _ = run(["norms", "--input", out, "--p", 2], capsys)
    res = json.loads(text)
    assert code == 0 and res["lp"] ** 2 == pytest.approx(4 * 2 ** -0.25, rel=1e-12)
    assert res["lorentz"] == pytest.approx(res["lp"] / math.sqrt(2), rel=1e-12)
    assert f.values.max() == pytest.approx(2 ** 4.5)


def test_jnp_methods(tmp_path, capsys):
    d = tmp_path / "d.json"
    assert run(["construct", "--kind", "dyadic", "--p", 2, "--depth", 3, "--out", d], capsys)[0] == 0
    fam = tmp_path / "fam.json"
    code, text, _ = run(["jnp", "--input", d, "--p", 2, "--dyadic", "--emit-family", fam], capsys)
    dy = json.loads(text)
    assert code == 0 and json.loads(fam.read_text()) == dy["family"]
    code, text, _ = run(["jnp", "--input", d, "--p", 2, "--refine", 2], capsys)
    grid = json.loads(text)
    assert grid["value"] >= dy["value"]
    assert json.loads(run(["jnp", "--input", d, "--p", 2, "--method", "dyadic"], capsys)[1]) == dy


def test_monotone_command(tmp_path, pm, capsys, monkeypatch):
    rep = tmp_path / "rep.json"
    code, _, _ = run(["monotone", "--input", pm, "--p", 2, "--report", rep], capsys)
    res = json.loads(rep.read_text())
    assert code == 0 and res["ratio"] == pytest.approx(1.0) and res["stop"] == "boundary"
    assert res["violations"] == []
    monkeypatch.setitem(calibration.MONOTONE_MIN_RATIO, 2.0, 2.0)
    code, _, err = run(["monotone", "--input", pm, "--p", 2, "--report", rep], capsys)
    assert code == 2 and "invariant" in err


def test_monotone_normalize_flag(tmp_path, capsys):
    f = write(tmp_path / "dec.json", StepFunction([0, 0.25, 1], [3.0, 0.0]).to_json())
    assert run(["monotone", "--input", f, "--p", 2], capsys)[0] == 1
    assert run(["monotone", "--input", f, "--p", 2, "--normalize"], capsys)[0] == 0


def test_duality_commands(tmp_path, capsys):
    f = write(tmp_path / "g.json", DyadicGridFunction(1, 3, [7, -1, -1, -1, -1, -1, -1, -1]).to_json())
    code, text, _ = run(["duality", "cz", "--input", f], capsys)
    assert code == 0 and json.loads(text)["violations"] == []
    code, text, _ = run(["duality", "cz", "--input", f, "--C", 4, "--lambda", 2.0], capsys)
    assert code == 0 and json.loads(text)["C"] == 4
    poly = Polymer((Atom.from_block(1, (0,), [3.0, -1.0, -1.0, -1.0]),
                    Atom.from_block(2, (3,), [1.0, -1.0])), 2.0, 4.0)
    g = write(tmp_path / "poly.json", poly.to_json())
    code, text, _ = run(["duality", "flatten", "--input", g, "--C", 3], capsys)
    res = json.loads(text)
    assert code == 0 and all(p["s"] == "inf" for p in res["polymers"])
    code, text, _ = run(["duality", "pair", "--f", f, "--g", g, "--truncate", 100], capsys)
    res = json.loads(text)
    assert code == 0 and res["pairing"] == res["truncated"]
    cubes = write(tmp_path / "cubes.json", CubeFamily((Cube((0.0,), 0.5),)).to_json())
    code, text, _ = run(["duality", "nearopt", "--f", f, "--cubes", cubes, "--r", 2, "--s", 4], capsys)
    res = json.loads(text)
    assert code == 0 and res["attainment"] >= 1 - 1e-6 and res["size"] <= 1 + 1e-12


def test_extend_command(tmp_path, capsys):
    f = write(tmp_path / "f.json", StepFunction([0, 0.25, 0.5, 1], [1.0, -2.0, 0.5]).to_json())
    rep = tmp_path / "ext.json"
    code, _, _ = run(["extend", "--input", f, "--p", 2, "--report", rep], capsys)
    res = json.loads(rep.read_text())
    assert code == 0 and res["lowerOk"] and res["upperOk"] and res["level"] == 2


def test_reports_csv(tmp_path, capsys):
    code, text, _ = run(["report", "counterexample", "--p", 2, "--gmax", 3, "--refine", 1], capsys)
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# report=counterexample")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert [int(r["G"]) for r in rows] == [0, 1, 2, 3]
    assert all(float(r["lorentz_partial"]) == pytest.approx(int(r["G"]) + 1, rel=1e-12) for r in rows)
    assert all(float(r["lp_p"]) == pytest.approx(float(r["lp_p_closed"]), rel=1e-12) for r in rows)
    assert "\r\n" in text
    code, text, _ = run(["report", "duality", "--trials", 3, "--seed", 5], capsys)
    assert code == 0 and len(text.splitlines()) == 5
    code, text, _ = run(["duality", "report", "--trials", 2, "--s", "inf"], capsys)
    assert code == 0 and ",nan," in text
    code, text, _ = run(["report", "monotone", "--trials", 3], capsys)
    assert code == 0 and text.splitlines()[1].startswith("trial,steps")


@pytest.mark.parametrize("args", [
    ["norms", "--input", "/nonexistent.json", "--p", "2"],
    ["jnp", "--input", "{pm}", "--p", "0.5"],
    ["jnp", "--input", "{pm}", "--p", "2", "--q", "3"],
    ["report", "duality", "--r", "3", "--s", "2"],
    ["report", "duality", "--C", "1.5"],
    ["duality", "cz", "--input", "{pm}", "--lambda", "0.1"],
    ["construct", "--kind", "dyadic", "--p", "2", "--depth", "0"],
    ["bogus"],
])
def test_precondition_failures_exit_1(args, pm, capsys):
    args = [a.replace("{pm}", str(pm)) for a in args]
    try:
        code = cli.main(args)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_non_aligned_grid_input(tmp_path, capsys):
    f = write(tmp_path / "f.json", StepFunction([0, 1 / 3, 1], [1.0, -0.5]).to_json())
    assert run(["jnp", "--input", f, "--p", 2, "--dyadic"], capsys)[0] == 1


def test_bad_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["norms", "--input", bad, "--p", 2], capsys)[0] == 1


def test_reports_are_deterministic(tmp_path):
    args = ["report", "duality", "--trials", "6", "--seed", "3"]
    outs = []
    for threads in (1, 1, 4):
        path = tmp_path / f"o{threads}_{len(outs)}.csv"
        assert cli.main(args + ["--threads", str(threads), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    sub = subprocess.run([sys.executable, "-m", "jnspace.cli", *args, "--threads", "2"],
                         check=True, capture_output=True)
    assert outs[0] == outs[1] == outs[2]
    assert sub.stdout == outs[0]
    other = tmp_path / "other.csv"
    cli.main(["report", "duality", "--trials", "6", "--seed", "4", "--out", str(other)])
    assert other.read_bytes() != outs[0]

"""Command-line behaviour: exit codes, file formats, determinism."""

import json
import subprocess
import sys

import pytest

from pluriminimal.cli import main


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture
def fur(tmp_path):
    path = tmp_path / "fur.json"
    assert run("family", "--f", "z1^3", "--g", "0", "--out", path) == 0
    return path


def test_family_then_verify(fur, tmp_path):
    doc = json.loads(fur.read_text())
    assert doc["family"]["P"][1] == "-1.5*z2^2"
    rep = tmp_path / "rep.json"
    assert run("verify", fur, "--out", rep) == 0
    report = json.loads(rep.read_text())
    assert report["passed"] and {c["check"] for c in report["checks"]} >= {
        "closed",
        "conformality",
        "rank",
        "minimality",
    }


@pytest.mark.parametrize("f,g", [("0", "0"), ("exp(z1)", "sin(z1)"), ("z1^2", "z1^2")])
def test_family_round_trip(tmp_path, f, g):
    path = tmp_path / "d.json"
    assert run("family", "--f", f, "--g", g, "--out", path) == 0
    assert run("verify", path, "--out", tmp_path / "r.json") == 0


def test_family_input_file(tmp_path):
    inp = tmp_path / "in.json"
    inp.write_text(json.dumps({"f": "z1^3", "g": "0"}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("family", "--input", inp, "--out", a) == 0
    assert run("family", "--f", "z1^3", "--g", "0", "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_non_closed_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"arity": 2, "forms": [{"coeffs": ["z2", "0"]}] * 4}))
    rep = tmp_path / "rep.json"
    assert run("verify", path, "--out", rep) == 1
    closed = json.loads(rep.read_text())["checks"][0]
    assert closed["check"] == "closed" and not closed["passed"]
    assert "worst_point" in closed and closed["worst_form"] == 0
    assert "closed form 0" in capsys.readouterr().err


def test_parse_error_exit_two(tmp_path, capsys):
    assert run("family", "--f", "z1^-1", "--g", "0") == 2
    assert "position" in capsys.readouterr().err
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"arity": 1, "forms": [{"coeffs": ["z1 +"]}]}))
    assert run("verify", path) == 2


def test_bad_file_exit_two(tmp_path):
    assert run("verify", tmp_path / "missing.json") == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run("verify", junk) == 2


def test_nonpositive_tolerance_exit_two(fur):
    assert run("verify", fur, "--tol-conf", "0") == 2


def test_relations_outputs(tmp_path):
    out, csv = tmp_path / "k.json", tmp_path / "d.csv"
    assert run("relations", "--m", 2, "--n", 3, "--out", out, "--csv", csv) == 0
    doc = json.loads(out.read_text())
    assert doc["kernel_dimension"] == 5 and doc["first_nontrivial_n"] == 3
    assert csv.read_text().splitlines()[0] == "n,dimV,dimSym2V,dimTarget,rank,kernel"


def test_relations_empty_kernel(tmp_path):
    out = tmp_path / "k.json"
    assert run("relations", "--m", 2, "--n", 1, "--out", out) == 0
    assert json.loads(out.read_text())["relations"] == []


def test_relations_emit_verifies(tmp_path):
    data = tmp_path / "e.json"
    assert (
        run("relations", "--m", 2, "--n", 3, "--out", tmp_path / "k.json", "--emit", 0,
            "--ensure-immersion", "--data-out", data)
        == 0
    )
    assert run("verify", data, "--tol-conf", "1e-10", "--out", tmp_path / "r.json") == 0


def test_relations_bad_emit_index(tmp_path):
    assert run("relations", "--m", 2, "--n", 1, "--out", tmp_path / "k.json", "--emit", 0) == 2


def test_size_guard_exit_three():
    assert run("relations", "--m", 3, "--n", 8, "--cap", 100) == 3


def test_mesh(fur, tmp_path):
    out = tmp_path / "m.obj"
    assert run("mesh", fur, "--curve", "z1,z1", "--resolution", 5, "--project", "1,3,5", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 25


def test_mesh_bad_projection(fur):
    assert run("mesh", fur, "--curve", "z1,z1", "--project", "1,2,7") == 2
    assert run("mesh", fur, "--curve", "z1,z1", "--project", "1,1,2") == 2


def test_selfintersect(fur, tmp_path):
    out = tmp_path / "s.json"
    assert run("selfintersect", fur, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["found"] and doc["pair"]["certified_distance"] < 1e-8


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pluriminimal", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "verify" in proc.stdout


def _twice(tmp_path, name, *args):
    outs = []
    for k in range(2):
        path = tmp_path / f"{name}{k}"
        assert run(*args, "--out", path) in (0, 1)
        outs.append(path.read_bytes())
    return outs


@pytest.mark.parametrize(
    "name,args",
    [
        ("family", ("family", "--f", "exp(z1)", "--g", "z1^2")),
        ("verify", ("verify", "FUR", "--seed", "3")),
        ("relations", ("relations", "--m", "2", "--n", "3")),
        ("mesh", ("mesh", "FUR", "--curve", "z1,0.5*z1", "--resolution", "6")),
        ("selfintersect", ("selfintersect", "FUR", "--starts", "8", "--seed", "2")),
    ],
)
def test_deterministic_bytes(fur, tmp_path, name, args):
    args = [str(fur) if a == "FUR" else a for a in args]
    a, b = _twice(tmp_path, name, *args)
    assert a == b

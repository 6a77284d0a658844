import json
from pathlib import Path

import jsonschema
import pytest

from limitops.cli import MANIFEST_SCHEMA, main, parse_radii, report_schema

SPECS = Path(__file__).resolve().parents[1] / "specs"


def run(tmp_path, *args, sub="out"):
    out = tmp_path / sub
    code = main([*args, "--out", str(out)])
    return code, out


def report(out):
    return json.loads((out / "report.json").read_text())


def test_parse_radii():
    assert parse_radii("2:10:4") == [2, 6, 10]
    assert parse_radii("1:3") == [1, 2, 3]
    assert parse_radii("5,7") == [5, 7]
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        parse_radii("3:1")


def test_inspect_shift(tmp_path):
    code, out = run(tmp_path, "inspect", "--spec", str(SPECS / "shift.json"))
    r = report(out)["result"]
    assert code == 0 and r["propagation"] == 1 and r["schur_norm_bound"] == 1


def test_fredholm_exit_codes(tmp_path):
    code, out = run(tmp_path, "fredholm", "--spec", str(SPECS / "identity_minus_shift.json"))
    r = report(out)
    assert code == 2 and r["exit_code"] == 2
    assert any(w["kind"] == "vanishing_symbol" for w in r["result"]["witnesses"])
    code, out = run(tmp_path, "fredholm", "--spec", str(SPECS / "shift_minus_b.json"), sub="b")
    assert code == 0 and report(out)["result"]["index"] == 1
    code, _ = run(tmp_path, "fredholm", "--spec", str(SPECS / "shift.json"), "--centers", "2", sub="c")
    assert code == 3


def test_ghost_mode_on_union(tmp_path):
    code, out = run(tmp_path, "fredholm", "--spec", str(SPECS / "identity_minus_averaging.json"),
                    "--radii", "1:4", "--probe-radius", "4", "--centers", "12")
    r = report(out)["result"]
    assert code == 0 and r["mode"] == "ghost" and r["uniform_bound"] == pytest.approx(1)


def test_lowernorm_csv(tmp_path):
    code, out = run(tmp_path, "lowernorm", "--spec", str(SPECS / "laplacian_minus_5.json"),
                    "--radii", "1:40:1", "--format", "csv")
    lines = (out / "report.csv").read_text().splitlines()
    assert code == 0 and lines[0] == "r,nu" and len(lines) == 41
    nu = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(a >= b for a, b in zip(nu, nu[1:])) and nu[-1] >= 1


def test_window_and_crosscheck(tmp_path):
    code, out = run(tmp_path, "window", "--spec", str(SPECS / "laplacian_minus_5.json"), "--radii", "2:10")
    rows = report(out)["result"]["rows"]
    assert code == 0 and [r["s"] for r in rows] == list(range(2, 11))
    code, _ = run(tmp_path, "crosscheck", "--spec", str(SPECS / "periodic_shift.json"), sub="x")
    assert code == 0
    code, _ = run(tmp_path, "crosscheck", "--spec", str(SPECS / "identity_minus_shift.json"), sub="y")
    assert code == 3
    code, _ = run(tmp_path, "crosscheck", "--spec", str(SPECS / "averaging_cycles.json"), sub="z")
    assert code == 1


@pytest.mark.parametrize("command,spec", [("inspect", "averaging_cycles"), ("limitops", "diag_b"),
                                          ("lowernorm", "identity_minus_shift"), ("window", "shift"),
                                          ("fredholm", "laplacian_minus_2"), ("ghost", "averaging_cycles"),
                                          ("crosscheck", "shift")])
def test_reports_round_trip_and_are_deterministic(tmp_path, command, spec):
    args = [command, "--spec", str(SPECS / f"{spec}.json"), "--seed", "3"]
    if command in ("window", "lowernorm"):
        args += ["--radii", "1:6"]
    _, a = run(tmp_path, *args, sub="a")
    _, b = run(tmp_path, *args, sub="b")
    for f in ("report.json", "manifest.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    doc = report(a)
    jsonschema.validate(doc, report_schema(command))
    jsonschema.validate(json.loads((a / "manifest.json").read_text()), MANIFEST_SCHEMA)
    assert not list(a.glob(".*"))  # no temp files left behind


def test_input_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "limitops/1",\n "space": [}')
    code, out = run(tmp_path, "inspect", "--spec", str(bad))
    assert code == 1 and "line 2" in capsys.readouterr().err and not out.exists()
    bad.write_text(json.dumps({"schema": "limitops/1", "space": {"kind": "z_lattice"},
                               "operator": {"terms": [{"kind": "diag"}]}}))
    code, _ = run(tmp_path, "inspect", "--spec", str(bad))
    assert code == 1 and "field operator/terms/0" in capsys.readouterr().err
    code, _ = run(tmp_path, "inspect", "--spec", str(tmp_path / "missing.json"))
    assert code == 1
    code, _ = run(tmp_path, "fredholm", "--spec", str(SPECS / "shift.json"), "--tau", "-1")
    assert code == 1

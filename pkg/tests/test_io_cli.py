import json
import math

import numpy as np
import pytest

from hopflax import build_grid_space, power
from hopflax.cli import main
from hopflax.errors import ParseError, ValidationError
from hopflax.io import fmt, load_field, load_json, load_space, space_from_document, space_to_json, to_json
from hopflax.verify import verify_paper

# rows that fail on finite spaces whatever the implementation (see the README)
THEORY_LIMITED = {
    "hypercontractive H nonincreasing (two-point)",
    "hypercontractive H nonincreasing (5-point path)",
    "dual transport bound at derived constant (two-point)",
    "dual transport bound at derived constant (5-point path)",
    "constant chain C <= kappa_p F (two-point)",
}


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "space": _write(tmp_path, "space.json", {"type": "matrix", "dist": [[0, 1], [1, 0]]}),
        "cost": _write(tmp_path, "cost.json", power(2).to_document()),
        "field": _write(tmp_path, "field.json", {"values": [0.0, 1.0]}),
        "mu": _write(tmp_path, "mu.json", {"weights": [0.5, 0.5]}),
        "nu": _write(tmp_path, "nu.json", {"weights": [1.0, 0.0]}),
        "tmp": tmp_path,
    }


def test_space_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    pts = rng.random((7, 2))
    space = space_from_document({"type": "matrix", "dist": np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)).tolist()})
    path = _write(tmp_path, "s.json", space_to_json(space))
    assert np.array_equal(load_space(path).dist, space.dist)
    grid = build_grid_space(2, 4, 1.5)
    assert np.array_equal(space_from_document(json.loads(space_to_json(grid))).dist, grid.dist)


def test_formatting():
    assert fmt(0.1) == "0.10000000000000001" and float(fmt(1 / 3)) == 1 / 3
    assert fmt(math.inf) == "inf" and fmt(math.nan) == "nan"
    assert json.loads(to_json({"b": np.float64(1.5), "a": [np.inf]})) == {"a": ["inf"], "b": 1.5}


def test_parse_errors_carry_the_line(tmp_path):
    path = _write(tmp_path, "bad.json", '{\n  "weights": [0.5,\n  ]\n}')
    with pytest.raises(ParseError) as e:
        load_json(path)
    assert e.value.line == 3
    with pytest.raises(ParseError):
        load_space(_write(tmp_path, "nodist.json", {"type": "matrix"}))
    with pytest.raises(ParseError):
        load_json(tmp_path / "missing.json")
    with pytest.raises(ValidationError):
        load_field(_write(tmp_path, "short.json", [1.0]), 2)


def test_kappa_command(capsys):
    assert main(["kappa", "--p", "2"]) == 0
    assert capsys.readouterr().out == "7.38905610\n"


def test_evolve_row(files, capsys):
    assert main(["evolve", "--space", files["space"], "--cost", files["cost"], "--field", files["field"],
                 "--t-grid", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# hopflax evolve seed=0"
    assert lines[1] == "t,x,Ptf,Qtf,dplus,dminus,maxdist,mindist"
    assert lines[2] == "1,0,0.5,0,0.5,0.5,1,1"


def test_evolve_time_grid_and_tolerance_echo(files, capsys):
    assert main(["evolve", "--space", files["space"], "--cost", files["cost"], "--field", files["field"],
                 "--t-grid", "0.5:2:4", "--tol", "tie_tol=1e-8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "# tol tie_tol=1e-08"
    assert len(lines) == 3 + 4 * 2


def test_malformed_measure_exits_2(files, capsys):
    bad = _write(files["tmp"], "bad.json", '{"weights": [0.5,\n 0.5,]}')
    code = main(["ot", "--space", files["space"], "--cost", files["cost"], "--mu", bad, "--nu", files["nu"]])
    assert code == 2
    assert capsys.readouterr().err.startswith(f"error: {bad}:2:")


def test_bad_tolerance_and_missing_option_exit_2(files, capsys):
    assert main(["kappa", "--p", "2", "--tol", "speed=3"]) == 2
    assert main(["evolve", "--space", files["space"]]) == 2
    assert "--cost" in capsys.readouterr().err


def test_ot_and_cconvex(files, capsys):
    assert main(["ot", "--space", files["space"], "--cost", files["cost"], "--mu", files["mu"],
                 "--nu", files["nu"], "--plan"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("cost 0.25\nduality_gap 0\n")
    assert main(["cconvex", "--space", files["space"], "--cost", files["cost"], "--field", files["field"]]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["is_c_convex"] is False and doc["deviation"] == 0.5
    assert [p["subdifferential"] for p in doc["points"]] == [[0, 1], [1]]


def test_hyper_writes_to_file(files, capsys):
    out = files["tmp"] / "h.json"
    code = main(["hyper", "--space", files["space"], "--mu", files["mu"], "--cost", files["cost"],
                 "--field", files["field"], "--C", "1", "--format", "json", "--out", str(out)])
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 40 and doc["admissible"]
    assert code == (0 if doc["max_increase"] <= 0 else 1)


def test_verify_smoke_fails_exactly_on_theory_limited_rows():
    rows = verify_paper("smoke", 0)
    assert {r.label for r in rows if not r.passed} == THEORY_LIMITED


def test_beta_canary_trips_the_derivative_row():
    rows = {r.label: r for r in verify_paper("smoke", 0, beta_perturbation=0.01)}
    assert not rows["P_t f time derivative equals beta(maxdist/t)"].passed
    assert rows["Hamilton-Jacobi inequality within mesh tolerance"].passed


def test_verify_command_names_first_failure(capsys):
    assert main(["verify-paper", "--scale", "smoke", "--format", "csv"]) == 1
    captured = capsys.readouterr()
    assert captured.out.startswith("invariant,passed,slack,cases\n")
    assert captured.err == "failed: hypercontractive H nonincreasing (two-point)\n"

"""
End-to-end tests of the launcher verbs, exit codes and deterministic output
"""

import json
from fractions import Fraction

import numpy as np
import pytest

import serialization
from capacity import CapacityProblem, Domain, MaskSpec
from grids import GridFunction, cube
from launcher import main

F = Fraction


@pytest.fixture
def files(tmp_path, line, shifted_line, conic):
    paths = {}
    for name, obj in (("line", line), ("shifted", shifted_line), ("conic", conic)):
        paths[name] = str(tmp_path / f"{name}.json")
        serialization.dump(obj, paths[name])
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_eval(capsys, files):
    code, out = run(capsys, "eval", files["line"], "--at", "1,0")
    assert code == 0
    assert json.loads(out) == {"value": "1"}


def test_eval_needs_a_point(capsys, files):
    code, out = run(capsys, "eval", files["line"])
    assert code == 2
    assert out == ""


def test_newton_polytope(capsys, files):
    code, out = run(capsys, "newton", files["line"])
    assert code == 0
    doc = json.loads(out)
    assert doc["volume"] == "1/2"
    assert doc["dim"] == 2


def test_intersection_mass(capsys, files):
    code, out = run(capsys, "intersect", files["line"], files["shifted"], "--mass")
    assert code == 0
    assert json.loads(out) == {"mass": "1"}


def test_intersection_is_deterministic(capsys, files):
    _, first = run(capsys, "intersect", files["line"], files["conic"])
    _, second = run(capsys, "intersect", files["line"], files["conic"])
    assert first == second
    assert serialization.loads(first).complex.dim == 0


def test_out_file(capsys, tmp_path, files):
    out = str(tmp_path / "mass.json")
    code, printed = run(capsys, "mass", files["conic"], "--out", out)
    assert code == 0
    assert printed == ""
    assert json.loads(open(out, encoding="utf-8").read())["total"] == "4"


def test_svg_is_byte_identical(capsys, tmp_path, files):
    first, second = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run(capsys, "hypersurface", files["conic"], "--svg", str(first))[0] == 0
    assert run(capsys, "hypersurface", files["conic"], "--svg", str(second))[0] == 0
    assert first.read_bytes() == second.read_bytes()
    assert b"<svg" in first.read_bytes()


def test_hessian_refusal_writes_violation_map(capsys, tmp_path):
    u = GridFunction.from_function(lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 - p[..., 2] ** 2, cube(1, 3), 7)
    grid = str(tmp_path / "saddle.json")
    serialization.dump(u, grid)
    out = str(tmp_path / "measure.json")
    code, _ = run(capsys, "hessian", grid, "--m", "2", "--out", out)
    assert code == 2
    violations = json.loads(open(out + ".violations.json", encoding="utf-8").read())
    assert len(violations) == 5 ** 3
    assert violations[0]["j"] == 2


def test_hessian_mass_of_a_quadratic(capsys, tmp_path):
    u = GridFunction.from_function(lambda p: 0.5 * np.sum(p ** 2, axis=-1), cube(F(1, 2), 2), 9)
    grid = str(tmp_path / "bowl.json")
    serialization.dump(u, grid)
    code, out = run(capsys, "hessian", grid, "--mass")
    assert code == 0
    assert json.loads(out)["mass"] == pytest.approx(2.0)


def test_capacity_verb_with_mask_override(capsys, tmp_path):
    prob = CapacityProblem(Domain.box_domain([(-1, 1), (-1, 1)]), MaskSpec.ball((0, 0), F(1, 2)), 2, resolution=9)
    path = str(tmp_path / "problem.json")
    serialization.dump(prob, path)
    code, out = run(capsys, "capacity", path, "--m", "1", "--mask", "box:-1/4,1/4,-1/4,1/4")
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] is True
    assert doc["capacity"] > 0


def test_indicator_and_newton_number(capsys, files):
    code, out = run(capsys, "indicator", files["line"])
    assert code == 0
    assert json.loads(out)["gradients"] == [[[0, 1], [0, 1]], [[0, 1], [1, 1]], [[1, 1], [0, 1]]]
    code, out = run(capsys, "newton-number", files["line"], "--at", "0,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["residual"] == "1"
    assert doc["literal"] == "divergent"
    assert doc["agree"] is False


def test_mixed_volume_oracle(capsys, files):
    code, out = run(capsys, "oracle", "mixed-volume", files["line"], files["conic"])
    assert code == 0
    assert json.loads(out) == {"mixed_volume": "2"}


def test_superform_oracle(capsys, tmp_path):
    path = tmp_path / "wedge.json"
    path.write_text(json.dumps({"matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]], "beta_power": 2}))
    code, out = run(capsys, "oracle", "superform-wedge", str(path))
    assert code == 0
    assert json.loads(out) == {"value": "6"}


@pytest.mark.parametrize("argv", [
    ["teleport", "x.json"],
    ["oracle", "crystal-ball", "x.json"],
    ["oracle"],
    ["eval"],
    ["eval", "does-not-exist.json", "--at", "0,0"],
])
def test_input_errors_exit_with_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_malformed_json_exits_with_2(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"n": 2,, }')
    assert run(capsys, "eval", str(path), "--at", "0,0")[0] == 2


def test_wrong_document_kind_exits_with_2(capsys, tmp_path, simplex):
    path = str(tmp_path / "simplex.json")
    serialization.dump(simplex, path)
    assert run(capsys, "eval", path, "--at", "0,0")[0] == 2

import json
from importlib import resources

import pytest

from starjet import cli

NONEXACT = str(resources.files("starjet").joinpath("scenarios/t2_nonexact.json"))
PLANE = str(resources.files("starjet").joinpath("scenarios/plane_default.json"))


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("command", ["moyal", "build-star", "induce", "class-star"])
def test_table_commands_emit_checked_tables(capsys, command):
    code, out, _ = run(capsys, command)
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == command
    assert "associativity_spot_check" in json.dumps(doc)


@pytest.mark.parametrize("emit", ["pretty", "latex"])
def test_other_emitters(capsys, emit):
    code, out, _ = run(capsys, "moyal", "--emit", emit, "--order", "2")
    assert code == 0
    assert ("C_{2}" in out) if emit == "latex" else ("C_2:" in out)


def test_compare_exact_and_equiv_search(capsys):
    code, out, _ = run(capsys, "compare")
    assert code == 0 and json.loads(out)["report"]["classes"]["equal"] is True
    code, out, _ = run(capsys, "equiv-search")
    assert code == 0 and json.loads(out)["report"]["status"] == "verified"


def test_compare_nonexact_witness(capsys):
    code, out, _ = run(capsys, "compare", "--scenario", NONEXACT)
    rep = json.loads(out)["report"]
    assert code == 0
    assert rep["first_differing_order"] == 1
    assert rep["witness"]["difference_equals_minus_half_sharp"] is True
    assert rep["witness"]["sharp_constant_mode"] == {"1,2": {"1": "-1"}}


def test_moser_commands(capsys):
    code, out, _ = run(capsys, "moser")
    assert code == 0 and json.loads(out)["report"]["pullback_maps_omega1_to_omega2"] is True
    code, _, err = run(capsys, "moser", "--scenario", NONEXACT)
    assert code == 3 and "not cohomologous" in err


def test_borel_command(capsys):
    code, out, _ = run(capsys, "borel", "--grid", "2000")
    rep = json.loads(out)["report"]
    assert code == 0
    assert all(c["holds"] for c in rep["certificates"])
    assert rep["triple"]["d_relation_max_error"] <= 1e-12


def test_affine_scenario(capsys):
    code, _, _ = run(capsys, "build-star", "--scenario", PLANE)
    assert code == 0
    code, _, err = run(capsys, "borel", "--scenario", PLANE)
    assert code == 2  # no borel options in the plane scenario


def test_schema_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "starjet.scenario/1", "chart": {"kind": "torus", "dim": 3}}')
    assert run(capsys, "moyal", "--scenario", str(bad))[0] == 2
    bad.write_text("not json")
    assert run(capsys, "moyal", "--scenario", str(bad))[0] == 2
    doc = json.loads(resources.files("starjet").joinpath("scenarios/t2_default.json").read_text())
    doc["orders"]["t_cap"] = 0
    bad.write_text(json.dumps(doc))
    assert run(capsys, "moyal", "--scenario", str(bad))[0] == 2
    assert run(capsys, "moyal", "--scenario", str(tmp_path / "missing.json"))[0] == 2


def test_degenerate_form_exit_code(capsys, tmp_path):
    doc = json.loads(resources.files("starjet").joinpath("scenarios/t2_default.json").read_text())
    doc["omega0"] = {}
    path = tmp_path / "degenerate.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "class-star", "--scenario", str(path))
    assert code == 3 and "failed" in err


def test_outputs_are_deterministic(capsys):
    first = run(capsys, "induce")[1]
    second = run(capsys, "induce")[1]
    assert first == second

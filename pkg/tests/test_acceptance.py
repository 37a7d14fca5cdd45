"""The ten acceptance criteria, one test each, at their stated sizes and tolerances.

Each test prints a single ``criterion N: PASS|FAIL`` line; the lines are also
collected in the terminal summary.
"""

import json
import subprocess
import sys
from importlib import resources

from starjet import cli, suites


def _all(results):
    bad = [r.line() for r in results if not r.passed]
    return not bad, "; ".join(bad) if bad else "%d checks" % len(results)


def test_criterion_01_weyl_identities(acceptance_record):
    results = suites.weyl_suite(seed=2024, count=100)
    ok, detail = _all(results)
    assert all(r.samples >= 100 for r in results)
    assert acceptance_record(1, ok, detail + ", 100 random elements each"), detail


def test_criterion_02_flat_oracle(acceptance_record):
    results = suites.flat_suite(order=4)
    ok, detail = _all(results)
    assert acceptance_record(2, ok, detail), detail


def test_criterion_03_flatness_and_curvature(acceptance_record):
    results = suites.curvature_suite(order=2) + suites.curvature_suite(order=3)
    ok, detail = _all(results)
    assert acceptance_record(3, ok, detail), detail


def test_criterion_04_induced_products(acceptance_record):
    results = suites.jets_suite(seed=99, count=10, order=2)
    ok, detail = _all(results)
    assert acceptance_record(4, ok, detail), detail


def test_criterion_05_first_order_difference(acceptance_record):
    results = suites.cc_suite(ks=(1, 2))
    ok, detail = _all(results)
    assert acceptance_record(5, ok, detail), detail


def test_criterion_06_moser(acceptance_record):
    results = suites.moser_suite(seed=6, count=12, n_t=2)
    ok, detail = _all(results)
    assert acceptance_record(6, ok, detail + ", 12 random exact perturbations"), detail


def test_criterion_07_equivalence_positive(acceptance_record):
    from starjet.coeffring import TORUS, BaseFunction, Chart, FormMatrix
    from starjet.jets import ClosedFormSeries, star_for_class
    from starjet.moser import equivalence_search

    m = Chart(TORUS, 2, 0)
    s1 = ClosedFormSeries([FormMatrix.darboux(m)])
    s2 = s1.plus(1, FormMatrix.from_upper(m, {(0, 1): BaseFunction.sin(m, (1, 1), 2)}))
    a, b = (star_for_class(s, None, 2).table for s in (s1, s2))
    res = equivalence_search(a, b, n=2, order_bound=4)
    ok = res.verified and res.order_reached == 2
    assert acceptance_record(7, ok, "status=%s %s" % (res.status, res.reason)), res.reason


def test_criterion_08_class_difference_witness(acceptance_record, capsys):
    path = str(resources.files("starjet").joinpath("scenarios/t2_nonexact.json"))
    code = cli.main(["compare", "--scenario", path])
    rep = json.loads(capsys.readouterr().out)["report"]
    w = rep.get("witness") or {}
    const = w.get("sharp_constant_mode", {})
    ok = (
        code == 0
        and rep["first_differing_order"] == 1
        and w.get("difference_equals_minus_half_sharp") is True
        and any(v != "0" for comp in const.values() for v in comp.values())
    )
    assert acceptance_record(8, ok, "k=%s constant mode %s" % (rep.get("first_differing_order"), const))


def test_criterion_09_borel(acceptance_record):
    results = suites.borel_suite(top=5)
    ok, detail = _all(results)
    notes = ", ".join(r.note for r in results if r.note)
    assert acceptance_record(9, ok, detail + (" [" + notes + "]" if notes else "")), detail


def test_criterion_10_selftest_determinism(acceptance_record):
    cmd = [sys.executable, "-m", "starjet.cli", "selftest", "--seed", "7"]
    first = subprocess.run(cmd, capture_output=True, check=False)
    second = subprocess.run(cmd, capture_output=True, check=False)
    ok = first.returncode == 0 and second.returncode == 0 and first.stdout == second.stdout and first.stdout
    assert acceptance_record(10, bool(ok), "%d bytes, exit %d/%d" % (len(first.stdout), first.returncode, second.returncode))

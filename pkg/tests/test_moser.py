import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starjet.coeffring import TORUS, BaseFunction, Chart, FormMatrix, Q, invert_form_matrix
from starjet.coeffring.forms import Form
from starjet.errors import PreconditionError
from starjet.fedosov import fedosov_pipeline
from starjet.jets import ClosedFormSeries, star_for_class
from starjet.moser import (
    conjugate_star,
    equivalence_search,
    hochschild,
    pullback_form,
    pullback_function,
    rho_jet,
    solve_moser,
    transport_table,
    verify_equivalence,
)
from starjet.suites import moser_suite, random_exact_perturbation
from starjet.tables import BiDiffOp, DiffOp

T3 = Chart(TORUS, 2, 3)
M = Chart(TORUS, 2, 0)


def test_torus_example_generator():
    w0 = FormMatrix.darboux(T3)
    w1 = w0 + FormMatrix.from_upper(T3, {(0, 1): BaseFunction.cos(T3, (1, 0), tpow=1)})
    fam = solve_moser(w1, w0, 3)
    assert pullback_form(fam, w1) == w0
    # Z_s = Lam_s nu with nu = sin(x1) t dx2; its t^1 part is -sin(x1) d_1 at s^0
    z = fam.generator(1)
    assert z == {0: DiffOp.vector_field(T3, [BaseFunction.sin(T3, (1, 0), -1), BaseFunction.zero(T3)])}


def test_identity_for_equal_families():
    w = FormMatrix.darboux(T3)
    fam = solve_moser(w, w, 3)
    assert fam.is_identity()
    assert rho_jet(fam, 3).is_identity()


def test_non_cohomologous_rejected():
    w0 = FormMatrix.darboux(T3)
    w1 = w0 + FormMatrix.from_upper(T3, {(0, 1): BaseFunction.const(T3, 1, tpow=1)})
    with pytest.raises(PreconditionError):
        solve_moser(w1, w0, 3)


def test_wrong_time_zero_rejected():
    w0 = FormMatrix.darboux(T3)
    w1 = w0 + FormMatrix.from_upper(T3, {(0, 1): BaseFunction.cos(T3, (1, 0))})
    with pytest.raises(PreconditionError):
        solve_moser(w1, w0, 3)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_random_exact_perturbations(seed):
    assert all(r.passed for r in moser_suite(seed, count=1))


def test_pullback_inverse():
    rng = random.Random(4)
    e, _ = random_exact_perturbation(rng, T3, 3)
    w0 = FormMatrix.darboux(T3)
    fam = solve_moser(w0 + e, w0, 3)
    f = BaseFunction.cos(T3, (1, 2)) + BaseFunction.sin(T3, (0, 1), tpow=1)
    assert fam.inverse_pullback().apply(pullback_function(fam, f)) == f


def test_conjugated_product_quantizes_target_form():
    ch = Chart(TORUS, 2, 2)
    w2 = FormMatrix.darboux(ch)
    w1 = w2 + FormMatrix.from_upper(ch, {(0, 1): BaseFunction.cos(ch, (1, 0), tpow=1)})
    _, _, _, table = fedosov_pipeline(w1, None, 2)
    fam = solve_moser(w1, w2, 2)
    conj = conjugate_star(table, fam)
    assert conj[1].antisymmetric_part() == BiDiffOp.bivector(invert_form_matrix(pullback_form(fam, w1)))
    f, g, h = BaseFunction.cos(ch, (1, 1)), BaseFunction.sin(ch, (0, 1)), BaseFunction.cos(ch, (2, 0))
    assert conj.associativity_defect(f, g, h).is_zero()


@pytest.fixture(scope="module")
def class_tables():
    w0 = FormMatrix.darboux(M)
    s = ClosedFormSeries([w0])
    exact = s.plus(1, FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (1, 0))}))
    nonexact = s.plus(1, w0)
    return [star_for_class(x, None, 2).table for x in (s, exact, nonexact)]


def test_equivalence_found_for_exact_difference(class_tables):
    a, b, _ = class_tables
    res = equivalence_search(a, b, 2, order_bound=4, basis_bound=1)
    assert res.verified and res.order_reached == 2
    assert verify_equivalence(res.operators, a, b, 2)
    assert transport_table(a, res.operators).truncate(2) == b.truncate(2)


def test_equivalence_inconclusive_for_nonexact(class_tables):
    a, _, c = class_tables
    res = equivalence_search(a, c, 2, order_bound=4, basis_bound=2)
    assert res.status == "inconclusive" and "antisymmetric" in res.reason


def test_identity_equivalence(class_tables):
    a = class_tables[0]
    res = equivalence_search(a, a, 2)
    assert res.verified and res.operators.is_identity()


def test_hochschild_of_derivation_vanishes():
    x = DiffOp.vector_field(M, [BaseFunction.cos(M, (0, 1)), BaseFunction.sin(M, (1, 0))])
    assert hochschild(x).is_zero()
    assert not hochschild(DiffOp.partial(M, (2, 0))).is_zero()

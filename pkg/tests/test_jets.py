import random

import pytest

from starjet.coeffring import TORUS, AFFINE, BaseFunction, Chart, FormMatrix, HSeries, Q, rational_inverse
from starjet.coeffring.forms import Form
from starjet.errors import PreconditionError
from starjet.fedosov import fedosov_pipeline
from starjet.jets import (
    ClosedFormSeries,
    JetUndetermined,
    NotExact,
    OperatorJet,
    classes_equal,
    difference_witness,
    find_primitive,
    form_t_jets,
    induce_star,
    jet_scalar,
    orders_compatible,
    polynomial_representative,
    sharp,
    sharp_from_inverse,
    star_for_class,
)
from starjet.suites import curved_example, jets_suite, rand_function
from starjet.tables import DiffOp

M = Chart(TORUS, 2, 0)
W0 = FormMatrix.darboux(M)


def test_jet_of_scalar():
    ch = Chart(TORUS, 2, 3)
    f = BaseFunction.cos(ch, (1, 0)) + BaseFunction.sin(ch, (0, 1), 2, tpow=2)
    j = jet_scalar(f, 2)
    assert j[0] == BaseFunction.cos(M, (1, 0))
    assert j[1].is_zero()
    assert j[2] == BaseFunction.sin(M, (0, 1), 2)


def test_jet_of_series_shifts_t_into_hbar():
    ch = Chart(TORUS, 2, 2)
    a = HSeries(ch, 2, [BaseFunction.zero(ch), BaseFunction.cos(ch, (1, 0), tpow=1), BaseFunction.zero(ch)])
    assert jet_scalar(a, 2)[2] == BaseFunction.cos(M, (1, 0))


def test_undetermined_jet():
    with pytest.raises(JetUndetermined):
        jet_scalar(BaseFunction.cos(Chart(TORUS, 2, 1), (1, 0)), 2)


def test_operator_jet_inverse():
    ops = [DiffOp.identity(M), DiffOp.vector_field(M, [BaseFunction.sin(M, (1, 0)), BaseFunction.zero(M)]),
           DiffOp.partial(M, (0, 2)).scale(Q(1, 3))]
    t = OperatorJet(M, ops)
    assert t.compose(t.inverse()).is_identity()


def test_suite_on_curved_example():
    results = jets_suite(3, count=3)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_orders_compatible_for_all_n():
    omega, gamma0 = curved_example(3)
    _, _, _, hat = fedosov_pipeline(omega, gamma0, 3)
    stars = [induce_star(hat, n) for n in range(4)]
    assert all(orders_compatible(stars[n], stars[n + 1]) for n in range(3))


def test_polynomial_representative_jets():
    s = ClosedFormSeries([W0, FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (1, 0))})])
    w = polynomial_representative(s, 3)
    jets = form_t_jets(w, 3)
    assert jets[0] == W0 and jets[1] == s[1] and jets[2].upper() == {} and jets[3].upper() == {}


def test_series_rejects_non_closed_and_nonconstant():
    ch = Chart(TORUS, 4, 0)
    w0 = FormMatrix.darboux(ch)
    bad = FormMatrix.from_upper(ch, {(0, 1): BaseFunction.cos(ch, (0, 0, 1, 0))})
    with pytest.raises(PreconditionError):
        ClosedFormSeries([w0, bad])
    with pytest.raises(PreconditionError):
        ClosedFormSeries([W0 + FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (1, 0))})])


def test_find_primitive_example():
    beta = FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (1, 0))})
    nu = find_primitive(beta)
    assert nu == Form(M, 1, {(1,): BaseFunction.sin(M, (1, 0))})
    with pytest.raises(NotExact) as exc:
        find_primitive(W0)
    assert exc.value.witness.upper()[(0, 1)] == BaseFunction.const(M, 1)


def test_classes_equal_and_differ():
    s = ClosedFormSeries([W0])
    exact = FormMatrix.from_upper(M, {(0, 1): BaseFunction.sin(M, (1, 1), 2)})
    assert classes_equal(s, s.plus(1, exact)).equal
    cmp = classes_equal(s, s.plus(2, W0))
    assert not cmp.equal and cmp.first_k == 2


def test_affine_classes_always_equal():
    ch = Chart(AFFINE, 2, 0)
    w0 = FormMatrix.darboux(ch)
    s = ClosedFormSeries([w0])
    alpha = FormMatrix.from_upper(ch, {(0, 1): BaseFunction.monomial(ch, (1, 1))})
    assert classes_equal(s, s.plus(1, alpha)).equal


@pytest.mark.parametrize("k", [1, 2])
def test_first_order_witness(k):
    s = ClosedFormSeries([W0])
    s2 = s.plus(k, W0)
    a = star_for_class(s, None, k + 1).table
    b = star_for_class(s2, None, k + 1).table
    lam0 = rational_inverse(W0.constant_part())
    w = difference_witness(a, b, k, W0, lam0)
    assert w.agree_through_k and w.matches_sharp
    assert w.sharp_alpha == sharp_from_inverse(s, k, W0)
    assert w.constant_mode.upper()[(0, 1)] == BaseFunction.const(M, -1)


def test_sharp_definition():
    lam0 = rational_inverse(W0.constant_part())
    alpha = FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (1, 0))})
    assert sharp(lam0, alpha).upper()[(0, 1)] == -BaseFunction.cos(M, (1, 0))


def test_class_star_associative():
    s = ClosedFormSeries([W0, FormMatrix.from_upper(M, {(0, 1): BaseFunction.cos(M, (0, 1))})])
    table = star_for_class(s, None, 2).table
    rng = random.Random(2)
    trip = [tuple(rand_function(rng, M, 2, 2) for _ in range(3)) for _ in range(3)]
    assert table.is_associative_on(trip)

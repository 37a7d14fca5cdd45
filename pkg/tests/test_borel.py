import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjet.borel import (
    FormSequence,
    bump,
    bump_bound,
    bump_derivative,
    derivative_norm_bound,
    lambda_sum,
    realize,
    realize_triple,
)
from starjet.coeffring import AFFINE, TORUS, BaseFunction, Chart, ChartMismatch, Q
from starjet.coeffring.forms import Form
from starjet.errors import PreconditionError

M = Chart(TORUS, 2, 0)
X = [np.linspace(0, 6, 7), np.linspace(-1, 3, 7)]


def two_form(f):
    return Form(M, 2, {(0, 1): f})


def test_bump_values():
    assert bump(0.0) == 1.0 and bump(0.5) == 1.0 and bump(-0.3) == 1.0
    assert bump(1.5) == 0.0 and bump(1.0) == 0.0
    assert 0.0 < bump(0.75) < 1.0


def test_bump_monotone_on_transition():
    u = np.linspace(0.5, 1.0, 1000)
    assert np.all(np.diff(bump(u)) <= 0)


def test_bump_derivative_matches_finite_differences():
    u = np.linspace(0.55, 0.95, 9)
    eps = 1e-6
    fd = (bump(u + eps) - bump(u - eps)) / (2 * eps)
    assert np.allclose(bump_derivative(u, 1), fd, atol=1e-6)
    fd2 = (bump_derivative(u + eps, 1) - bump_derivative(u - eps, 1)) / (2 * eps)
    assert np.allclose(bump_derivative(u, 2), fd2, atol=1e-5)


def test_lambda_sum_formula():
    assert lambda_sum(0) == 0
    assert lambda_sum(1) == 1
    assert lambda_sum(2) == Q(1, 2) + 1


def test_constant_sequence_is_driven_by_bump_bound():
    seq = FormSequence([two_form(BaseFunction.const(M, 2))] * 3)
    r = realize(seq)
    assert derivative_norm_bound(seq.forms[2], 2) == 2
    for n in range(1, 3):
        expected = max(1.0, 2**n * 2 * float(lambda_sum(n)) * bump_bound(n))
        assert r.lambdas[n] == pytest.approx(expected)
    assert r.lambdas[0] == 1.0


def test_single_element_sequence():
    a = two_form(BaseFunction.cos(M, (1, 0)))
    r = realize(FormSequence([a]))
    for t in (0.0, 0.6, 0.9, 1.2):
        got = r.evaluate(t, X)[(0, 1)] if t < 1 else r.evaluate(t, X).get((0, 1), 0.0)
        assert np.allclose(got, np.cos(X[0]) * bump(t))


def test_plateau_identity_for_beta_two_beta():
    beta = BaseFunction.sin(M, (1, 1))
    r = realize(FormSequence([two_form(beta), two_form(beta.scale(2))]))
    t = r.plateau_radius()
    want = (1 + 2 * t) * np.sin(X[0] + X[1])
    assert np.allclose(r.evaluate(t, X)[(0, 1)], want, rtol=1e-12, atol=0)


def test_vanishes_beyond_support():
    r = realize(FormSequence([two_form(BaseFunction.cos(M, (1, 0)))] * 3))
    assert r.evaluate(r.support_radius() * 1.001, X) == {}


def test_certificates_and_jets():
    forms = [two_form(BaseFunction.cos(M, (n, 1), Q(1, n + 1))) for n in range(5)]
    r = realize(FormSequence(forms))
    for n in range(5):
        worst, bound = r.certificate(n)
        assert worst <= bound
        assert r.jet_at_zero(n) == forms[n]


@given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(1, 3)), min_size=1, max_size=4))
def test_plateau_exactness_property(waves):
    forms = [two_form(BaseFunction.cos(M, (a, b), c) + BaseFunction.const(M, 1)) for a, b, c in waves]
    r = realize(FormSequence(forms), grid=500)
    for t in np.linspace(-r.plateau_radius(), r.plateau_radius(), 5):
        got, want = r.evaluate(t, X)[(0, 1)], r.taylor(t, X)[(0, 1)]
        assert np.allclose(got, want, rtol=1e-12, atol=1e-300)


def test_triple_checks_d_relation():
    a = [two_form(BaseFunction.cos(M, (1, 0)))] * 2
    nu = [Form(M, 1, {(0,): BaseFunction.sin(M, (0, 1))})] * 2
    good = [x + n.d() for x, n in zip(a, nu)]
    tri = realize_triple(FormSequence(a), FormSequence(good), FormSequence(nu))
    assert tri.relation_defect(np.linspace(-1, 1, 11), X) <= 1e-12
    with pytest.raises(PreconditionError):
        realize_triple(FormSequence(a), FormSequence(a), FormSequence(nu))


def test_affine_chart_refused():
    ch = Chart(AFFINE, 2, 0)
    with pytest.raises(ChartMismatch):
        FormSequence([Form(ch, 2, {(0, 1): BaseFunction.const(ch, 1)})])

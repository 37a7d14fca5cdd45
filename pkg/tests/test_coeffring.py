import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjet.coeffring import (
    AFFINE,
    TORUS,
    BaseFunction,
    Chart,
    ChartMismatch,
    FormMatrix,
    NotInvertible,
    Q,
    coeff_sup_bound,
    invert_form_matrix,
    parse_rational,
    rational_inverse,
)
from starjet.coeffring.forms import Form, mat_identity, mat_mul

from conftest import affine_functions, torus_functions

T2 = Chart(TORUS, 2, 4)
A2 = Chart(AFFINE, 2, 3)


def test_cos_squared_product_to_sum():
    c = BaseFunction.cos(T2, (1, 0))
    want = BaseFunction.const(T2, Q(1, 2)) + BaseFunction.cos(T2, (2, 0), Q(1, 2))
    assert c * c == want


def test_derivative_of_t_sin():
    f = BaseFunction.sin(T2, (1, 0), tpow=1)
    assert f.dx(0) == BaseFunction.cos(T2, (1, 0), tpow=1)


def test_truncation_of_t_powers():
    assert (BaseFunction.const(T2, 1, tpow=2) * BaseFunction.const(T2, 1, tpow=3)).is_zero()


def test_sin_of_zero_wave_is_not_stored():
    assert BaseFunction.sin(T2, (0, 0), 5).is_zero()


def test_canonical_wave_sign():
    # cos(-x) = cos(x), sin(-x) = -sin(x)
    assert BaseFunction.cos(T2, (-1, 2)) == BaseFunction.cos(T2, (1, -2))
    assert BaseFunction.sin(T2, (-1, 2)) == -BaseFunction.sin(T2, (1, -2))


def test_rationals_are_reduced():
    q = parse_rational("6/-4")
    assert (q.numerator, q.denominator) == (-3, 2)


def test_chart_mismatch_raises():
    with pytest.raises(ChartMismatch):
        BaseFunction.cos(T2, (1, 0)) + BaseFunction.cos(Chart(TORUS, 2, 3), (1, 0))
    with pytest.raises(ChartMismatch):
        BaseFunction.monomial(T2, (1, 0))


def test_derivative_index_out_of_range():
    with pytest.raises((IndexError, ValueError)):
        BaseFunction.cos(T2, (1, 0)).dx(2)


def test_json_round_trip():
    f = BaseFunction.cos(T2, (2, -1), Q(3, 7), tpow=2) + BaseFunction.sin(T2, (0, 1), Q(-1, 2)) + BaseFunction.const(T2, 4)
    assert BaseFunction.from_json(T2, f.to_json()) == f


@given(torus_functions(T2), torus_functions(T2))
def test_torus_product_matches_pointwise_evaluation(f, g):
    # at t = 0 the t-truncation of the product is invisible
    pts = [np.array([0.3, 1.7, -2.2]), np.array([0.9, -0.4, 2.5])]
    lhs = np.asarray((f * g).evaluate(pts), dtype=float)
    rhs = np.asarray(f.evaluate(pts) * g.evaluate(pts), dtype=float)
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(torus_functions(T2), torus_functions(T2), st.integers(0, 1))
def test_leibniz_torus(f, g, i):
    assert (f * g).dx(i) == f.dx(i) * g + f * g.dx(i)


@given(affine_functions(A2), affine_functions(A2), st.integers(0, 1))
def test_leibniz_affine(f, g, i):
    assert (f * g).dx(i) == f.dx(i) * g + f * g.dx(i)


@given(torus_functions(T2), torus_functions(T2), st.integers(0, 4))
def test_truncation_coherence(f, g, cap):
    lhs = (f * g).truncate(cap)
    rhs = f.truncate(cap) * g.truncate(cap)
    assert lhs == rhs.truncate(cap)


@given(torus_functions(T2))
def test_canonical_form_idempotent(f):
    once = BaseFunction(T2, dict(f.terms))
    assert once == f
    assert BaseFunction(T2, dict(once.terms)) == once
    assert all(v for v in f.terms.values())


@given(torus_functions(T2), torus_functions(T2), torus_functions(T2))
def test_ring_axioms(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f * g == g * f


def test_darboux_inverse():
    w = FormMatrix.from_rational(Chart(TORUS, 2, 0), [[0, 1], [-1, 0]])
    assert invert_form_matrix(w).constant_part() == [[0, -1], [1, 0]]


def _times(w, lam):
    return mat_mul(w.rows, lam.rows)


def test_neumann_series_for_constant_perturbation():
    ch = Chart(TORUS, 2, 4)
    alpha = FormMatrix.from_upper(ch, {(0, 1): BaseFunction.const(ch, Q(3, 2), tpow=1)})
    w = FormMatrix.darboux(ch) + alpha
    lam = invert_form_matrix(w)
    assert _times(w, lam) == mat_identity(ch, 2)
    # closed form: Lam0 - t Lam0 a Lam0 + t^2 ... for the 2x2 case is Lam0 / (1 + 3t/2)
    for k in range(5):
        assert lam.rows[0][1].t_coeff(k).constant_value() == -(Q(-3, 2) ** k)


@given(torus_functions(Chart(TORUS, 2, 3), max_terms=2))
def test_inverse_is_exact_and_antisymmetric(f):
    ch = Chart(TORUS, 2, 3)
    w = FormMatrix.darboux(ch) + FormMatrix.from_upper(ch, {(0, 1): f.shift_t(1)})
    lam = invert_form_matrix(w)
    assert _times(w, lam) == mat_identity(ch, 2)
    assert all(lam.rows[i][j] == -lam.rows[j][i] for i in range(2) for j in range(2))


def test_inverse_rejects_x_dependent_leading_block():
    ch = Chart(TORUS, 2, 2)
    w = FormMatrix.from_upper(ch, {(0, 1): BaseFunction.const(ch, 1) + BaseFunction.cos(ch, (1, 0))})
    with pytest.raises(NotInvertible):
        invert_form_matrix(w)


def test_inverse_rejects_degenerate_block():
    with pytest.raises(NotInvertible):
        rational_inverse([[Q(0), Q(0)], [Q(0), Q(0)]])


def test_antisymmetry_is_enforced():
    ch = Chart(TORUS, 2, 0)
    one = BaseFunction.const(ch, 1)
    with pytest.raises(ValueError):
        FormMatrix(ch, [[one, one], [one, one]])


def test_sup_bounds():
    ch = Chart(TORUS, 2, 0)
    assert coeff_sup_bound(BaseFunction.cos(ch, (2, 0), 3), (1, 0)) == 6
    assert coeff_sup_bound(BaseFunction.const(ch, 7), (0, 1)) == 0
    assert coeff_sup_bound(BaseFunction.cos(ch, (1, 0)) + BaseFunction.sin(ch, (0, 1)), (0, 0)) == 2
    with pytest.raises(ChartMismatch):
        coeff_sup_bound(BaseFunction.monomial(Chart(AFFINE, 2, 0), (1, 0)), (0, 0))


@given(torus_functions(Chart(TORUS, 2, 0)), st.tuples(st.integers(0, 2), st.integers(0, 2)))
def test_sup_bound_dominates_grid_samples(f, nu):
    bound = float(coeff_sup_bound(f, nu))
    xs = np.meshgrid(np.linspace(0, 2 * math.pi, 25), np.linspace(0, 2 * math.pi, 25))
    vals = np.asarray(f.dx_multi(nu).evaluate([xs[0], xs[1]]), dtype=float)
    assert float(np.max(np.abs(vals))) <= bound + 1e-12


def test_forms_exterior_derivative_squares_to_zero():
    ch = Chart(TORUS, 2, 0)
    nu = Form(ch, 1, {(0,): BaseFunction.sin(ch, (1, 1)), (1,): BaseFunction.cos(ch, (2, 0))})
    assert nu.d().d().is_zero()
    f = Form(ch, 0, {(): BaseFunction.cos(ch, (1, 2))})
    assert f.d().d().is_zero()


def test_mean_and_inverse_laplacian():
    ch = Chart(TORUS, 2, 0)
    f = BaseFunction.const(ch, 2) + BaseFunction.cos(ch, (1, 1), 4)
    assert f.mean() == BaseFunction.const(ch, 2)
    g = (f - f.mean()).inverse_laplacian()
    lap = -(g.dx(0).dx(0) + g.dx(1).dx(1))
    assert lap == f - f.mean()

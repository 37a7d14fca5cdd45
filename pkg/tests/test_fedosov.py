import random

import pytest
import sympy as sp

from starjet.coeffring import TORUS, AFFINE, BaseFunction, Chart, FormMatrix, Q, rational_inverse
from starjet.errors import PreconditionError
from starjet.fedosov import (
    ChartPoisson,
    FoliatedConnection,
    check_curvature_identity,
    cochains,
    cochains_by_probes,
    curvature,
    fedosov_pipeline,
    is_flat,
    quantize,
    solve_gamma,
    symplectize_connection,
)
from starjet.suites import curved_example, rand_function
from starjet.tables import BiDiffOp, StarProductTable, moyal_table
from starjet.weyl import delta_inv, pr0

X = sp.symbols("x1 x2")
HB = sp.Symbol("hbar")


def to_sympy(f):
    expr = 0
    for lab, v in f.label_terms():
        c = sp.Rational(int(v.numerator), int(v.denominator))
        if lab == "1":
            expr += c
            continue
        kind, vec = lab.split(":")
        vec = [int(k) for k in vec.split(",")]
        if kind == "x":
            expr += c * sp.Mul(*[xi**e for xi, e in zip(X, vec)])
        else:
            phase = sum(k * xi for k, xi in zip(vec, X))
            expr += c * (sp.cos(phase) if kind == "cos" else sp.sin(phase))
    return expr


def moyal_sympy(f, g, lam, order):
    """Exponential formula evaluated directly by sympy."""
    total = 0
    for r in range(order + 1):
        term = 0
        for idx in __import__("itertools").product(range(2), repeat=2 * r):
            ii, jj = idx[:r], idx[r:]
            coef = sp.Integer(1)
            for i, j in zip(ii, jj):
                coef *= lam[i][j]
            if coef == 0:
                continue
            df, dg = f, g
            for i in ii:
                df = sp.diff(df, X[i])
            for j in jj:
                dg = sp.diff(dg, X[j])
            term += coef * df * dg
        total += (HB / 2) ** r / sp.factorial(r) * term
    return sp.expand(total)


@pytest.mark.parametrize("order", [2, 3, 4])
def test_flat_pipeline_equals_moyal_table(order):
    ch = Chart(TORUS, 2, 0)
    omega = FormMatrix.darboux(ch)
    _, _, data, table = fedosov_pipeline(omega, None, order)
    assert data.gamma_is_zero
    assert table == moyal_table(ch, rational_inverse(omega.constant_part()), order)


def test_moyal_table_against_exponential_formula():
    ch = Chart(TORUS, 2, 0)
    lam = [[Q(0), Q(-1)], [Q(1), Q(0)]]
    table = moyal_table(ch, lam, 3)
    f = BaseFunction.cos(ch, (1, 1)) + BaseFunction.sin(ch, (2, 0), 3)
    g = BaseFunction.sin(ch, (0, 1)) + BaseFunction.cos(ch, (1, -1), Q(1, 2))
    got = table.star(f, g, 3)
    lam_s = [[sp.Integer(int(v)) for v in row] for row in lam]
    want = moyal_sympy(to_sympy(f), to_sympy(g), lam_s, 3)
    lhs = sum(HB**k * to_sympy(c) for k, c in enumerate(got.coeffs))
    assert sp.simplify(sp.expand_trig(lhs - want)) == 0


def test_affine_flat_table_matches_moyal():
    ch = Chart(AFFINE, 2, 0)
    omega = FormMatrix.from_rational(ch, [[0, Q(3)], [Q(-3), 0]])
    _, _, _, table = fedosov_pipeline(omega, None, 3)
    assert table == moyal_table(ch, rational_inverse(omega.constant_part()), 3)


@pytest.fixture(scope="module")
def curved():
    omega, gamma0 = curved_example(2)
    return fedosov_pipeline(omega, gamma0, 2)


def test_connection_is_symplectic_and_symmetric(curved):
    cp, conn, _, _ = curved
    assert conn.is_symmetric()
    assert not conn.nabla_omega(cp.omega)


def test_curvature_identity_on_spanning_set(curved):
    cp, conn, data, _ = curved
    assert check_curvature_identity(conn, cp, data.rbar, 3)


def test_fedosov_data_verifies(curved):
    _, _, data, _ = curved
    assert data.verify(3)
    assert delta_inv(data.r).is_zero()
    assert pr0(data.r).is_zero()


def test_flat_sections(curved):
    _, _, data, _ = curved
    ch = data.cp.chart
    f = BaseFunction.cos(ch, (1, 1)) + BaseFunction.sin(ch, (0, 1), tpow=1)
    tau = quantize(data, f)
    assert is_flat(data, tau)
    assert pr0(tau)[0] == f


def test_curved_table_associative_and_classical_limit(curved):
    cp, _, _, table = curved
    rng = random.Random(5)
    ch = table.chart
    trip = [tuple(rand_function(rng, ch, 2, 2) for _ in range(3)) for _ in range(3)]
    assert table.is_associative_on(trip)
    assert table[0] == BiDiffOp.product(ch)
    assert table[1].antisymmetric_part() == BiDiffOp.bivector(cp.lam)


def test_probe_extraction_matches_symbolic(curved):
    _, _, data, table = curved
    assert cochains_by_probes(data, 2) == table


def test_affine_probe_extraction():
    ch = Chart(AFFINE, 2, 1)
    one = BaseFunction.const(ch, 1)
    omega = FormMatrix.from_upper(ch, {(0, 1): one + BaseFunction.monomial(ch, (1, 0), tpow=1)})
    _, _, data, table = fedosov_pipeline(omega, None, 2)
    assert cochains_by_probes(data, 2) == table


def test_table_json_round_trip(curved):
    table = curved[3]
    assert StarProductTable.from_json(table.chart, table.to_json()) == table


def test_degenerate_omega_rejected():
    ch = Chart(TORUS, 2, 1)
    omega = FormMatrix.from_upper(ch, {(0, 1): BaseFunction.const(ch, 1, tpow=1)})
    with pytest.raises(PreconditionError):
        ChartPoisson(omega, 2)


def test_curvature_zero_for_flat_connection():
    ch = Chart(TORUS, 2, 1)
    cp = ChartPoisson(FormMatrix.darboux(ch), 2)
    conn = symplectize_connection(FoliatedConnection.zero(ch), cp)
    rbar = curvature(conn, cp)
    assert rbar.is_zero()
    assert solve_gamma(rbar, conn, cp).gamma_is_zero

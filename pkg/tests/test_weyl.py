import itertools
import random
from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjet.coeffring import TORUS, BaseFunction, Chart, FormMatrix, Q
from starjet.suites import rand_weyl, random_sp_matrix, weyl_suite
from starjet.weyl import (
    CapMismatch,
    PoissonFiberData,
    WeylCaps,
    WeylElement,
    ad,
    ad_over_2hbar,
    delta,
    delta_inv,
    fiber_moyal,
    fiber_symmetric,
    graded_commutator,
    linear_action,
    moment,
    pr0,
    quadratic_of,
)

CH = Chart(TORUS, 2, 0)
CAPS = WeylCaps(CH, 12, 6)
DARBOUX = PoissonFiberData.from_omega(FormMatrix.darboux(CH))


def y(i):
    return WeylElement.y(CAPS, i)


def h(k=1, c=1):
    return WeylElement.scalar(CAPS, c, hbar=k)


# operator-ordering oracle ------------------------------------------------------------
#
# Heisenberg algebra with [y1, y2] = -hbar.  Operators are kept in normal order
# (all y1 to the left) as {(a, b, m): coefficient of hbar^m y1^a y2^b}; the product
# uses y2^b y1^c = sum_k k! C(b,k) C(c,k) hbar^k y1^(c-k) y2^(b-k).  The Weyl symbol
# of an operator is recovered by peeling off symmetrized monomials.


def op_mul(p, q):
    out = {}
    for (a, b, m), u in p.items():
        for (c, e, n), v in q.items():
            for k in range(min(b, c) + 1):
                key = (a + c - k, b - k + e, m + n + k)
                out[key] = out.get(key, 0) + u * v * factorial(k) * comb(b, k) * comb(c, k)
    return {k: v for k, v in out.items() if v}


GEN = {0: {(1, 0, 0): Fraction(1)}, 1: {(0, 1, 0): Fraction(1)}}


def symmetrized(a, b):
    words = set(itertools.permutations([0] * a + [1] * b))
    total = {}
    for w in words:
        op = {(0, 0, 0): Fraction(1)}
        for g in w:
            op = op_mul(op, GEN[g])
        for k, v in op.items():
            total[k] = total.get(k, 0) + v
    n = len(words)
    return {k: v / n for k, v in total.items() if v}


def to_symbol(op):
    op = dict(op)
    sym = {}
    while op:
        a, b, m = max(op, key=lambda k: (k[0] + k[1], k))
        c = op[(a, b, m)]
        sym[(a, b, m)] = sym.get((a, b, m), 0) + c
        for (x, z, n), v in symmetrized(a, b).items():
            key = (x, z, n + m)
            op[key] = op.get(key, 0) - c * v
            if not op[key]:
                del op[key]
    return sym


def to_weyl(sym):
    terms = {}
    for (a, b, m), c in sym.items():
        terms[((a, b), 0, m)] = BaseFunction.const(CH, Q(c.numerator, c.denominator))
    return WeylElement(CAPS, terms)


@pytest.mark.parametrize("ab", [(a, b) for a in range(3) for b in range(3)])
@pytest.mark.parametrize("ce", [(0, 1), (1, 0), (1, 1), (2, 1), (0, 3)])
def test_product_matches_ordering_oracle(ab, ce):
    lhs = fiber_moyal(DARBOUX, to_weyl({ab + (0,): Fraction(1)}), to_weyl({ce + (0,): Fraction(1)}))
    op = op_mul(symmetrized(*ab), symmetrized(*ce))
    assert lhs == to_weyl(to_symbol(op))


def test_unit():
    a = y(0) + y(1).scale(3) + h()
    assert fiber_moyal(DARBOUX, a, WeylElement.scalar(CAPS, 1)) == a


def test_linear_commutator():
    comm = fiber_moyal(DARBOUX, y(0), y(1)) - fiber_moyal(DARBOUX, y(1), y(0))
    assert comm == h(1, -1)


def test_symmetric_product():
    assert fiber_symmetric(y(0), y(1)) == fiber_symmetric(y(1), y(0))
    s = fiber_symmetric(y(0) + h(), y(0) - h())
    assert s == WeylElement.monomial(CAPS, (2, 0)) - h(2)


def test_delta_examples():
    assert delta(y(0)) == WeylElement.dx(CAPS, 0)
    assert delta(WeylElement.scalar(CAPS, 1)).is_zero()
    assert delta_inv(WeylElement.dx(CAPS, 0)) == y(0)
    a = WeylElement.monomial(CAPS, (1, 0), mask=0b10)
    assert delta(delta_inv(a)) + delta_inv(delta(a)) == a


def test_ham_example():
    # quadratic y1 y1 and a = y2
    w = FormMatrix.darboux(CH).constant_part()
    from starjet.coeffring import rational_inverse

    lam = rational_inverse(w)
    s = [[Q(1), Q(0)], [Q(0), Q(0)]]
    a_rows = [[sum(lam[i][k] * s[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    qa = quadratic_of(CAPS, w, a_rows)
    assert qa == WeylElement.monomial(CAPS, (2, 0))
    assert ad(DARBOUX, qa, y(1)) == linear_action(a_rows, y(1)).shift_hbar(1).scale(2)


def test_ad_of_central_is_zero():
    a = y(0) + WeylElement.monomial(CAPS, (1, 2), mask=1)
    assert ad(DARBOUX, h(2, 5), a).is_zero()


def test_moment_generates_delta():
    mu = moment(CAPS, FormMatrix.darboux(CH))
    for alpha in itertools.product(range(4), repeat=2):
        if sum(alpha) > 4:
            continue
        for mask in range(4):
            a = WeylElement.monomial(CAPS, alpha, mask)
            assert ad(DARBOUX, mu, a) == delta(a).shift_hbar(1)


def test_ad_agrees_with_graded_commutator():
    rng = random.Random(11)
    for _ in range(20):
        u, a = rand_weyl(rng, CAPS, 3, 3, (0, 1, 2)), rand_weyl(rng, CAPS, 3, 3, (0, 1, 2))
        assert ad(DARBOUX, u, a) == graded_commutator(DARBOUX, u, a)
        assert ad_over_2hbar(DARBOUX, u, a).shift_hbar(1).scale(2) == ad(DARBOUX, u, a)


def test_odd_element_with_central_square_has_nilpotent_ad():
    mu = moment(CAPS, FormMatrix.darboux(CH))
    a = WeylElement.monomial(CAPS, (2, 1)) + WeylElement.monomial(CAPS, (0, 1), mask=1)
    assert ad(DARBOUX, mu, ad(DARBOUX, mu, a)).is_zero()


def test_cap_mismatch():
    other = WeylCaps(CH, 10, 6)
    with pytest.raises(CapMismatch):
        fiber_moyal(DARBOUX, y(0), WeylElement.y(other, 0))


def test_caps_from_order():
    caps = WeylCaps.for_order(CH, 3)
    assert (caps.fedosov_degree_cap, caps.hbar_cap) == (8, 4)


def test_pr0():
    a = WeylElement.scalar(CAPS, 2) + h(1, 3) + y(0)
    p = pr0(a)
    assert p[0] == BaseFunction.const(CH, 2) and p[1] == BaseFunction.const(CH, 3)


@given(st.integers(0, 10_000))
def test_seeded_identity_suite(seed):
    results = weyl_suite(seed, count=3)
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


@given(st.integers(0, 10_000))
def test_sp_matrices_are_symplectic(seed):
    from starjet.weyl import is_symplectic_matrix

    w = FormMatrix.darboux(CH).constant_part()
    assert is_symplectic_matrix(w, random_sp_matrix(random.Random(seed), w))

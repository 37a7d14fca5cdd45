"""The compiled kernels and the pure-Python fallback agree term for term."""

import random

import pytest

from starjet.coeffring import AFFINE, TORUS, BaseFunction, Chart, KERNEL_IMPLEMENTATION, Q
from starjet.coeffring import _pykernels
from starjet.coeffring.base import _layout

ck = pytest.importorskip("starjet.coeffring._ckernels")


def _random_terms(rng, chart, n):
    f = BaseFunction.zero(chart)
    for _ in range(n):
        tp = rng.randint(0, chart.t_cap)
        c = Q(rng.randint(-9, 9), rng.randint(1, 5))
        if chart.is_torus:
            wave = tuple(rng.randint(-3, 3) for _ in range(chart.dim))
            make = BaseFunction.cos if rng.random() < 0.5 else BaseFunction.sin
            f = f + make(chart, wave, c, tpow=tp)
        else:
            f = f + BaseFunction.monomial(chart, tuple(rng.randint(0, 3) for _ in range(chart.dim)), c, tpow=tp)
    return f.terms


@pytest.mark.parametrize("dim", [1, 2, 4])
@pytest.mark.parametrize("seed", range(5))
def test_torus_products_agree(dim, seed):
    rng = random.Random(seed)
    chart = Chart(TORUS, dim, 3)
    _, tshift, zero = _layout(TORUS, dim)
    for _ in range(10):
        a, b = _random_terms(rng, chart, 6), _random_terms(rng, chart, 5)
        for cap in range(chart.t_cap + 1):
            assert ck.mul_torus(a, b, tshift, zero, cap) == _pykernels.mul_torus(a, b, tshift, zero, cap)


@pytest.mark.parametrize("seed", range(5))
def test_affine_products_agree(seed):
    rng = random.Random(seed)
    chart = Chart(AFFINE, 3, 2)
    _, tshift, _ = _layout(AFFINE, 3)
    for _ in range(10):
        a, b = _random_terms(rng, chart, 6), _random_terms(rng, chart, 6)
        assert ck.mul_affine(a, b, tshift, 2) == _pykernels.mul_affine(a, b, tshift, 2)


def test_axpy_and_clean_agree():
    rng = random.Random(3)
    chart = Chart(TORUS, 2, 2)
    a, b = _random_terms(rng, chart, 8), _random_terms(rng, chart, 8)
    for q in (Q(1), Q(-1), Q(3, 7)):
        x, y = dict(a), dict(a)
        ck.axpy(x, b, q)
        _pykernels.axpy(y, b, q)
        assert ck.clean(x) == _pykernels.clean(y)


def test_selected_implementation_is_reported():
    assert KERNEL_IMPLEMENTATION in ("cython", "python")

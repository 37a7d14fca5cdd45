import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from starjet.coeffring import AFFINE, TORUS, BaseFunction, Chart, Q

settings.register_profile(
    "starjet",
    max_examples=int(os.environ.get("STARJET_HYPOTHESIS_EXAMPLES", "40")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("starjet")

ACCEPTANCE = {}


def record(criterion, passed, detail=""):
    line = "criterion %2d: %s%s" % (criterion, "PASS" if passed else "FAIL", "  " + detail if detail else "")
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


@pytest.fixture
def acceptance_record():
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


rationals = st.builds(lambda n, d: Q(n, d), st.integers(-5, 5), st.integers(1, 4))


@st.composite
def torus_functions(draw, chart=None, max_terms=3, freq=2):
    chart = chart or Chart(TORUS, 2, 2)
    out = BaseFunction.zero(chart)
    for _ in range(draw(st.integers(0, max_terms))):
        wave = tuple(draw(st.integers(-freq, freq)) for _ in range(chart.dim))
        tp = draw(st.integers(0, chart.t_cap))
        c = draw(rationals)
        if draw(st.booleans()):
            out = out + BaseFunction.cos(chart, wave, c, tpow=tp)
        else:
            out = out + BaseFunction.sin(chart, wave, c, tpow=tp)
    return out


@st.composite
def affine_functions(draw, chart=None, max_terms=3, deg=2):
    chart = chart or Chart(AFFINE, 2, 2)
    out = BaseFunction.zero(chart)
    for _ in range(draw(st.integers(0, max_terms))):
        exps = tuple(draw(st.integers(0, deg)) for _ in range(chart.dim))
        out = out + BaseFunction.monomial(chart, exps, draw(rationals), tpow=draw(st.integers(0, chart.t_cap)))
    return out

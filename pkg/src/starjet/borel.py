"""Borel realization of a finite sequence of forms on a torus.

``f(t) = sum_n alpha_n t^n / n! * phi(lambda_n t)`` with a plateau bump
``phi`` and scale factors ``lambda_n`` chosen so that every term satisfies
``sup |D^nu d_t^l f_n| <= 2^-n`` for ``l + |nu| <= n - 1``.  Symbolic data
stay exact; evaluation is in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np
import sympy

from starjet.coeffring.base import BaseFunction, ChartMismatch
from starjet.coeffring.forms import Form, FormMatrix, coeff_sup_bound
from starjet.coeffring.rational import Q
from starjet.errors import PreconditionError
from starjet.tables import multi_indices

DEFAULT_GRID = 10_000
DEFAULT_SAFETY = 2.0


# the bump -------------------------------------------------------------------------


def _psi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def bump(t):
    """Smooth, ``1`` on ``|t| <= 1/2``, ``0`` on ``|t| >= 1``; works on arrays."""
    scalar = np.ndim(t) == 0
    a = np.abs(np.asarray(t, dtype=float))
    num = _psi(2.0 * (1.0 - a))
    den = num + _psi(2.0 * a - 1.0)
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    out = np.where(a <= 0.5, 1.0, out)
    out = np.where(a >= 1.0, 0.0, out)
    return float(out) if scalar else out


_U = sympy.Symbol("u", positive=True)


def _transition_expr():
    """``phi`` on ``1/2 < u < 1`` (u = |t|)."""
    a = sympy.exp(-1 / (2 * (1 - _U)))
    b = sympy.exp(-1 / (2 * _U - 1))
    return a / (a + b)


@lru_cache(maxsize=None)
def _derivative_fn(j):
    expr = sympy.diff(_transition_expr(), _U, j)
    return sympy.lambdify(_U, expr, "numpy")


def bump_derivative(t, j):
    """``phi^{(j)}(t)`` (exact formula on the transition region, 0 or 1 elsewhere)."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    out = np.zeros_like(a)
    if j == 0:
        return bump(t)
    inside = (a > 0.5) & (a < 1.0)
    if np.any(inside):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            vals = np.asarray(_derivative_fn(j)(a[inside]), dtype=float)
        vals = np.nan_to_num(vals, nan=0.0, posinf=0.0, neginf=0.0)
        sign = np.sign(t[inside]) ** j  # phi is even
        out[inside] = vals * sign
    return out


@lru_cache(maxsize=None)
def derivative_sup(j, grid=DEFAULT_GRID):
    """Grid maximum of ``|phi^{(j)}|`` over the transition region."""
    if j == 0:
        return 1.0
    u = np.linspace(0.5, 1.0, grid + 2)[1:-1]
    return float(np.max(np.abs(bump_derivative(u, j))))


def bump_bound(n, grid=DEFAULT_GRID, safety=DEFAULT_SAFETY):
    """``M_n = safety * sum_{j <= n} max |phi^{(j)}|``."""
    return safety * sum(derivative_sup(j, grid) for j in range(n + 1))


# sequences ------------------------------------------------------------------------


def _as_form(x):
    if isinstance(x, FormMatrix):
        return x.as_form()
    if isinstance(x, Form):
        return x
    if isinstance(x, BaseFunction):
        return Form(x.chart, 0, {(): x} if x.terms else {})
    raise TypeError("expected a Form, FormMatrix or BaseFunction")


@dataclass
class FormSequence:
    forms: list

    def __post_init__(self):
        self.forms = [_as_form(f) for f in self.forms]
        if not self.forms:
            raise PreconditionError("empty sequence")
        chart = self.forms[0].chart
        deg = self.forms[0].degree
        for f in self.forms:
            if f.chart != chart or f.degree != deg:
                raise PreconditionError("forms of a sequence share chart and degree")
        if not chart.is_torus:
            raise ChartMismatch("Borel realization needs a torus chart (bounded derivatives)")

    @property
    def chart(self):
        return self.forms[0].chart

    @property
    def degree(self):
        return self.forms[0].degree

    @property
    def top(self):
        return len(self.forms) - 1


def sup_norm_bound(form: Form, nu) -> Q:
    """Bound for the Euclidean norm of ``D^nu`` of the components (sum of bounds)."""
    return sum((coeff_sup_bound(f, nu) for f in form.comps.values()), Q(0))


def derivative_norm_bound(form: Form, n) -> Q:
    """``K_n = sum_{|nu| <= n} sup ||D^nu form||``."""
    d = form.chart.dim
    return sum((sup_norm_bound(form, nu) for nu in multi_indices(d, n)), Q(0))


def lambda_sum(n):
    """``sum_{p=0}^{n-1} binom(n-1, p) / (n-p)!`` (0 for ``n = 0``)."""
    return sum((Q(comb(n - 1, p), factorial(n - p)) for p in range(n)), Q(0))


@dataclass
class BorelRealization:
    seq: FormSequence
    lambdas: list
    k_bounds: list
    m_bounds: list
    grid: int = DEFAULT_GRID
    safety: float = DEFAULT_SAFETY
    _cache: dict = field(default_factory=dict, repr=False)

    def to_json(self):
        return {
            "lambda": [float(x) for x in self.lambdas],
            "K": [str(k) for k in self.k_bounds],
            "M": self.m_bounds,
            "grid": self.grid,
            "safety_factor": self.safety,
        }

    def plateau_radius(self):
        return 1.0 / (2.0 * max(self.lambdas))

    def support_radius(self):
        return 1.0 / min(self.lambdas)

    def evaluate(self, t, x, lambdas=None):
        """Components ``{index: array}`` of ``f(t)`` at points ``x`` (list of arrays)."""
        lambdas = self.lambdas if lambdas is None else lambdas
        return _evaluate(self.seq, lambdas, t, x)

    __call__ = evaluate

    def taylor(self, t, x):
        """``sum alpha_n t^n / n!`` (the plateau value)."""
        return _evaluate(self.seq, None, t, x)

    def jet_at_zero(self, k):
        """``d^k f / dt^k (0)`` computed symbolically; equals ``alpha_k`` exactly."""
        t = sympy.Symbol("t", real=True)
        total = {}
        for n, (alpha, lam) in enumerate(zip(self.seq.forms, self.lambdas)):
            u = sympy.Rational(lam) * t
            phi = sympy.Piecewise((1, u**2 <= sympy.Rational(1, 4)), (0, u**2 >= 1), (sympy.nan, True))
            expr = t**n / sympy.factorial(n) * phi
            c = sympy.diff(expr, t, k).subs(t, 0)
            c = sympy.nsimplify(c)
            if c:
                q = Q(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1]))
                for idx, f in alpha.comps.items():
                    total[idx] = total[idx] + f.scale(q) if idx in total else f.scale(q)
        return Form(self.seq.chart, self.seq.degree, total)

    def certificate(self, n, t_points=201, x_points=24):
        """Max over a grid of ``||D^nu d_t^l f_n||`` for ``l + |nu| <= n-1``.

        Returns ``(worst, bound)`` with ``bound = 2^-n``.
        """
        worst = 0.0
        alpha = self.seq.forms[n]
        lam = float(self.lambdas[n])
        d = self.seq.chart.dim
        ts = np.linspace(-1.0 / lam, 1.0 / lam, t_points)
        axes = np.meshgrid(*[np.linspace(0, 2 * np.pi, x_points, endpoint=False)] * d, indexing="ij")
        xs = [a.ravel() for a in axes]
        for total in range(n):
            for l in range(total + 1):
                k = total - l
                tfac = _t_factor(n, l, lam, ts)  # shape (t,)
                for nu in multi_indices(d, k):
                    if sum(nu) != k:
                        continue
                    sq = np.zeros(len(xs[0]))
                    for f in alpha.comps.values():
                        v = np.asarray(f.dx_multi(nu).evaluate(xs), dtype=float)
                        sq = sq + np.broadcast_to(v, sq.shape) ** 2
                    norm_x = float(np.sqrt(np.max(sq))) if sq.size else 0.0
                    worst = max(worst, norm_x * float(np.max(np.abs(tfac))))
        return worst, 2.0**-n


def _t_factor(n, l, lam, ts):
    """``d_t^l [t^n/n! phi(lam t)]`` on an array."""
    out = np.zeros_like(ts)
    for p in range(l + 1):
        e = n - l + p
        if e < 0:
            continue
        out = out + comb(l, p) * ts**e / factorial(e) * lam**p * bump_derivative(lam * ts, p)
    return out


def _evaluate(seq, lambdas, t, x):
    out = {}
    for n, alpha in enumerate(seq.forms):
        w = float(t) ** n / factorial(n)
        if lambdas is not None:
            w *= bump(float(lambdas[n]) * float(t))
        if w == 0.0:
            continue
        for idx, f in alpha.comps.items():
            v = np.asarray(f.evaluate(x), dtype=float) * w
            out[idx] = out[idx] + v if idx in out else v
    return out


def choose_lambda(seq: FormSequence, grid=DEFAULT_GRID, safety=DEFAULT_SAFETY) -> BorelRealization:
    lambdas, ks, ms = [], [], []
    for n, alpha in enumerate(seq.forms):
        k_n = derivative_norm_bound(alpha, n)
        m_n = bump_bound(n, grid, safety)
        s_n = lambda_sum(n)
        lam = max(1.0, float(2**n * k_n * s_n) * m_n)
        lambdas.append(lam)
        ks.append(k_n)
        ms.append(m_n)
    return BorelRealization(seq, lambdas, ks, ms, grid, safety)


def realize(seq: FormSequence, **kw) -> BorelRealization:
    return choose_lambda(seq, **kw)


@dataclass
class BorelTriple:
    first: BorelRealization
    second: BorelRealization
    primitive: BorelRealization
    mu: list

    def evaluate(self, t, x):
        return (
            self.first.evaluate(t, x, self.mu),
            self.second.evaluate(t, x, self.mu),
            self.primitive.evaluate(t, x, self.mu),
        )

    def d_primitive(self, t, x):
        """``d`` (in x) of the realized primitive, from the exact ``d nu_n``."""
        dseq = FormSequence([nu.d() for nu in self.primitive.seq.forms])
        return _evaluate(dseq, self.mu, t, x)

    def relation_defect(self, ts, x):
        """``max |f2 - f1 - d f|`` over the given times and points."""
        worst = 0.0
        for t in ts:
            f1 = self.first.evaluate(t, x, self.mu)
            f2 = self.second.evaluate(t, x, self.mu)
            df = self.d_primitive(t, x)
            for idx in set(f1) | set(f2) | set(df):
                v = f2.get(idx, 0.0) - f1.get(idx, 0.0) - df.get(idx, 0.0)
                worst = max(worst, float(np.max(np.abs(v))))
        return worst


def realize_triple(seq1: FormSequence, seq2: FormSequence, seq_nu: FormSequence, **kw) -> BorelTriple:
    """Realize ``alpha^1, alpha^2`` and primitives ``nu`` with shared scales ``mu_n``."""
    if not (len(seq1.forms) == len(seq2.forms) == len(seq_nu.forms)):
        raise PreconditionError("sequences must have equal length")
    for n, (a1, a2, nu) in enumerate(zip(seq1.forms, seq2.forms, seq_nu.forms)):
        if (a2 - a1) != nu.d():
            raise PreconditionError("alpha^2_%d - alpha^1_%d != d nu_%d" % (n, n, n))
    r1, r2, rn = (choose_lambda(s, **kw) for s in (seq1, seq2, seq_nu))
    mu = [max(a, b, c) for a, b, c in zip(r1.lambdas, r2.lambdas, rn.lambdas)]
    return BorelTriple(r1, r2, rn, mu)


__all__ = [
    "BorelRealization",
    "BorelTriple",
    "FormSequence",
    "bump",
    "bump_bound",
    "bump_derivative",
    "choose_lambda",
    "derivative_norm_bound",
    "derivative_sup",
    "lambda_sum",
    "realize",
    "realize_triple",
]

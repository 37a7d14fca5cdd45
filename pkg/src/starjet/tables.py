"""Differential and bidifferential operators with chart-function coefficients,
and star-product tables ``sum_i hbar^i C_i``."""

from __future__ import annotations

from itertools import product as iproduct
from math import comb

from starjet.coeffring.base import BaseFunction, ChartMismatch
from starjet.coeffring.rational import Q, fmt_rational
from starjet.coeffring.series import HSeries


def _add_to(d, key, f):
    if not f.terms:
        return
    old = d.get(key)
    if old is None:
        d[key] = f
    else:
        s = old + f
        if s.terms:
            d[key] = s
        else:
            del d[key]


def sub_multi_indices(alpha):
    """All ``gamma <= alpha`` componentwise."""
    return iproduct(*(range(a + 1) for a in alpha))


def multi_binom(alpha, gamma):
    out = 1
    for a, g in zip(alpha, gamma):
        out *= comb(a, g)
    return out


def madd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def msub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def multi_indices(dim, max_order):
    """Multi-indices of total order ``<= max_order`` in graded-lex order."""
    out = []
    for n in range(max_order + 1):
        for alpha in iproduct(range(n + 1), repeat=dim):
            if sum(alpha) == n:
                out.append(alpha)
    return out


def unit(dim, i):
    return tuple(int(j == i) for j in range(dim))


class DiffOp:
    """``sum_alpha c_alpha(x, t) d^alpha`` acting on chart functions."""

    __slots__ = ("chart", "coeffs")

    def __init__(self, chart, coeffs=None):
        self.chart = chart
        out = {}
        for alpha, f in (coeffs or {}).items():
            if f.chart != chart:
                raise ChartMismatch("operator coefficient on another chart")
            _add_to(out, tuple(alpha), f)
        self.coeffs = out

    @classmethod
    def identity(cls, chart):
        return cls(chart, {(0,) * chart.dim: BaseFunction.const(chart, 1)})

    @classmethod
    def zero(cls, chart):
        return cls(chart, {})

    @classmethod
    def multiplication(cls, f):
        return cls(f.chart, {(0,) * f.chart.dim: f})

    @classmethod
    def vector_field(cls, chart, comps):
        """``sum_i X^i d_i`` from a list of coefficient functions."""
        return cls(chart, {unit(chart.dim, i): c for i, c in enumerate(comps) if c.terms})

    @classmethod
    def partial(cls, chart, alpha):
        return cls(chart, {tuple(alpha): BaseFunction.const(chart, 1)})

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.chart == other.chart and self.coeffs == other.coeffs

    __hash__ = None

    def is_zero(self):
        return not self.coeffs

    def order(self):
        return max((sum(a) for a in self.coeffs), default=-1)

    def __add__(self, other):
        out = dict(self.coeffs)
        for a, f in other.coeffs.items():
            _add_to(out, a, f)
        return DiffOp(self.chart, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, q):
        return DiffOp(self.chart, {a: f.scale(q) for a, f in self.coeffs.items()})

    def mul_function(self, g):
        """Left multiplication ``g * self``."""
        return DiffOp(self.chart, {a: g * f for a, f in self.coeffs.items()})

    def map(self, fn):
        return DiffOp(self.chart, {a: fn(f) for a, f in self.coeffs.items()})

    def apply(self, f):
        if isinstance(f, HSeries):
            return f.map(self.apply)
        out = BaseFunction.zero(self.chart)
        for alpha, c in self.coeffs.items():
            df = f.dx_multi(alpha)
            if df.terms:
                out = out + c * df
        return out

    __call__ = apply

    def compose(self, other):
        """``self o other``."""
        out = {}
        for alpha, a in self.coeffs.items():
            for gamma in sub_multi_indices(alpha):
                rest = msub(alpha, gamma)
                bin_ = multi_binom(alpha, gamma)
                for beta, b in other.coeffs.items():
                    db = b.dx_multi(gamma)
                    if db.terms:
                        _add_to(out, madd(rest, beta), (a * db).scale(bin_))
        return DiffOp(self.chart, out)

    def t_coeff(self, k):
        return self.map(lambda f: f.t_coeff(k))

    def with_chart(self, chart):
        return DiffOp(chart, {a: f.with_chart(chart) for a, f in self.coeffs.items()})

    def to_json(self):
        return [
            {"alpha": list(a), "coeff": f.to_json()} for a, f in sorted(self.coeffs.items(), key=lambda e: (sum(e[0]), e[0]))
        ]

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join("(%r)D%s" % (f, list(a)) for a, f in sorted(self.coeffs.items()))


class BiDiffOp:
    """``(f, g) -> sum c^{alpha beta} d^alpha f d^beta g``."""

    __slots__ = ("chart", "coeffs")

    def __init__(self, chart, coeffs=None):
        self.chart = chart
        out = {}
        for (alpha, beta), f in (coeffs or {}).items():
            if f.chart != chart:
                raise ChartMismatch("cochain coefficient on another chart")
            _add_to(out, (tuple(alpha), tuple(beta)), f)
        self.coeffs = out

    @classmethod
    def product(cls, chart):
        z = (0,) * chart.dim
        return cls(chart, {(z, z): BaseFunction.const(chart, 1)})

    @classmethod
    def zero(cls, chart):
        return cls(chart, {})

    @classmethod
    def bivector(cls, pi):
        """``pi^{ij} d_i f d_j g`` from a square matrix of functions (or a FormMatrix)."""
        rows = getattr(pi, "rows", pi)
        chart = rows[0][0].chart
        d = chart.dim
        return cls(
            chart,
            {(unit(d, i), unit(d, j)): rows[i][j] for i in range(d) for j in range(d) if rows[i][j].terms},
        )

    def __eq__(self, other):
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        return self.chart == other.chart and self.coeffs == other.coeffs

    __hash__ = None

    def is_zero(self):
        return not self.coeffs

    def orders(self):
        """Maximal differential order in each argument."""
        if not self.coeffs:
            return (-1, -1)
        return (max(sum(a) for a, _ in self.coeffs), max(sum(b) for _, b in self.coeffs))

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, f in other.coeffs.items():
            _add_to(out, k, f)
        return BiDiffOp(self.chart, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, q):
        return BiDiffOp(self.chart, {k: f.scale(q) for k, f in self.coeffs.items()})

    def map(self, fn):
        return BiDiffOp(self.chart, {k: fn(f) for k, f in self.coeffs.items()})

    def swap(self):
        return BiDiffOp(self.chart, {(b, a): f for (a, b), f in self.coeffs.items()})

    def antisymmetric_part(self):
        """``C(f, g) - C(g, f)``."""
        return self - self.swap()

    def symmetric_part(self):
        return self + self.swap()

    def apply(self, f, g):
        out = BaseFunction.zero(self.chart)
        cache_f = {}
        cache_g = {}
        for (alpha, beta), c in self.coeffs.items():
            df = cache_f.get(alpha)
            if df is None:
                df = cache_f[alpha] = f.dx_multi(alpha)
            if not df.terms:
                continue
            dg = cache_g.get(beta)
            if dg is None:
                dg = cache_g[beta] = g.dx_multi(beta)
            if dg.terms:
                out = out + c * df * dg
        return out

    __call__ = apply

    def compose_left(self, op: DiffOp):
        """``op(C(f, g))`` as a bidifferential operator (Leibniz expansion)."""
        out = {}
        for gamma, a in op.coeffs.items():
            for g1 in sub_multi_indices(gamma):
                r1 = msub(gamma, g1)
                b1 = multi_binom(gamma, g1)
                for g2 in sub_multi_indices(r1):
                    g3 = msub(r1, g2)
                    b2 = b1 * multi_binom(r1, g2)
                    for (alpha, beta), c in self.coeffs.items():
                        dc = c.dx_multi(g1)
                        if dc.terms:
                            _add_to(out, (madd(alpha, g2), madd(beta, g3)), (a * dc).scale(b2))
        return BiDiffOp(self.chart, out)

    def compose_right(self, left: DiffOp, right: DiffOp):
        """``C(left f, right g)``."""
        # d^alpha (sum a_mu d^mu f) = sum_{gamma<=alpha} binom d^gamma a_mu d^{alpha-gamma+mu} f
        def expand(op, alpha):
            res = {}
            for gamma in sub_multi_indices(alpha):
                bin_ = multi_binom(alpha, gamma)
                rest = msub(alpha, gamma)
                for mu, a in op.coeffs.items():
                    da = a.dx_multi(gamma)
                    if da.terms:
                        _add_to(res, madd(rest, mu), da.scale(bin_))
            return res

        out = {}
        cache_l = {}
        cache_r = {}
        for (alpha, beta), c in self.coeffs.items():
            el = cache_l.get(alpha)
            if el is None:
                el = cache_l[alpha] = expand(left, alpha)
            er = cache_r.get(beta)
            if er is None:
                er = cache_r[beta] = expand(right, beta)
            for mu, a in el.items():
                ca = c * a
                if not ca.terms:
                    continue
                for nu, b in er.items():
                    _add_to(out, (mu, nu), ca * b)
        return BiDiffOp(self.chart, out)

    def t_coeff(self, k):
        return self.map(lambda f: f.t_coeff(k))

    def with_chart(self, chart):
        return BiDiffOp(chart, {k: f.with_chart(chart) for k, f in self.coeffs.items()})

    def sorted_items(self):
        return sorted(self.coeffs.items(), key=lambda e: (sum(e[0][0]) + sum(e[0][1]), e[0]))

    def to_json(self):
        return [{"alpha": list(a), "beta": list(b), "coeff": f.to_json()} for (a, b), f in self.sorted_items()]

    @classmethod
    def from_json(cls, chart, data):
        return cls(
            chart,
            {(tuple(e["alpha"]), tuple(e["beta"])): BaseFunction.from_json(chart, e["coeff"]) for e in data},
        )

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join("(%r)D%s(f)D%s(g)" % (f, list(a), list(b)) for (a, b), f in self.sorted_items())


class StarProductTable:
    """``f * g = sum_{i <= order} hbar^i C_i(f, g)``."""

    __slots__ = ("chart", "order", "cochains")

    def __init__(self, chart, cochains):
        self.chart = chart
        self.cochains = tuple(cochains)
        self.order = len(self.cochains) - 1
        for c in self.cochains:
            if c.chart != chart:
                raise ChartMismatch("cochain on another chart")

    @classmethod
    def pointwise(cls, chart, order=0):
        return cls(chart, [BiDiffOp.product(chart)] + [BiDiffOp.zero(chart)] * order)

    def __getitem__(self, i):
        if 0 <= i <= self.order:
            return self.cochains[i]
        return BiDiffOp.zero(self.chart)

    def __eq__(self, other):
        if not isinstance(other, StarProductTable):
            return NotImplemented
        return self.chart == other.chart and self.cochains == other.cochains

    __hash__ = None

    def truncate(self, order):
        return StarProductTable(self.chart, self.cochains[: order + 1])

    def map(self, fn):
        return StarProductTable(self.chart, [c.map(fn) for c in self.cochains])

    def agrees_through(self, other, order):
        return all(self[i] == other[i] for i in range(order + 1))

    def first_difference(self, other):
        for i in range(max(self.order, other.order) + 1):
            if self[i] != other[i]:
                return i
        return None

    def star(self, f, g, hbar_cap=None):
        """Exact product of functions or hbar-series, truncated at ``hbar_cap``."""
        cap = self.order if hbar_cap is None else hbar_cap
        if not isinstance(f, HSeries):
            f = HSeries.lift(f, cap)
        if not isinstance(g, HSeries):
            g = HSeries.lift(g, cap)
        cap = min(cap, f.hbar_cap, g.hbar_cap)
        out = [BaseFunction.zero(self.chart) for _ in range(cap + 1)]
        for a in range(cap + 1):
            fa = f[a]
            if not fa.terms:
                continue
            for b in range(cap + 1 - a):
                gb = g[b]
                if not gb.terms:
                    continue
                for i in range(min(self.order, cap - a - b) + 1):
                    v = self.cochains[i].apply(fa, gb)
                    if v.terms:
                        out[a + b + i] = out[a + b + i] + v
        return HSeries(self.chart, cap, out)

    def associativity_defect(self, f, g, h):
        """``(f*g)*h - f*(g*h)`` as an hbar-series (zero for associative tables)."""
        return self.star(self.star(f, g), h) - self.star(f, self.star(g, h))

    def is_associative_on(self, triples):
        return all(self.associativity_defect(f, g, h).is_zero() for f, g, h in triples)

    def max_orders(self):
        return [c.orders() for c in self.cochains]

    def to_json(self):
        return {
            "chart": {"kind": self.chart.kind, "dim": self.chart.dim, "t_cap": self.chart.t_cap},
            "order": self.order,
            "cochains": {str(i): c.to_json() for i, c in enumerate(self.cochains)},
        }

    @classmethod
    def from_json(cls, chart, data):
        n = int(data["order"])
        return cls(chart, [BiDiffOp.from_json(chart, data["cochains"][str(i)]) for i in range(n + 1)])

    def pretty(self):
        lines = []
        for i, c in enumerate(self.cochains):
            lines.append("C_%d:" % i)
            if not c.coeffs:
                lines.append("    0")
            for (a, b), f in c.sorted_items():
                lines.append("    D%s f * D%s g : %r" % (_mi(a), _mi(b), f))
        return "\n".join(lines)

    def latex(self):
        rows = []
        for i, c in enumerate(self.cochains):
            parts = []
            for (a, b), f in c.sorted_items():
                parts.append("%s\\,%s f\\,%s g" % (_latex_fn(f), _latex_partial(a), _latex_partial(b)))
            rows.append("C_{%d}(f,g) &= %s \\\\" % (i, " + ".join(parts) if parts else "0"))
        return "\\begin{align*}\n" + "\n".join(rows) + "\n\\end{align*}"

    def __repr__(self):
        return "StarProductTable(order=%d, chart=%r)" % (self.order, self.chart)


def _mi(alpha):
    return "(" + ",".join(str(a) for a in alpha) + ")"


def _latex_partial(alpha):
    if not any(alpha):
        return ""
    return "".join("\\partial_{%d}%s" % (i + 1, "^{%d}" % a if a > 1 else "") for i, a in enumerate(alpha) if a)


def _latex_fn(f):
    parts = []
    for lab, v in f.label_terms():
        tex = fmt_rational(v)
        if "/" in tex:
            num, den = tex.split("/")
            sign = "-" if num.startswith("-") else ""
            tex = "%s\\tfrac{%s}{%s}" % (sign, num.lstrip("-"), den)
        parts.append("%s[%s]" % (tex, lab))
    return "(" + " + ".join(parts) + ")" if parts else "0"


def moyal_table(chart, lam_rows, order):
    """Closed-form Moyal cochains for a constant bivector, built by direct
    enumeration of index sequences (an oracle independent of the fiber
    machinery): ``C_r = (1/r!)(1/2^r) sum Lam^{i1 j1}..Lam^{ir jr} d_I f d_J g``."""
    d = chart.dim
    lam = [[Q(v) for v in row] for row in lam_rows]
    cochains = []
    fact = 1
    for r in range(order + 1):
        if r:
            fact *= r
        acc = {}
        for seq in iproduct(range(d), repeat=2 * r):
            c = Q(1)
            for k in range(r):
                c *= lam[seq[2 * k]][seq[2 * k + 1]]
                if not c:
                    break
            if not c:
                continue
            alpha = [0] * d
            beta = [0] * d
            for k in range(r):
                alpha[seq[2 * k]] += 1
                beta[seq[2 * k + 1]] += 1
            key = (tuple(alpha), tuple(beta))
            acc[key] = acc.get(key, Q(0)) + c
        scale = Q(1, fact * 2**r)
        cochains.append(
            BiDiffOp(chart, {k: BaseFunction.const(chart, v * scale) for k, v in acc.items() if v})
        )
    return StarProductTable(chart, cochains)

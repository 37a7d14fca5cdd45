"""Differential forms, antisymmetric form matrices and their inversion."""

from __future__ import annotations

from itertools import combinations

from starjet.coeffring.base import BaseFunction, ChartMismatch
from starjet.coeffring.rational import Q, fmt_rational


class NotInvertible(ValueError):
    pass


# dense matrices of BaseFunction -------------------------------------------


def mat_zero(chart, n):
    return [[BaseFunction.zero(chart) for _ in range(n)] for _ in range(n)]


def mat_identity(chart, n):
    m = mat_zero(chart, n)
    for i in range(n):
        m[i][i] = BaseFunction.const(chart, 1)
    return m


def mat_from_rational(chart, rows):
    return [[BaseFunction.const(chart, v) for v in row] for row in rows]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    chart = a[0][0].chart
    out = [[BaseFunction.zero(chart) for _ in range(m)] for _ in range(n)]
    for i in range(n):
        for l in range(k):
            ail = a[i][l]
            if not ail.terms:
                continue
            row = b[l]
            for j in range(m):
                if row[j].terms:
                    out[i][j] = out[i][j] + ail * row[j]
    return out


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a, q):
    return [[x.scale(q) for x in row] for row in a]


def mat_transpose(a):
    return [list(col) for col in zip(*a)]


def mat_vec(a, v):
    chart = v[0].chart
    out = []
    for row in a:
        acc = BaseFunction.zero(chart)
        for x, y in zip(row, v):
            if x.terms and y.terms:
                acc = acc + x * y
        out.append(acc)
    return out


def mat_equal(a, b):
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def rational_inverse(rows):
    """Gauss-Jordan inverse of a square matrix of rationals."""
    n = len(rows)
    aug = [[Q(v) for v in row] + [Q(int(i == j)) for j in range(n)] for i, row in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise NotInvertible("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


# general q-forms ------------------------------------------------------------


def _wedge_sign_insert(i, idx):
    """Sign and sorted tuple of ``dx^i ^ dx^idx`` (0 sign if repeated)."""
    if i in idx:
        return 0, None
    before = sum(1 for j in idx if j < i)
    return (-1) ** before, tuple(sorted(idx + (i,)))


class Form:
    """A q-form ``sum_I f_I dx^I`` with strictly increasing index tuples ``I``."""

    __slots__ = ("chart", "degree", "comps")

    def __init__(self, chart, degree, comps=None):
        self.chart = chart
        self.degree = degree
        cleaned = {}
        for idx, f in (comps or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise ValueError("bad form index %r" % (idx,))
            if f.chart != chart:
                raise ChartMismatch("form component on another chart")
            if f.terms:
                cleaned[idx] = f
        self.comps = cleaned

    def __getitem__(self, idx):
        return self.comps.get(tuple(idx), BaseFunction.zero(self.chart))

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self.comps == other.comps

    __hash__ = None

    def is_zero(self):
        return not self.comps

    def _combine(self, other, sign):
        if other.degree != self.degree or other.chart != self.chart:
            raise ChartMismatch("forms of different degree or chart")
        out = dict(self.comps)
        for idx, f in other.comps.items():
            out[idx] = out[idx] + f if sign > 0 and idx in out else (
                out[idx] - f if idx in out else (f if sign > 0 else -f))
        return Form(self.chart, self.degree, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, q):
        return Form(self.chart, self.degree, {i: f.scale(q) for i, f in self.comps.items()})

    def mul_function(self, g):
        return Form(self.chart, self.degree, {i: f * g for i, f in self.comps.items()})

    def map(self, fn):
        return Form(self.chart, self.degree, {i: fn(f) for i, f in self.comps.items()})

    def d(self):
        """Exterior derivative in x."""
        out = {}
        for idx, f in self.comps.items():
            for i in range(self.chart.dim):
                sgn, new = _wedge_sign_insert(i, idx)
                if not sgn:
                    continue
                df = f.dx(i)
                if not df.terms:
                    continue
                term = df if sgn > 0 else -df
                out[new] = out[new] + term if new in out else term
        return Form(self.chart, self.degree + 1, out)

    def t_coeff(self, k):
        return self.map(lambda f: f.t_coeff(k))

    def with_chart(self, chart):
        return Form(chart, self.degree, {i: f.with_chart(chart) for i, f in self.comps.items()})

    def to_json(self):
        return {",".join(str(i + 1) for i in idx): f.to_json() for idx, f in sorted(self.comps.items())}

    @classmethod
    def from_json(cls, chart, degree, mapping):
        comps = {}
        for key, val in mapping.items():
            idx = tuple(int(s) - 1 for s in key.split(",")) if key else ()
            if degree == 2 and len(idx) == 2 and idx[0] > idx[1]:
                idx = (idx[1], idx[0])
                val_f = -BaseFunction.from_json(chart, val)
            else:
                val_f = BaseFunction.from_json(chart, val)
            comps[idx] = comps[idx] + val_f if idx in comps else val_f
        return cls(chart, degree, comps)

    def __repr__(self):
        if not self.comps:
            return "0"
        return " + ".join(
            "(%r)%s" % (f, "".join("dx%d" % (i + 1) for i in idx)) for idx, f in sorted(self.comps.items())
        )


def basis_indices(dim, degree):
    return list(combinations(range(dim), degree))


# antisymmetric form matrices ------------------------------------------------


class FormMatrix:
    """Antisymmetric ``d x d`` matrix of chart functions.

    Used both for 2-forms ``omega_ij`` and for bivectors ``Lambda^ij``.
    """

    __slots__ = ("chart", "rows")

    def __init__(self, chart, rows):
        d = chart.dim
        if len(rows) != d or any(len(r) != d for r in rows):
            raise ValueError("form matrix must be %dx%d" % (d, d))
        for i in range(d):
            if rows[i][i].terms:
                raise ValueError("diagonal entry (%d,%d) must vanish" % (i, i))
            for j in range(i + 1, d):
                if rows[i][j] != -rows[j][i]:
                    raise ValueError("entries (%d,%d),(%d,%d) are not antisymmetric" % (i, j, j, i))
        self.chart = chart
        self.rows = [list(r) for r in rows]

    @classmethod
    def from_upper(cls, chart, entries):
        """Build from ``{(i, j): f}`` with ``i < j`` (0-based)."""
        d = chart.dim
        rows = mat_zero(chart, d)
        for (i, j), f in entries.items():
            if i == j:
                raise ValueError("diagonal entries of a 2-form vanish")
            if i > j:
                i, j, f = j, i, -f
            rows[i][j] = rows[i][j] + f
            rows[j][i] = -rows[i][j]
        return cls(chart, rows)

    @classmethod
    def from_rational(cls, chart, rows):
        return cls(chart, mat_from_rational(chart, rows))

    @classmethod
    def from_form(cls, form):
        if form.degree != 2:
            raise ValueError("need a 2-form")
        return cls.from_upper(form.chart, dict(form.comps))

    @classmethod
    def darboux(cls, chart):
        """``sum dx^(2i-1) ^ dx^(2i)``."""
        if chart.dim % 2:
            raise ValueError("symplectic charts have even dimension")
        return cls.from_upper(
            chart, {(2 * i, 2 * i + 1): BaseFunction.const(chart, 1) for i in range(chart.dim // 2)}
        )

    @property
    def dim(self):
        return self.chart.dim

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]

    def __eq__(self, other):
        if not isinstance(other, FormMatrix):
            return NotImplemented
        return self.chart == other.chart and mat_equal(self.rows, other.rows)

    __hash__ = None

    def upper(self):
        d = self.dim
        return {(i, j): self.rows[i][j] for i in range(d) for j in range(i + 1, d) if self.rows[i][j].terms}

    def as_form(self):
        return Form(self.chart, 2, self.upper())

    def __add__(self, other):
        return FormMatrix(self.chart, mat_add(self.rows, other.rows))

    def __sub__(self, other):
        return FormMatrix(self.chart, mat_sub(self.rows, other.rows))

    def __neg__(self):
        return FormMatrix(self.chart, mat_scale(self.rows, -1))

    def scale(self, q):
        return FormMatrix(self.chart, mat_scale(self.rows, q))

    def map(self, fn):
        return FormMatrix(self.chart, [[fn(x) for x in row] for row in self.rows])

    def t_coeff(self, k):
        return self.map(lambda f: f.t_coeff(k))

    def shift_t(self, k):
        return self.map(lambda f: f.shift_t(k))

    def with_chart(self, chart):
        return FormMatrix(chart, [[x.with_chart(chart) for x in row] for row in self.rows])

    def constant_part(self):
        """Rational matrix of ``t**0``, x-constant coefficients."""
        return [[x.constant_value() for x in row] for row in self.rows]

    def leading_is_constant(self):
        """The ``t**0`` part is x-independent."""
        return all(x.t_coeff(0).is_constant() for row in self.rows for x in row)

    @property
    def leading_invertible(self):
        if not self.leading_is_constant():
            return False
        try:
            rational_inverse(self.constant_part())
        except NotInvertible:
            return False
        return True

    def is_closed(self):
        return self.dim < 3 or self.as_form().d().is_zero()

    def is_constant(self):
        return all(x.is_constant() for row in self.rows for x in row)

    def pair(self, a, b):
        """``sum_ij M^ij a_i b_j`` for covectors given as lists of functions."""
        chart = self.chart
        acc = BaseFunction.zero(chart)
        for i in range(self.dim):
            for j in range(self.dim):
                m = self.rows[i][j]
                if m.terms and a[i].terms and b[j].terms:
                    acc = acc + m * a[i] * b[j]
        return acc

    def to_json(self):
        return {"%d,%d" % (i + 1, j + 1): f.to_json() for (i, j), f in sorted(self.upper().items())}

    @classmethod
    def from_json(cls, chart, mapping):
        return cls.from_form(Form.from_json(chart, 2, mapping))

    def __repr__(self):
        up = self.upper()
        if not up:
            return "0"
        return " + ".join("(%r)[%d%d]" % (f, i + 1, j + 1) for (i, j), f in sorted(up.items()))


def invert_form_matrix(omega: FormMatrix) -> FormMatrix:
    """Inverse ``Lam`` with ``omega . Lam = Id`` modulo ``t**(t_cap+1)``.

    ``omega = omega0 + W`` with ``omega0`` rational and every term of ``W``
    of t-degree at least one; the Neumann series
    ``sum_j (-Lam0 W)**j Lam0`` then terminates at ``j = t_cap``.
    """
    chart = omega.chart
    if not omega.leading_is_constant():
        raise NotInvertible("the t^0 part of the form is not constant in x")
    c0 = omega.constant_part()
    try:
        lam0_q = rational_inverse(c0)
    except NotInvertible:
        raise NotInvertible("the constant part of the form is singular") from None
    d = chart.dim
    lam0 = mat_from_rational(chart, lam0_q)
    w = [[omega.rows[i][j] - BaseFunction.const(chart, c0[i][j]) for j in range(d)] for i in range(d)]
    step = mat_scale(mat_mul(lam0, w), -1)
    term = lam0
    total = lam0
    for _ in range(chart.t_cap):
        term = mat_mul(step, term)
        if all(not x.terms for row in term for x in row):
            break
        total = mat_add(total, term)
    return FormMatrix(chart, total)


def sharp_matrix(lam0_rows, alpha: FormMatrix):
    """Bivector ``Lam0 . alpha . Lam0`` (first-order change of the inverse)."""
    chart = alpha.chart
    lam0 = mat_from_rational(chart, lam0_rows) if not isinstance(lam0_rows[0][0], BaseFunction) else lam0_rows
    return FormMatrix(chart, mat_mul(mat_mul(lam0, alpha.rows), lam0))


def coeff_sup_bound(f: BaseFunction, nu, l=0):
    """Upper bound of ``sup_x |D^nu d^l/dt^l f(x, 0)|`` on a torus chart.

    Sums ``|c| * prod |k_i|**nu_i`` over the ``t**l`` terms (times ``l!``).
    """
    if not f.chart.is_torus:
        raise ChartMismatch("sup bounds need a compact (torus) chart")
    if len(nu) != f.chart.dim:
        raise ValueError("multi-index has wrong length")
    fact = 1
    for i in range(2, l + 1):
        fact *= i
    total = Q(0)
    for key, v in f.terms.items():
        tp, _, vec = f.decode(key)
        if tp != l:
            continue
        w = abs(v)
        for k, n in zip(vec, nu):
            if n:
                w *= Q(abs(k)) ** n
        total += w
    return total * fact


def format_rational_matrix(rows):
    return [[fmt_rational(v) for v in row] for row in rows]

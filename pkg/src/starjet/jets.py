"""Jets in the leaf parameter: t is traded for hbar.

A function ``a(x, t) = sum_l hbar^l a_l(x, t)`` on ``M x (-eps, eps)`` has
``n``-jet ``sum_{k + l <= n} hbar^{k+l} [t^k] a_l``.  Operators and star
products are jetted coefficientwise.  Cohomology questions on the torus are
settled by Fourier modes: a closed form is exact exactly when its constant
mode vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from starjet.coeffring.base import BaseFunction, Chart, ChartMismatch
from starjet.coeffring.forms import Form, FormMatrix, NotInvertible, invert_form_matrix, mat_mul, rational_inverse
from starjet.coeffring.rational import Q
from starjet.coeffring.series import HSeries
from starjet.errors import IdentityFailure, PreconditionError
from starjet.fedosov import FoliatedConnection, fedosov_pipeline
from starjet.tables import BiDiffOp, DiffOp, StarProductTable


class JetUndetermined(PreconditionError):
    pass


class NotExact(PreconditionError):
    """A closed form with non-zero cohomology class; ``witness`` is its constant mode."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def base_chart(chart):
    return chart.with_t_cap(0)


# scalars --------------------------------------------------------------------------


def _t_split(f: BaseFunction, n):
    target = base_chart(f.chart)
    return [f.t_coeff(k).with_chart(target) for k in range(n + 1)]


def jet_scalar(a, n) -> HSeries:
    """``j_n`` of a chart function or hbar-series on ``M x (-eps, eps)``."""
    if not isinstance(a, HSeries):
        a = HSeries.lift(a, n)
    chart = a.chart
    if chart.t_cap < n:
        raise JetUndetermined("t_cap=%d cannot determine the %d-jet" % (chart.t_cap, n))
    target = base_chart(chart)
    out = [BaseFunction.zero(target) for _ in range(n + 1)]
    for l in range(min(n, a.hbar_cap) + 1):
        if not a[l].terms:
            continue
        for k, c in enumerate(_t_split(a[l], n - l)):
            if c.terms:
                out[k + l] = out[k + l] + c
    return HSeries(target, n, out)


def hat(f: BaseFunction, chart) -> BaseFunction:
    """The t-independent extension ``f^`` of a function on ``M``."""
    return f.with_chart(chart)


# operators ------------------------------------------------------------------------


class OperatorJet:
    """``sum_{m <= n} hbar^m T_m`` with ``T_m`` differential operators on ``M``."""

    __slots__ = ("chart", "ops")

    def __init__(self, chart, ops):
        self.chart = chart
        self.ops = tuple(ops)

    @property
    def order(self):
        return len(self.ops) - 1

    @classmethod
    def identity(cls, chart, n):
        return cls(chart, [DiffOp.identity(chart)] + [DiffOp.zero(chart)] * n)

    def __getitem__(self, m):
        return self.ops[m] if 0 <= m <= self.order else DiffOp.zero(self.chart)

    def __eq__(self, other):
        if not isinstance(other, OperatorJet):
            return NotImplemented
        return self.chart == other.chart and self.ops == other.ops

    __hash__ = None

    def is_identity(self):
        return self == OperatorJet.identity(self.chart, self.order)

    def leading_is_identity(self):
        return self.ops[0] == DiffOp.identity(self.chart)

    def apply(self, f) -> HSeries:
        n = self.order
        if not isinstance(f, HSeries):
            f = HSeries.lift(f, n)
        out = [BaseFunction.zero(self.chart) for _ in range(n + 1)]
        for m, op in enumerate(self.ops):
            if op.is_zero():
                continue
            for l in range(n + 1 - m):
                if f[l].terms:
                    out[m + l] = out[m + l] + op.apply(f[l])
        return HSeries(self.chart, n, out)

    __call__ = apply

    def compose(self, other):
        n = min(self.order, other.order)
        ops = [DiffOp.zero(self.chart) for _ in range(n + 1)]
        for i in range(n + 1):
            for j in range(n + 1 - i):
                if not self[i].is_zero() and not other[j].is_zero():
                    ops[i + j] = ops[i + j] + self[i].compose(other[j])
        return OperatorJet(self.chart, ops)

    def inverse(self):
        """Inverse of an operator series with identity leading term."""
        if not self.leading_is_identity():
            raise PreconditionError("only series starting with the identity are inverted here")
        n = self.order
        inv = [DiffOp.identity(self.chart)]
        for m in range(1, n + 1):
            acc = DiffOp.zero(self.chart)
            for i in range(1, m + 1):
                acc = acc - self[i].compose(inv[m - i])
            inv.append(acc)
        return OperatorJet(self.chart, inv)

    def to_json(self):
        return {str(m): op.to_json() for m, op in enumerate(self.ops)}

    def __repr__(self):
        return " + ".join("hbar^%d[%r]" % (m, op) for m, op in enumerate(self.ops) if not op.is_zero()) or "0"


def _as_hbar_list(x, cls):
    if isinstance(x, cls):
        return [x]
    if isinstance(x, (list, tuple)):
        return list(x)
    if isinstance(x, StarProductTable) and cls is BiDiffOp:
        return list(x.cochains)
    raise TypeError("expected a tangential %s or a list of them per hbar order" % cls.__name__)


def jet_operator(phi, n) -> OperatorJet:
    """Coefficientwise jet of a tangential operator (or hbar-list of them)."""
    ops = _as_hbar_list(phi, DiffOp)
    chart = ops[0].chart
    if chart.t_cap < n:
        raise JetUndetermined("t_cap=%d cannot determine the %d-jet" % (chart.t_cap, n))
    target = base_chart(chart)
    out = [DiffOp.zero(target) for _ in range(n + 1)]
    for l, op in enumerate(ops[: n + 1]):
        for k in range(n + 1 - l):
            part = op.t_coeff(k).with_chart(target)
            if not part.is_zero():
                out[k + l] = out[k + l] + part
    return OperatorJet(target, out)


def jet_bidifferential(b, n) -> list:
    """Coefficientwise jet of a bidifferential operator (or hbar-list)."""
    ops = _as_hbar_list(b, BiDiffOp)
    chart = ops[0].chart
    if chart.t_cap < n:
        raise JetUndetermined("t_cap=%d cannot determine the %d-jet" % (chart.t_cap, n))
    target = base_chart(chart)
    out = [BiDiffOp.zero(target) for _ in range(n + 1)]
    for l, op in enumerate(ops[: n + 1]):
        for k in range(n + 1 - l):
            part = op.t_coeff(k).with_chart(target)
            if not part.is_zero():
                out[k + l] = out[k + l] + part
    return out


def induce_star(table: StarProductTable, n, check_triples=()) -> StarProductTable:
    """The product ``f *_n g = j_n(f^ *^ g^)`` on ``M``."""
    induced = StarProductTable(base_chart(table.chart), jet_bidifferential(table, n))
    for f, g, h in check_triples:
        if not induced.associativity_defect(f, g, h).is_zero():
            raise IdentityFailure("induced product is not associative on a check triple")
    return induced


def orders_compatible(lower: StarProductTable, higher: StarProductTable) -> bool:
    """``*_n`` and ``*_{n+1}`` agree modulo ``hbar^{n+1}``."""
    return higher.truncate(lower.order) == lower


# forms on M and their representative family ------------------------------------------


@dataclass
class ClosedFormSeries:
    """``Omega^hbar = sum_k hbar^k omega^k`` with t-free closed 2-forms."""

    forms: list

    def __post_init__(self):
        if not self.forms:
            raise PreconditionError("need at least omega^0")
        chart = self.forms[0].chart
        for w in self.forms:
            if w.chart != chart:
                raise ChartMismatch("forms of a series must share a chart")
            if not all(f.t_free() for row in w.rows for f in row):
                raise PreconditionError("forms of a series are t-independent")
            if not w.is_closed():
                raise PreconditionError("form is not closed")
        w0 = self.forms[0]
        if not w0.is_constant():
            raise PreconditionError("omega^0 must be constant (Darboux normalization)")
        try:
            rational_inverse(w0.constant_part())
        except NotInvertible:
            raise PreconditionError("omega^0 is degenerate") from None

    @property
    def chart(self):
        return self.forms[0].chart

    @property
    def length(self):
        return len(self.forms) - 1

    def __getitem__(self, k):
        if 0 <= k < len(self.forms):
            return self.forms[k]
        return FormMatrix.from_upper(self.chart, {})

    def plus(self, k, alpha: FormMatrix):
        """``Omega^hbar + hbar^k alpha``."""
        forms = list(self.forms) + [FormMatrix.from_upper(self.chart, {})] * max(0, k + 1 - len(self.forms))
        forms[k] = forms[k] + alpha
        return ClosedFormSeries(forms)


def polynomial_representative(series: ClosedFormSeries, t_cap=None) -> FormMatrix:
    """``Omega(t) = sum_k t^k omega^k``: closed, invertible, with jet ``Omega^hbar``."""
    cap = series.length if t_cap is None else t_cap
    chart = series.chart.with_t_cap(cap)
    total = FormMatrix.from_upper(chart, {})
    for k, w in enumerate(series.forms[: cap + 1]):
        total = total + w.with_chart(chart).shift_t(k)
    if not total.leading_invertible:
        raise PreconditionError("omega^0 is degenerate")
    return total


def form_t_jets(omega_t: FormMatrix, n):
    """``[t^k] Omega(t)`` for ``k <= n`` on the base chart."""
    target = base_chart(omega_t.chart)
    return [omega_t.t_coeff(k).with_chart(target) for k in range(n + 1)]


@dataclass
class ClassStar:
    table: StarProductTable
    hat_table: StarProductTable
    omega_t: FormMatrix
    data: object = field(repr=False, default=None)


def star_for_class(series: ClosedFormSeries, gamma0=None, order=2, verify=True) -> ClassStar:
    """The star product on ``M`` associated to ``Omega^hbar`` through ``hbar**order``."""
    omega_t = polynomial_representative(series, t_cap=order)
    chart = omega_t.chart
    if gamma0 is not None:
        gamma0 = gamma0.with_chart(chart)
    else:
        gamma0 = FoliatedConnection.zero(chart)
    _, _, data, hat_table = fedosov_pipeline(omega_t, gamma0, order, verify=verify)
    table = induce_star(hat_table, order)
    return ClassStar(table, hat_table, omega_t, data)


# torus cohomology -----------------------------------------------------------------------


def find_primitive(beta) -> Form:
    """A 1-form ``nu`` with ``d nu = beta`` on the torus, or :class:`NotExact`.

    Uses ``nu = d^* G beta``: ``nu_j = -sum_i d_i (Delta^{-1} beta)_ij`` with
    ``Delta = -sum d_i^2`` on mean-zero modes.
    """
    if isinstance(beta, Form):
        beta = FormMatrix.from_form(beta)
    chart = beta.chart
    if not chart.is_torus:
        raise ChartMismatch("primitives are computed on torus charts")
    if not beta.is_closed():
        raise PreconditionError("form is not closed")
    d = chart.dim
    mean = beta.map(lambda f: f.mean())
    if any(f.terms for row in mean.rows for f in row):
        raise NotExact("constant mode does not vanish", witness=mean)
    g = beta.map(lambda f: f.inverse_laplacian())
    comps = {}
    for j in range(d):
        acc = BaseFunction.zero(chart)
        for i in range(d):
            if g.rows[i][j].terms:
                acc = acc - g.rows[i][j].dx(i)
        if acc.terms:
            comps[(j,)] = acc
    nu = Form(chart, 1, comps)
    if FormMatrix.from_form(nu.d()) != beta:
        raise IdentityFailure("d(primitive) != form")
    return nu


@dataclass
class ClassComparison:
    equal: bool
    first_k: int | None
    primitives: list
    witness: FormMatrix | None = None

    def to_json(self):
        out = {"equal": self.equal, "first_differing_order": self.first_k}
        out["primitives"] = [p.to_json() for p in self.primitives]
        if self.witness is not None:
            out["constant_mode"] = self.witness.to_json()
        return out


def classes_equal(s1: ClosedFormSeries, s2: ClosedFormSeries, n=None) -> ClassComparison:
    """Compare ``[omega_1^k] = [omega_2^k]`` for ``k <= n``."""
    if n is None:
        n = max(s1.length, s2.length)
    chart = s1.chart
    primitives = []
    for k in range(n + 1):
        diff = s1[k] - s2[k]
        if not chart.is_torus:
            # affine charts: every closed form is exact (Poincare lemma)
            primitives.append(_affine_primitive(diff))
            continue
        try:
            primitives.append(find_primitive(diff))
        except NotExact as exc:
            return ClassComparison(False, k, primitives, exc.witness)
    return ClassComparison(True, None, primitives)


def _affine_primitive(beta: FormMatrix) -> Form:
    """Radial homotopy ``nu_j = sum_i x^i int_0^1 s beta_ij(s x) ds``."""
    chart = beta.chart
    d = chart.dim
    comps = {}
    for j in range(d):
        acc = BaseFunction.zero(chart)
        for i in range(d):
            f = beta.rows[i][j]
            if not f.terms:
                continue
            scaled = BaseFunction.zero(chart)
            for key, v in f.terms.items():
                tp, _, vec = f.decode(key)
                scaled = scaled + BaseFunction.monomial(chart, vec, v / (sum(vec) + 2), tpow=tp)
            xi = BaseFunction.monomial(chart, tuple(int(k == i) for k in range(d)))
            acc = acc + xi * scaled
        if acc.terms:
            comps[(j,)] = acc
    nu = Form(chart, 1, comps)
    if FormMatrix.from_form(nu.d()) != beta:
        raise IdentityFailure("d(primitive) != form")
    return nu


def sharp(lam0_rows, alpha: FormMatrix) -> FormMatrix:
    """``sharp alpha = Lam0 alpha Lam0``, the first-order change of the inverse.

    With ``Lam'(t) = (Omega + t^k alpha)^{-1}`` one has
    ``Lam'(t) = Lam(t) - t^k sharp(alpha) + O(t^{k+1})``.
    """
    chart = alpha.chart
    lam0 = [[BaseFunction.const(chart, v) for v in row] for row in lam0_rows]
    return FormMatrix(chart, mat_mul(mat_mul(lam0, alpha.rows), lam0))


def sharp_from_inverse(series: ClosedFormSeries, k, alpha: FormMatrix) -> FormMatrix:
    """``sharp alpha`` read off ``-[t^k](Lam' - Lam)`` via :func:`invert_form_matrix`."""
    w = polynomial_representative(series, t_cap=k)
    w2 = polynomial_representative(series.plus(k, alpha), t_cap=k)
    diff = invert_form_matrix(w2) - invert_form_matrix(w)
    return diff.t_coeff(k).with_chart(base_chart(w.chart)).scale(-1)


@dataclass
class ClassWitness:
    k: int
    agree_through_k: bool
    difference: BiDiffOp
    sharp_alpha: FormMatrix
    matches_sharp: bool
    constant_mode: FormMatrix

    def to_json(self):
        return {
            "k": self.k,
            "tables_agree_through_k": self.agree_through_k,
            "difference_C_k_plus_1": self.difference.to_json(),
            "sharp_alpha0": self.sharp_alpha.to_json(),
            "difference_equals_minus_half_sharp": self.matches_sharp,
            "sharp_constant_mode": self.constant_mode.to_json(),
        }


def difference_witness(star1: StarProductTable, star2: StarProductTable, k, alpha0, lam0_rows) -> ClassWitness:
    """Compare ``C'_{k+1} - C_{k+1}`` with the bivector ``sharp alpha0``.

    In the present normalization (``C_1 = Lam/2`` on differentials) the
    bidifferential difference is ``-(1/2) sharp alpha0``, so its antisymmetric
    part is ``-sharp alpha0``.
    """
    agree = star1.agrees_through(star2, k)
    diff = star2[k + 1] - star1[k + 1]
    sh = sharp(lam0_rows, alpha0)
    expected = BiDiffOp.bivector(sh).scale(Q(-1, 2))
    const = sh.map(lambda f: f.mean()) if sh.chart.is_torus else sh
    return ClassWitness(k, agree, diff, sh, diff == expected, const)


__all__ = [
    "ClassComparison",
    "ClassStar",
    "ClassWitness",
    "ClosedFormSeries",
    "JetUndetermined",
    "NotExact",
    "OperatorJet",
    "base_chart",
    "classes_equal",
    "difference_witness",
    "find_primitive",
    "form_t_jets",
    "hat",
    "induce_star",
    "jet_bidifferential",
    "jet_operator",
    "jet_scalar",
    "orders_compatible",
    "polynomial_representative",
    "sharp",
    "sharp_from_inverse",
    "star_for_class",
]

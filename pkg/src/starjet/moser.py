"""Formal Moser isotopies in the leaf parameter and equivalences of star products.

For two families ``Omega_1(t), Omega_2(t)`` with the same value at ``t = 0``
and exact difference ``E = Omega_1 - Omega_2 = d nu``, put
``omega_s = Omega_2 + s E`` and ``Z_s = Lam_s nu`` (``omega_s Lam_s = Id``,
i.e. ``omega_s(Z_s, .) = -nu`` in the convention ``(i_Z w)_j = Z^i w_ij``
with our ordering of ``Lam``).  The pullback ``P_s = phi_s^*`` of the flow
solves ``dP_s/ds = P_s o Z_s``, ``P_0 = Id``.  Everything is a polynomial in
``s`` after t-truncation, so the s-integration is exact.  ``P = P_1``
satisfies ``P(Omega_1) = Omega_2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from starjet.coeffring.base import BaseFunction
from starjet.coeffring.forms import Form, FormMatrix, invert_form_matrix, mat_mul
from starjet.coeffring.rational import Q
from starjet.coeffring.series import HSeries
from starjet.errors import IdentityFailure, PreconditionError
from starjet.jets import (
    NotExact,
    OperatorJet,
    _affine_primitive,
    base_chart,
    find_primitive,
    jet_operator,
)
from starjet.tables import BiDiffOp, DiffOp, StarProductTable, msub, multi_indices, multi_binom, unit


# s-polynomials of operators ------------------------------------------------------


def _spoly_add(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] + v if k in out else v
    return {k: v for k, v in out.items() if not v.is_zero()}


def _spoly_compose(a, b):
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            c = x.compose(y)
            if not c.is_zero():
                out[i + j] = out[i + j] + c if i + j in out else c
    return {k: v for k, v in out.items() if not v.is_zero()}


def _spoly_integrate(a):
    """``int_0^s``."""
    return {k + 1: v.scale(Q(1, k + 1)) for k, v in a.items()}


def _spoly_at_one(a, chart):
    out = DiffOp.zero(chart)
    for v in a.values():
        out = out + v
    return out


@dataclass
class FormalDiffeoFamily:
    chart: object
    n_t: int
    field_s: dict  # s-power -> vector field (DiffOp of order one)
    pullback: DiffOp
    pullback_s: dict = field(repr=False, default_factory=dict)

    @classmethod
    def identity(cls, chart, n_t):
        return cls(chart, n_t, {}, DiffOp.identity(chart), {0: DiffOp.identity(chart)})

    def generator(self, j):
        """``Z^{(j)}``: the ``t**j`` part of ``Z_s`` as ``{s-power: vector field}``."""
        return {k: v.t_coeff(j) for k, v in self.field_s.items() if not v.t_coeff(j).is_zero()}

    def is_identity(self):
        return self.pullback == DiffOp.identity(self.chart)

    def inverse_pullback(self):
        """``P^{-1} = sum_j (Id - P)^j`` (terminates: ``P - Id = O(t)``)."""
        ident = DiffOp.identity(self.chart)
        q = ident - self.pullback
        out = ident
        term = ident
        for _ in range(self.n_t):
            term = term.compose(q)
            if term.is_zero():
                break
            out = out + term
        return out

    def jacobian(self):
        """``J[k][i] = d_i phi^k = delta_ki + d_i p_k`` with ``p_k`` the ``d_k`` coefficient of ``P``."""
        d = self.chart.dim
        one = BaseFunction.const(self.chart, 1)
        zero = BaseFunction.zero(self.chart)
        rows = []
        for k in range(d):
            pk = self.pullback.coeffs.get(unit(d, k), zero) - one
            rows.append([(one if i == k else zero) + pk.dx(i) for i in range(d)])
        return rows


def _primitive(e: FormMatrix) -> Form:
    if e.chart.is_torus:
        return find_primitive(e)
    return _affine_primitive(e)


def solve_moser(omega1: FormMatrix, omega2: FormMatrix, n_t=None, primitive: Form | None = None, verify=True):
    """The formal isotopy with ``P(Omega_1(t)) = Omega_2(t)`` mod ``t^{n_t+1}``."""
    if omega1.chart != omega2.chart:
        raise PreconditionError("families live on different charts")
    chart = omega1.chart
    if n_t is None:
        n_t = chart.t_cap
    if n_t > chart.t_cap:
        raise PreconditionError("n_t exceeds the chart's t_cap")
    chart = chart.with_t_cap(n_t)
    omega1 = omega1.with_chart(chart)
    omega2 = omega2.with_chart(chart)
    d = chart.dim
    if omega1.t_coeff(0) != omega2.t_coeff(0):
        raise PreconditionError("Omega_1(0) != Omega_2(0)")
    e = omega1 - omega2
    if all(not f.terms for row in e.rows for f in row):
        fam = FormalDiffeoFamily.identity(chart, n_t)
        return fam
    if primitive is None:
        try:
            nu = _primitive(e)
        except NotExact as exc:
            raise PreconditionError("families are not cohomologous: %s" % exc) from None
    else:
        nu = primitive.with_chart(chart)
        if FormMatrix.from_form(nu.d()) != e:
            raise PreconditionError("supplied primitive does not satisfy d nu = Omega_1 - Omega_2")
    lam2 = invert_form_matrix(omega2).rows
    # Lam_s = sum_j s^j (-Lam_2 E)^j Lam_2
    step = [[-x for x in row] for row in mat_mul(lam2, e.rows)]
    lam_s = {0: lam2}
    term = lam2
    for j in range(1, n_t + 1):
        term = mat_mul(step, term)
        if all(not x.terms for row in term for x in row):
            break
        lam_s[j] = term
    nuv = [nu[(i,)] for i in range(d)]
    field_s = {}
    for j, lam in lam_s.items():
        comps = []
        for i in range(d):
            acc = BaseFunction.zero(chart)
            for k in range(d):
                if lam[i][k].terms and nuv[k].terms:
                    acc = acc + lam[i][k] * nuv[k]
            comps.append(acc)
        z = DiffOp.vector_field(chart, comps)
        if not z.is_zero():
            field_s[j] = z
    ident = {0: DiffOp.identity(chart)}
    p_s = ident
    for _ in range(n_t + 1):
        nxt = _spoly_add(ident, _spoly_integrate(_spoly_compose(p_s, field_s)))
        if nxt == p_s:
            break
        p_s = nxt
    fam = FormalDiffeoFamily(chart, n_t, field_s, _spoly_at_one(p_s, chart), p_s)
    if verify:
        if pullback_form(fam, omega1) != omega2:
            raise IdentityFailure("P(Omega_1) != Omega_2")
    return fam


def pullback_function(fam: FormalDiffeoFamily, a):
    if isinstance(a, HSeries):
        return a.map(lambda f: pullback_function(fam, f))
    return fam.pullback.apply(a.with_chart(fam.chart))


def pullback_form(fam: FormalDiffeoFamily, beta):
    """``phi^* beta`` for a 1-form (:class:`Form`) or 2-form (:class:`FormMatrix`)."""
    chart = fam.chart
    d = chart.dim
    jac = fam.jacobian()
    p = fam.pullback
    if isinstance(beta, Form) and beta.degree == 1:
        beta = beta.with_chart(chart)
        comps = {}
        for i in range(d):
            acc = BaseFunction.zero(chart)
            for k in range(d):
                if beta[(k,)].terms:
                    acc = acc + p.apply(beta[(k,)]) * jac[k][i]
            if acc.terms:
                comps[(i,)] = acc
        return Form(chart, 1, comps)
    if isinstance(beta, Form):
        beta = FormMatrix.from_form(beta)
    beta = beta.with_chart(chart)
    pb = [[p.apply(f) for f in row] for row in beta.rows]
    jt = [list(col) for col in zip(*jac)]
    return FormMatrix(chart, mat_mul(mat_mul(jt, pb), jac))


def rho_jet(fam: FormalDiffeoFamily, n) -> OperatorJet:
    """``rho_n(phi) f = j_n(phi^* f^)``: the jet of the pullback operator."""
    out = jet_operator(fam.pullback, n)
    if not out.leading_is_identity():
        raise IdentityFailure("rho_0 != Id")
    return out


def conjugate_star(table: StarProductTable, fam: FormalDiffeoFamily) -> StarProductTable:
    """``(f, g) -> P(P^{-1} f * P^{-1} g)``: the product transported along ``phi^{-1}``.

    If ``*`` quantizes ``Omega_1`` and ``P(Omega_1) = Omega_2``, the Poisson
    tensor of the output is that of ``Omega_2``.
    """
    chart = fam.chart
    if table.chart.kind != chart.kind or table.chart.dim != chart.dim:
        raise PreconditionError("table and family live on different charts")
    if table.chart.t_cap > chart.t_cap:
        raise PreconditionError("the family has fewer t-orders than the table")
    table = table.map(lambda f: f.with_chart(chart))
    p = fam.pullback
    pinv = fam.inverse_pullback()
    out = []
    for c in table.cochains:
        out.append(c.compose_right(pinv, pinv).compose_left(p))
    return StarProductTable(chart, out)


# equivalences --------------------------------------------------------------------


@dataclass
class EquivalenceCandidate:
    operators: OperatorJet | None
    status: str
    order_reached: int
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def verified(self):
        return self.status == "verified"

    def to_json(self):
        out = {"status": self.status, "order_reached": self.order_reached}
        if self.reason:
            out["reason"] = self.reason
        if self.operators is not None:
            out["T"] = self.operators.to_json()
        out.update(self.details)
        return out


def hochschild(t: DiffOp) -> BiDiffOp:
    """``(dT)(f, g) = f T(g) - T(f g) + T(f) g``."""
    chart = t.chart
    d = chart.dim
    z = (0,) * d
    out = {}
    for alpha, c in t.coeffs.items():
        if alpha == z:
            out[(z, z)] = out[(z, z)] + c if (z, z) in out else c
            continue
        for beta in _splits(alpha):
            gamma = msub(alpha, beta)
            if beta == z or gamma == z:
                continue
            key = (beta, gamma)
            v = c.scale(-multi_binom(alpha, beta))
            out[key] = out[key] + v if key in out else v
    return BiDiffOp(chart, out)


def _splits(alpha):
    from itertools import product as iproduct

    return iproduct(*(range(a + 1) for a in alpha))


def _order_terms(m, ts, c1, c2):
    """All terms of ``[hbar^m](T f *_2 T g - T(f *_1 g))`` except those with ``T_m``."""
    out = BiDiffOp.zero(c1[0].chart)
    for c in range(min(m, len(c2) - 1) + 1):
        for a in range(m + 1 - c):
            b = m - c - a
            if (c, a, b) in ((0, m, 0), (0, 0, m)):
                continue
            if a >= len(ts) or b >= len(ts):
                continue
            ta, tb = ts[a], ts[b]
            if ta.is_zero() or tb.is_zero() or c2[c].is_zero():
                continue
            out = out + c2[c].compose_right(ta, tb)
    for c in range(1, min(m, len(c1) - 1) + 1):
        a = m - c
        if a < len(ts) and not ts[a].is_zero() and not c1[c].is_zero():
            out = out - c1[c].compose_left(ts[a])
    return out


def _vector_basis(chart, basis_bound):
    d = chart.dim
    funcs = []
    if chart.is_torus:
        from itertools import product as iproduct

        for k in iproduct(range(-basis_bound, basis_bound + 1), repeat=d):
            first = next((c for c in k if c), 0)
            if first < 0:
                continue
            funcs.append(BaseFunction.cos(chart, k))
            if first > 0:
                funcs.append(BaseFunction.sin(chart, k))
    else:
        for alpha in multi_indices(d, basis_bound):
            funcs.append(BaseFunction.monomial(chart, alpha))
    out = []
    for i in range(d):
        for f in funcs:
            out.append(DiffOp(chart, {unit(d, i): f}))
    return out


def _flatten(b: BiDiffOp):
    out = {}
    for key, f in b.coeffs.items():
        for tk, v in f.terms.items():
            out[(key, tk)] = v
    return out


def _solve_linear(columns, rhs):
    """Solve ``sum_u x_u columns[u] = rhs`` over Q; ``None`` if infeasible."""
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    rows = sorted(set(rhs).union(*[set(c) for c in columns]))
    if not rows:
        return [Q(0)] * len(columns)
    n = len(columns)

    def qq(v):
        v = Q(v)
        return QQ(int(v.numerator), int(v.denominator))

    mat = [[qq(col.get(r, 0)) for col in columns] + [qq(rhs.get(r, 0))] for r in rows]
    dm = DomainMatrix(mat, (len(rows), n + 1), QQ)
    red, pivots = dm.rref()
    if n in pivots:
        return None
    sol = [Q(0)] * n
    dense = red.to_Matrix()
    for row_i, pc in enumerate(pivots):
        val = dense[row_i, n]
        sol[pc] = Q(int(val.p), int(val.q))
    return sol


def _solve_coboundary(e: BiDiffOp):
    """``T`` with ``dT = -e`` for a symmetric ``e``, derivation part zero; ``None`` if none."""
    chart = e.chart
    d = chart.dim
    z = (0,) * d
    coeffs = {}
    for (beta, gamma), f in e.coeffs.items():
        if beta == z and gamma == z:
            coeffs[z] = -f
            continue
        if beta == z or gamma == z:
            return None
        alpha = tuple(x + y for x, y in zip(beta, gamma))
        val = f.scale(Q(1, multi_binom(alpha, beta)))
        old = coeffs.get(alpha)
        if old is None:
            coeffs[alpha] = val
        elif old != val:
            return None
    t = DiffOp(chart, coeffs)
    if hochschild(t) + e != BiDiffOp.zero(chart):
        return None
    return t


def probe_family(chart, size=2):
    """Functions used to spot-check equivalences by evaluation."""
    if chart.is_torus:
        d = chart.dim
        out = [BaseFunction.cos(chart, unit(d, 0)), BaseFunction.sin(chart, unit(d, d - 1))]
        out.append(BaseFunction.cos(chart, tuple([1] * d)) + BaseFunction.sin(chart, tuple([size] + [0] * (d - 1))))
        return out
    d = chart.dim
    return [BaseFunction.monomial(chart, unit(d, 0)), BaseFunction.monomial(chart, tuple([1] * d)),
            BaseFunction.monomial(chart, tuple([size] + [0] * (d - 1)))]


def equivalence_search(star1: StarProductTable, star2: StarProductTable, n=None, order_bound=4, basis_bound=2):
    """Look for ``T = Id + hbar T_1 + ...`` with ``T(f *_1 g) = T f *_2 T g`` mod ``hbar^{n+1}``.

    Order ``m`` solves ``d T_m = -E_m`` (Hochschild) after choosing the
    derivation part of ``T_{m-1}`` so that the antisymmetric part of ``E_m``
    vanishes; that choice is a linear problem over Q in a finite basis of
    vector fields.  Failure within the bounds yields ``inconclusive``.
    """
    chart = star1.chart
    if star2.chart != chart:
        raise PreconditionError("tables on different charts")
    if star1[0] != star2[0]:
        raise PreconditionError("tables have different C_0")
    if n is None:
        n = min(star1.order, star2.order)
    if n > min(star1.order, star2.order):
        raise PreconditionError("tables are too short for n=%d" % n)
    basis = _vector_basis(chart, basis_bound)
    ts = [DiffOp.identity(chart)]
    c1 = list(star1.cochains)
    c2 = list(star2.cochains)
    for m in range(1, n + 1):
        ts.append(DiffOp.zero(chart))
        e0 = _order_terms(m, ts, c1, c2)
        anti0 = e0.antisymmetric_part()
        if not anti0.is_zero():
            if m == 1:
                return EquivalenceCandidate(None, "inconclusive", m - 1, "C_1 antisymmetric parts differ")
            cols = []
            base = ts[m - 1]
            for v in basis:
                ts[m - 1] = base + v
                cols.append(_flatten(_order_terms(m, ts, c1, c2).antisymmetric_part() - anti0))
            ts[m - 1] = base
            rhs = {k: -v for k, v in _flatten(anti0).items()}
            sol = _solve_linear(cols, rhs)
            if sol is None:
                return EquivalenceCandidate(
                    None,
                    "inconclusive",
                    m - 1,
                    "antisymmetric obstruction at hbar^%d not removable with basis_bound=%d" % (m, basis_bound),
                    {"obstruction": anti0.to_json()},
                )
            x = DiffOp.zero(chart)
            for coef, v in zip(sol, basis):
                if coef:
                    x = x + v.scale(coef)
            ts[m - 1] = base + x
            e0 = _order_terms(m, ts, c1, c2)
            if not e0.antisymmetric_part().is_zero():
                return EquivalenceCandidate(None, "inconclusive", m - 1, "linear solve did not clear the obstruction")
        t_m = _solve_coboundary(e0)
        if t_m is None:
            return EquivalenceCandidate(None, "inconclusive", m - 1, "symmetric part is not a coboundary at hbar^%d" % m)
        if t_m.order() > order_bound or any(t.order() > order_bound for t in ts):
            return EquivalenceCandidate(None, "inconclusive", m - 1, "order_bound=%d exceeded" % order_bound)
        ts[m] = t_m
    cand = OperatorJet(chart, ts)
    if not verify_equivalence(cand, star1, star2, n):
        return EquivalenceCandidate(cand, "inconclusive", n, "final verification failed")
    return EquivalenceCandidate(cand, "verified", n)


def verify_equivalence(t: OperatorJet, star1, star2, n, probes=None) -> bool:
    """Symbolic check at every order plus evaluation on a probe family."""
    ts = list(t.ops)
    for m in range(1, n + 1):
        e = _order_terms(m, ts, star1.cochains, star2.cochains)
        if not (e + hochschild(ts[m])).is_zero():
            return False
    fam = probes if probes is not None else probe_family(t.chart)
    for f in fam:
        for g in fam:
            lhs = t.apply(star1.star(f, g, n))
            rhs = star2.star(t.apply(f), t.apply(g), n)
            if lhs != rhs:
                return False
    return True


def transport_table(table: StarProductTable, t: OperatorJet) -> StarProductTable:
    """``(f, g) -> T(T^{-1} f * T^{-1} g)`` for an operator series ``T``."""
    n = min(table.order, t.order)
    tinv = t.inverse()
    chart = table.chart
    out = [BiDiffOp.zero(chart) for _ in range(n + 1)]
    for a in range(n + 1):
        for b in range(n + 1 - a):
            for c in range(n + 1 - a - b):
                for e in range(n + 1 - a - b - c):
                    i = a + b + c + e
                    piece = table[c].compose_right(tinv[a], tinv[b]).compose_left(t[e])
                    out[i] = out[i] + piece
    return StarProductTable(chart, out)


__all__ = [
    "EquivalenceCandidate",
    "FormalDiffeoFamily",
    "conjugate_star",
    "equivalence_search",
    "hochschild",
    "probe_family",
    "pullback_form",
    "pullback_function",
    "rho_jet",
    "solve_moser",
    "transport_table",
    "verify_equivalence",
]

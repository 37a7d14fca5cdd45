"""Fedosov construction in a single chart.

Conventions (all fixed by identities that are checked at run time):

* ``Lam = omega^{-1}`` in the sense ``omega . Lam = Id``; the fiber product
  uses ``hbar/2`` per contraction (see :mod:`starjet.weyl`).
* ``nabla_i d_j = Gamma^k_ij d_k`` and the covariant exterior derivative is
  ``d a = sum_i dx^i ^ (d_{x^i} a - Gamma^k_ij y^j d_{y^k} a)``.
* The connection 1-form is stored as ``r = 2 hbar gamma`` so that every hbar
  power is non-negative.  Then ``D = d - delta + ad(r)/(2 hbar)`` and the
  Fedosov equation reads ``delta r = Rbar + d r + r o r / (2 hbar)`` with
  ``delta^{-1} r = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct

from starjet.coeffring.base import BaseFunction
from starjet.coeffring.forms import FormMatrix, NotInvertible, invert_form_matrix, mat_mul
from starjet.coeffring.rational import Q
from starjet.coeffring.series import HSeries
from starjet.errors import ExtractionError, IdentityFailure, PreconditionError
from starjet.tables import BiDiffOp, StarProductTable, madd, multi_indices, unit
from starjet.weyl import (
    PoissonFiberData,
    WeylCaps,
    WeylElement,
    ad_over_2hbar,
    delta,
    delta_inv,
    pr0,
    pr0_product,
)


# data ---------------------------------------------------------------------------


class ChartPoisson:
    """Symplectic matrix ``omega(x, t)`` on a chart with its inverse and caps."""

    def __init__(self, omega: FormMatrix, order: int):
        if omega.dim % 2:
            raise PreconditionError("symplectic charts need even dimension")
        if not omega.is_closed():
            raise PreconditionError("omega is not closed")
        try:
            lam = invert_form_matrix(omega)
        except NotInvertible as exc:
            raise PreconditionError(str(exc)) from None
        self.chart = omega.chart
        self.omega = omega
        self.lam = lam
        self.order = order
        self.caps = WeylCaps.for_order(self.chart, order)
        self.fiber = PoissonFiberData(lam, omega)

    @property
    def dim(self):
        return self.chart.dim

    def check_inverse(self):
        prod = mat_mul(self.omega.rows, self.lam.rows)
        d = self.dim
        return all(
            prod[i][j] == BaseFunction.const(self.chart, int(i == j)) for i in range(d) for j in range(d)
        )


class FoliatedConnection:
    """Leafwise Christoffel symbols ``gamma[k][i][j] = Gamma^k_ij``."""

    __slots__ = ("chart", "gamma")

    def __init__(self, chart, gamma):
        d = chart.dim
        if len(gamma) != d or any(len(g) != d or any(len(r) != d for r in g) for g in gamma):
            raise ValueError("Christoffel symbols must be a d x d x d array")
        self.chart = chart
        self.gamma = tuple(tuple(tuple(r) for r in g) for g in gamma)

    @classmethod
    def zero(cls, chart):
        d = chart.dim
        z = BaseFunction.zero(chart)
        return cls(chart, [[[z] * d for _ in range(d)] for _ in range(d)])

    @classmethod
    def from_entries(cls, chart, entries):
        """From ``{(k, i, j): f}`` (0-based)."""
        d = chart.dim
        g = [[[BaseFunction.zero(chart) for _ in range(d)] for _ in range(d)] for _ in range(d)]
        for (k, i, j), f in entries.items():
            g[k][i][j] = g[k][i][j] + f
        return cls(chart, g)

    def __getitem__(self, kij):
        k, i, j = kij
        return self.gamma[k][i][j]

    def is_zero(self):
        return all(not f.terms for g in self.gamma for r in g for f in r)

    def is_symmetric(self):
        d = self.chart.dim
        return all(self.gamma[k][i][j] == self.gamma[k][j][i] for k, i, j in iproduct(range(d), repeat=3))

    def nabla_omega(self, omega: FormMatrix):
        """``(nabla_i omega)_jk = d_i omega_jk - Gamma^l_ij omega_lk - Gamma^l_ik omega_jl``."""
        d = self.chart.dim
        w = omega.rows
        out = {}
        for i, j, k in iproduct(range(d), repeat=3):
            v = w[j][k].dx(i)
            for l in range(d):
                g1 = self.gamma[l][i][j]
                if g1.terms and w[l][k].terms:
                    v = v - g1 * w[l][k]
                g2 = self.gamma[l][i][k]
                if g2.terms and w[j][l].terms:
                    v = v - g2 * w[j][l]
            if v.terms:
                out[(i, j, k)] = v
        return out

    def with_chart(self, chart):
        return FoliatedConnection(chart, [[[f.with_chart(chart) for f in r] for r in g] for g in self.gamma])

    def nonzero(self):
        d = self.chart.dim
        return {
            (k, i, j): self.gamma[k][i][j]
            for k, i, j in iproduct(range(d), repeat=3)
            if self.gamma[k][i][j].terms
        }

    def to_json(self):
        return {"%d,%d,%d" % (k + 1, i + 1, j + 1): f.to_json() for (k, i, j), f in sorted(self.nonzero().items())}

    @classmethod
    def from_json(cls, chart, mapping):
        entries = {}
        for key, val in mapping.items():
            k, i, j = (int(s) - 1 for s in key.split(","))
            entries[(k, i, j)] = BaseFunction.from_json(chart, val)
        return cls.from_entries(chart, entries)


def symplectize_connection(gamma0: FoliatedConnection, cp: ChartPoisson, check=True) -> FoliatedConnection:
    """Torsion-free connection preserving ``omega``.

    First symmetrize (``nabla^1 = nabla^0 - T/2``), then add the tensor ``S``
    with ``omega(S(u, v), w) = (nabla^1_u omega(v, w) + nabla^1_v omega(u, w)) / 3``.
    """
    chart = cp.chart
    d = chart.dim
    half = Q(1, 2)
    g1 = [
        [[(gamma0[k, i, j] + gamma0[k, j, i]).scale(half) for j in range(d)] for i in range(d)] for k in range(d)
    ]
    conn1 = FoliatedConnection(chart, g1)
    n = conn1.nabla_omega(cp.omega)
    zero = BaseFunction.zero(chart)
    third = Q(1, 3)
    lam = cp.lam.rows
    g = [[[g1[l][i][j] for j in range(d)] for i in range(d)] for l in range(d)]
    for i, j in iproduct(range(d), repeat=2):
        x = [(n.get((i, j, k), zero) + n.get((j, i, k), zero)).scale(third) for k in range(d)]
        if not any(v.terms for v in x):
            continue
        for l in range(d):
            s = zero
            for k in range(d):
                if lam[l][k].terms and x[k].terms:
                    s = s - lam[l][k] * x[k]
            if s.terms:
                g[l][i][j] = g[l][i][j] + s
    conn = FoliatedConnection(chart, g)
    if check:
        if not conn.is_symmetric():
            raise IdentityFailure("symplectized connection is not torsion-free")
        bad = conn.nabla_omega(cp.omega)
        if bad:
            raise IdentityFailure("nabla omega != 0 at %r" % (sorted(bad)[0],))
    return conn


# covariant derivative and curvature ------------------------------------------


def _fiber_operator(a: WeylElement, mat):
    """``sum_{k,j} mat[k][j] y^j d_{y^k} a`` with function entries."""
    d = a.caps.dim
    out = WeylElement.zero(a.caps)
    for k in range(d):
        dk = None
        for j in range(d):
            c = mat[k][j]
            if not c.terms:
                continue
            if dk is None:
                dk = a.dy(k)
                if dk.is_zero():
                    break
            out = out + dk.mul_y(j).mul_function(c)
    return out


def covariant_derivative(conn: FoliatedConnection, a: WeylElement) -> WeylElement:
    d = a.caps.dim
    out = WeylElement.zero(a.caps)
    for i in range(d):
        part = a.dx_coeffs(i)
        mat = [[conn.gamma[k][i][j] for j in range(d)] for k in range(d)]
        part = part - _fiber_operator(a, mat)
        out = out + part.wedge_dx(i)
    return out


def _matmul(a, b):
    d = len(a)
    z = BaseFunction.zero(a[0][0].chart)
    out = [[z for _ in range(d)] for _ in range(d)]
    for i, k in iproduct(range(d), repeat=2):
        if not a[i][k].terms:
            continue
        for j in range(d):
            if b[k][j].terms:
                out[i][j] = out[i][j] + a[i][k] * b[k][j]
    return out


def curvature(conn: FoliatedConnection, cp: ChartPoisson, verify=True) -> WeylElement:
    """The quadratic 2-form ``Rbar`` with ``2 hbar d^2 = ad(Rbar)``."""
    chart = cp.chart
    caps = cp.caps
    d = chart.dim
    # G_i[k][l] = -Gamma^k_il ; d^2 = sum_{i<j} dx^i dx^j E_{F_ij} with
    # F_ij = d_i G_j - d_j G_i + G_j G_i - G_i G_j and E_M = sum M_kl y^l d_k.
    g = [[[-conn.gamma[k][i][l] for l in range(d)] for k in range(d)] for i in range(d)]
    terms = WeylElement.zero(caps)
    w = cp.omega.rows
    for i in range(d):
        for j in range(i + 1, d):
            gi, gj = g[i], g[j]
            a = _matmul(gj, gi)
            b = _matmul(gi, gj)
            f = [
                [gj[k][l].dx(i) - gi[k][l].dx(j) + a[k][l] - b[k][l] for l in range(d)] for k in range(d)
            ]
            if all(not v.terms for row in f for v in row):
                continue
            # quadratic Q with [Q, y^m] = 2 hbar sum_p F_mp y^p is y^T (F^T omega) y
            ftw = _matmul([list(col) for col in zip(*f)], w)
            quad = {}
            for p, q in iproduct(range(d), repeat=2):
                c = ftw[p][q]
                if not c.terms:
                    continue
                alpha = [0] * d
                alpha[p] += 1
                alpha[q] += 1
                key = (tuple(alpha), (1 << i) | (1 << j), 0)
                quad[key] = quad[key] + c if key in quad else c
            terms = terms + WeylElement(caps, quad)
    if verify:
        check_curvature_identity(conn, cp, terms)
    return terms


def spanning_set(caps: WeylCaps, max_y_degree=3, forms=True):
    """Monomials ``y^alpha dx^I`` with ``|alpha| <= max_y_degree``."""
    d = caps.dim
    out = []
    masks = range(1 << d) if forms else (0,)
    for alpha in multi_indices(d, max_y_degree):
        for mask in masks:
            if mask and bin(mask).count("1") + 2 > d:
                continue  # d^2 of a top-degree form vanishes trivially
            e = WeylElement.monomial(caps, alpha, mask)
            if not e.is_zero():
                out.append(e)
    return out


def check_curvature_identity(conn, cp, rbar, max_y_degree=3):
    for a in spanning_set(cp.caps, max_y_degree):
        # 2 hbar d^2 a = ad(Rbar) a, compared after dividing by 2 hbar
        lhs = covariant_derivative(conn, covariant_derivative(conn, a))
        rhs = ad_over_2hbar(cp.fiber, rbar, a)
        if lhs != rhs:
            raise IdentityFailure("2 hbar d^2 != ad(Rbar) on %r" % (a,))
    return True


# gamma recursion ---------------------------------------------------------------


@dataclass
class FedosovData:
    cp: ChartPoisson
    conn: FoliatedConnection
    rbar: WeylElement
    r_parts: dict
    _symbolic: dict = field(default_factory=dict, repr=False)

    @property
    def caps(self):
        return self.cp.caps

    @property
    def r(self):
        out = WeylElement.zero(self.caps)
        for k in sorted(self.r_parts):
            out = out + self.r_parts[k]
        return out

    @property
    def gamma_is_zero(self):
        return all(p.is_zero() for p in self.r_parts.values())

    def D(self, a: WeylElement) -> WeylElement:
        """``D a = d a - delta a + ad(r) a / (2 hbar)``."""
        out = covariant_derivative(self.conn, a) - delta(a)
        for part in self.r_parts.values():
            if not part.is_zero():
                out = out + ad_over_2hbar(self.cp.fiber, part, a)
        return out

    def defect(self):
        """``Rbar + d r - delta r + r o r / (2 hbar)`` (vanishes below the cap)."""
        r = self.r
        # for a 1-form, r o r = ad(r) r / 2
        half_rr = ad_over_2hbar(self.cp.fiber, r, r).scale(Q(1, 2))
        return self.rbar + covariant_derivative(self.conn, r) - delta(r) + half_rr

    def verify(self, max_y_degree=3):
        caps = self.caps
        r = self.r
        if not delta_inv(r).is_zero():
            raise IdentityFailure("delta^{-1} gamma != 0")
        if not pr0(r).is_zero():
            raise IdentityFailure("pr0 gamma != 0")
        bound = caps.fedosov_degree_cap - 1
        bad = self.defect().filter(lambda a, i, m: sum(a) + 2 * m <= bound)
        if not bad.is_zero():
            raise IdentityFailure("Fedosov equation fails: %r" % (bad,))
        cap = caps.fedosov_degree_cap
        for a in spanning_set(caps, max_y_degree):
            da = self.D(a)
            dda = self.D(da)
            # D a is exact through degree cap - 2, hence D(D a) through cap - 3
            low = dda.filter(lambda al, i, m, _c=cap: sum(al) + 2 * m <= _c - 3)
            if not low.is_zero():
                raise IdentityFailure("D^2 != 0 on %r" % (a,))
        return True


def solve_gamma(rbar: WeylElement, conn: FoliatedConnection, cp: ChartPoisson, verify=True) -> FedosovData:
    caps = cp.caps
    cap = caps.fedosov_degree_cap
    fiber = cp.fiber
    parts = {}
    if not rbar.is_zero():
        parts[3] = delta_inv(rbar)
        for k in range(3, cap):
            rhs = covariant_derivative(conn, parts[k]) if k in parts else WeylElement.zero(caps)
            for i in range(3, k):
                j = k + 2 - i
                if j < 3 or i not in parts or j not in parts:
                    continue
                if parts[i].is_zero() or parts[j].is_zero():
                    continue
                rhs = rhs + ad_over_2hbar(fiber, parts[i], parts[j]).scale(Q(1, 2))
            rhs = rhs.fedosov_part(k)
            parts[k + 1] = delta_inv(rhs)
    parts = {k: v for k, v in parts.items() if not v.is_zero()}
    data = FedosovData(cp, conn, rbar, parts)
    if verify:
        data.verify()
    return data


# quantization ------------------------------------------------------------------


def _jet_add(acc, alpha, elem):
    if elem.is_zero():
        return
    old = acc.get(alpha)
    acc[alpha] = elem if old is None else old + elem


def _cov_symbolic(conn, piece):
    """``d`` applied to ``sum_alpha T_alpha d^alpha f``."""
    d = conn.chart.dim
    out = {}
    for alpha, t in piece.items():
        _jet_add(out, alpha, covariant_derivative(conn, t))
        for i in range(d):
            _jet_add(out, madd(alpha, unit(d, i)), t.wedge_dx(i))
    return out


def quantize_symbolic(F: FedosovData, max_degree=None):
    """Flat section in operator form: ``tau(f) = sum_alpha T_alpha d^alpha f``.

    Returns a list indexed by Fedosov degree of ``{alpha: WeylElement}``.
    """
    caps = F.caps
    if max_degree is None:
        max_degree = 2 * F.cp.order
    cached = F._symbolic.get("tau")
    if cached is not None and len(cached) > max_degree:
        return cached[: max_degree + 1]
    d = caps.dim
    one = WeylElement.scalar(caps, 1)
    pieces = [{(0,) * d: one}]
    for k in range(max_degree):
        rhs = _cov_symbolic(F.conn, pieces[k])
        for i, r_i in F.r_parts.items():
            j = k + 2 - i
            if j < 0 or j >= len(pieces):
                continue
            for alpha, t in pieces[j].items():
                _jet_add(rhs, alpha, ad_over_2hbar(F.cp.fiber, r_i, t))
        nxt = {}
        for alpha, e in rhs.items():
            e = delta_inv(e.fedosov_part(k))
            if not e.is_zero():
                nxt[alpha] = e
        pieces.append(nxt)
    F._symbolic["tau"] = pieces
    return pieces


def quantize(F: FedosovData, f, max_degree=None) -> WeylElement:
    """The flat section with ``pr0 = f`` (``f`` a chart function or hbar-series)."""
    caps = F.caps
    if max_degree is None:
        max_degree = 2 * F.cp.order
    if not isinstance(f, HSeries):
        f = HSeries.lift(f, caps.hbar_cap)
    pieces = [WeylElement.from_series(caps, HSeries(caps.chart, caps.hbar_cap, [f[0]]))]
    fiber = F.cp.fiber
    for k in range(max_degree):
        rhs = covariant_derivative(F.conn, pieces[k])
        for i, r_i in F.r_parts.items():
            j = k + 2 - i
            if 0 <= j < len(pieces) and not pieces[j].is_zero():
                rhs = rhs + ad_over_2hbar(fiber, r_i, pieces[j])
        nxt = delta_inv(rhs.fedosov_part(k))
        if (k + 1) % 2 == 0:
            m = (k + 1) // 2
            if f[m].terms:
                nxt = nxt + WeylElement.scalar(caps, f[m], hbar=m)
        pieces.append(nxt)
    out = WeylElement.zero(caps)
    for p in pieces:
        out = out + p
    return out


def is_flat(F: FedosovData, tau: WeylElement, max_degree=None) -> bool:
    if max_degree is None:
        max_degree = 2 * F.cp.order
    low = F.D(tau).filter(lambda a, i, m: sum(a) + 2 * m < max_degree)
    return low.is_zero()


def star(F: FedosovData, f, g, order=None) -> HSeries:
    """``pr0(tau(f) o tau(g))`` through ``hbar**order``."""
    n = F.cp.order if order is None else order
    tf = quantize(F, f, 2 * n)
    tg = quantize(F, g, 2 * n)
    return pr0_product(F.cp.fiber, tf, tg, hbar_cap=n)


def cochains(F: FedosovData, order=None) -> StarProductTable:
    """Cochains from the operator form of the flat sections."""
    n = F.cp.order if order is None else order
    chart = F.caps.chart
    pieces = quantize_symbolic(F, 2 * n)
    total = {}
    for piece in pieces:
        for alpha, e in piece.items():
            _jet_add(total, alpha, e)
    coeffs = [dict() for _ in range(n + 1)]
    fiber = F.cp.fiber
    items = sorted(total.items())
    for alpha, ta in items:
        for beta, tb in items:
            s = pr0_product(fiber, ta, tb, hbar_cap=n)
            for i in range(n + 1):
                if s[i].terms:
                    coeffs[i][(alpha, beta)] = s[i]
    return StarProductTable(chart, [BiDiffOp(chart, c) for c in coeffs])


# probe-based extraction (cross-check) ------------------------------------------


def _probe_star(F, n, tau_cache, f_key, f):
    t = tau_cache.get(f_key)
    if t is None:
        t = tau_cache[f_key] = quantize(F, f, 2 * n)
    return t


def cochains_by_probes(F: FedosovData, order=None, validate=2) -> StarProductTable:
    """Extract cochains from evaluations of the star product on probe functions.

    Affine charts use monomials ``x^a`` (a triangular system); torus charts
    use exponential symbols ``e^{i k.x}`` on a principal lattice.  Both are
    validated on probes outside the interpolation set.
    """
    if F.caps.chart.is_torus:
        return _probes_torus(F, order, validate)
    return _probes_affine(F, order, validate)


def _probes_affine(F, order, validate):
    n = F.cp.order if order is None else order
    chart = F.caps.chart
    d = chart.dim
    fiber = F.cp.fiber
    max_deg = 2 * n
    idx = multi_indices(d, max_deg)
    taus = {}
    for a in multi_indices(d, max_deg + validate):
        taus[a] = quantize(F, BaseFunction.monomial(chart, a), 2 * n)

    def mono_derivative(a, alpha):
        if any(x < y for x, y in zip(a, alpha)):
            return None
        c = 1
        for x, y in zip(a, alpha):
            for j in range(y):
                c *= x - j
        return BaseFunction.monomial(chart, tuple(x - y for x, y in zip(a, alpha)), c)

    coeffs = [dict() for _ in range(n + 1)]
    pairs = sorted(iproduct(idx, idx), key=lambda p: (sum(p[0]) + sum(p[1]), p))
    for a, b in pairs:
        val = pr0_product(fiber, taus[a], taus[b], hbar_cap=n)
        for i in range(n + 1):
            rest = val[i]
            for (alpha, beta), c in coeffs[i].items():
                da = mono_derivative(a, alpha)
                db = mono_derivative(b, beta)
                if da is not None and db is not None:
                    rest = rest - c * da * db
            if rest.terms:
                fac = 1
                for x in a + b:
                    for j in range(2, x + 1):
                        fac *= j
                coeffs[i][(a, b)] = rest.scale(Q(1, fac))
    table = StarProductTable(chart, [BiDiffOp(chart, c) for c in coeffs])
    extra = [m for m in taus if sum(m) > max_deg]
    for a in extra[:validate + 2]:
        for b in idx[: d + 1] + extra[:1]:
            lhs = pr0_product(fiber, taus[a], taus[b], hbar_cap=n)
            rhs = table.star(BaseFunction.monomial(chart, a), BaseFunction.monomial(chart, b), n)
            if lhs != rhs:
                raise ExtractionError("probe table does not reproduce x^%r * x^%r" % (a, b))
    return table


def _simplex_lattice(d, deg):
    return [k for k in multi_indices(d, deg)]


def _lattice_inverse(d, deg):
    """Inverse Vandermonde ``V[p][m] = p^m`` on the simplex lattice."""
    from starjet.coeffring.forms import rational_inverse

    pts = _simplex_lattice(d, deg)
    monos = multi_indices(d, deg)
    v = []
    for p in pts:
        row = []
        for m in monos:
            c = 1
            for x, e in zip(p, m):
                c *= x**e
            row.append(Q(c))
        v.append(row)
    return pts, monos, rational_inverse(v)


def _probes_torus(F, order, validate):
    n = F.cp.order if order is None else order
    chart = F.caps.chart
    d = chart.dim
    fiber = F.cp.fiber
    deg = 2 * n
    pts, monos, vinv = _lattice_inverse(d, deg)
    taus = {}

    def tau(kind, k):
        key = (kind, k)
        if key not in taus:
            f = BaseFunction.cos(chart, k) if kind == "c" else BaseFunction.sin(chart, k)
            taus[key] = quantize(F, f, 2 * n)
        return taus[key]

    def symbol(k, l):
        """``e^{-i(k+l)x} C(e^{ikx}, e^{ilx})`` per hbar order as (Re, Im)."""
        cc = pr0_product(fiber, tau("c", k), tau("c", l), n)
        ss = pr0_product(fiber, tau("s", k), tau("s", l), n)
        cs = pr0_product(fiber, tau("c", k), tau("s", l), n)
        sc = pr0_product(fiber, tau("s", k), tau("c", l), n)
        kl = madd(k, l)
        cphi = BaseFunction.cos(chart, kl)
        sphi = BaseFunction.sin(chart, kl)
        out = []
        for i in range(n + 1):
            re = cc[i] - ss[i]
            im = cs[i] + sc[i]
            # (re + i im)(cos - i sin)
            out.append((re * cphi + im * sphi, im * cphi - re * sphi))
        return out

    samples = {(k, l): symbol(k, l) for k in pts for l in pts}
    zero = BaseFunction.zero(chart)
    coeffs = [dict() for _ in range(n + 1)]
    # sigma(k, l) = sum c^{ab} i^{|a|+|b|} k^a l^b ; invert the tensor Vandermonde
    npts = len(pts)
    for i in range(n + 1):
        for part in (0, 1):
            # first in k, then in l
            stage = {}
            for li, l in enumerate(pts):
                for mi in range(len(monos)):
                    acc = zero
                    for pi in range(npts):
                        c = vinv[mi][pi]
                        if c:
                            v = samples[(pts[pi], l)][i][part]
                            if v.terms:
                                acc = acc + v.scale(c)
                    stage[(mi, li)] = acc
            for ma, a in enumerate(monos):
                for mb, b in enumerate(monos):
                    acc = zero
                    for li in range(npts):
                        c = vinv[mb][li]
                        if c and stage[(ma, li)].terms:
                            acc = acc + stage[(ma, li)].scale(c)
                    if not acc.terms:
                        continue
                    tot = sum(a) + sum(b)
                    if tot % 2 != part:
                        raise ExtractionError("symbol has a component of the wrong parity at %r,%r" % (a, b))
                    # i^tot = (-1)^(tot//2) * (1 or i)
                    sign = -1 if (tot // 2) % 2 else 1
                    coeffs[i][(a, b)] = acc.scale(sign)
    table = StarProductTable(chart, [BiDiffOp(chart, c) for c in coeffs])
    probes = [tuple([deg + 1] + [0] * (d - 1)), tuple([1] * d)]
    for k in probes[:validate]:
        for l in (pts[1], probes[-1]):
            for fk, fl in (("c", "c"), ("s", "c"), ("c", "s")):
                f = BaseFunction.cos(chart, k) if fk == "c" else BaseFunction.sin(chart, k)
                g = BaseFunction.cos(chart, l) if fl == "c" else BaseFunction.sin(chart, l)
                lhs = pr0_product(fiber, tau(fk, k), tau(fl, l), n)
                if lhs != table.star(f, g, n):
                    raise ExtractionError("probe table does not reproduce the product at %r, %r" % (k, l))
    return table


# pipeline ----------------------------------------------------------------------


def fedosov_pipeline(omega: FormMatrix, gamma0: FoliatedConnection | None, order: int, verify=True):
    """omega, Gamma^0 -> (ChartPoisson, connection, FedosovData, table)."""
    cp = ChartPoisson(omega, order)
    if gamma0 is None:
        gamma0 = FoliatedConnection.zero(cp.chart)
    conn = symplectize_connection(gamma0, cp, check=verify)
    rbar = curvature(conn, cp, verify=verify)
    data = solve_gamma(rbar, conn, cp, verify=verify)
    table = cochains(data, order)
    return cp, conn, data, table


__all__ = [
    "ChartPoisson",
    "FedosovData",
    "FoliatedConnection",
    "check_curvature_identity",
    "cochains",
    "cochains_by_probes",
    "covariant_derivative",
    "curvature",
    "fedosov_pipeline",
    "is_flat",
    "quantize",
    "quantize_symbolic",
    "solve_gamma",
    "spanning_set",
    "star",
    "symplectize_connection",
]

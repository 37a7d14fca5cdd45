"""Fiberwise Weyl algebra with form coefficients over a chart.

An element is a finite sum of terms ``f(x, t) * y^alpha * dx^I * hbar^m``
stored as ``{(alpha, I, m): BaseFunction}`` where ``alpha`` is a tuple of
exponents, ``I`` a bitmask of the dx-slots (bit ``i`` stands for
``dx^(i+1)``) and ``m`` the hbar power.  The Fedosov degree of a term is
``|alpha| + 2m``.

The fiber product is

    a o b = sum_r (hbar/2)^r / r! Lam^{i1 j1}..Lam^{ir jr}
            d^r a / dy^i1..dy^ir  ^  d^r b / dy^j1..dy^jr

with ``Lam`` the inverse of the chart's symplectic matrix (``omega Lam = Id``).
With this normalization the moment ``mu = omega_kj y^j dx^k`` satisfies
``ad(mu) = hbar delta`` and quadratic elements act by ``2 hbar`` times the
contragredient linear action.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct

from starjet.coeffring import kernels
from starjet.coeffring.base import BaseFunction, Chart, ChartMismatch, mul_terms
from starjet.coeffring.forms import FormMatrix, invert_form_matrix
from starjet.coeffring.rational import Q
from starjet.coeffring.series import HSeries


class CapMismatch(ValueError):
    pass


@dataclass(frozen=True)
class WeylCaps:
    chart: Chart
    fedosov_degree_cap: int
    hbar_cap: int

    @classmethod
    def for_order(cls, chart, order):
        """Caps sufficient for star-product cochains through ``hbar**order``."""
        return cls(chart, 2 * order + 2, order + 1)

    @property
    def dim(self):
        return self.chart.dim

    @property
    def t_cap(self):
        return self.chart.t_cap

    def admits(self, alpha, m):
        return m <= self.hbar_cap and m >= 0 and sum(alpha) + 2 * m <= self.fedosov_degree_cap


# combinatorics ------------------------------------------------------------


def _popcount(n):
    return bin(n).count("1")


@lru_cache(maxsize=None)
def wedge_sign(i_mask, j_mask):
    """Sign of ``dx^I ^ dx^J`` relative to the sorted wedge (0 if they overlap)."""
    if i_mask & j_mask:
        return 0
    inv = 0
    j = j_mask
    pos = 0
    while j:
        if j & 1:
            inv += _popcount(i_mask >> (pos + 1))
        j >>= 1
        pos += 1
    return -1 if inv & 1 else 1


def mask_indices(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def indices_mask(indices):
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def _falling(n, k):
    out = 1
    for j in range(k):
        out *= n - j
    return out


@lru_cache(maxsize=None)
def _pairs(d):
    return tuple((i, j) for i in range(d) for j in range(d) if i != j)


@lru_cache(maxsize=None)
def _upper_index(d):
    idx = {}
    n = 0
    for p in range(d):
        for q in range(p + 1, d):
            idx[(p, q)] = n
            n += 1
    return idx


@lru_cache(maxsize=None)
def contraction_table(alpha, beta, parity):
    """All ways of contracting ``y^alpha`` against ``y^beta``.

    ``parity`` is ``None`` (every r), ``1`` (odd r only) or ``0`` (r = 0
    only).  Returns tuples ``(out_alpha, mono, q, r)`` where ``mono`` are
    exponents of the upper entries ``Lam^{pq}`` (p < q) and ``q`` the
    rational factor including ``(1/2)^r``, the multinomial weight and the
    sign coming from ``Lam^{qp} = -Lam^{pq}``; sorted by ``r``.
    """
    d = len(alpha)
    pairs = _pairs(d)
    upper = _upper_index(d)
    n_up = len(upper)
    out = []

    def rec(idx, rows, cols, chosen):
        if idx == len(pairs):
            r = sum(chosen)
            if parity == 0 and r:
                return
            if parity == 1 and not r & 1:
                return
            q = Q(1, 2**r)
            mono = [0] * n_up
            neg = 0
            for (i, j), m in zip(pairs, chosen):
                if not m:
                    continue
                for k in range(2, m + 1):
                    q /= k
                if i < j:
                    mono[upper[(i, j)]] += m
                else:
                    mono[upper[(j, i)]] += m
                    neg += m
            for i in range(d):
                q *= _falling(alpha[i], rows[i]) * _falling(beta[i], cols[i])
            if neg & 1:
                q = -q
            oa = tuple(alpha[i] - rows[i] + beta[i] - cols[i] for i in range(d))
            out.append((oa, tuple(mono), q, r))
            return
        i, j = pairs[idx]
        room = min(alpha[i] - rows[i], beta[j] - cols[j])
        if parity == 0:
            room = 0
        for m in range(room + 1):
            rows[i] += m
            cols[j] += m
            chosen.append(m)
            rec(idx + 1, rows, cols, chosen)
            chosen.pop()
            rows[i] -= m
            cols[j] -= m

    rec(0, [0] * d, [0] * d, [])
    out.sort(key=lambda e: e[3])
    return tuple(out)


# fiber Poisson data --------------------------------------------------------


class PoissonFiberData:
    """The bivector ``Lam`` (and, when known, ``omega``) entering the product."""

    __slots__ = ("lam", "omega", "upper", "constant", "upper_values", "_powers")

    def __init__(self, lam: FormMatrix, omega: FormMatrix | None = None):
        self.lam = lam
        self.omega = omega
        d = lam.dim
        self.upper = tuple(lam.rows[p][q] for p in range(d) for q in range(p + 1, d))
        self.constant = all(f.is_constant() for f in self.upper)
        self.upper_values = tuple(f.constant_value() for f in self.upper) if self.constant else None
        self._powers = {}

    @classmethod
    def from_omega(cls, omega: FormMatrix):
        return cls(invert_form_matrix(omega), omega)

    @property
    def chart(self):
        return self.lam.chart

    def mono_value(self, mono):
        """Rational value of ``prod Lam_pq**e`` (constant case)."""
        v = self._powers.get(mono)
        if v is None:
            v = Q(1)
            for x, e in zip(self.upper_values, mono):
                if e:
                    v *= x**e
            self._powers[mono] = v
        return v

    def mono_terms(self, mono):
        """Raw term dict of ``prod Lam_pq**e`` (general case)."""
        v = self._powers.get(mono)
        if v is None:
            f = BaseFunction.const(self.chart, 1)
            for x, e in zip(self.upper, mono):
                if e:
                    f = f * x**e
            v = f.terms
            self._powers[mono] = v
        return v


# elements -------------------------------------------------------------------


class WeylElement:
    """Immutable element of the Weyl algebra with forms (see module docstring)."""

    __slots__ = ("caps", "terms")

    def __init__(self, caps: WeylCaps, terms=None, _trusted=False):
        self.caps = caps
        if _trusted:
            self.terms = terms
            return
        clean = {}
        for (alpha, mask, m), f in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != caps.dim:
                raise ValueError("y-exponent of wrong length")
            if f.chart != caps.chart:
                raise ChartMismatch("coefficient lives on another chart")
            if not caps.admits(alpha, m) or not f.terms:
                continue
            key = (alpha, mask, m)
            clean[key] = clean[key] + f if key in clean else f
        self.terms = {k: v for k, v in clean.items() if v.terms}

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, caps):
        return cls(caps, {}, _trusted=True)

    @classmethod
    def scalar(cls, caps, f, hbar=0):
        if not isinstance(f, BaseFunction):
            f = BaseFunction.const(caps.chart, f)
        return cls(caps, {((0,) * caps.dim, 0, hbar): f})

    @classmethod
    def from_series(cls, caps, series: HSeries):
        return cls(caps, {((0,) * caps.dim, 0, m): c for m, c in enumerate(series.coeffs)})

    @classmethod
    def y(cls, caps, i, coeff=1):
        alpha = [0] * caps.dim
        alpha[i] = 1
        return cls.monomial(caps, alpha, 0, 0, coeff)

    @classmethod
    def dx(cls, caps, i, coeff=1):
        return cls.monomial(caps, (0,) * caps.dim, 1 << i, 0, coeff)

    @classmethod
    def monomial(cls, caps, alpha, mask=0, hbar=0, coeff=1):
        if not isinstance(coeff, BaseFunction):
            coeff = BaseFunction.const(caps.chart, coeff)
        return cls(caps, {(tuple(alpha), mask, hbar): coeff})

    # basic algebra ----------------------------------------------------

    def _check(self, other):
        if not isinstance(other, WeylElement):
            raise TypeError("expected WeylElement")
        if other.caps != self.caps:
            raise CapMismatch("caps differ: %r vs %r" % (self.caps, other.caps))

    def __eq__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.caps == other.caps and self.terms == other.terms

    __hash__ = None

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, f in other.terms.items():
            if k in out:
                s = out[k] + f
                if s.terms:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = f
        return WeylElement(self.caps, out, _trusted=True)

    def __neg__(self):
        return WeylElement(self.caps, {k: -f for k, f in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, q):
        q = Q(q)
        if not q:
            return WeylElement.zero(self.caps)
        return WeylElement(self.caps, {k: f.scale(q) for k, f in self.terms.items()}, _trusted=True)

    def mul_function(self, g: BaseFunction):
        return WeylElement(self.caps, {k: f * g for k, f in self.terms.items()})

    def map_coeffs(self, fn):
        return WeylElement(self.caps, {k: fn(f) for k, f in self.terms.items()})

    def filter(self, pred):
        return WeylElement(self.caps, {k: f for k, f in self.terms.items() if pred(*k)}, _trusted=True)

    def with_caps(self, caps):
        return WeylElement(caps, {k: f.with_chart(caps.chart) for k, f in self.terms.items()})

    def shift_hbar(self, k):
        return WeylElement(self.caps, {(a, i, m + k): f for (a, i, m), f in self.terms.items()})

    # gradings ---------------------------------------------------------

    def fedosov_part(self, deg):
        return self.filter(lambda a, i, m: sum(a) + 2 * m == deg)

    def form_part(self, p):
        return self.filter(lambda a, i, m: _popcount(i) == p)

    def y_degree_part(self, r):
        return self.filter(lambda a, i, m: sum(a) == r)

    def hbar_part(self, m0):
        return self.filter(lambda a, i, m: m == m0)

    def fedosov_degrees(self):
        return sorted({sum(a) + 2 * m for (a, i, m) in self.terms})

    def form_degrees(self):
        return sorted({_popcount(i) for (_, i, _) in self.terms})

    def min_fedosov_degree(self):
        degs = self.fedosov_degrees()
        return degs[0] if degs else None

    # derivations on the fiber ----------------------------------------

    def dy(self, k):
        """``d/dy^k``."""
        out = {}
        for (a, i, m), f in self.terms.items():
            e = a[k]
            if e:
                na = a[:k] + (e - 1,) + a[k + 1 :]
                out[(na, i, m)] = f.scale(e)
        return WeylElement(self.caps, out, _trusted=True)

    def mul_y(self, k):
        """Symmetric multiplication by ``y^k`` (may exceed caps: dropped)."""
        out = {}
        for (a, i, m), f in self.terms.items():
            na = a[:k] + (a[k] + 1,) + a[k + 1 :]
            if self.caps.admits(na, m):
                out[(na, i, m)] = f
        return WeylElement(self.caps, out, _trusted=True)

    def wedge_dx(self, k):
        """``dx^k ^ a`` (dx on the left)."""
        bit = 1 << k
        out = {}
        for (a, i, m), f in self.terms.items():
            if i & bit:
                continue
            s = wedge_sign(bit, i)
            out[(a, i | bit, m)] = f if s > 0 else -f
        return WeylElement(self.caps, out, _trusted=True)

    def interior(self, k):
        """Contraction of the ``dx^k`` slot (from the left)."""
        bit = 1 << k
        out = {}
        for (a, i, m), f in self.terms.items():
            if not i & bit:
                continue
            before = _popcount(i & (bit - 1))
            out[(a, i ^ bit, m)] = -f if before & 1 else f
        return WeylElement(self.caps, out, _trusted=True)

    def dx_coeffs(self, k):
        """Partial derivative of the coefficients along ``x^k``."""
        return WeylElement(self.caps, {key: f.dx(k) for key, f in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, i, m), f in sorted(self.terms.items()):
            mon = "*".join(("y%d" % (j + 1)) + ("^%d" % e if e > 1 else "") for j, e in enumerate(a) if e)
            frm = "^".join("dx%d" % (j + 1) for j in mask_indices(i))
            h = ("hbar^%d" % m if m > 1 else "hbar") if m else ""
            tail = "*".join(p for p in (mon, frm, h) if p)
            parts.append("(%r)%s" % (f, ("*" + tail) if tail else ""))
        return " + ".join(parts)

    def to_json(self):
        out = []
        for (a, i, m), f in sorted(self.terms.items()):
            out.append(
                {
                    "y": list(a),
                    "dx": [j + 1 for j in mask_indices(i)],
                    "hbar": m,
                    "coeff": f.to_json(),
                }
            )
        return out


# products -------------------------------------------------------------------


def _bilinear(lam: PoissonFiberData, a: WeylElement, b: WeylElement, parity, factor, hbar_shift):
    if a.caps != b.caps:
        raise CapMismatch("caps differ")
    caps = a.caps
    if lam.chart != caps.chart:
        raise ChartMismatch("Poisson data on another chart")
    chart = caps.chart
    fcap = caps.fedosov_degree_cap
    hcap = caps.hbar_cap
    constant = lam.constant
    factor = Q(factor)
    # accumulator: constant Lam -> {key: raw}; otherwise {mono: {key: raw}}
    acc = {}
    b_items = []
    for (beta, jm, n), g in b.terms.items():
        b_items.append((beta, jm, n, sum(beta) + 2 * n, g.terms))
    for (alpha, im, m), f in a.terms.items():
        dega = sum(alpha) + 2 * m
        ft = f.terms
        for beta, jm, n, degb, gt in b_items:
            if im & jm:
                continue
            if dega + degb + 2 * hbar_shift > fcap:
                continue
            table = contraction_table(alpha, beta, parity)
            if not table:
                continue
            base_h = m + n + hbar_shift
            if base_h + table[0][3] > hcap:
                continue
            sign = wedge_sign(im, jm)
            mask = im | jm
            fg = None
            for oa, mono, q, r in table:
                h = base_h + r
                if h > hcap:
                    break
                if fg is None:
                    fg = mul_terms(chart, ft, gt)
                    if not fg:
                        break
                coef = q * factor if sign > 0 else -q * factor
                key = (oa, mask, h)
                if constant:
                    coef *= lam.mono_value(mono)
                    if not coef:
                        continue
                    slot = acc.get(key)
                    if slot is None:
                        acc[key] = slot = {}
                    kernels.axpy(slot, fg, coef)
                else:
                    bucket = acc.get(mono)
                    if bucket is None:
                        acc[mono] = bucket = {}
                    slot = bucket.get(key)
                    if slot is None:
                        bucket[key] = slot = {}
                    kernels.axpy(slot, fg, coef)
    out = {}
    if constant:
        for key, raw in acc.items():
            raw = kernels.clean(raw)
            if raw:
                out[key] = BaseFunction(chart, raw)
    else:
        for mono, bucket in acc.items():
            lt = lam.mono_terms(mono)
            for key, raw in bucket.items():
                raw = kernels.clean(raw)
                if not raw:
                    continue
                prod = mul_terms(chart, lt, raw) if any(mono) else raw
                slot = out.get(key)
                if slot is None:
                    out[key] = dict(prod)
                else:
                    kernels.axpy(slot, prod, 1)
        out = {k: BaseFunction(chart, kernels.clean(v)) for k, v in out.items()}
        out = {k: v for k, v in out.items() if v.terms}
    return WeylElement(caps, out, _trusted=True)


def fiber_moyal(lam: PoissonFiberData, a: WeylElement, b: WeylElement) -> WeylElement:
    """The fiberwise product ``a o b``, truncated to the caps."""
    return _bilinear(lam, a, b, None, 1, 0)


def fiber_symmetric(a: WeylElement, b: WeylElement) -> WeylElement:
    """Commutative product (y's commute, forms wedge)."""
    if a.caps != b.caps:
        raise CapMismatch("caps differ")
    d = a.caps.dim
    flat = FormMatrix(a.caps.chart, [[BaseFunction.zero(a.caps.chart)] * d for _ in range(d)])
    return _bilinear(PoissonFiberData(flat), a, b, 0, 1, 0)


def ad(lam: PoissonFiberData, u: WeylElement, a: WeylElement) -> WeylElement:
    """Graded commutator ``u o a - (-1)^{|u||a|} a o u``."""
    return _bilinear(lam, u, a, 1, 2, 0)


def ad_over_2hbar(lam: PoissonFiberData, u: WeylElement, a: WeylElement) -> WeylElement:
    """``ad(u) a / (2 hbar)``; well defined because ``ad`` is divisible by hbar."""
    return _bilinear(lam, u, a, 1, 1, -1)


def graded_commutator(lam, u, a):
    """Reference implementation of ``ad`` from two products (slow, for checks)."""
    out = fiber_moyal(lam, u, a)
    for p in u.form_degrees():
        up = u.form_part(p)
        for q in a.form_degrees():
            aq = a.form_part(q)
            term = fiber_moyal(lam, aq, up)
            out = out - term if (p * q) % 2 == 0 else out + term
    return out


# delta operators ------------------------------------------------------------


def delta(a: WeylElement) -> WeylElement:
    """``delta a = sum_k dx^k ^ d a / dy^k``."""
    out = WeylElement.zero(a.caps)
    for k in range(a.caps.dim):
        out = out + a.dy(k).wedge_dx(k)
    return out


def delta_star(a: WeylElement) -> WeylElement:
    """``delta* a = sum_k y^k i_k a``."""
    out = WeylElement.zero(a.caps)
    for k in range(a.caps.dim):
        out = out + a.interior(k).mul_y(k)
    return out


def delta_inv(a: WeylElement) -> WeylElement:
    """``delta*`` divided by ``|alpha| + |I|`` on each term (0 on the pr0 part)."""
    out = {}
    caps = a.caps
    for (alpha, im, m), f in a.terms.items():
        total = sum(alpha) + _popcount(im)
        if not total:
            continue
        inv = Q(1, total)
        for k in mask_indices(im):
            bit = 1 << k
            na = alpha[:k] + (alpha[k] + 1,) + alpha[k + 1 :]
            if not caps.admits(na, m):
                continue
            before = _popcount(im & (bit - 1))
            c = -inv if before & 1 else inv
            key = (na, im ^ bit, m)
            term = f.scale(c)
            if key in out:
                s = out[key] + term
                if s.terms:
                    out[key] = s
                else:
                    del out[key]
            else:
                out[key] = term
    return WeylElement(caps, out, _trusted=True)


def pr0(a: WeylElement) -> HSeries:
    """The y-free, form-free part as an hbar-series of chart functions."""
    caps = a.caps
    zero = (0,) * caps.dim
    coeffs = [a.terms.get((zero, 0, m), BaseFunction.zero(caps.chart)) for m in range(caps.hbar_cap + 1)]
    return HSeries(caps.chart, caps.hbar_cap, coeffs)


def moment(caps: WeylCaps, omega: FormMatrix) -> WeylElement:
    """``mu = sum_{k,j} omega_kj y^j dx^k``; satisfies ``ad(mu) = hbar delta``."""
    d = caps.dim
    terms = {}
    for k in range(d):
        for j in range(d):
            w = omega.rows[k][j]
            if w.terms:
                alpha = tuple(int(i == j) for i in range(d))
                terms[(alpha, 1 << k, 0)] = w
    return WeylElement(caps, terms)


# quadratic Hamiltonians --------------------------------------------------------


def quadratic_of(caps: WeylCaps, omega_rows, a_rows) -> WeylElement:
    """The quadratic element ``v -> omega(v, A v) = sum (omega A)_ij y^i y^j``."""
    d = caps.dim
    terms = {}
    for i in range(d):
        for k in range(d):
            c = sum(Q(omega_rows[i][j]) * Q(a_rows[j][k]) for j in range(d))
            if not c:
                continue
            alpha = [0] * d
            alpha[i] += 1
            alpha[k] += 1
            key = (tuple(alpha), 0, 0)
            f = BaseFunction.const(caps.chart, c)
            terms[key] = terms[key] + f if key in terms else f
    return WeylElement(caps, terms)


def linear_action(a_rows, elem: WeylElement) -> WeylElement:
    """Derivation induced by ``A`` on the fiber: ``y^m -> -sum_k A_mk y^k``."""
    d = elem.caps.dim
    out = WeylElement.zero(elem.caps)
    for mi in range(d):
        der = elem.dy(mi)
        if der.is_zero():
            continue
        for k in range(d):
            c = Q(a_rows[mi][k])
            if c:
                out = out + der.mul_y(k).scale(-c)
    return out


def is_symplectic_matrix(omega_rows, a_rows):
    """``omega A`` symmetric, i.e. ``A`` lies in ``sp(V, omega)``."""
    d = len(a_rows)
    m = [[sum(Q(omega_rows[i][j]) * Q(a_rows[j][k]) for j in range(d)) for k in range(d)] for i in range(d)]
    return all(m[i][k] == m[k][i] for i, k in iproduct(range(d), range(d)))


__all__ = [
    "CapMismatch",
    "PoissonFiberData",
    "WeylCaps",
    "WeylElement",
    "ad",
    "ad_over_2hbar",
    "contraction_table",
    "delta",
    "delta_inv",
    "delta_star",
    "fiber_moyal",
    "fiber_symmetric",
    "graded_commutator",
    "is_symplectic_matrix",
    "linear_action",
    "moment",
    "pr0",
    "quadratic_of",
    "wedge_sign",
]


@lru_cache(maxsize=None)
def _full_contractions(alpha, beta):
    return tuple(e for e in contraction_table(alpha, beta, None) if not any(e[0]))


def pr0_product(lam: PoissonFiberData, a: WeylElement, b: WeylElement, hbar_cap=None) -> HSeries:
    """``pr0(a o b)`` without forming the full product."""
    if a.caps != b.caps:
        raise CapMismatch("caps differ")
    caps = a.caps
    chart = caps.chart
    hcap = caps.hbar_cap if hbar_cap is None else min(hbar_cap, caps.hbar_cap)
    acc = [dict() for _ in range(hcap + 1)]
    b_by_deg = {}
    for (beta, jm, n), g in b.terms.items():
        if not jm:
            b_by_deg.setdefault(sum(beta), []).append((beta, n, g.terms))
    for (alpha, im, m), f in a.terms.items():
        if im:
            continue
        r = sum(alpha)
        for beta, n, gt in b_by_deg.get(r, ()):
            h = m + n + r
            if h > hcap:
                continue
            table = _full_contractions(alpha, beta)
            if not table:
                continue
            fg = mul_terms(chart, f.terms, gt)
            if not fg:
                continue
            for _, mono, q, _ in table:
                if lam.constant:
                    c = q * lam.mono_value(mono)
                    if c:
                        slot = acc[h].setdefault((), {})
                        kernels.axpy(slot, fg, c)
                else:
                    slot = acc[h].setdefault(mono, {})
                    kernels.axpy(slot, fg, q)
    coeffs = []
    for h in range(hcap + 1):
        total = {}
        for mono, raw in acc[h].items():
            raw = kernels.clean(raw)
            if not raw:
                continue
            if mono and any(mono):
                raw = mul_terms(chart, lam.mono_terms(mono), raw)
            kernels.axpy(total, raw, 1)
        coeffs.append(BaseFunction(chart, kernels.clean(total)))
    return HSeries(chart, hcap, coeffs)


__all__.append("pr0_product")

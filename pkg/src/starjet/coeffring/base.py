"""Chart functions: polynomials (affine) or trigonometric polynomials (torus)
in ``x``, tensored with a truncated polynomial in the leaf parameter ``t``.

A term is stored under a packed integer key.  With ``B = 2**BITS`` digits,

* affine: ``key = t << (BITS*d) | sum(e_i << BITS*(d-1-i))`` so that the key
  of a product of monomials is the sum of the keys;
* torus: ``key = ((t << 1) | s) << (BITS*d) | W`` where ``s`` is 1 for a sine,
  and ``W`` packs the wave vector with an offset per digit.  A wave vector is
  canonical when its first nonzero component is positive, which for packed
  digits is simply ``W >= Z`` (``Z`` the packed zero vector).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy

from starjet.coeffring import kernels
from starjet.coeffring.rational import Q, fmt_rational, parse_rational

BITS = 12
MASK = (1 << BITS) - 1
OFFSET = 1 << (BITS - 1)
AFFINE = "affine"
TORUS = "torus"


class ChartMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    kind: str
    dim: int
    t_cap: int = 0

    def __post_init__(self):
        if self.kind not in (AFFINE, TORUS):
            raise ValueError("chart kind must be 'affine' or 'torus', got %r" % self.kind)
        if self.dim < 1:
            raise ValueError("chart dimension must be positive")
        if self.t_cap < 0:
            raise ValueError("t_cap must be non-negative")

    def with_t_cap(self, t_cap: int) -> "Chart":
        return Chart(self.kind, self.dim, t_cap)

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS


@lru_cache(maxsize=None)
def _layout(kind, dim):
    shifts = tuple(BITS * (dim - 1 - i) for i in range(dim))
    tshift = BITS * dim
    zero = sum(OFFSET << s for s in shifts) if kind == TORUS else 0
    return shifts, tshift, zero


def _check_components(values, bound):
    for v in values:
        if not -bound < v < bound:
            raise OverflowError("index component %d outside packed range" % v)


class BaseFunction:
    """Immutable exact function on a chart (see module docstring)."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms=None):
        self.chart = chart
        self.terms = terms if terms is not None else {}

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, chart):
        return cls(chart, {})

    @classmethod
    def const(cls, chart, value=1, tpow=0):
        value = Q(value)
        if not value or tpow > chart.t_cap:
            return cls(chart, {})
        key = cls._pack(chart, tpow, 0, (0,) * chart.dim)
        return cls(chart, {key: value})

    @classmethod
    def monomial(cls, chart, exps, coeff=1, tpow=0):
        if chart.is_torus:
            raise ChartMismatch("monomials live on affine charts")
        if len(exps) != chart.dim or any(e < 0 for e in exps):
            raise ValueError("bad exponent vector %r" % (exps,))
        coeff = Q(coeff)
        if not coeff or tpow > chart.t_cap:
            return cls(chart, {})
        return cls(chart, {cls._pack(chart, tpow, 0, tuple(exps)): coeff})

    @classmethod
    def cos(cls, chart, wave, coeff=1, tpow=0):
        return cls._trig(chart, wave, 0, coeff, tpow)

    @classmethod
    def sin(cls, chart, wave, coeff=1, tpow=0):
        return cls._trig(chart, wave, 1, coeff, tpow)

    @classmethod
    def _trig(cls, chart, wave, s, coeff, tpow):
        if not chart.is_torus:
            raise ChartMismatch("trigonometric terms live on torus charts")
        wave = tuple(int(k) for k in wave)
        if len(wave) != chart.dim:
            raise ValueError("wave vector %r has wrong length" % (wave,))
        coeff = Q(coeff)
        if _first_nonzero(wave) < 0:
            wave = tuple(-k for k in wave)
            if s:
                coeff = -coeff
        if (s and not any(wave)) or not coeff or tpow > chart.t_cap:
            return cls(chart, {})
        return cls(chart, {cls._pack(chart, tpow, s, wave): coeff})

    @staticmethod
    def _pack(chart, tpow, s, vec):
        shifts, tshift, zero = _layout(chart.kind, chart.dim)
        if chart.is_torus:
            _check_components(vec, OFFSET)
            w = sum((k + OFFSET) << sh for k, sh in zip(vec, shifts))
            return (((tpow << 1) | s) << tshift) | w
        _check_components(vec, MASK + 1)
        return (tpow << tshift) | sum(e << sh for e, sh in zip(vec, shifts))

    def decode(self, key):
        """Return ``(tpow, kind, vector)`` where kind is 'x', 'cos' or 'sin'."""
        chart = self.chart
        shifts, tshift, zero = _layout(chart.kind, chart.dim)
        high = key >> tshift
        low = key & ((1 << tshift) - 1)
        if chart.is_torus:
            vec = tuple(((low >> sh) & MASK) - OFFSET for sh in shifts)
            return high >> 1, ("sin" if high & 1 else "cos"), vec
        return high, "x", tuple((low >> sh) & MASK for sh in shifts)

    # structure ----------------------------------------------------------

    def _tpow(self, key):
        _, tshift, _ = _layout(self.chart.kind, self.chart.dim)
        return key >> (tshift + 1) if self.chart.is_torus else key >> tshift

    def _same(self, other):
        if not isinstance(other, BaseFunction):
            raise TypeError("expected BaseFunction, got %r" % type(other).__name__)
        if other.chart != self.chart:
            raise ChartMismatch("chart mismatch: %r vs %r" % (self.chart, other.chart))

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, BaseFunction):
            return self.chart == other.chart and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    __hash__ = None

    def canonical(self):
        """Normalized copy: zero coefficients dropped, keys sorted."""
        return BaseFunction(self.chart, {k: self.terms[k] for k in sorted(self.terms) if self.terms[k]})

    def sorted_terms(self):
        return sorted(self.terms.items())

    def t_degrees(self):
        return sorted({self._tpow(k) for k in self.terms})

    def min_t_degree(self):
        degs = self.t_degrees()
        return degs[0] if degs else None

    # arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BaseFunction):
            if other == 0:
                return self
            other = BaseFunction.const(self.chart, other)
        self._same(other)
        out = dict(self.terms)
        kernels.axpy(out, other.terms, 1)
        return BaseFunction(self.chart, kernels.clean(out))

    __radd__ = __add__

    def __neg__(self):
        return BaseFunction(self.chart, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, BaseFunction):
            return self + (-Q(other))
        self._same(other)
        out = dict(self.terms)
        kernels.axpy(out, other.terms, -1)
        return BaseFunction(self.chart, kernels.clean(out))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, q):
        q = Q(q)
        if not q:
            return BaseFunction(self.chart, {})
        return BaseFunction(self.chart, {k: q * v for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, BaseFunction):
            return self.mul(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def mul(self, other, t_cap=None):
        """Product, truncated at ``t_cap`` (default: the chart's)."""
        self._same(other)
        return BaseFunction(self.chart, mul_terms(self.chart, self.terms, other.terms, t_cap))

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative powers are not defined")
        out = BaseFunction.const(self.chart, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def dx(self, i):
        """Partial derivative along ``x^(i+1)`` (0-based index)."""
        chart = self.chart
        if not 0 <= i < chart.dim:
            raise IndexError("derivative index %d out of range for dim %d" % (i, chart.dim))
        shifts, tshift, zero = _layout(chart.kind, chart.dim)
        sh = shifts[i]
        out = {}
        if chart.is_torus:
            sbit = 1 << tshift
            for k, v in self.terms.items():
                comp = ((k >> sh) & MASK) - OFFSET
                if not comp:
                    continue
                if (k >> tshift) & 1:
                    out[k ^ sbit] = v * comp
                else:
                    out[k ^ sbit] = -v * comp
        else:
            step = 1 << sh
            for k, v in self.terms.items():
                e = (k >> sh) & MASK
                if e:
                    out[k - step] = v * e
        return BaseFunction(chart, out)

    def dx_multi(self, alpha):
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.dx(i)
        return out

    def dt(self):
        """Derivative along the leaf parameter."""
        out = BaseFunction.zero(self.chart)
        for k in range(1, self.chart.t_cap + 1):
            c = self.t_coeff(k)
            if c:
                out = out + c.shift_t(k - 1).scale(k)
        return out

    # t handling ---------------------------------------------------------

    def truncate(self, t_cap):
        return BaseFunction(self.chart, {k: v for k, v in self.terms.items() if self._tpow(k) <= t_cap})

    def t_coeff(self, k):
        """Coefficient of ``t**k`` (still on the same chart, t-free)."""
        chart = self.chart
        _, tshift, _ = _layout(chart.kind, chart.dim)
        out = {}
        if chart.is_torus:
            for key, v in self.terms.items():
                high = key >> tshift
                if high >> 1 == k:
                    out[((high & 1) << tshift) | (key & ((1 << tshift) - 1))] = v
        else:
            for key, v in self.terms.items():
                if key >> tshift == k:
                    out[key & ((1 << tshift) - 1)] = v
        return BaseFunction(chart, out)

    def shift_t(self, k):
        """Multiply by ``t**k`` (truncating at the chart's cap)."""
        chart = self.chart
        _, tshift, _ = _layout(chart.kind, chart.dim)
        step = (k << (tshift + 1)) if chart.is_torus else (k << tshift)
        out = {key + step: v for key, v in self.terms.items()}
        return BaseFunction(chart, out).truncate(chart.t_cap)

    def with_chart(self, chart):
        """Re-home on a chart of the same kind/dim with another ``t_cap``."""
        if chart.kind != self.chart.kind or chart.dim != self.chart.dim:
            raise ChartMismatch("cannot move between chart kinds or dimensions")
        return BaseFunction(chart, dict(self.terms)).truncate(chart.t_cap)

    def t_free(self):
        return all(self._tpow(k) == 0 for k in self.terms)

    # queries ------------------------------------------------------------

    def constant_value(self):
        """The ``t**0``, x-constant coefficient."""
        key = self._pack(self.chart, 0, 0, (0,) * self.chart.dim)
        return self.terms.get(key, Q(0))

    def is_constant(self):
        """True when the function is a rational constant (no x, no t)."""
        key = self._pack(self.chart, 0, 0, (0,) * self.chart.dim)
        return all(k == key for k in self.terms)

    def x_constant(self):
        """True when no term depends on x (t-dependence allowed)."""
        for k in self.terms:
            _, _, vec = self.decode(k)
            if any(vec):
                return False
        return True

    def mean(self):
        """Torus average over x, as a t-polynomial on the same chart."""
        if not self.chart.is_torus:
            raise ChartMismatch("mean is defined on torus charts")
        out = {}
        for k, v in self.terms.items():
            tp, kind, vec = self.decode(k)
            if kind == "cos" and not any(vec):
                out[k] = v
        return BaseFunction(self.chart, out)

    def inverse_laplacian(self):
        """Solve ``-sum d^2 u/dx_i^2 = f`` mode by mode for mean-zero ``f``."""
        if not self.chart.is_torus:
            raise ChartMismatch("inverse Laplacian is defined on torus charts")
        out = {}
        for k, v in self.terms.items():
            _, _, vec = self.decode(k)
            norm2 = sum(c * c for c in vec)
            if not norm2:
                raise ValueError("inverse Laplacian needs a mean-zero function")
            out[k] = v / norm2
        return BaseFunction(self.chart, out)

    def max_frequency(self):
        best = 0
        for k in self.terms:
            _, _, vec = self.decode(k)
            best = max(best, max((abs(c) for c in vec), default=0))
        return best

    # evaluation / display ----------------------------------------------

    def evaluate(self, x, t=0.0):
        """Float evaluation; ``x`` is a sequence of coordinates (arrays allowed)."""
        total = 0.0
        for key, v in self.terms.items():
            tp, kind, vec = self.decode(key)
            c = float(v) * (t ** tp if tp else 1.0)
            if kind == "x":
                term = c
                for xi, e in zip(x, vec):
                    if e:
                        term = term * xi ** e
            else:
                phase = sum(k * xi for k, xi in zip(vec, x) if k)
                if kind == "cos":
                    term = c * numpy.cos(phase)
                else:
                    term = c * numpy.sin(phase)
            total = total + term
        return total

    def label_terms(self):
        """Sorted ``(label, coefficient)`` pairs, labels like ``t2*cos:1,0``."""
        out = []
        for key, v in self.sorted_terms():
            tp, kind, vec = self.decode(key)
            if not any(vec) and kind != "sin":
                lab = "1"
            else:
                lab = "%s:%s" % (kind, ",".join(str(c) for c in vec))
            if tp:
                lab = "t%d*%s" % (tp, lab)
            out.append((lab, v))
        return out

    def to_json(self):
        return {lab: fmt_rational(v) for lab, v in self.label_terms()}

    @classmethod
    def from_json(cls, chart, mapping):
        out = cls.zero(chart)
        for lab, value in mapping.items():
            out = out + parse_label(chart, lab, parse_rational(value))
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for key, v in self.sorted_terms():
            tp, kind, vec = self.decode(key)
            if kind == "x":
                fac = "*".join(
                    ("x%d" % (i + 1)) + ("^%d" % e if e > 1 else "") for i, e in enumerate(vec) if e
                )
            elif any(vec):
                arg = "+".join(
                    ("" if c == 1 else "-" if c == -1 else str(c)) + "x%d" % (i + 1) for i, c in enumerate(vec) if c
                )
                fac = "%s(%s)" % (kind, arg.replace("+-", "-"))
            else:
                fac = ""
            if tp:
                fac = ("t^%d" % tp if tp > 1 else "t") + ("*" + fac if fac else "")
            coeff = fmt_rational(v)
            parts.append(coeff if not fac else (fac if v == 1 else "%s*%s" % (coeff, fac)))
        return " + ".join(parts).replace("+ -", "- ")


def mul_terms(chart, a, b, t_cap=None):
    tcap = chart.t_cap if t_cap is None else min(t_cap, chart.t_cap)
    if tcap < 0 or not a or not b:
        return {}
    _, tshift, zero = _layout(chart.kind, chart.dim)
    if chart.is_torus:
        return kernels.mul_torus(a, b, tshift, zero, tcap)
    return kernels.mul_affine(a, b, tshift, tcap)


def parse_label(chart, label, coeff=1):
    """Parse one basis label (see :meth:`BaseFunction.label_terms`)."""
    label = label.strip()
    tpow = 0
    if label.startswith("t") and "*" in label:
        head, label = label.split("*", 1)
        tpow = int(head[1:])
    elif label.startswith("t") and label[1:].isdigit():
        return BaseFunction.const(chart, coeff, tpow=int(label[1:]))
    if label == "1":
        return BaseFunction.const(chart, coeff, tpow=tpow)
    if ":" not in label:
        raise ValueError("bad basis label %r" % label)
    kind, vec = label.split(":", 1)
    vec = tuple(int(c) for c in vec.split(","))
    if kind == "x":
        return BaseFunction.monomial(chart, vec, coeff, tpow=tpow)
    if kind == "cos":
        return BaseFunction.cos(chart, vec, coeff, tpow=tpow)
    if kind == "sin":
        return BaseFunction.sin(chart, vec, coeff, tpow=tpow)
    raise ValueError("bad basis kind %r" % kind)


def _first_nonzero(vec):
    for c in vec:
        if c:
            return c
    return 0

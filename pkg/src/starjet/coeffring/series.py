"""Truncated power series in hbar with :class:`BaseFunction` coefficients."""

from __future__ import annotations

from starjet.coeffring.base import BaseFunction, ChartMismatch
from starjet.coeffring.rational import Q


class HSeries:
    """``sum_{m <= hbar_cap} hbar**m * coeffs[m]``; immutable."""

    __slots__ = ("chart", "hbar_cap", "coeffs")

    def __init__(self, chart, hbar_cap, coeffs=None):
        self.chart = chart
        self.hbar_cap = hbar_cap
        cs = list(coeffs or [])[: hbar_cap + 1]
        for c in cs:
            if c.chart != chart:
                raise ChartMismatch("series coefficient on a different chart")
        while len(cs) < hbar_cap + 1:
            cs.append(BaseFunction.zero(chart))
        self.coeffs = tuple(cs)

    @classmethod
    def lift(cls, f, hbar_cap):
        """The hbar-constant series with value ``f``."""
        return cls(f.chart, hbar_cap, [f])

    @classmethod
    def zero(cls, chart, hbar_cap):
        return cls(chart, hbar_cap)

    def __getitem__(self, m):
        if 0 <= m <= self.hbar_cap:
            return self.coeffs[m]
        return BaseFunction.zero(self.chart)

    def _same(self, other):
        if not isinstance(other, HSeries):
            raise TypeError("expected HSeries")
        if other.chart != self.chart:
            raise ChartMismatch("chart mismatch")

    def __eq__(self, other):
        if not isinstance(other, HSeries):
            return NotImplemented
        cap = max(self.hbar_cap, other.hbar_cap)
        return self.chart == other.chart and all(self[m] == other[m] for m in range(cap + 1))

    __hash__ = None

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def __add__(self, other):
        if isinstance(other, BaseFunction):
            other = HSeries.lift(other, self.hbar_cap)
        self._same(other)
        cap = min(self.hbar_cap, other.hbar_cap)
        return HSeries(self.chart, cap, [self[m] + other[m] for m in range(cap + 1)])

    def __sub__(self, other):
        if isinstance(other, BaseFunction):
            other = HSeries.lift(other, self.hbar_cap)
        self._same(other)
        cap = min(self.hbar_cap, other.hbar_cap)
        return HSeries(self.chart, cap, [self[m] - other[m] for m in range(cap + 1)])

    def __neg__(self):
        return HSeries(self.chart, self.hbar_cap, [-c for c in self.coeffs])

    def scale(self, q):
        return HSeries(self.chart, self.hbar_cap, [c.scale(q) for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, BaseFunction):
            return HSeries(self.chart, self.hbar_cap, [c * other for c in self.coeffs])
        if not isinstance(other, HSeries):
            return self.scale(Q(other))
        self._same(other)
        cap = min(self.hbar_cap, other.hbar_cap)
        out = [BaseFunction.zero(self.chart) for _ in range(cap + 1)]
        for i, a in enumerate(self.coeffs[: cap + 1]):
            if a.is_zero():
                continue
            for j in range(cap + 1 - i):
                b = other.coeffs[j]
                if b.terms:
                    out[i + j] = out[i + j] + a * b
        return HSeries(self.chart, cap, out)

    def truncate(self, hbar_cap):
        return HSeries(self.chart, min(hbar_cap, self.hbar_cap), self.coeffs[: hbar_cap + 1])

    def shift(self, k):
        """Multiply by ``hbar**k``."""
        return HSeries(self.chart, self.hbar_cap, [BaseFunction.zero(self.chart)] * k + list(self.coeffs))

    def dx(self, i):
        return HSeries(self.chart, self.hbar_cap, [c.dx(i) for c in self.coeffs])

    def dx_multi(self, alpha):
        return HSeries(self.chart, self.hbar_cap, [c.dx_multi(alpha) for c in self.coeffs])

    def map(self, fn):
        return HSeries(self.chart, self.hbar_cap, [fn(c) for c in self.coeffs])

    def to_json(self):
        return {str(m): c.to_json() for m, c in enumerate(self.coeffs) if c.terms}

    def __repr__(self):
        parts = ["hbar^%d*(%r)" % (m, c) for m, c in enumerate(self.coeffs) if c.terms]
        return " + ".join(parts) if parts else "0"

"""Exact rational scalars.

``Q`` is ``gmpy2.mpq`` when gmpy2 is importable and ``fractions.Fraction``
otherwise.  Both keep numerator/denominator reduced with a positive
denominator, print as ``p/q`` and compare equal across backends.
"""

try:
    from gmpy2 import mpq as Q

    BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as Q

    BACKEND = "fractions"

ZERO = Q(0)
ONE = Q(1)
HALF = Q(1, 2)


def parse_rational(value):
    """Parse ``"p/q"``, ``"p"`` or an int into ``Q``."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Q(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Q(int(num), int(den))
        return Q(int(text))
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact coefficients: %r" % value)
    return Q(value)


def fmt_rational(q) -> str:
    q = Q(q)
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)

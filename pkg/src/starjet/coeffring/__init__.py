"""Exact coefficient arithmetic: rationals, chart functions, hbar-series, forms."""

from starjet.coeffring.base import AFFINE, TORUS, BaseFunction, Chart, ChartMismatch, parse_label
from starjet.coeffring.forms import (
    Form,
    FormMatrix,
    NotInvertible,
    coeff_sup_bound,
    invert_form_matrix,
    rational_inverse,
    sharp_matrix,
)
from starjet.coeffring.kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from starjet.coeffring.rational import Q, fmt_rational, parse_rational
from starjet.coeffring.series import HSeries

__all__ = [
    "AFFINE",
    "TORUS",
    "BaseFunction",
    "Chart",
    "ChartMismatch",
    "Form",
    "FormMatrix",
    "HSeries",
    "KERNEL_IMPLEMENTATION",
    "NotInvertible",
    "Q",
    "coeff_sup_bound",
    "fmt_rational",
    "invert_form_matrix",
    "parse_label",
    "parse_rational",
    "rational_inverse",
    "sharp_matrix",
]

"""Exact rational arithmetic carrier and string interchange format.

All certificate math in this package runs over exact rationals.  gmpy2's mpq
is used when available (an order of magnitude faster); fractions.Fraction is
the drop-in fallback.  Both are numbers.Rational, normalize to lowest terms
with positive denominator, and hash/compare interchangeably.
"""

from __future__ import annotations

import re

try:
    from gmpy2 import mpq as Rational

    _BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as Rational

    _BACKEND = "fractions"

# Grammar for rationals in problem files and reports: -?[0-9]+(/[1-9][0-9]*)?
_RATIONAL_RE = re.compile(r"-?[0-9]+(/[1-9][0-9]*)?\Z")

ZERO = Rational(0)
ONE = Rational(1)


class RationalFormatError(ValueError):
    """A string does not match the rational interchange grammar."""


def rat(numerator, denominator=None):
    """Build a rational from ints, strings, or another rational."""
    if denominator is not None:
        return Rational(numerator) / Rational(denominator)
    if isinstance(numerator, str):
        return parse_rational(numerator)
    return Rational(numerator)


def parse_rational(text: str):
    """Parse "num" or "num/den" with den > 0; reject anything else."""
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise RationalFormatError(f"not a rational literal: {text!r}")
    if "/" in text:
        num, den = text.split("/")
        return Rational(int(num)) / Rational(int(den))
    return Rational(int(text))


def format_rational(value) -> str:
    """Canonical "num/den" form, plain integer when the denominator is 1."""
    num, den = value.numerator, value.denominator
    return str(num) if den == 1 else f"{num}/{den}"


def is_rational_literal(text: str) -> bool:
    return isinstance(text, str) and bool(_RATIONAL_RE.match(text))


# Small exact-vector helpers used across the geometry and loss modules.
# Vectors are plain tuples of rationals.


def vec(values) -> tuple:
    return tuple(Rational(v) if not isinstance(v, type(ZERO)) else v for v in values)


def dot(a, b):
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    total = ZERO
    for x, y in zip(a, b):
        total += x * y
    return total


def vadd(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a, b) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def vscale(k, a) -> tuple:
    return tuple(k * x for x in a)


def linf_norm(a):
    return max((abs(x) for x in a), default=ZERO)


def format_vector(a) -> list:
    return [format_rational(x) for x in a]


def parse_vector(items) -> tuple:
    return tuple(parse_rational(x) for x in items)

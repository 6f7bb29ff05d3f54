"""Outward-rounded interval evaluation of alpha-volumes.

Wraps ``mpmath.iv``; every quantity is an enclosure, and strict comparisons
are only reported when they hold for the whole enclosure.
"""
from __future__ import annotations

from fractions import Fraction
from math import ceil, floor

from mpmath import iv

PRECISION_BITS = 128
iv.prec = PRECISION_BITS


def set_precision(bits: int) -> None:
    global PRECISION_BITS
    if bits < 60:
        raise ValueError("at least 60 bits are required")
    PRECISION_BITS = bits
    iv.prec = bits


def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    v = Fraction(int(man)) * (Fraction(2) ** exp) if exp >= 0 else Fraction(int(man), 2 ** (-exp))
    return -v if sign else v


def bounds(x) -> tuple[Fraction, Fraction]:
    """Exact rational endpoints of an interval."""
    lo, hi = x._mpi_
    return _raw_to_fraction(lo), _raw_to_fraction(hi)


def exact(v) -> "iv.mpf":
    """Tightest enclosure of a rational number."""
    v = Fraction(v)
    if v.denominator == 1:
        return iv.mpf(v.numerator)
    return iv.mpf(v.numerator) / v.denominator


def as_interval(v):
    if hasattr(v, "_mpi_"):
        return v
    if isinstance(v, float):
        return iv.mpf(v)
    return exact(v)


def power(a: int, alpha) -> "iv.mpf":
    """Enclosure of a**alpha for a positive integer a and rational alpha."""
    if a <= 0:
        raise ValueError("base must be positive")
    alpha = as_interval(alpha)
    if a == 1:
        return iv.mpf(1)
    lo, hi = bounds(alpha)
    if lo == hi == 0:
        return iv.mpf(1)
    if lo == hi == 1:
        return iv.mpf(a)
    return iv.exp(alpha * iv.log(iv.mpf(a)))


def alpha_volume(terms, alpha) -> "iv.mpf":
    """sum over ((a, b), count) of count * a^alpha * b^(1-alpha)."""
    alpha = as_interval(alpha)
    beta = 1 - alpha
    total = iv.mpf(0)
    for (a, b), cnt in terms:
        total += cnt * power(a, alpha) * power(b, beta)
    return total


def log2(x) -> "iv.mpf":
    return iv.log(as_interval(x)) / iv.log(iv.mpf(2))


def root(x, n: int) -> "iv.mpf":
    if n == 1:
        return as_interval(x)
    return iv.exp(iv.log(as_interval(x)) / n)


def certainly_less(x, y) -> bool:
    """True when every point of x is strictly below every point of y."""
    return bounds(as_interval(x))[1] < bounds(as_interval(y))[0]


def certainly_leq(x, y) -> bool:
    return bounds(as_interval(x))[1] <= bounds(as_interval(y))[0]


def width(x) -> Fraction:
    lo, hi = bounds(x)
    return hi - lo


def overlaps(x, y) -> bool:
    a, b = bounds(as_interval(x))
    c, d = bounds(as_interval(y))
    return a <= d and c <= b


def upper_decimal(x, places: int = 7) -> str:
    """Decimal string rounded up from the upper endpoint."""
    hi = bounds(as_interval(x))[1]
    scaled = ceil(hi * 10 ** places)
    return _fmt_scaled(scaled, places)


def lower_decimal(x, places: int = 7) -> str:
    lo = bounds(as_interval(x))[0]
    scaled = floor(lo * 10 ** places)
    return _fmt_scaled(scaled, places)


def _fmt_scaled(scaled: int, places: int) -> str:
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{s[:-places]}.{s[-places:]}" if places else f"{sign}{s}"


def midpoint(x) -> float:
    lo, hi = bounds(as_interval(x))
    return float((lo + hi) / 2)


def imin(values):
    """Interval enclosure of the pointwise minimum."""
    values = [as_interval(v) for v in values]
    lo = min(bounds(v)[0] for v in values)
    hi = min(bounds(v)[1] for v in values)
    return iv.mpf([exact(lo).a, exact(hi).b]) if lo != hi else exact(lo)


def imax(values):
    values = [as_interval(v) for v in values]
    lo = max(bounds(v)[0] for v in values)
    hi = max(bounds(v)[1] for v in values)
    return iv.mpf([exact(lo).a, exact(hi).b]) if lo != hi else exact(lo)

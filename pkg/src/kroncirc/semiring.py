"""Coefficient domains for circuits.

Five modes are supported: exact rationals, integers mod a prime, cyclotomic
integers Z[X]/Phi_m (with an optional common denominator), the Boolean OR
semiring and the PAR semiring that counts multiplicities without
cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd


def _poly_divmod(num: list[int], den: list[int]) -> tuple[list[int], list[int]]:
    # integer polynomial division by a monic divisor, coefficients low degree first
    num = list(num)
    q = [0] * max(1, len(num) - len(den) + 1)
    for shift in range(len(num) - len(den), -1, -1):
        c = num[shift + len(den) - 1]
        if c:
            q[shift] = c
            for i, dc in enumerate(den):
                num[shift + i] -= c * dc
    rem = num[: len(den) - 1]
    return q, rem


@lru_cache(maxsize=None)
def cyclotomic_poly(m: int) -> tuple[int, ...]:
    """Coefficients of Phi_m, lowest degree first."""
    if m < 1:
        raise ValueError("m must be positive")
    num = [-1] + [0] * (m - 1) + [1]
    for k in range(1, m):
        if m % k == 0:
            num, rem = _poly_divmod(num, list(cyclotomic_poly(k)))
            assert not any(rem)
    while len(num) > 1 and num[-1] == 0:
        num.pop()
    return tuple(num)


def reduce_mod_phi(coeffs, m: int) -> tuple[int, ...]:
    """Reduce an integer polynomial (low degree first) modulo Phi_m."""
    phi = cyclotomic_poly(m)
    deg = len(phi) - 1
    c = [int(x) for x in coeffs]
    if len(c) < deg:
        c = c + [0] * (deg - len(c))
    if len(c) > deg:
        _, c = _poly_divmod(c, list(phi))
    return tuple(c)


@dataclass(frozen=True)
class Cyc:
    """Element (c_0 + c_1 w + ... ) / den of Z[w] with w a primitive m-th root of unity."""

    m: int
    coeffs: tuple
    den: int = 1

    def __post_init__(self):
        c = reduce_mod_phi(self.coeffs, self.m)
        den = self.den
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            c, den = tuple(-x for x in c), -den
        g = den
        for x in c:
            g = gcd(g, x)
        if g > 1:
            c, den = tuple(x // g for x in c), den // g
        if not any(c):
            den = 1
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "den", den)

    @classmethod
    def root(cls, m: int, e: int) -> "Cyc":
        c = [0] * m
        c[e % m] = 1
        return cls(m, tuple(c))

    @classmethod
    def const(cls, m: int, v) -> "Cyc":
        v = Fraction(v)
        return cls(m, (v.numerator,), v.denominator)

    def _coerce(self, other) -> "Cyc":
        if isinstance(other, Cyc):
            if other.m != self.m:
                raise ValueError("mixing cyclotomic orders")
            return other
        return Cyc.const(self.m, other)

    def __add__(self, other):
        o = self._coerce(other)
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = o.coeffs + (0,) * (n - len(o.coeffs))
        return Cyc(self.m, tuple(x * o.den + y * self.den for x, y in zip(a, b)), self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return Cyc(self.m, tuple(-x for x in self.coeffs), self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        out = [0] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(o.coeffs):
                    out[i + j] += x * y
        return Cyc(self.m, tuple(out), self.den * o.den)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Cyc):
            return self.m == other.m and self.coeffs == other.coeffs and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == Cyc.const(self.m, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.m, self.coeffs, self.den))

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return Fraction(self.coeffs[0], self.den)

    def __repr__(self):
        body = ",".join(str(x) for x in self.coeffs)
        return f"({body})" + (f"/{self.den}" if self.den != 1 else "")


@dataclass(frozen=True)
class Semiring:
    """A coefficient domain. ``kind`` is rational, modp, cyclotomic, or, par."""

    kind: str
    param: int = 0

    def __post_init__(self):
        if self.kind not in ("rational", "modp", "cyclotomic", "or", "par"):
            raise ValueError(f"unknown semiring kind {self.kind!r}")
        if self.kind == "modp" and self.param < 2:
            raise ValueError("modp needs a modulus >= 2")
        if self.kind == "cyclotomic" and self.param < 1:
            raise ValueError("cyclotomic needs m >= 1")

    @property
    def is_field(self) -> bool:
        return self.kind in ("rational", "modp", "cyclotomic")

    @property
    def zero(self):
        return Cyc.const(self.param, 0) if self.kind == "cyclotomic" else 0

    @property
    def one(self):
        return Cyc.const(self.param, 1) if self.kind == "cyclotomic" else 1

    def coerce(self, v):
        k = self.kind
        if k == "rational":
            if isinstance(v, Cyc):
                v = v.to_fraction()
            v = Fraction(v)
            return v.numerator if v.denominator == 1 else v
        if k == "modp":
            v = Fraction(v)
            return v.numerator * pow(v.denominator, -1, self.param) % self.param
        if k == "cyclotomic":
            return v if isinstance(v, Cyc) else Cyc.const(self.param, v)
        if k == "or":
            return 1 if v else 0
        v = int(v)
        if v < 0:
            raise ValueError("PAR values are nonnegative multiplicities")
        return v

    def add(self, a, b):
        k = self.kind
        if k == "or":
            return 1 if (a or b) else 0
        if k == "modp":
            return (a + b) % self.param
        return a + b

    def mul(self, a, b):
        k = self.kind
        if k == "or":
            return 1 if (a and b) else 0
        if k == "modp":
            return a * b % self.param
        return a * b

    def is_zero(self, v) -> bool:
        return v == 0

    def token(self) -> str:
        if self.kind == "modp":
            return f"mod{self.param}"
        if self.kind == "cyclotomic":
            return f"cyclo{self.param}"
        return self.kind

    @classmethod
    def from_token(cls, tok: str) -> "Semiring":
        if tok.startswith("mod"):
            return cls("modp", int(tok[3:]))
        if tok.startswith("cyclo"):
            return cls("cyclotomic", int(tok[5:]))
        return cls(tok)

    def format(self, v) -> str:
        if self.kind == "cyclotomic":
            return repr(v)
        v = Fraction(v)
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

    def parse(self, s: str):
        if self.kind == "cyclotomic":
            den = 1
            if ")/" in s:
                s, d = s.rsplit("/", 1)
                den = int(d)
            body = s.strip()[1:-1]
            return Cyc(self.param, tuple(int(x) for x in body.split(",")), den)
        return self.coerce(Fraction(s))


RATIONAL = Semiring("rational")
OR = Semiring("or")
PAR = Semiring("par")


def modp(p: int) -> Semiring:
    return Semiring("modp", p)


def cyclotomic(m: int) -> Semiring:
    return Semiring("cyclotomic", m)

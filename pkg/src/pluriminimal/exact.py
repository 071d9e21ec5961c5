"""Exact Gaussian-rational scalars and sparse polynomials over them."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple, Union

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class GaussRational:
    """Complex number a + bi with rational a and b."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(repr(x.real)), Fraction(repr(x.imag)))
        if isinstance(x, float):
            return cls(Fraction(repr(x)))
        return cls(Fraction(x))

    def __add__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __mul__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRational.coerce(other)
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * o.conjugate()
        return GaussRational(num.re / d, num.im / d)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative exponent")
        out, base = GaussRational(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = GaussRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "GaussRational":
        return GaussRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_negative(self) -> bool:
        """Sign used for printing: real part < 0, or purely imaginary with im < 0."""
        return self.re < 0 or (self.re == 0 and self.im < 0)

    def to_json(self) -> list:
        return [
            self.re.numerator,
            self.re.denominator,
            self.im.numerator,
            self.im.denominator,
        ]

    @classmethod
    def from_json(cls, v) -> "GaussRational":
        a, b, c, d = v
        return cls(Fraction(a, b), Fraction(c, d))

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


ZERO = GaussRational(0)
ONE = GaussRational(1)
I = GaussRational(0, 1)

# A polynomial in m variables: exponent tuple -> nonzero coefficient.
Poly = Dict[Tuple[int, ...], GaussRational]


def poly_const(c, m: int) -> Poly:
    c = GaussRational.coerce(c)
    return {(0,) * m: c} if c else {}


def poly_var(j: int, m: int) -> Poly:
    return {tuple(1 if i == j else 0 for i in range(m)): ONE}


def poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for k, c in q.items():
        s = out.get(k, ZERO) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def poly_scale(p: Poly, c) -> Poly:
    c = GaussRational.coerce(c)
    if not c:
        return {}
    return {k: v * c for k, v in p.items()}


def poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ka, a in p.items():
        for kb, b in q.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            s = out.get(k, ZERO) + a * b
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def poly_pow(p: Poly, k: int, m: int) -> Poly:
    out = poly_const(1, m)
    for _ in range(k):
        out = poly_mul(out, p)
    return out


def poly_diff(p: Poly, j: int) -> Poly:
    out: Poly = {}
    for k, c in p.items():
        if k[j]:
            e = list(k)
            e[j] -= 1
            out[tuple(e)] = c * k[j]
    return out


def poly_degree(p: Poly) -> int:
    return max((sum(k) for k in p), default=-1)

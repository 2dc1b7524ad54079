"""Exact real numbers of the form q_1*sqrt(r_1) + ... + q_n*sqrt(r_n).

Each q_i is a Fraction and each r_i a distinct squarefree positive integer.
Sums, differences and products stay inside this set, which is enough to carry
the square roots of Radon-Nikodym ratios through exact operator checks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational


@lru_cache(maxsize=4096)
def split_square(n: int) -> tuple[int, int]:
    """Return (s, r) with n = s*s*r and r squarefree."""
    if n <= 0:
        raise ValueError("split_square needs a positive integer")
    s, r = 1, 1
    m = n
    p = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            r *= p
        p += 1 if p == 2 else 2
    r *= m
    return s, r


class Surd:
    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, Fraction] | None = None):
        self.terms = {r: Fraction(q) for r, q in (terms or {}).items() if q != 0}

    @classmethod
    def of(cls, value) -> "Surd":
        if isinstance(value, Surd):
            return value
        if isinstance(value, (int, Rational)):
            return cls({1: Fraction(value)})
        raise TypeError(f"cannot convert {type(value).__name__} to Surd exactly")

    @classmethod
    def sqrt(cls, value) -> "Surd":
        """Exact square root of a non-negative rational."""
        q = Fraction(value)
        if q < 0:
            raise ValueError("square root of a negative number")
        if q == 0:
            return cls()
        # sqrt(p/d) = sqrt(p*d)/d
        s, r = split_square(q.numerator * q.denominator)
        return cls({r: Fraction(s, q.denominator)})

    def is_rational(self) -> bool:
        return set(self.terms) <= {1}

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("value is irrational")
        return self.terms.get(1, Fraction(0))

    def __add__(self, other):
        try:
            other = Surd.of(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for r, q in other.terms.items():
            out[r] = out.get(r, Fraction(0)) + q
        return Surd(out)

    __radd__ = __add__

    def __neg__(self):
        return Surd({r: -q for r, q in self.terms.items()})

    def __sub__(self, other):
        try:
            return self + (-Surd.of(other))
        except TypeError:
            return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = Surd.of(other)
        except TypeError:
            return NotImplemented
        out: dict[int, Fraction] = {}
        for r1, q1 in self.terms.items():
            for r2, q2 in other.terms.items():
                g = math.gcd(r1, r2)
                # sqrt(r1*r2) = g*sqrt((r1/g)*(r2/g)), the second factor is squarefree
                r = (r1 // g) * (r2 // g)
                out[r] = out.get(r, Fraction(0)) + q1 * q2 * g
        return Surd(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Surd):
            if not other.is_rational():
                return NotImplemented
            other = other.rational()
        if not isinstance(other, (int, Rational)):
            return NotImplemented
        return Surd({r: q / other for r, q in self.terms.items()})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        try:
            other = Surd.of(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __float__(self):
        return float(sum(float(q) * math.sqrt(r) for r, q in self.terms.items()))

    def __abs__(self):
        return self if float(self) >= 0 else -self

    def __repr__(self):
        if not self.terms:
            return "Surd(0)"
        parts = []
        for r in sorted(self.terms):
            q = self.terms[r]
            parts.append(str(q) if r == 1 else f"{q}*sqrt({r})")
        return "Surd(" + " + ".join(parts) + ")"

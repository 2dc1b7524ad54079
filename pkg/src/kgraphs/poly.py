"""Bivariate polynomials in x, y with exact rational coefficients."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from .errors import InvalidInput

_FACTOR = re.compile(r"^([xy])(?:\^(\d+))?$")


def _num(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError):
        raise InvalidInput(f"bad coefficient {value!r}") from None


class Poly:
    """sum c_{ij} x^i y^j, stored as {(i, j): c}."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        self.terms = {}
        for mono, c in (terms or {}).items():
            c = _num(c)
            if c != 0:
                self.terms[(int(mono[0]), int(mono[1]))] = c

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "Poly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "Poly":
        return cls({(0, 1): 1})

    @classmethod
    def affine(cls, slope, offset) -> "Poly":
        """slope*x + offset."""
        return cls({(1, 0): slope, (0, 0): offset})

    @classmethod
    def parse(cls, data) -> "Poly":
        """Read {"1": c, "x": c, "x*y": c, "x^2": c, ...} or [[i, j, c], ...]."""
        if isinstance(data, Poly):
            return data
        if isinstance(data, (int, float, str)) and not isinstance(data, bool):
            return cls.const(_num(data))
        if isinstance(data, list):
            try:
                return cls({(int(i), int(j)): c for i, j, c in data})
            except (TypeError, ValueError):
                raise InvalidInput("polynomial lists hold [i, j, coefficient] triples") from None
        if not isinstance(data, dict):
            raise InvalidInput(f"cannot read polynomial {data!r}")
        out: dict[tuple[int, int], Fraction] = {}
        for key, c in data.items():
            mono = [0, 0]
            key = str(key).replace(" ", "")
            if key not in ("", "1"):
                for part in key.split("*"):
                    m = _FACTOR.match(part)
                    if not m:
                        raise InvalidInput(f"bad monomial {key!r}")
                    mono["xy".index(m.group(1))] += int(m.group(2) or 1)
            t = (mono[0], mono[1])
            out[t] = out.get(t, Fraction(0)) + _num(c)
        return cls(out)

    def to_json(self) -> dict:
        out = {}
        for (i, j), c in sorted(self.terms.items()):
            parts = []
            if i:
                parts.append("x" if i == 1 else f"x^{i}")
            if j:
                parts.append("y" if j == 1 else f"y^{j}")
            out["*".join(parts) or "1"] = str(c)
        return out

    # -- arithmetic --

    def __add__(self, other):
        other = other if isinstance(other, Poly) else Poly.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-(other if isinstance(other, Poly) else Poly.const(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = _num(other)
            return Poly({m: c * v for m, v in self.terms.items()})
        out: dict[tuple[int, int], Fraction] = {}
        for (i, j), a in self.terms.items():
            for (p, q), b in other.terms.items():
                key = (i + p, j + q)
                out[key] = out.get(key, Fraction(0)) + a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- calculus and evaluation --

    @property
    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=0)

    def uses_y(self) -> bool:
        return any(j for _, j in self.terms)

    def diff(self, var: str) -> "Poly":
        out = {}
        for (i, j), c in self.terms.items():
            if var == "x" and i:
                out[(i - 1, j)] = c * i
            elif var == "y" and j:
                out[(i, j - 1)] = c * j
        return Poly(out)

    def compose(self, fx: "Poly", fy: "Poly | None" = None) -> "Poly":
        """self(fx(x, y), fy(x, y))."""
        fy = fy if fy is not None else Poly.y()
        out = Poly()
        xs = [Poly.const(1)]
        ys = [Poly.const(1)]
        for i, j in self.terms:
            while len(xs) <= i:
                xs.append(xs[-1] * fx)
            while len(ys) <= j:
                ys.append(ys[-1] * fy)
        for (i, j), c in self.terms.items():
            out = out + xs[i] * ys[j] * c
        return out

    def __call__(self, x, y=0):
        exact = isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction))
        total = Fraction(0) if exact else 0.0
        for (i, j), c in self.terms.items():
            total += (c if exact else float(c)) * x**i * y**j
        return total

    def coefficient(self, i: int, j: int = 0) -> Fraction:
        return self.terms.get((i, j), Fraction(0))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (i, j), c in sorted(self.terms.items()):
            mono = "*".join(p for p in ("x" * bool(i) + (f"^{i}" if i > 1 else ""), "y" * bool(j) + (f"^{j}" if j > 1 else "")) if p)
            parts.append(f"{c}" if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)

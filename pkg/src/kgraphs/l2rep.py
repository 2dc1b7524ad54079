"""Cuntz-Krieger operators on L^2 of the infinite path space.

Vectors are step functions constant on square cylinders. The operator S_lam
prefixes by lam and rescales by the inverse square root of the Radon-Nikodym
ratio of the measure; its adjoint strips lam via minimal common extensions.
Nothing is materialized as a matrix: operators act on step functions and
results are compared after refining to a common level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .errors import GraphMismatch, LevelDecrease, UnsupportedMeasure
from .kgraph import (
    Degree,
    KGraph,
    Path,
    compose,
    lambda_min,
    paths_of_degree,
    paths_up_to,
)
from .measures import CylinderMeasure, _same_graph
from .surd import Surd


def _is_zero(c) -> bool:
    return not c if isinstance(c, Surd) else c == 0


@dataclass(frozen=True)
class StepFunction:
    """Finite combination of indicators of square cylinders at one level."""

    graph: KGraph
    level: int
    coeffs: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        for lam in self.coeffs:
            if lam.degree != self.graph.unit(self.level):
                raise ValueError(f"{lam} is not at level {self.level}")

    @classmethod
    def indicator(cls, g: KGraph, lam: Path, one=1) -> "StepFunction":
        """chi_{Z(lam)}, refined to the smallest square level containing lam."""
        n = max(lam.degree) if lam.degree else 0
        base = cls(g, n, {})
        if lam.degree == g.unit(n):
            return cls(g, n, {lam: one})
        out = {}
        for mu in paths_of_degree(g, g.unit(n) - lam.degree, lam.source):
            out[compose(g, lam, mu)] = one
        return cls(base.graph, n, out)

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.coeffs.values())

    def scaled(self, c) -> "StepFunction":
        return StepFunction(self.graph, self.level, {k: c * v for k, v in self.coeffs.items()})

    def __add__(self, other: "StepFunction") -> "StepFunction":
        n = max(self.level, other.level)
        a, b = refine(self, n), refine(other, n)
        out = dict(a.coeffs)
        for k, v in b.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return StepFunction(self.graph, n, {k: v for k, v in out.items() if not _is_zero(v)})

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + other.scaled(-1)

    def __repr__(self):
        body = ", ".join(f"{v}*Z({k})" for k, v in sorted(self.coeffs.items(), key=lambda kv: str(kv[0])))
        return f"StepFunction(level={self.level}, {body or '0'})"


def refine(f: StepFunction, level: int) -> StepFunction:
    """The same function written on square cylinders of a finer level."""
    if level < f.level:
        raise LevelDecrease(f"cannot refine level {f.level} down to {level}")
    if level == f.level:
        return f
    g = f.graph
    step = g.unit(level - f.level)
    out = {}
    for lam, c in f.coeffs.items():
        for mu in paths_of_degree(g, step, lam.source):
            out[compose(g, lam, mu)] = c
    return StepFunction(g, level, out)


def inner_product(m: CylinderMeasure, f: StepFunction, h: StepFunction):
    """<f, h> in L^2(m); scalars are real."""
    if not (_same_graph(m.graph, f.graph) and _same_graph(m.graph, h.graph)):
        raise GraphMismatch("step functions and measure live on different graphs")
    n = max(f.level, h.level)
    a, b = refine(f, n), refine(h, n)
    total = 0
    for lam, c in a.coeffs.items():
        d = b.coeffs.get(lam)
        if d is not None:
            total = total + c * d * m.mass(lam)
    return total


def l2_norm(m: CylinderMeasure, f: StepFunction) -> float:
    return math.sqrt(max(float(inner_product(m, f, f)), 0.0))


@dataclass(frozen=True)
class Letter:
    """One factor t_lam or t_lam^* of an operator word."""

    path: Path
    starred: bool = False


class L2Representation:
    """The operators S_lam of the semibranching representation on L^2(m).

    Radon-Nikodym ratios are read off cylinders of level ``m.rn_depth``. In
    exact mode coefficients are Surd values and every identity is checked
    with zero tolerance.
    """

    def __init__(self, m: CylinderMeasure, exact: bool | None = None):
        certified_exact = m.exact and m.rn_error(m.rn_depth) == 1.0
        if exact is None:
            exact = certified_exact
        if exact and not certified_exact:
            raise UnsupportedMeasure(f"{m.kind} measure has no exact Radon-Nikodym ratios")
        self.m = m
        self.g = m.graph
        self.exact = exact
        self.depth = m.rn_depth
        self._s: dict[tuple[Path, Path], StepFunction] = {}
        self._t: dict[tuple[Path, Path], StepFunction] = {}

    @property
    def one(self):
        return Surd.of(1) if self.exact else 1.0

    def _sqrt(self, q):
        if self.exact:
            return Surd.sqrt(q)
        return math.sqrt(float(q))

    def _rn(self, lam: Path, base: Path):
        return self.m.mass(compose(self.g, lam, base)) / self.m.mass(base)

    def indicator(self, lam: Path) -> StepFunction:
        return StepFunction.indicator(self.g, lam, self.one)

    def _square_up(self, lam: Path, level: int, coeff, out: dict) -> None:
        for mu in paths_of_degree(self.g, self.g.unit(level) - lam.degree, lam.source):
            out[compose(self.g, lam, mu)] = coeff

    def S_basis(self, lam: Path, eta: Path) -> StepFunction:
        """S_lam chi_{Z(eta)} for a square path eta."""
        key = (lam, eta)
        hit = self._s.get(key)
        if hit is not None:
            return hit
        g = self.g
        top = max(lam.degree)
        n = max(eta.degree[0], self.depth)
        out: dict = {}
        if lam.source == eta.range:
            for ext in paths_of_degree(g, g.unit(n - eta.degree[0]), eta.source):
                base = compose(g, eta, ext)
                rn = self._rn(lam, base)
                coeff = self._sqrt(1 / rn) if self.exact else 1 / math.sqrt(float(rn))
                self._square_up(compose(g, lam, base), n + top, coeff, out)
        res = StepFunction(g, n + top, out)
        self._s[key] = res
        return res

    def S_adjoint_basis(self, lam: Path, zeta: Path) -> StepFunction:
        """S_lam^* chi_{Z(zeta)} for a square path zeta."""
        key = (lam, zeta)
        hit = self._t.get(key)
        if hit is not None:
            return hit
        g = self.g
        pieces = []
        for alpha, _beta in lambda_min(g, lam, zeta):
            n = max(self.depth, max(alpha.degree))
            for ext in paths_of_degree(g, g.unit(n) - alpha.degree, alpha.source):
                base = compose(g, alpha, ext)
                pieces.append((base, self._sqrt(self._rn(lam, base))))
        level = max((max(p.degree) for p, _ in pieces), default=0)
        res = StepFunction(g, level, {})
        for base, w in pieces:
            res = res + StepFunction(g, max(base.degree), {base: w})
        self._t[key] = res
        return res

    def _check_graph(self, f: StepFunction) -> None:
        if not _same_graph(self.g, f.graph):
            raise GraphMismatch("step function lives on another graph")

    def apply_S(self, lam: Path, f: StepFunction) -> StepFunction:
        self._check_graph(f)
        out = StepFunction(self.g, 0, {})
        for eta, c in f.coeffs.items():
            if eta.range == lam.source:
                out = out + self.S_basis(lam, eta).scaled(c)
        return out

    def apply_S_adjoint(self, lam: Path, f: StepFunction) -> StepFunction:
        self._check_graph(f)
        out = StepFunction(self.g, 0, {})
        for zeta, c in f.coeffs.items():
            if zeta.range == lam.range:
                out = out + self.S_adjoint_basis(lam, zeta).scaled(c)
        return out

    def apply_word(self, word: Sequence[Letter], f: StepFunction) -> StepFunction:
        """Apply the operator product L_1 L_2 ... L_m, so L_m acts first."""
        for letter in reversed(list(word)):
            if letter.starred:
                f = self.apply_S_adjoint(letter.path, f)
            else:
                f = self.apply_S(letter.path, f)
        return f

    def defect(self, a: StepFunction, b: StepFunction) -> float:
        """L^2(m) norm of a - b; exactly 0.0 when the difference vanishes."""
        diff = a - b
        if diff.is_zero():
            return 0.0
        return l2_norm(self.m, diff)

    def tolerance(self) -> float:
        if self.exact:
            return 0.0
        err = self.m.rn_error(self.depth)
        return max(1e-9, 4 * (err - 1))


# -- Cuntz-Krieger verification ---------------------------------------------


@dataclass
class RelationResult:
    name: str
    cases: int = 0
    max_defect: float = 0.0
    failures: list = field(default_factory=list)
    tol: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol

    def record(self, defect: float, label: str) -> None:
        self.cases += 1
        if defect > self.max_defect:
            self.max_defect = defect
        if defect > self.tol and len(self.failures) < 10:
            self.failures.append({"case": label, "defect": defect})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cases": self.cases,
            "maxDefect": self.max_defect,
            "pass": self.passed,
            "failures": self.failures,
        }


@dataclass
class CKReport:
    relations: list[RelationResult]
    exact: bool
    tol: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.relations)

    @property
    def max_defect(self) -> float:
        return max((r.max_defect for r in self.relations), default=0.0)

    def relation(self, name: str) -> RelationResult:
        return next(r for r in self.relations if r.name == name)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "exact": self.exact,
            "tol": self.tol,
            "maxDefect": self.max_defect,
            "relations": [r.to_dict() for r in self.relations],
            **self.extra,
        }


def _parallel_map(fn, items: list, workers: int) -> list:
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def verify_ck_l2(
    m: CylinderMeasure,
    level: int,
    bound: Sequence[int],
    tol: float | None = None,
    exact: bool | None = None,
    workers: int = 1,
) -> CKReport:
    """Check (CK1)-(CK4) and the adjoint product expansion on all basis
    indicators at ``level`` and all paths of degree <= ``bound``."""
    rep = L2Representation(m, exact)
    g = m.graph
    tol = rep.tolerance() if tol is None else tol
    bound = Degree(bound)
    basis = [rep.indicator(lam) for lam in paths_of_degree(g, g.unit(level))]
    paths = paths_up_to(g, bound)
    verts = [g.vertex(v) for v in g.vertices]
    results = {n: RelationResult(n, tol=tol) for n in ("CK1", "CK2", "CK3", "CK4", "adjoint_product")}

    def ck1(f):
        out = []
        for v in verts:
            sv = rep.apply_S(v, f)
            out.append((rep.defect(rep.apply_S_adjoint(v, f), sv), f"S_{v.range}* = S_{v.range}"))
            for w in verts:
                lhs = rep.apply_S(v, rep.apply_S(w, f))
                rhs = sv if v == w else StepFunction(g, 0, {})
                out.append((rep.defect(lhs, rhs), f"S_{v.range} S_{w.range}"))
        return out

    def ck2(f):
        out = []
        for lam in paths:
            for mu in paths:
                if lam.source != mu.range:
                    continue
                lhs = rep.apply_S(lam, rep.apply_S(mu, f))
                rhs = rep.apply_S(compose(g, lam, mu), f)
                out.append((rep.defect(lhs, rhs), f"S_{lam} S_{mu}"))
        return out

    def ck3(f):
        out = []
        for lam in paths:
            lhs = rep.apply_S_adjoint(lam, rep.apply_S(lam, f))
            rhs = rep.apply_S(g.vertex(lam.source), f)
            out.append((rep.defect(lhs, rhs), f"S_{lam}* S_{lam}"))
        return out

    degrees = sorted({p.degree for p in paths})

    def ck4(f):
        out = []
        for n in degrees:
            for v in g.vertices:
                lhs = StepFunction(g, 0, {})
                for lam in paths_of_degree(g, n, v):
                    lhs = lhs + rep.apply_S(lam, rep.apply_S_adjoint(lam, f))
                rhs = rep.apply_S(g.vertex(v), f)
                out.append((rep.defect(lhs, rhs), f"sum over {v}Lambda^{tuple(n)}"))
        return out

    def adjoint_product(f):
        out = []
        for lam in paths:
            for eta in paths:
                if lam.range != eta.range:
                    continue
                lhs = rep.apply_S_adjoint(lam, rep.apply_S(eta, f))
                rhs = StepFunction(g, 0, {})
                for alpha, beta in lambda_min(g, lam, eta):
                    rhs = rhs + rep.apply_S(alpha, rep.apply_S_adjoint(beta, f))
                out.append((rep.defect(lhs, rhs), f"S_{lam}* S_{eta}"))
        return out

    checks = {"CK1": ck1, "CK2": ck2, "CK3": ck3, "CK4": ck4, "adjoint_product": adjoint_product}
    for name, fn in checks.items():
        for batch in _parallel_map(fn, basis, workers):
            for defect, label in batch:
                results[name].record(defect, label)
    return CKReport(
        list(results.values()),
        rep.exact,
        tol,
        {"level": level, "bound": list(bound), "basisSize": len(basis), "paths": len(paths)},
    )


def adjoint_pairing_defect(m: CylinderMeasure, lam: Path, f: StepFunction, h: StepFunction, rep=None) -> float:
    """|<S_lam^* f, h> - <f, S_lam h>|."""
    rep = rep or L2Representation(m)
    a = inner_product(m, rep.apply_S_adjoint(lam, f), h)
    b = inner_product(m, f, rep.apply_S(lam, h))
    d = a - b
    if isinstance(d, Surd) and not d:
        return 0.0
    return abs(float(d))


def basis_at(g: KGraph, level: int, one=1) -> list[StepFunction]:
    return [StepFunction(g, level, {lam: one}) for lam in paths_of_degree(g, g.unit(level))]


__all__ = [
    "CKReport",
    "L2Representation",
    "Letter",
    "RelationResult",
    "StepFunction",
    "adjoint_pairing_defect",
    "basis_at",
    "inner_product",
    "l2_norm",
    "refine",
    "verify_ck_l2",
]

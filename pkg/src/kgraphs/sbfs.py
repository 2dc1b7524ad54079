"""Edge-level semibranching function systems on intervals and the unit square.

A system assigns each vertex a domain D_v and each edge e a prefixing map
tau_e from D_{s(e)} onto a declared range R_e. The checker tests the five
edge-level conditions: shared domains, almost-disjoint domains, commuting
squares, commuting coding maps and almost-full range covers.

Set arithmetic is exact for unions of open intervals and open boxes.
Regions may also contain cells {p > 0} inside a box; an elementary rectangle
cut by a single polynomial is still decided exactly when both sides of the
cut agree, and is grid-sampled otherwise. Results say which method was used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import DegeneratePiece, InvalidInput, MalformedRegion, OnBoundary
from .kgraph import KGraph, product_graph, validate_kgraph
from .library import standard_library
from .poly import Poly, _num

SAMPLE_TOL = 1e-9


# -- regions ----------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not self.lo < self.hi:
            raise MalformedRegion(f"empty interval ({self.lo}, {self.hi})")


@dataclass(frozen=True)
class Box:
    x0: Fraction
    x1: Fraction
    y0: Fraction
    y1: Fraction

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise MalformedRegion(f"empty box {self}")

    @property
    def area(self) -> Fraction:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, p, closed: bool = False) -> bool:
        x, y = p
        if closed:
            return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1
        return self.x0 < x < self.x1 and self.y0 < y < self.y1

    def covers(self, other: "Box") -> bool:
        return self.x0 <= other.x0 and other.x1 <= self.x1 and self.y0 <= other.y0 and other.y1 <= self.y1


@dataclass(frozen=True)
class Cell:
    """{(x, y) in box : p(x, y) > 0}."""

    box: Box
    p: Poly
    area: Fraction | None = field(default=None, compare=False)

    def contains(self, pt, closed: bool = False) -> bool:
        v = self.p(*pt)
        return self.box.contains(pt, closed) and (v >= 0 if closed else v > 0)


@dataclass(frozen=True)
class Region:
    dim: int
    parts: tuple

    def __post_init__(self):
        want = (Interval,) if self.dim == 1 else (Box, Cell)
        if self.dim not in (1, 2) or not all(isinstance(p, want) for p in self.parts):
            raise MalformedRegion("parts do not match the dimension")

    @classmethod
    def interval(cls, lo, hi) -> "Region":
        return cls(1, (Interval(_num(lo), _num(hi)),))

    @classmethod
    def intervals(cls, pairs: Iterable) -> "Region":
        return cls(1, tuple(Interval(_num(a), _num(b)) for a, b in pairs))

    @classmethod
    def box(cls, x0, x1, y0, y1) -> "Region":
        return cls(2, (Box(_num(x0), _num(x1), _num(y0), _num(y1)),))

    @classmethod
    def cell(cls, box: Sequence, p: Poly, area=None) -> "Region":
        b = Box(*(_num(v) for v in box))
        return cls(2, (Cell(b, p, None if area is None else _num(area)),))

    def union(self, other: "Region") -> "Region":
        if self.dim != other.dim:
            raise MalformedRegion("dimension mismatch")
        return Region(self.dim, self.parts + other.parts)

    def contains(self, pt, closed: bool = False) -> bool:
        if self.dim == 1:
            x = pt[0] if isinstance(pt, tuple) else pt
            return any((p.lo <= x <= p.hi) if closed else (p.lo < x < p.hi) for p in self.parts)
        return any(p.contains(pt, closed) for p in self.parts)

    def bounds(self):
        if self.dim == 1:
            return min(p.lo for p in self.parts), max(p.hi for p in self.parts)
        boxes = [p if isinstance(p, Box) else p.box for p in self.parts]
        return (
            min(b.x0 for b in boxes),
            max(b.x1 for b in boxes),
            min(b.y0 for b in boxes),
            max(b.y1 for b in boxes),
        )

    def to_json(self) -> dict:
        if self.dim == 1:
            return {"intervals": [[str(p.lo), str(p.hi)] for p in self.parts]}
        boxes = [[str(v) for v in (p.x0, p.x1, p.y0, p.y1)] for p in self.parts if isinstance(p, Box)]
        cells = []
        for p in self.parts:
            if isinstance(p, Cell):
                c = {"box": [str(v) for v in (p.box.x0, p.box.x1, p.box.y0, p.box.y1)], "positive": p.p.to_json()}
                if p.area is not None:
                    c["area"] = str(p.area)
                cells.append(c)
        out: dict = {"boxes": boxes}
        if cells:
            out["cells"] = cells
        return out

    @classmethod
    def from_json(cls, data) -> "Region":
        if not isinstance(data, dict):
            raise MalformedRegion(f"bad region {data!r}")
        try:
            if "intervals" in data:
                return cls.intervals(data["intervals"])
            parts = [Box(*(_num(v) for v in b)) for b in data.get("boxes", [])]
            for c in data.get("cells", []):
                area = c.get("area")
                parts.append(Cell(Box(*(_num(v) for v in c["box"])), Poly.parse(c["positive"]), None if area is None else _num(area)))
        except (TypeError, ValueError, KeyError) as exc:
            raise MalformedRegion(f"bad region {data!r}: {exc}") from None
        if not parts:
            raise MalformedRegion("region has no parts")
        return cls(2, tuple(parts))


@dataclass
class Measured:
    value: float
    exact: bool

    @property
    def is_zero(self) -> bool:
        return self.value == 0 if self.exact else abs(self.value) < SAMPLE_TOL


def _sign_key(p: Poly) -> tuple[Poly, int]:
    """Canonical representative of p up to sign, and the sign used."""
    lead = max(p.terms)
    return (p, 1) if p.terms[lead] > 0 else (-p, -1)


def measure_of(fn: Callable[[list[bool]], bool], regions: Sequence[Region], sub: int = 64) -> Measured:
    """Lebesgue measure of the set {pt : fn([pt in R for R in regions])}."""
    dim = regions[0].dim
    if dim == 1:
        pts = sorted({e for r in regions for p in r.parts for e in (p.lo, p.hi)})
        total = Fraction(0)
        for a, b in zip(pts, pts[1:]):
            mid = (a + b) / 2
            if fn([r.contains(mid) for r in regions]):
                total += b - a
        return Measured(total, True)
    xs, ys = set(), set()
    for r in regions:
        for p in r.parts:
            b = p if isinstance(p, Box) else p.box
            xs.update((b.x0, b.x1))
            ys.update((b.y0, b.y1))
    xs, ys = sorted(xs), sorted(ys)
    total: Fraction | float = Fraction(0)
    exact = True
    for xa, xb in zip(xs, xs[1:]):
        for ya, yb in zip(ys, ys[1:]):
            e = Box(xa, xb, ya, yb)
            polys = {}
            for r in regions:
                for p in r.parts:
                    if isinstance(p, Cell) and p.box.covers(e):
                        key, _ = _sign_key(p.p)
                        polys[key] = True
            if len(polys) > 1:
                exact = False
                total = float(total) + _sample_cell(fn, regions, e, sub)
                continue
            if not polys:
                if fn([_member_box_only(r, e) for r in regions]):
                    total += e.area
                continue
            q = next(iter(polys))
            plus = fn([_member_signed(r, e, q, 1) for r in regions])
            minus = fn([_member_signed(r, e, q, -1) for r in regions])
            if plus and minus:
                total += e.area
            elif plus or minus:
                known = _declared_area(regions, e, q, 1 if plus else -1)
                if known is not None:
                    total += known
                    continue
                exact = False
                total = float(total) + _sample_cell(fn, regions, e, sub)
    return Measured(total if exact else float(total), exact)


def _declared_area(regions, e: Box, q: Poly, sign: int) -> Fraction | None:
    # the zero set of a nonzero polynomial is null, so either side's area
    # follows from a declared area on exactly this box
    for r in regions:
        for p in r.parts:
            if isinstance(p, Cell) and p.area is not None and p.box == e:
                key, s = _sign_key(p.p)
                if key == q:
                    return p.area if s == sign else e.area - p.area
    return None


def _member_box_only(r: Region, e: Box) -> bool:
    return any(isinstance(p, Box) and p.covers(e) for p in r.parts)


def _member_signed(r: Region, e: Box, q: Poly, sign: int) -> bool:
    for p in r.parts:
        if isinstance(p, Box) and p.covers(e):
            return True
        if isinstance(p, Cell) and p.box.covers(e):
            key, s = _sign_key(p.p)
            if key == q and s == sign:
                return True
    return False


def _sample_cell(fn, regions, e: Box, sub: int) -> float:
    hits = 0
    dx, dy = (e.x1 - e.x0) / sub, (e.y1 - e.y0) / sub
    for i in range(sub):
        for j in range(sub):
            pt = (float(e.x0 + (i + Fraction(1, 2)) * dx), float(e.y0 + (j + Fraction(1, 2)) * dy))
            if fn([r.contains(pt) for r in regions]):
                hits += 1
    return float(e.area) * hits / (sub * sub)


def region_measure(r: Region) -> Measured:
    return measure_of(lambda f: f[0], [r])


def overlap(a: Region, b: Region) -> Measured:
    return measure_of(lambda f: f[0] and f[1], [a, b])


def difference(a: Region, bs: Sequence[Region]) -> Measured:
    """Measure of a minus the union of bs."""
    return measure_of(lambda f: f[0] and not any(f[1:]), [a, *bs])


def same_region(a: Region, b: Region) -> Measured:
    """Measure of the symmetric difference."""
    return measure_of(lambda f: f[0] != f[1], [a, b])


# -- maps -------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    domain: Region
    fx: Poly
    fy: Poly | None = None

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, pt):
        if self.dim == 1:
            x = pt[0] if isinstance(pt, tuple) else pt
            return self.fx(x)
        return (self.fx(*pt), self.fy(*pt))

    def is_affine(self) -> bool:
        return self.fx.degree <= 1 and (self.fy is None or self.fy.degree <= 1)

    def jacobian(self) -> Poly:
        """Slope in 1D, Jacobian determinant in 2D, as a polynomial."""
        if self.dim == 1:
            return self.fx.diff("x")
        return self.fx.diff("x") * self.fy.diff("y") - self.fx.diff("y") * self.fy.diff("x")

    def inverse(self, pt):
        """The preimage of pt inside this piece's domain, or None."""
        if self.dim == 1:
            x = pt[0] if isinstance(pt, tuple) else pt
            a, b = self.fx.coefficient(1), self.fx.coefficient(0)
            pre = (x - b) / a
            return pre if self.domain.contains(pre) else None
        cand = self._solve(pt)
        if cand is None or not self.domain.contains(cand):
            return None
        return cand

    def _solve(self, pt):
        u, v = pt
        fx, fy = self.fx, self.fy
        exact = all(isinstance(t, (int, Fraction)) for t in pt)
        if self.is_affine() and exact:
            a, b, c = fx.coefficient(1, 0), fx.coefficient(0, 1), fx.coefficient(0, 0)
            d, e, f = fy.coefficient(1, 0), fy.coefficient(0, 1), fy.coefficient(0, 0)
            det = a * e - b * d
            if det == 0:
                return None
            return ((e * (u - c) - b * (v - f)) / det, (a * (v - f) - d * (u - c)) / det)
        # triangular maps: one coordinate is an affine function of its own variable
        if exact and fx.degree <= 1 and not _uses(fx, "y") and fx.coefficient(1, 0):
            x0 = (u - fx.coefficient(0, 0)) / fx.coefficient(1, 0)
            rest = fy.compose(Poly.const(x0), Poly.y())
            if rest.degree <= 1 and rest.coefficient(0, 1):
                return (x0, (v - rest.coefficient(0, 0)) / rest.coefficient(0, 1))
        if exact and fy.degree <= 1 and not _uses(fy, "x") and fy.coefficient(0, 1):
            y0 = (v - fy.coefficient(0, 0)) / fy.coefficient(0, 1)
            rest = fx.compose(Poly.x(), Poly.const(y0))
            if rest.degree <= 1 and rest.coefficient(1, 0):
                return ((u - rest.coefficient(0, 0)) / rest.coefficient(1, 0), y0)
        return self._newton(pt)

    def _newton(self, pt):
        u, v = float(pt[0]), float(pt[1])
        x0, x1, y0, y1 = (float(t) for t in self.domain.bounds())
        jac = [[self.fx.diff("x"), self.fx.diff("y")], [self.fy.diff("x"), self.fy.diff("y")]]
        for sx in (0.5, 0.25, 0.75):
            for sy in (0.5, 0.25, 0.75):
                x, y = x0 + sx * (x1 - x0), y0 + sy * (y1 - y0)
                for _ in range(60):
                    rx, ry = self.fx(x, y) - u, self.fy(x, y) - v
                    if abs(rx) + abs(ry) < 1e-14:
                        break
                    a, b = jac[0][0](x, y), jac[0][1](x, y)
                    c, d = jac[1][0](x, y), jac[1][1](x, y)
                    det = a * d - b * c
                    if det == 0:
                        break
                    x -= (d * rx - b * ry) / det
                    y -= (a * ry - c * rx) / det
                if abs(self.fx(x, y) - u) + abs(self.fy(x, y) - v) < 1e-12:
                    return (x, y)
        return None


def _uses(p: Poly, var: str) -> bool:
    idx = 0 if var == "x" else 1
    return any(m[idx] for m in p.terms)


@dataclass(frozen=True)
class PiecewiseMap:
    pieces: tuple[Piece, ...]

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def domain(self) -> Region:
        out = self.pieces[0].domain
        for p in self.pieces[1:]:
            out = out.union(p.domain)
        return out

    def piece_at(self, pt) -> Piece | None:
        for p in self.pieces:
            if p.domain.contains(pt):
                return p
        return None

    def __call__(self, pt):
        p = self.piece_at(pt)
        return None if p is None else p(pt)

    def inverse(self, pt):
        for p in self.pieces:
            pre = p.inverse(pt)
            if pre is not None:
                return pre
        return None

    def to_json(self) -> list:
        out = []
        for p in self.pieces:
            d = {"domain": p.domain.to_json(), "fx": p.fx.to_json()}
            if p.fy is not None:
                d["fy"] = p.fy.to_json()
            out.append(d)
        return out


def affine_map(lo, hi, slope, offset) -> PiecewiseMap:
    return PiecewiseMap((Piece(Region.interval(lo, hi), Poly.affine(_num(slope), _num(offset))),))


def rn_derivative_geometric(m: PiecewiseMap, point) -> float | Fraction:
    """|slope| in 1D, |det J| in 2D, at an interior point of a piece."""
    piece = m.piece_at(point)
    if piece is None:
        raise OnBoundary(f"{point} is not interior to any piece")
    val = piece.jacobian()(*(point if isinstance(point, tuple) else (point,)))
    if val == 0:
        raise DegeneratePiece(f"zero derivative at {point}")
    return abs(val)


# -- systems ----------------------------------------------------------------


@dataclass
class GeometricSBFS:
    graph: KGraph
    domains: dict[str, Region]
    maps: dict[str, PiecewiseMap]
    ranges: dict[str, Region]
    name: str = ""

    def __post_init__(self):
        dims = {r.dim for r in self.domains.values()} | {r.dim for r in self.ranges.values()}
        dims |= {m.dim for m in self.maps.values()}
        if len(dims) != 1:
            raise MalformedRegion("mixed dimensions in one system")
        for v in self.graph.vertices:
            if v not in self.domains:
                raise InvalidInput(f"no domain for vertex {v!r}")
        for e in self.graph.edges:
            if e not in self.maps or e not in self.ranges:
                raise InvalidInput(f"edge {e!r} needs a map and a range")

    @property
    def dim(self) -> int:
        return next(iter(self.domains.values())).dim

    def space(self) -> Region:
        out = None
        for v in self.graph.vertices:
            out = self.domains[v] if out is None else out.union(self.domains[v])
        return out

    def coding(self, color: int, pt):
        """tau^{e_color}: invert whichever color-``color`` edge has pt in its range."""
        for e in self.graph.edges.values():
            if e.color == color and self.ranges[e.id].contains(pt):
                return self.maps[e.id].inverse(pt)
        return None

    def to_json(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "domains": {v: r.to_json() for v, r in self.domains.items()},
            "maps": {e: m.to_json() for e, m in self.maps.items()},
            "ranges": {e: r.to_json() for e, r in self.ranges.items()},
        }

    @classmethod
    def from_json(cls, data: dict, base_dir=None) -> "GeometricSBFS":
        try:
            gref = data["graph"]
            if isinstance(gref, str):
                g = standard_library(gref)
            elif isinstance(gref, dict) and "library" in gref:
                g = standard_library(gref["library"], gref.get("params"))
            else:
                g = KGraph.from_dict(gref)
            domains = {v: Region.from_json(r) for v, r in data["domains"].items()}
            maps = {}
            for e, pieces in data["maps"].items():
                ps = []
                for p in pieces:
                    fy = Poly.parse(p["fy"]) if p.get("fy") is not None else None
                    ps.append(Piece(Region.from_json(p["domain"]), Poly.parse(p["fx"]), fy))
                if not ps:
                    raise InvalidInput(f"edge {e!r} has no pieces")
                maps[e] = PiecewiseMap(tuple(ps))
            ranges = {e: Region.from_json(r) for e, r in data["ranges"].items()}
        except KeyError as exc:
            raise InvalidInput(f"system file lacks {exc}") from None
        return cls(g, domains, maps, ranges, data.get("name", ""))


# -- 1D piecewise-affine algebra --------------------------------------------

# a piecewise affine function is a list of (lo, hi, slope, offset)


def _pw(m: PiecewiseMap) -> list[tuple]:
    out = []
    for p in m.pieces:
        a, b = p.fx.coefficient(1), p.fx.coefficient(0)
        if p.fx.degree > 1:
            raise InvalidInput("1D maps must be affine")
        for iv in p.domain.parts:
            out.append((iv.lo, iv.hi, a, b))
    return out


def _pw_inverse(pieces: list[tuple]) -> list[tuple]:
    out = []
    for lo, hi, a, b in pieces:
        ends = sorted((a * lo + b, a * hi + b))
        out.append((ends[0], ends[1], 1 / a, -b / a))
    return out


def _pw_compose(outer: list[tuple], inner: list[tuple]) -> list[tuple]:
    """outer o inner, defined where inner lands inside outer's pieces."""
    out = []
    for lo, hi, a, b in inner:
        for lo2, hi2, c, d in outer:
            p, q = sorted(((lo2 - b) / a, (hi2 - b) / a))
            s, t = max(lo, p), min(hi, q)
            if s < t:
                out.append((s, t, c * a, c * b + d))
    return out


def _pw_equal(f: list[tuple], g: list[tuple]) -> tuple[bool, str]:
    pts = sorted({e for lo, hi, *_ in f + g for e in (lo, hi)})
    for a, b in zip(pts, pts[1:]):
        mid = (a + b) / 2
        vf = {(s, o) for lo, hi, s, o in f if lo < mid < hi}
        vg = {(s, o) for lo, hi, s, o in g if lo < mid < hi}
        if vf != vg:
            return False, f"on ({a}, {b}): {sorted(vf)} vs {sorted(vg)}"
    return True, ""


def _pw_to_region(pieces: list[tuple]) -> Region:
    return Region(1, tuple(Interval(lo, hi) for lo, hi, *_ in pieces))


def _image_1d(m: PiecewiseMap) -> Region:
    return _pw_to_region(_pw_inverse(_pw(m)))


# -- condition checking -----------------------------------------------------


@dataclass
class Condition:
    name: str
    passed: bool = True
    method: str = "exact"
    cases: int = 0
    defect: float = 0.0
    details: list = field(default_factory=list)

    def fail(self, msg: str) -> None:
        self.passed = False
        if len(self.details) < 10:
            self.details.append(msg)

    def sampled(self) -> None:
        self.method = "sampled"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "method": self.method,
            "cases": self.cases,
            "defect": self.defect,
            "details": self.details,
        }


@dataclass
class ConditionReport:
    conditions: list[Condition]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name: str) -> Condition:
        return next(c for c in self.conditions if c.name == name)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "conditions": [c.to_dict() for c in self.conditions]}


def _note(cond: Condition, m: Measured, label: str) -> None:
    cond.cases += 1
    if not m.exact:
        cond.sampled()
    cond.defect = max(cond.defect, float(m.value))
    if not m.is_zero:
        cond.fail(f"{label}: measure {float(m.value):.6g}")


def grid_points(bounds, n: int) -> list[tuple[Fraction, Fraction]]:
    x0, x1, y0, y1 = bounds
    return [
        (x0 + (x1 - x0) * Fraction(2 * i + 1, 2 * n), y0 + (y1 - y0) * Fraction(2 * j + 1, 2 * n))
        for i in range(n)
        for j in range(n)
    ]


def _close(a, b, tol: float) -> bool:
    if a is None or b is None:
        return False
    if isinstance(a, tuple):
        return all(_close(s, t, tol) for s, t in zip(a, b))
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(float(a) - float(b)) <= tol


def _compose_polys(outer: Piece, inner: Piece) -> tuple[Poly, Poly | None]:
    if inner.dim == 1:
        return outer.fx.compose(inner.fx), None
    return outer.fx.compose(inner.fx, inner.fy), outer.fy.compose(inner.fx, inner.fy)


def validate_sbfs_conditions(s: GeometricSBFS, grid: int = 100) -> ConditionReport:
    """Check the five edge-level conditions, plus ranges and injectivity."""
    g = s.graph
    c1, c2, c3, c4, c5 = (Condition(n) for n in ("i", "ii", "iii", "iv", "v"))
    c_rng, c_inj, c_disj = Condition("ranges"), Condition("injective"), Condition("range_overlap")
    space = s.space()
    pts = grid_points(space.bounds(), grid) if s.dim == 2 else []

    # (i) every edge map is defined exactly on the domain of its source
    for v in g.vertices:
        c1.cases += 1
        mv = region_measure(s.domains[v])
        if mv.is_zero:
            c1.fail(f"D_{v} is null")
    for e in g.edges.values():
        _note(c1, same_region(s.maps[e.id].domain, s.domains[e.source]), f"domain of {e.id} vs D_{e.source}")

    # (ii) domains of distinct vertices are almost disjoint
    vs = list(g.vertices)
    for a in range(len(vs)):
        for b in range(a + 1, len(vs)):
            _note(c2, overlap(s.domains[vs[a]], s.domains[vs[b]]), f"D_{vs[a]} & D_{vs[b]}")

    # ranges are the images, same-color ranges almost disjoint
    for e in g.edges.values():
        m = s.maps[e.id]
        if s.dim == 1:
            _note(c_rng, same_region(_image_1d(m), s.ranges[e.id]), f"tau_{e.id}(D) vs R_{e.id}")
            for p in m.pieces:
                c_inj.cases += 1
                if p.fx.coefficient(1) == 0:
                    c_inj.fail(f"{e.id} has zero slope")
        else:
            _check_ranges_2d(s, e.id, pts, c_rng)
            _check_injective_2d(m, e.id, c_inj)
        _note(c_rng, difference(s.ranges[e.id], [s.domains[e.range]]), f"R_{e.id} inside D_{e.range}")
    edges_by_color: dict[int, list[str]] = {}
    for e in g.edges.values():
        edges_by_color.setdefault(e.color, []).append(e.id)
    for color, ids in edges_by_color.items():
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                _note(c_disj, overlap(s.ranges[ids[a]], s.ranges[ids[b]]), f"R_{ids[a]} & R_{ids[b]}")

    # (iii) factorization squares commute
    for sq in g.squares:
        (lam, alpha), (nu, beta) = sq.lhs, sq.rhs
        _note(c3, difference(s.ranges[alpha], [s.maps[lam].domain]), f"R_{alpha} inside D_{lam}")
        _note(c3, difference(s.ranges[beta], [s.maps[nu].domain]), f"R_{beta} inside D_{nu}")
        _check_square(s, lam, alpha, nu, beta, pts, c3)

    # (iv) coding maps commute
    colors = sorted(edges_by_color)
    for a in colors:
        for b in colors:
            if a >= b:
                continue
            if s.dim == 1:
                ca = _pw_inverse([p for e in edges_by_color[a] for p in _pw(s.maps[e])])
                cb = _pw_inverse([p for e in edges_by_color[b] for p in _pw(s.maps[e])])
                ok, why = _pw_equal(_pw_compose(ca, cb), _pw_compose(cb, ca))
                c4.cases += 1
                if not ok:
                    c4.fail(f"tau^{a} tau^{b} != tau^{b} tau^{a} {why}")
            else:
                _check_coding_2d(s, a, b, pts, c4)

    # (v) ranges of each color cover every domain
    for v in g.vertices:
        for color, ids in edges_by_color.items():
            into = [s.ranges[e] for e in ids if g.edges[e].range == v]
            _note(c5, difference(s.domains[v], into), f"D_{v} minus color-{color} ranges")
    return ConditionReport([c1, c2, c3, c4, c5, c_rng, c_disj, c_inj])


def _check_square(s, lam, alpha, nu, beta, pts, cond: Condition) -> None:
    maps = [s.maps[x] for x in (lam, alpha, nu, beta)]
    label = f"tau_{lam} tau_{alpha} = tau_{nu} tau_{beta}"
    cond.cases += 1
    if s.dim == 1:
        lhs = _pw_compose(_pw(maps[0]), _pw(maps[1]))
        rhs = _pw_compose(_pw(maps[2]), _pw(maps[3]))
        ok, why = _pw_equal(lhs, rhs)
        if not ok:
            cond.fail(f"{label} {why}")
        return
    if all(len(m.pieces) == 1 for m in maps):
        left = _compose_polys(maps[0].pieces[0], maps[1].pieces[0])
        right = _compose_polys(maps[2].pieces[0], maps[3].pieces[0])
        if left != right:
            cond.fail(f"{label}: {left} vs {right}")
        return
    cond.sampled()
    dom = maps[1].domain
    for pt in pts:
        if not dom.contains(pt):
            continue
        a, b = maps[1](pt), maps[3](pt)
        if a is None or b is None:
            continue
        left, right = maps[0](a), maps[2](b)
        if left is None or right is None:
            continue
        if not _close(left, right, SAMPLE_TOL):
            cond.fail(f"{label} at {tuple(map(float, pt))}")
            return


def _check_ranges_2d(s: GeometricSBFS, e: str, pts, cond: Condition) -> None:
    m, r = s.maps[e], s.ranges[e]
    cond.cases += 1
    cond.sampled()
    dom = m.domain
    for pt in pts:
        if dom.contains(pt):
            img = m(pt)
            if img is not None and not r.contains(img, closed=True):
                cond.fail(f"tau_{e}{tuple(map(float, pt))} leaves R_{e}")
                return
        if r.contains(pt) and m.inverse(pt) is None:
            cond.fail(f"{tuple(map(float, pt))} in R_{e} has no preimage")
            return


def _check_injective_2d(m: PiecewiseMap, e: str, cond: Condition) -> None:
    for p in m.pieces:
        cond.cases += 1
        det = p.jacobian()
        if det.degree == 0:
            if det == 0:
                cond.fail(f"{e} has vanishing Jacobian")
            continue
        cond.sampled()
        for pt in grid_points(p.domain.bounds(), 20):
            if p.domain.contains(pt) and det(*pt) == 0:
                cond.fail(f"{e} Jacobian vanishes at {tuple(map(float, pt))}")
                break


def _check_coding_2d(s: GeometricSBFS, a: int, b: int, pts, cond: Condition) -> None:
    cond.sampled()
    skipped = 0
    for pt in pts:
        cond.cases += 1
        pa = s.coding(a, pt)
        pb = s.coding(b, pt)
        left = s.coding(a, pb) if pb is not None else None
        right = s.coding(b, pa) if pa is not None else None
        if left is None or right is None:
            skipped += 1
            continue
        if not _close(left, right, SAMPLE_TOL):
            cond.fail(f"tau^{a} tau^{b} != tau^{b} tau^{a} at {tuple(map(float, pt))}")
            return
    if skipped:
        cond.details.append(f"{skipped} grid points on range boundaries skipped")


# -- library systems --------------------------------------------------------


def example_lebesgue_interval() -> GeometricSBFS:
    """The 8-edge 2-graph acting on (0, 1) with affine maps of slope +-1 and +-1/2."""
    g = standard_library("three_vertex_eight_edge")
    t = Fraction(1, 3)
    domains = {"u": Region.interval(0, t), "v": Region.interval(t, 2 * t), "w": Region.interval(2 * t, 1)}
    spec = {
        "a0": ("v", 1, -t),
        "a1": ("v", 1, t),
        "c0": ("u", Fraction(1, 2), Fraction(1, 2)),
        "c1": ("w", Fraction(1, 2), 0),
        "d0": ("v", -1, 2 * t),
        "d1": ("v", -1, 4 * t),
        "b0": ("u", Fraction(-1, 2), Fraction(1, 2)),
        "b1": ("w", Fraction(-1, 2), 1),
    }
    maps = {}
    for e, (src, a, b) in spec.items():
        lo, hi = domains[src].parts[0].lo, domains[src].parts[0].hi
        maps[e] = affine_map(lo, hi, a, b)
    ranges = {e: _image_1d(m) for e, m in maps.items()}
    return GeometricSBFS(g, domains, maps, ranges, "lebesgue_interval")


def example_unit_square() -> GeometricSBFS:
    """One-vertex 2-graph on (0,1)^2 with non-constant Jacobians 1-x and x."""
    g = standard_library("one_vertex_fefe")
    x, y = Poly.x(), Poly.y()
    sq = Region.box(0, 1, 0, 1)
    maps = {
        "f1": PiecewiseMap((Piece(sq, x, x + y - x * y),)),
        "f2": PiecewiseMap((Piece(sq, x, x * y),)),
        "e": PiecewiseMap((Piece(sq, 1 - x, 1 - y),)),
    }
    half = Fraction(1, 2)
    ranges = {
        "f1": Region.cell((0, 1, 0, 1), y - x, half),
        "f2": Region.cell((0, 1, 0, 1), x - y, half),
        "e": sq,
    }
    return GeometricSBFS(g, {"v": sq}, maps, ranges, "unit_square")


def binary_graph() -> KGraph:
    from .kgraph import Edge

    return KGraph(1, ["v"], [Edge("g0", 1, "v", "v"), Edge("g1", 1, "v", "v")], [], "binary")


def binary_interval() -> GeometricSBFS:
    """The 1-graph with two loops acting on (0, 1) by x/2 and (x+1)/2."""
    maps = {"g0": affine_map(0, 1, Fraction(1, 2), 0), "g1": affine_map(0, 1, Fraction(1, 2), Fraction(1, 2))}
    ranges = {e: _image_1d(m) for e, m in maps.items()}
    return GeometricSBFS(binary_graph(), {"v": Region.interval(0, 1)}, maps, ranges, "binary_interval")


SBFS_LIBRARY = {
    "lebesgue_interval": example_lebesgue_interval,
    "unit_square": example_unit_square,
    "binary_interval": binary_interval,
}


def _pair(a: str, b: str) -> str:
    return f"({a},{b})"


def _boxes(xr: Region, yr: Region) -> Region:
    return Region(2, tuple(Box(a.lo, a.hi, b.lo, b.hi) for a in xr.parts for b in yr.parts))


def product_sbfs(s1: GeometricSBFS, s2: GeometricSBFS, check: bool = True) -> GeometricSBFS:
    """Product system on D_w x D_v, each edge map acting on one coordinate."""
    if s1.dim != 1 or s2.dim != 1:
        raise InvalidInput("product systems need two 1D factors")
    if check:
        for s in (s1, s2):
            if not validate_sbfs_conditions(s).passed or not validate_kgraph(s.graph).passed:
                raise InvalidInput(f"factor {s.name or s.graph.name} fails validation")
    g = product_graph(s1.graph, s2.graph)
    domains = {_pair(w, v): _boxes(s1.domains[w], s2.domains[v]) for w in s1.graph.vertices for v in s2.graph.vertices}
    maps, ranges = {}, {}
    x, y = Poly.x(), Poly.y()
    for e in s1.graph.edges.values():
        for v in s2.graph.vertices:
            pieces = []
            for p in s1.maps[e.id].pieces:
                for iv in p.domain.parts:
                    for jv in s2.domains[v].parts:
                        pieces.append(Piece(Region(2, (Box(iv.lo, iv.hi, jv.lo, jv.hi),)), p.fx, y))
            maps[_pair(e.id, v)] = PiecewiseMap(tuple(pieces))
            ranges[_pair(e.id, v)] = _boxes(s1.ranges[e.id], s2.domains[v])
    for f in s2.graph.edges.values():
        for u in s1.graph.vertices:
            pieces = []
            for p in s2.maps[f.id].pieces:
                fy = p.fx.compose(y, x)
                for iv in s1.domains[u].parts:
                    for jv in p.domain.parts:
                        pieces.append(Piece(Region(2, (Box(iv.lo, iv.hi, jv.lo, jv.hi),)), x, fy))
            maps[_pair(u, f.id)] = PiecewiseMap(tuple(pieces))
            ranges[_pair(u, f.id)] = _boxes(s1.domains[u], s2.ranges[f.id])
    return GeometricSBFS(g, domains, maps, ranges, f"{s1.name} x {s2.name}")


def load_sbfs(path_or_name: str) -> GeometricSBFS:
    """A library system name, ``product:a,b`` of two library systems, or a JSON file."""
    if path_or_name in SBFS_LIBRARY:
        return SBFS_LIBRARY[path_or_name]()
    if path_or_name.startswith("product:"):
        names = path_or_name[len("product:"):].split(",")
        if len(names) != 2 or not all(n in SBFS_LIBRARY for n in names):
            raise InvalidInput(f"product needs two of {sorted(SBFS_LIBRARY)}")
        return product_sbfs(SBFS_LIBRARY[names[0]](), SBFS_LIBRARY[names[1]]())
    with open(path_or_name) as fh:
        return GeometricSBFS.from_json(json.load(fh))


def rn_table(s: GeometricSBFS) -> dict[str, str]:
    """Jacobian of every edge map as a polynomial string (one entry per piece)."""
    out = {}
    for e, m in s.maps.items():
        out[e] = " | ".join(repr(_abs_poly(p.jacobian())) for p in m.pieces)
    return out


def interior_samples(piece: Piece, n: int = 100) -> list:
    """Deterministic interior points of a piece: a grid in 1D, a near-square grid in 2D."""
    if piece.dim == 1:
        out = []
        for iv in piece.domain.parts:
            out += [iv.lo + (iv.hi - iv.lo) * Fraction(2 * i + 1, 2 * n) for i in range(n)]
        return out[:n] if len(piece.domain.parts) == 1 else out
    side = math.isqrt(n - 1) + 1
    pts = [p for p in grid_points(piece.domain.bounds(), side + 2) if piece.domain.contains(p)]
    return pts[:n]


def rn_positivity(s: GeometricSBFS, n: int = 100) -> tuple[bool, int, float]:
    """Evaluate the RN derivative on interior samples of every piece; (all positive, count, minimum)."""
    count, low = 0, math.inf
    for m in s.maps.values():
        for piece in m.pieces:
            for pt in interior_samples(piece, n):
                try:
                    val = rn_derivative_geometric(PiecewiseMap((piece,)), pt)
                except DegeneratePiece:
                    return False, count, 0.0
                count += 1
                low = min(low, float(val))
    return low > 0, count, low


def coding_residual(s: GeometricSBFS, edge: str, n: int = 100) -> float:
    """max |tau^{d(e)}(tau_e(p)) - p| over interior samples p of D_{s(e)}."""
    color = s.graph.edges[edge].color
    worst = 0.0
    for piece in s.maps[edge].pieces:
        for pt in interior_samples(piece, n):
            back = s.coding(color, piece(pt))
            if back is None:
                return math.inf
            a = back if isinstance(back, tuple) else (back,)
            b = pt if isinstance(pt, tuple) else (pt,)
            worst = max(worst, max(abs(float(u) - float(v)) for u, v in zip(a, b)))
    return worst


def _abs_poly(p: Poly) -> Poly:
    # constant Jacobians are reported by absolute value
    if p.degree == 0 and p.coefficient(0) < 0:
        return -p
    return p


__all__ = [
    "Box",
    "Cell",
    "ConditionReport",
    "GeometricSBFS",
    "Interval",
    "Piece",
    "PiecewiseMap",
    "Region",
    "binary_interval",
    "coding_residual",
    "example_lebesgue_interval",
    "example_unit_square",
    "load_sbfs",
    "product_sbfs",
    "rn_derivative_geometric",
    "rn_positivity",
    "rn_table",
    "validate_sbfs_conditions",
]

"""Finite k-graphs given by a colored skeleton plus factorization squares.

Paths are stored in normal form: edge colors ascend from left to right and the
edge list reads from range to source, so ``lam + mu`` is composable when the
source of ``lam`` equals the range of ``mu``.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ColorOutOfRange,
    DanglingReference,
    DuplicateSquare,
    IncompleteBijection,
    MalformedGraph,
    NotComposable,
    PathNotInGraph,
)


class Degree(tuple):
    """Vector in N^k with the partial order, sum, difference and join."""

    def __new__(cls, entries: Iterable[int]):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError(f"negative degree entry in {entries}")
        return super().__new__(cls, entries)

    @classmethod
    def zero(cls, k: int) -> "Degree":
        return cls((0,) * k)

    @classmethod
    def square(cls, k: int, n: int) -> "Degree":
        return cls((n,) * k)

    def _check(self, other) -> None:
        if len(other) != len(self):
            raise ValueError("degrees of different lengths")

    def __add__(self, other):
        self._check(other)
        return Degree(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        self._check(other)
        return Degree(a - b for a, b in zip(self, other))

    def __or__(self, other):
        self._check(other)
        return Degree(max(a, b) for a, b in zip(self, other))

    def __le__(self, other):
        self._check(other)
        return all(a <= b for a, b in zip(self, other))

    def __ge__(self, other):
        self._check(other)
        return all(a >= b for a, b in zip(self, other))

    def __lt__(self, other):
        return self <= other and tuple(self) != tuple(other)

    def __gt__(self, other):
        return self >= other and tuple(self) != tuple(other)

    def __eq__(self, other):
        return tuple.__eq__(self, other)

    def __ne__(self, other):
        return tuple.__ne__(self, other)

    __hash__ = tuple.__hash__

    @property
    def total(self) -> int:
        return sum(self)

    def is_square(self) -> bool:
        return len(set(self)) <= 1

    def __repr__(self):
        return f"Degree{tuple(self)}"


@dataclass(frozen=True)
class Edge:
    id: str
    color: int
    source: str
    range: str


@dataclass(frozen=True)
class Square:
    """``lhs`` is (lower color, higher color); ``rhs`` the swapped coloring."""

    lhs: tuple[str, str]
    rhs: tuple[str, str]


@dataclass(frozen=True)
class Path:
    edges: tuple[str, ...]
    range: str
    source: str
    degree: Degree

    @property
    def is_vertex(self) -> bool:
        return not self.edges

    def __str__(self):
        return "[" + ",".join(self.edges) + "]" if self.edges else f"<{self.range}>"


class KGraph:
    """A finite k-graph presentation.

    Construction checks references and square shapes. Whether the squares
    really define a k-graph is decided by :func:`validate_kgraph`.
    """

    def __init__(
        self,
        k: int,
        vertices: Sequence[str],
        edges: Sequence[Edge],
        squares: Sequence[Square] = (),
        name: str | None = None,
    ):
        if k < 1:
            raise MalformedGraph("k must be positive")
        self.k = int(k)
        self.name = name
        self.vertices: tuple[str, ...] = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise MalformedGraph("duplicate vertex id")
        vset = set(self.vertices)
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if e.id in self.edges or e.id in vset:
                raise MalformedGraph(f"duplicate id {e.id!r}")
            if not 1 <= e.color <= self.k:
                raise ColorOutOfRange(f"edge {e.id!r} has color {e.color}")
            for end in (e.source, e.range):
                if end not in vset:
                    raise DanglingReference(f"edge {e.id!r} cites unknown vertex {end!r}")
            self.edges[e.id] = e
        self.squares: tuple[Square, ...] = tuple(squares)
        # swap table in both directions: (a, b) -> (c, d) with a*b = c*d
        self._swap: dict[tuple[str, str], tuple[str, str]] = {}
        for sq in self.squares:
            self._check_square(sq)
            for side, other in ((sq.lhs, sq.rhs), (sq.rhs, sq.lhs)):
                if side in self._swap:
                    raise DuplicateSquare(f"pair {side} appears in two squares")
                self._swap[side] = other
        self._nf_cache: dict[tuple[str, ...], tuple[str, ...]] = {}
        self._deg_cache: dict[tuple, tuple[Path, ...]] = {}

    def _check_square(self, sq: Square) -> None:
        for eid in (*sq.lhs, *sq.rhs):
            if eid not in self.edges:
                raise DanglingReference(f"square cites unknown edge {eid!r}")
        a, b = (self.edges[x] for x in sq.lhs)
        c, d = (self.edges[x] for x in sq.rhs)
        if not (a.color < b.color and c.color == b.color and d.color == a.color):
            raise MalformedGraph(f"square {sq} has the wrong color pattern")
        if a.source != b.range or c.source != d.range:
            raise MalformedGraph(f"square {sq} has a non-composable side")
        if a.range != c.range or b.source != d.source:
            raise MalformedGraph(f"square {sq} sides have different endpoints")

    # -- basic accessors -------------------------------------------------

    def color(self, eid: str) -> int:
        return self.edges[eid].color

    def edge_degree(self, eid: str) -> Degree:
        d = [0] * self.k
        d[self.color(eid) - 1] = 1
        return Degree(d)

    def vertex(self, v: str) -> Path:
        if v not in self.vertices:
            raise PathNotInGraph(f"unknown vertex {v!r}")
        return Path((), v, v, Degree.zero(self.k))

    def unit(self, n: int = 1) -> Degree:
        return Degree.square(self.k, n)

    def swap(self, a: str, b: str) -> tuple[str, str]:
        """The other factorization of the two-edge path ``a b``."""
        try:
            return self._swap[(a, b)]
        except KeyError:
            raise IncompleteBijection(f"no square contains the pair ({a}, {b})") from None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "color": e.color, "source": e.source, "range": e.range}
                for e in self.edges.values()
            ],
            "squares": [{"lhs": list(s.lhs), "rhs": list(s.rhs)} for s in self.squares],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str | None = None) -> "KGraph":
        try:
            edges = [
                Edge(str(e["id"]), int(e["color"]), str(e["source"]), str(e["range"]))
                for e in data["edges"]
            ]
            squares = [
                Square(tuple(map(str, s["lhs"])), tuple(map(str, s["rhs"])))
                for s in data.get("squares", [])
            ]
            for s in squares:
                if len(s.lhs) != 2 or len(s.rhs) != 2:
                    raise MalformedGraph("square sides must have two edges")
            return cls(int(data["k"]), [str(v) for v in data["vertices"]], edges, squares, name)
        except (KeyError, TypeError) as exc:
            raise MalformedGraph(f"bad graph JSON: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<KGraph{label} k={self.k} |V|={len(self.vertices)} |E|={len(self.edges)}>"


# -- normal forms and composition ------------------------------------------


def _check_chain(g: KGraph, seq: Sequence[str]) -> None:
    for eid in seq:
        if eid not in g.edges:
            raise PathNotInGraph(f"unknown edge {eid!r}")
    for a, b in zip(seq, seq[1:]):
        if g.edges[a].source != g.edges[b].range:
            raise NotComposable(f"source of {a} differs from range of {b}")


def reorder(g: KGraph, seq: Sequence[str], pattern: Sequence[int]) -> tuple[str, ...]:
    """Rewrite a composable edge sequence so its colors follow ``pattern``.

    The target edge for each slot is bubbled leftwards by square swaps.
    """
    out = list(seq)
    if sorted(pattern) != sorted(g.color(e) for e in out):
        raise ValueError("pattern does not match the degree of the path")
    for pos, want in enumerate(pattern):
        j = pos
        while g.color(out[j]) != want:
            j += 1
        while j > pos:
            out[j - 1], out[j] = g.swap(out[j - 1], out[j])
            j -= 1
    return tuple(out)


def _make_path(g: KGraph, seq: tuple[str, ...], base: str | None) -> Path:
    if not seq:
        if base is None:
            raise ValueError("empty path needs a base vertex")
        return g.vertex(base)
    d = [0] * g.k
    for e in seq:
        d[g.color(e) - 1] += 1
    return Path(seq, g.edges[seq[0]].range, g.edges[seq[-1]].source, Degree(d))


def normal_form(g: KGraph, edge_seq: Sequence[str], base: str | None = None) -> Path:
    """Unique color-sorted representative of a composable edge sequence."""
    seq = tuple(edge_seq)
    cached = g._nf_cache.get(seq)
    if cached is None:
        _check_chain(g, seq)
        pattern = sorted(g.color(e) for e in seq)
        cached = reorder(g, seq, pattern)
        g._nf_cache[seq] = cached
    return _make_path(g, cached, base)


def compose(g: KGraph, lam: Path, mu: Path) -> Path:
    if lam.source != mu.range:
        raise NotComposable(f"s({lam}) = {lam.source} but r({mu}) = {mu.range}")
    if not lam.edges:
        return mu
    if not mu.edges:
        return lam
    return normal_form(g, lam.edges + mu.edges)


def factor(g: KGraph, lam: Path, m: Degree) -> tuple[Path, Path]:
    """Split ``lam`` as head*tail with d(head) = m."""
    m = Degree(m)
    if not m <= lam.degree:
        raise ValueError(f"{m} exceeds the degree {lam.degree}")
    rest = lam.degree - m
    pattern = [c + 1 for c in range(g.k) for _ in range(m[c])]
    pattern += [c + 1 for c in range(g.k) for _ in range(rest[c])]
    seq = reorder(g, lam.edges, pattern)
    cut = m.total
    head = _make_path(g, seq[:cut], lam.range)
    tail = _make_path(g, seq[cut:], head.source)
    return head, tail


def segment(g: KGraph, lam: Path, start: Degree, end: Degree) -> Path:
    """The subpath lam(start, end)."""
    head, _ = factor(g, lam, end)
    return factor(g, head, start)[1]


def path_from_edges(g: KGraph, edge_ids: Sequence[str], base: str | None = None) -> Path:
    return normal_form(g, list(edge_ids), base)


# -- enumeration -----------------------------------------------------------


def paths_of_degree(g: KGraph, n: Sequence[int], range_filter: str | None = None) -> list[Path]:
    """All paths of degree ``n``, optionally restricted to range ``range_filter``."""
    n = Degree(n)
    if len(n) != g.k:
        raise ValueError("degree length differs from k")
    key = (tuple(n), range_filter)
    if key not in g._deg_cache:
        by_range: dict[tuple[str, int], list[str]] = {}
        for e in g.edges.values():
            by_range.setdefault((e.range, e.color), []).append(e.id)
        colors = [c + 1 for c in range(g.k) for _ in range(n[c])]
        starts = [range_filter] if range_filter is not None else list(g.vertices)
        found: list[Path] = []
        for v in starts:
            stack: list[tuple[tuple[str, ...], str]] = [((), v)]
            # sorted color sequences are exactly the normal forms
            for c in colors:
                stack = [
                    (seq + (e,), g.edges[e].source)
                    for seq, here in stack
                    for e in by_range.get((here, c), [])
                ]
            found.extend(_make_path(g, seq, v) for seq, _ in stack)
        g._deg_cache[key] = tuple(found)
    return list(g._deg_cache[key])


def paths_up_to(g: KGraph, bound: Sequence[int], range_filter: str | None = None) -> list[Path]:
    """All paths with degree componentwise at most ``bound``."""
    out: list[Path] = []
    for n in itertools.product(*(range(b + 1) for b in bound)):
        out.extend(paths_of_degree(g, n, range_filter))
    return out


def extensions(g: KGraph, lam: Path, m: Sequence[int]) -> list[Path]:
    """All lam*mu with d(mu) = m."""
    return [compose(g, lam, mu) for mu in paths_of_degree(g, m, lam.source)]


def vertex_matrix(g: KGraph, i: int) -> np.ndarray:
    """Integer matrix with entry (v, w) counting color-i edges from w to v."""
    if not 1 <= i <= g.k:
        raise ColorOutOfRange(f"color {i} outside 1..{g.k}")
    idx = {v: j for j, v in enumerate(g.vertices)}
    a = np.zeros((len(g.vertices), len(g.vertices)), dtype=np.int64)
    for e in g.edges.values():
        if e.color == i:
            a[idx[e.range], idx[e.source]] += 1
    return a


def lambda_min(g: KGraph, lam: Path, eta: Path) -> set[tuple[Path, Path]]:
    """Minimal common extensions: pairs (a, b) with lam*a = eta*b of degree d(lam) v d(eta)."""
    if lam.range != eta.range:
        return set()
    top = lam.degree | eta.degree
    out = set()
    for alpha in paths_of_degree(g, top - lam.degree, lam.source):
        head, beta = factor(g, compose(g, lam, alpha), eta.degree)
        if head == eta:
            out.add((alpha, beta))
    return out


# -- validation ------------------------------------------------------------


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    details: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and not self.errors

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "checks": dict(sorted(self.checks.items())),
            "errors": sorted(set(self.errors)),
            "details": self.details,
        }


def _composable_pairs(g: KGraph, first: int, second: int) -> Iterator[tuple[str, str]]:
    for a in g.edges.values():
        if a.color != first:
            continue
        for b in g.edges.values():
            if b.color == second and a.source == b.range:
                yield a.id, b.id


def _all_rewrites(g: KGraph, seq: tuple[str, ...]) -> set[tuple[str, ...]]:
    """Every sorted sequence reachable from ``seq`` by swaps that fix inversions."""
    results, seen = set(), {seq}
    queue = deque([seq])
    while queue:
        cur = queue.popleft()
        moved = False
        for j in range(len(cur) - 1):
            if g.color(cur[j]) > g.color(cur[j + 1]):
                moved = True
                a, b = g.swap(cur[j], cur[j + 1])
                nxt = cur[:j] + (a, b) + cur[j + 2 :]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if not moved:
            results.add(cur)
    return results


def validate_kgraph(g: KGraph, strict: bool = False) -> ValidationReport:
    """Check square bijectivity, the hexagon condition and commuting matrices."""
    rep = ValidationReport()
    ok = True
    for i, j in itertools.combinations(range(1, g.k + 1), 2):
        for a, b in _composable_pairs(g, i, j):
            if (a, b) not in g._swap:
                ok = False
                rep.details.append(f"pair ({a},{b}) of colors ({i},{j}) has no square")
        for a, b in _composable_pairs(g, j, i):
            if (a, b) not in g._swap:
                ok = False
                rep.details.append(f"pair ({a},{b}) of colors ({j},{i}) has no square")
    rep.checks["square_bijection"] = ok
    if not ok:
        rep.errors.append(IncompleteBijection.code)

    if g.k >= 3:
        hex_ok = ok
        if ok:
            for i, j, l in itertools.combinations(range(1, g.k + 1), 3):
                for a, b in _composable_pairs(g, l, j):
                    for c in g.edges.values():
                        if c.color != i or g.edges[b].source != c.range:
                            continue
                        outs = _all_rewrites(g, (a, b, c.id))
                        if len(outs) != 1:
                            hex_ok = False
                            rep.details.append(f"triple ({a},{b},{c.id}) has {len(outs)} normal forms")
        rep.checks["hexagon"] = hex_ok
        if not hex_ok and ok:
            rep.errors.append("HexagonFailure")

    mats = [vertex_matrix(g, i) for i in range(1, g.k + 1)]
    comm = True
    for i, j in itertools.combinations(range(g.k), 2):
        if not np.array_equal(mats[i].dot(mats[j]), mats[j].dot(mats[i])):
            comm = False
            rep.details.append(f"A_{i + 1} and A_{j + 1} do not commute")
    rep.checks["commuting_matrices"] = comm
    if strict and not rep.passed:
        if IncompleteBijection.code in rep.errors:
            raise IncompleteBijection("; ".join(rep.details))
        raise MalformedGraph("; ".join(rep.details))
    return rep


def structural_flags(g: KGraph) -> dict[str, bool]:
    adj: dict[str, set[str]] = {v: set() for v in g.vertices}
    for e in g.edges.values():
        adj[e.range].add(e.source)
    strongly = True
    for v in g.vertices:
        seen, queue = {v}, deque([v])
        while queue:
            for w in adj[queue.popleft()]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != len(g.vertices):
            strongly = False
            break
    has_sources = any(
        not any(e.range == v and e.color == i for e in g.edges.values())
        for v in g.vertices
        for i in range(1, g.k + 1)
    )
    return {"strongly_connected": strongly, "has_sources": has_sources, "row_finite": True}


# -- products --------------------------------------------------------------


def _pair(a: str, b: str) -> str:
    return f"({a},{b})"


def product_graph(g1: KGraph, g2: KGraph) -> KGraph:
    """Cartesian product; colors of ``g2`` are shifted up by ``g1.k``."""
    k1 = g1.k
    vertices = [_pair(w, v) for w in g1.vertices for v in g2.vertices]
    edges: list[Edge] = []
    for e in g1.edges.values():
        for v in g2.vertices:
            edges.append(Edge(_pair(e.id, v), e.color, _pair(e.source, v), _pair(e.range, v)))
    for f in g2.edges.values():
        for u in g1.vertices:
            edges.append(Edge(_pair(u, f.id), f.color + k1, _pair(u, f.source), _pair(u, f.range)))
    squares: list[Square] = []
    for s in g1.squares:
        for v in g2.vertices:
            squares.append(
                Square(tuple(_pair(x, v) for x in s.lhs), tuple(_pair(x, v) for x in s.rhs))
            )
    for s in g2.squares:
        for u in g1.vertices:
            squares.append(
                Square(tuple(_pair(u, x) for x in s.lhs), tuple(_pair(u, x) for x in s.rhs))
            )
    for lam in g1.edges.values():
        for nu in g2.edges.values():
            squares.append(
                Square(
                    (_pair(lam.id, nu.range), _pair(lam.source, nu.id)),
                    (_pair(lam.range, nu.id), _pair(lam.id, nu.source)),
                )
            )
    name = f"{g1.name or 'g1'} x {g2.name or 'g2'}"
    return KGraph(k1 + g2.k, vertices, edges, squares, name)


# -- infinite paths --------------------------------------------------------


@dataclass(frozen=True)
class InfinitePathSpec:
    """Eventually periodic infinite path ``prefix cycle cycle ...``."""

    graph: KGraph = field(compare=False, repr=False)
    prefix: Path
    cycle: Path

    def __post_init__(self):
        k = self.graph.k
        if self.cycle.source != self.cycle.range or self.cycle.range != self.prefix.source:
            raise NotComposable("cycle must be a loop at the source of the prefix")
        for p, what in ((self.prefix, "prefix"), (self.cycle, "cycle")):
            if not p.degree.is_square():
                raise ValueError(f"{what} degree must be a multiple of (1,...,1)")
        if self.cycle.degree == Degree.zero(k):
            raise ValueError("cycle degree must be positive")

    @property
    def range(self) -> str:
        return self.prefix.range

    @property
    def prefix_len(self) -> int:
        return self.prefix.degree[0]

    @property
    def cycle_len(self) -> int:
        return self.cycle.degree[0]

    def to_dict(self) -> dict:
        return {"prefix": list(self.prefix.edges), "cycle": list(self.cycle.edges)}


def infinite_path(g: KGraph, prefix: Sequence[str], cycle: Sequence[str]) -> InfinitePathSpec:
    cyc = normal_form(g, list(cycle))
    pre = normal_form(g, list(prefix), base=cyc.range)
    return InfinitePathSpec(g, pre, cyc)


def path_prefix(g: KGraph, x: InfinitePathSpec, n: int) -> Path:
    """The initial segment x(0, (n,...,n))."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return g.vertex(x.range)
    reps = max(0, -(-(n - x.prefix_len) // x.cycle_len))
    seq = x.prefix.edges + x.cycle.edges * reps
    full = normal_form(g, seq, base=x.range)
    return factor(g, full, g.unit(n))[0]


def point_segment(g: KGraph, x: InfinitePathSpec, start: int, end: int) -> Path:
    """x((start,...,start), (end,...,end))."""
    return factor(g, path_prefix(g, x, end), g.unit(start))[1]


def shift_point(g: KGraph, x: InfinitePathSpec, t: int) -> InfinitePathSpec:
    """sigma^{(t,...,t)}(x) as a new eventually periodic spec."""
    if t <= x.prefix_len:
        return InfinitePathSpec(g, factor(g, x.prefix, g.unit(t))[1], x.cycle)
    r = (t - x.prefix_len) % x.cycle_len
    a, b = factor(g, x.cycle, g.unit(r))
    return InfinitePathSpec(g, g.vertex(b.range), compose(g, b, a) if a.edges else b)


def point_from_dict(g: KGraph, data: dict) -> InfinitePathSpec:
    try:
        return infinite_path(g, [str(e) for e in data.get("prefix", [])], [str(e) for e in data["cycle"]])
    except KeyError:
        raise MalformedGraph("point spec needs a 'cycle' list") from None

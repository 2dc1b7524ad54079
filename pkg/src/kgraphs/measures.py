"""Measures on the infinite path space, given by their values on cylinders.

Every measure here is determined by its square cylinders. Masses of other
cylinders are sums over square completions. Each kind also exposes its masses
as a chain over unit segments (paths of degree (1,...,1)); the Hellinger
profile runs a transfer computation over that chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import (
    GraphMismatch,
    InvalidMeasure,
    NoCommonEigenvector,
    NotStronglyConnected,
    RangeMismatch,
    UnsupportedGraphForKind,
    ZeroMassBase,
)
from .kgraph import (
    Degree,
    InfinitePathSpec,
    KGraph,
    Path,
    compose,
    path_prefix,
    paths_of_degree,
    reorder,
    structural_flags,
    vertex_matrix,
)
from .library import check_permutation, one_vertex_fefe


def to_number(value):
    """Parse a JSON scalar into an exact Fraction where possible."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidMeasure("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # the shortest decimal repr is what the user wrote
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise InvalidMeasure(f"cannot parse number {value!r}") from None
    raise InvalidMeasure(f"cannot parse number {value!r}")


# -- Perron-Frobenius data --------------------------------------------------


@dataclass(frozen=True)
class PFData:
    vertices: tuple[str, ...]
    radii: tuple
    kappa: tuple
    exact: bool

    def kappa_of(self, v: str):
        return self.kappa[self.vertices.index(v)]

    def to_dict(self) -> dict:
        return {
            "exact": self.exact,
            "radii": [str(r) if self.exact else float(r) for r in self.radii],
            "kappa": {
                v: (str(k) if self.exact else float(k)) for v, k in zip(self.vertices, self.kappa)
            },
        }


def pf_data(g: KGraph, tol: float = 1e-10, max_iter: int = 100_000) -> PFData:
    """Spectral radii and the normalized common Perron eigenvector.

    Power iteration runs on I + A_1 + ... + A_k, which is primitive when the
    graph is strongly connected, so bipartite examples converge as well.
    """
    if not structural_flags(g)["strongly_connected"]:
        raise NotStronglyConnected(f"{g!r} is not strongly connected")
    mats = [vertex_matrix(g, i).astype(float) for i in range(1, g.k + 1)]
    n = len(g.vertices)
    b = np.eye(n) + sum(mats)
    vec = np.ones(n) / n
    for _ in range(max_iter):
        nxt = b @ vec
        nxt /= nxt.sum()
        change = np.max(np.abs(nxt - vec)) / np.max(np.abs(nxt))
        vec = nxt
        if change < 1e-12:
            break
    radii = tuple(float((a @ vec).sum()) for a in mats)
    for i, (a, r) in enumerate(zip(mats, radii), start=1):
        if np.max(np.abs(a @ vec - r * vec)) > tol:
            raise NoCommonEigenvector(f"kappa is not an eigenvector of A_{i}")
    exact = _exact_pf(g, vec)
    if exact is not None:
        return PFData(g.vertices, exact[0], exact[1], True)
    return PFData(g.vertices, radii, tuple(float(x) for x in vec), False)


def _exact_pf(g: KGraph, vec: np.ndarray):
    """Try to confirm a rational Perron vector exactly."""
    kappa = [Fraction(float(x)).limit_denominator(10**6) for x in vec]
    total = sum(kappa)
    kappa = [x / total for x in kappa]
    radii = []
    for i in range(1, g.k + 1):
        a = vertex_matrix(g, i)
        image = [sum(int(a[r, c]) * kappa[c] for c in range(len(kappa))) for r in range(len(kappa))]
        rho = sum(image)
        if any(y != rho * x for x, y in zip(kappa, image)):
            return None
        radii.append(rho)
    return tuple(radii), tuple(kappa)


# -- generic measure interface ----------------------------------------------


def unit_segments(g: KGraph) -> list[Path]:
    return paths_of_degree(g, g.unit(1))


def _same_graph(a: KGraph, b: KGraph) -> bool:
    return a is b or a.to_dict() == b.to_dict()


class CylinderMeasure:
    """Base class. Subclasses implement square masses and the segment chain."""

    kind = "abstract"
    #: depth from which Radon-Nikodym ratios are constant on cylinders
    rn_depth = 0

    def __init__(self, graph: KGraph, exact: bool):
        self.graph = graph
        self.exact = exact
        self._cache: dict[Path, object] = {}

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def mass(self, lam: Path):
        """mu(Z(lam))."""
        hit = self._cache.get(lam)
        if hit is not None:
            return hit
        d = lam.degree
        if d.is_square():
            val = self._square_mass(lam)
        else:
            n = max(d)
            val = self.zero()
            for mu in paths_of_degree(self.graph, self.graph.unit(n) - d, lam.source):
                val += self._square_mass(compose(self.graph, lam, mu))
        self._cache[lam] = val
        return val

    def _square_mass(self, lam: Path):
        raise NotImplementedError

    def vertex_mass(self, v: str):
        return self.mass(self.graph.vertex(v))

    def transition(self, t: int, prev: Path | None, seg: Path):
        """mass(x_1...x_t) / mass(x_1...x_{t-1}) for the t-th unit segment."""
        raise NotImplementedError

    def rn_error(self, depth: int) -> float:
        """Certified multiplicative error of a depth-``depth`` RN ratio."""
        return 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        return f"<{type(self).__name__} on {self.graph.name or 'graph'}>"


class PFMeasure(CylinderMeasure):
    """M(Z(lam)) = rho^{-d(lam)} kappa_{s(lam)}."""

    kind = "pf"

    def __init__(self, graph: KGraph, pf: PFData | None = None):
        self.pf = pf or pf_data(graph)
        super().__init__(graph, self.pf.exact)

    def _scale(self, d: Sequence[int]):
        out = Fraction(1) if self.exact else 1.0
        for r, e in zip(self.pf.radii, d):
            out = out / r**e
        return out

    def mass(self, lam: Path):
        return self._scale(lam.degree) * self.pf.kappa_of(lam.source)

    def transition(self, t, prev, seg):
        return self._scale(seg.degree) * self.pf.kappa_of(seg.source) / self.pf.kappa_of(seg.range)

    def to_dict(self):
        return {"kind": self.kind, "pf": self.pf.to_dict()}


# -- one-vertex graph measures ----------------------------------------------


def _require_one_vertex(g: KGraph, kind: str) -> None:
    ref = one_vertex_fefe()
    if not (
        g.k == 2
        and g.vertices == ref.vertices
        and g.edges == ref.edges
        and set(g.squares) == set(ref.squares)
    ):
        raise UnsupportedGraphForKind(f"{kind} measures live on the one-vertex graph only")


def _letters(g: KGraph, lam: Path) -> list[int]:
    """Blue letter indices g_1..g_n of e g_1 e g_2 ... e g_n (1 for f1, 2 for f2)."""
    n = lam.degree[0]
    seq = reorder(g, lam.edges, [2, 1] * n)
    return [1 if seq[2 * t + 1] == "f1" else 2 for t in range(n)]


@dataclass(frozen=True)
class GammaSequence:
    """Perturbations gamma_1, gamma_2, ... with a declared tail bound.

    Either geometric (gamma_i = c * r**i) or a finite list, after which gamma
    is zero and ``tail`` bounds the sum of the omitted absolute values.
    """

    kind: str
    c: Fraction = Fraction(0)
    r: Fraction = Fraction(0)
    values: tuple = ()
    tail: Fraction = Fraction(0)

    @classmethod
    def geometric(cls, c, r) -> "GammaSequence":
        c, r = to_number(c), to_number(r)
        if not 0 <= r < 1:
            raise InvalidMeasure("geometric ratio must lie in [0, 1)")
        if abs(c) * r >= Fraction(1, 2):
            raise InvalidMeasure("|gamma_1| must be below 1/2")
        return cls("geometric", c=c, r=r)

    @classmethod
    def listed(cls, values, tail=0) -> "GammaSequence":
        vals = tuple(to_number(v) for v in values)
        if any(abs(v) >= Fraction(1, 2) for v in vals):
            raise InvalidMeasure("every |gamma_i| must be below 1/2")
        tail = to_number(tail)
        if tail < 0 or tail >= Fraction(1, 2):
            raise InvalidMeasure("tail bound must lie in [0, 1/2)")
        return cls("list", values=vals, tail=tail)

    def __call__(self, i: int) -> Fraction:
        if self.kind == "geometric":
            return self.c * self.r**i
        return self.values[i - 1] if i <= len(self.values) else Fraction(0)

    def tail_sum(self, depth: int) -> float:
        """Upper bound on sum_{i > depth} |gamma_i|."""
        if self.kind == "geometric":
            return float(abs(self.c) * self.r ** (depth + 1) / (1 - self.r))
        listed = sum(abs(v) for v in self.values[depth:])
        return float(listed + self.tail)

    def tail_sup(self, depth: int) -> float:
        if self.kind == "geometric":
            return float(abs(self.c) * self.r ** (depth + 1))
        rest = [abs(v) for v in self.values[depth:]]
        return float(max(rest + [self.tail]))

    def to_dict(self) -> dict:
        if self.kind == "geometric":
            return {"type": "geometric", "c": str(self.c), "r": str(self.r)}
        return {"type": "list", "values": [str(v) for v in self.values], "tail": str(self.tail)}


class KakutaniMeasure(CylinderMeasure):
    """Product measure: Z(e g_1 ... e g_n) has mass prod (1/2 +- gamma_i)."""

    kind = "kakutani"

    def __init__(self, graph: KGraph, gammas: GammaSequence, rn_depth: int = 12):
        _require_one_vertex(graph, self.kind)
        super().__init__(graph, exact=True)
        self.gammas = gammas
        self.rn_depth = rn_depth

    def alpha(self, i: int, letter: int) -> Fraction:
        g = self.gammas(i)
        return Fraction(1, 2) + g if letter == 1 else Fraction(1, 2) - g

    def _square_mass(self, lam):
        out = Fraction(1)
        for i, letter in enumerate(_letters(self.graph, lam), start=1):
            out *= self.alpha(i, letter)
        return out

    def transition(self, t, prev, seg):
        return self.alpha(t, _letters(self.graph, seg)[0])

    def rn_error(self, depth):
        # |log(1 +- 2g)| <= 2|g|/(1-2|g|); numerator and denominator tails each
        # contribute at most this sum
        sup = self.gammas.tail_sup(depth)
        tail = 2 * self.gammas.tail_sum(depth) / (1 - 2 * sup)
        return math.exp(2 * tail)

    def to_dict(self):
        return {"kind": self.kind, "params": {"gammas": self.gammas.to_dict()}}


class MarkovMeasure(CylinderMeasure):
    """Markov measure on the one-vertex graph.

    The letter sequence i_1 i_2 ... of e f_{i_1} e f_{i_2} ... is a Markov
    chain with transition matrix T and initial weights ``lam``.
    """

    kind = "markov"
    rn_depth = 1

    def __init__(self, graph: KGraph, T, lam=None, validate: bool = True):
        _require_one_vertex(graph, self.kind)
        T = [[to_number(v) for v in row] for row in T]
        lam = [to_number(v) for v in lam] if lam is not None else [Fraction(1, 2)] * 2
        if len(T) != 2 or any(len(row) != 2 for row in T) or len(lam) != 2:
            raise InvalidMeasure("the one-vertex graph needs a 2x2 matrix")
        if validate:
            _check_stochastic(T, lam)
        super().__init__(graph, exact=True)
        self.T = T
        self.lam = lam

    @classmethod
    def symmetric(cls, graph: KGraph, x, lam=None) -> "MarkovMeasure":
        x = to_number(x)
        if not 0 < x < 1:
            raise InvalidMeasure("x must lie in (0, 1)")
        return cls(graph, [[x, 1 - x], [1 - x, x]], lam)

    def _square_mass(self, lam):
        letters = _letters(self.graph, lam)
        if not letters:
            return sum(self.lam, Fraction(0))
        out = self.lam[letters[0] - 1]
        for a, b in zip(letters, letters[1:]):
            out *= self.T[a - 1][b - 1]
        return out

    def transition(self, t, prev, seg):
        b = _letters(self.graph, seg)[0]
        if prev is None:
            return self.lam[b - 1] / sum(self.lam, Fraction(0))
        a = _letters(self.graph, prev)[0]
        return self.T[a - 1][b - 1]

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {
                "T": [[str(v) for v in row] for row in self.T],
                "lambda": [str(v) for v in self.lam],
            },
        }


def _check_stochastic(T, lam) -> None:
    n = len(T)
    if any(v <= 0 for row in T for v in row) or any(v <= 0 for v in lam):
        raise InvalidMeasure("Markov data must be strictly positive")
    for row in T:
        if abs(sum(row) - 1) > Fraction(1, 10**12):
            raise InvalidMeasure("rows of T must sum to 1")
    for j in range(n):
        if abs(sum(lam[i] * T[i][j] for i in range(n)) - lam[j]) > Fraction(1, 10**10):
            raise InvalidMeasure("lambda must be a left fixed vector of T")


# -- star graphs Lambda_2N --------------------------------------------------


@dataclass(frozen=True)
class StarStructure:
    n: int
    perm: tuple[int, ...]
    index: dict = field(hash=False)  # peripheral vertex id -> 1..2N


def star_structure(g: KGraph) -> StarStructure:
    """Recover N and the permutation from a library star graph."""
    from .library import lambda_2n, peripheral_names

    qs = [v for v in g.vertices if v != "v"]
    if "v" not in g.vertices or len(qs) % 2 or not qs:
        raise UnsupportedGraphForKind("not a star graph")
    n = len(qs) // 2
    if qs != peripheral_names(n):
        raise UnsupportedGraphForKind("not a star graph")
    perm = [0] * (2 * n)
    for sq in g.squares:
        a, b = sq.lhs
        c, _ = sq.rhs
        if a.startswith("bi") and b.startswith("ro") and c.startswith("ri"):
            perm[int(c[2:]) - 1] = int(a[2:])
    try:
        check_permutation(perm, 2 * n)
        ref = lambda_2n(n, perm)
    except Exception:
        raise UnsupportedGraphForKind("not a star graph") from None
    if ref.edges != g.edges or set(ref.squares) != set(g.squares):
        raise UnsupportedGraphForKind("not a star graph")
    return StarStructure(n, tuple(perm), {q: i for i, q in enumerate(qs, start=1)})


def star_vertex_string(g: KGraph, lam: Path) -> list[str]:
    """Vertices passed by the red-first alternating form of a square path."""
    n = lam.degree[0]
    seq = reorder(g, lam.edges, [2, 1] * n)
    return [lam.range] + [g.edges[e].source for e in seq]


def star_markov_matrix(perm: Sequence[int], xs: Sequence[Sequence]) -> list[list[Fraction]]:
    """T(i, j) = x^m_{phi^{-t}(j)} when i = phi^{t}(c_m), c_m the least entry of cycle m.

    Inverse powers on the column index make T(i, j) = T(phi(i), phi(j)).
    """
    size = len(perm)
    phi = {i + 1: p for i, p in enumerate(perm)}
    phi_inv = {p: i for i, p in phi.items()}
    seen: set[int] = set()
    cycles = []
    for start in range(1, size + 1):
        if start in seen:
            continue
        cyc, cur = [], start
        while cur not in seen:
            seen.add(cur)
            cyc.append(cur)
            cur = phi[cur]
        cycles.append(cyc)
    if len(xs) != len(cycles):
        raise InvalidMeasure(f"need {len(cycles)} vectors, one per cycle of the permutation")
    T = [[Fraction(0)] * size for _ in range(size)]
    for m, cyc in enumerate(cycles):
        x = [to_number(v) for v in xs[m]]
        if len(x) != size or any(not 0 < v < 1 for v in x) or sum(x) != 1:
            raise InvalidMeasure("each x vector needs 2N entries in (0,1) summing to 1")
        i, jmap = cyc[0], {j: j for j in range(1, size + 1)}
        for _ in cyc:
            for j in range(1, size + 1):
                T[i - 1][j - 1] = x[jmap[j] - 1]
            i = phi[i]
            jmap = {j: phi_inv[jmap[j]] for j in jmap}
    return T


class StarMarkovMeasure(CylinderMeasure):
    """Markov measure on a star graph, built from one probability vector per cycle.

    Both halves of the path space (range v, peripheral range) carry the
    transition matrix T_x on the sequence of peripheral vertices visited.
    Every initial peripheral vertex gets weight 1/(4N), which makes the total
    mass 1.
    """

    kind = "lambda2n"
    rn_depth = 1

    def __init__(self, graph: KGraph, xs):
        self.star = star_structure(graph)
        super().__init__(graph, exact=True)
        self.T = star_markov_matrix(self.star.perm, xs)
        self.xs = [[to_number(v) for v in x] for x in xs]
        self.weight = Fraction(1, 4 * self.star.n)

    def _peripheral(self, lam: Path) -> list[int]:
        return [self.star.index[q] for q in star_vertex_string(self.graph, lam) if q != "v"]

    def _square_mass(self, lam):
        qs = self._peripheral(lam)
        if not qs:
            return Fraction(1, 2)
        out = self.weight
        for a, b in zip(qs, qs[1:]):
            out *= self.T[a - 1][b - 1]
        return out

    def transition(self, t, prev, seg):
        qs = self._peripheral(seg)
        if seg.range == "v":
            if prev is None:
                return self.weight * 2
            a = self._peripheral(prev)[0]
            return self.T[a - 1][qs[0] - 1]
        return self.T[qs[0] - 1][qs[1] - 1]

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"x": [[str(v) for v in x] for x in self.xs]},
        }


class StarProductMeasure(CylinderMeasure):
    """Product measure on a star graph with perturbations delta^j.

    A peripheral vertex in position p of the vertex string weighs
    (1 + alpha_p)/(2N), alpha_p = +delta^j_p at u_j and -delta^j_p at w_j.
    Each half of the path space carries mass 1/2.
    """

    kind = "product2n"

    def __init__(self, graph: KGraph, deltas: Sequence[GammaSequence]):
        self.star = star_structure(graph)
        if len(deltas) != self.star.n:
            raise InvalidMeasure(f"need {self.star.n} delta sequences")
        super().__init__(graph, exact=True)
        self.deltas = list(deltas)
        for seq in self.deltas:
            if seq.kind == "list" and any(abs(v) >= 1 for v in seq.values):
                raise InvalidMeasure("|delta| must be below 1")
        self.rn_depth = 12

    def _delta(self, j: int, p: int) -> Fraction:
        # sequences are indexed from position 0
        return self.deltas[j - 1](p + 1)

    def factor(self, q: int, p: int) -> Fraction:
        n = self.star.n
        alpha = self._delta(q, p) if q <= n else -self._delta(q - n, p)
        return (1 + alpha) / (2 * n)

    def _square_mass(self, lam):
        out = Fraction(1, 2)
        for p, q in enumerate(star_vertex_string(self.graph, lam)):
            if q != "v":
                out *= self.factor(self.star.index[q], p)
        return out

    def vertex_mass(self, v):
        return self.mass(self.graph.vertex(v))

    def transition(self, t, prev, seg):
        verts = star_vertex_string(self.graph, seg)
        if seg.range == "v":
            return self.factor(self.star.index[verts[1]], 2 * t - 1)
        return self.factor(self.star.index[verts[2]], 2 * t)

    def to_dict(self):
        return {"kind": self.kind, "params": {"deltas": [d.to_dict() for d in self.deltas]}}


# -- construction from JSON specs -------------------------------------------


def _gammas_from(data) -> GammaSequence:
    if isinstance(data, list):
        return GammaSequence.listed(data)
    if not isinstance(data, dict):
        raise InvalidMeasure("gammas must be an object or a list")
    kind = data.get("type", "geometric" if "c" in data else "list")
    if kind == "geometric":
        return GammaSequence.geometric(data["c"], data["r"])
    return GammaSequence.listed(data.get("values", []), data.get("tail", 0))


def measure_from_spec(g: KGraph, spec: dict) -> CylinderMeasure:
    """Build a measure from ``{"kind": ..., "params": {...}}``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidMeasure("measure spec needs a 'kind'")
    kind = spec["kind"]
    params = spec.get("params", {}) or {}
    try:
        if kind == "pf":
            return PFMeasure(g)
        if kind == "kakutani":
            return KakutaniMeasure(g, _gammas_from(params["gammas"]), int(params.get("rn_depth", 12)))
        if kind == "markov":
            if "x" in params:
                return MarkovMeasure.symmetric(g, params["x"], params.get("lambda"))
            return MarkovMeasure(g, params["T"], params.get("lambda"))
        if kind == "lambda2n":
            return StarMarkovMeasure(g, params["x"])
        if kind == "product2n":
            return StarProductMeasure(g, [_gammas_from(d) for d in params["deltas"]])
    except KeyError as exc:
        raise InvalidMeasure(f"missing parameter {exc}") from None
    raise InvalidMeasure(f"unknown measure kind {kind!r}")


# -- consistency ------------------------------------------------------------


@dataclass
class ConsistencyReport:
    passed: bool
    depth: int
    cases: int
    worst_defect: float
    total_mass_defect: float
    exact: bool
    worst_case: str | None = None

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "depth": self.depth,
            "cases": self.cases,
            "worstDefect": self.worst_defect,
            "totalMassDefect": self.total_mass_defect,
            "exact": self.exact,
            "worstCase": self.worst_case,
        }


def check_kolmogorov(m: CylinderMeasure, depth: int, tol: float = 1e-12) -> ConsistencyReport:
    """mass(lam) against the sum over one-step square refinements, all levels <= depth."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    g = m.graph
    worst, worst_case, cases = 0, None, 0
    exact_ok = True
    for n in range(depth + 1):
        for lam in paths_of_degree(g, g.unit(n)):
            kids = paths_of_degree(g, g.unit(1), lam.source)
            total = sum((m.mass(compose(g, lam, mu)) for mu in kids), m.zero())
            diff = m.mass(lam) - total
            cases += 1
            if m.exact and diff != 0:
                exact_ok = False
            if abs(float(diff)) > worst or (worst_case is None and diff != 0):
                worst, worst_case = abs(float(diff)), str(lam)
    total = sum((m.vertex_mass(v) for v in g.vertices), m.zero())
    total_defect = abs(float(total - 1))
    if m.exact:
        passed = exact_ok and total == 1
    else:
        passed = worst < tol and total_defect < tol
    return ConsistencyReport(passed, depth, cases, float(worst), total_defect, m.exact, worst_case)


# -- Radon-Nikodym ratios ---------------------------------------------------


@dataclass
class RNEstimate:
    value: object
    mult_error: float
    depth: int
    exact: bool
    history: list = field(default_factory=list)
    stable_from: int | None = None

    def to_dict(self) -> dict:
        val = str(self.value) if self.exact else float(self.value)
        return {
            "value": val,
            "valueFloat": float(self.value),
            "multError": self.mult_error,
            "depth": self.depth,
            "exact": self.exact,
            "stableFrom": self.stable_from,
            "history": [str(h) if self.exact else float(h) for h in self.history],
        }


def rn_on_cylinder(m: CylinderMeasure, lam: Path, base: Path, depth: int) -> RNEstimate:
    """mass(lam base') / mass(base') with base' a square extension of base."""
    g = m.graph
    if lam.source != base.range:
        raise RangeMismatch(f"s({lam}) != r({base})")
    level = max(depth, max(base.degree))
    if base.degree != g.unit(level):
        ext = paths_of_degree(g, g.unit(level) - base.degree, base.source)
        base = compose(g, base, ext[0])
    den = m.mass(base)
    if den == 0:
        raise ZeroMassBase(f"mass of {base} is zero")
    value = m.mass(compose(g, lam, base)) / den
    exact = m.exact and m.rn_error(level) == 1.0
    return RNEstimate(value, m.rn_error(level), level, exact)


def rn_at_point(m: CylinderMeasure, lam: Path, x: InfinitePathSpec, depth: int) -> RNEstimate:
    """RN derivative of prefixing by ``lam`` at the point ``x``."""
    if x.range != lam.source:
        raise RangeMismatch(f"r(x) = {x.range} but s({lam}) = {lam.source}")
    history = []
    for d in range(1, depth + 1):
        est = rn_on_cylinder(m, lam, path_prefix(m.graph, x, d), d)
        history.append(est.value)
    stable = depth
    while stable > 1 and history[stable - 2] == history[-1]:
        stable -= 1
    est.history = history
    est.stable_from = stable
    return est


# -- Hellinger comparison ---------------------------------------------------


def _transfer_profile(
    m1: CylinderMeasure, m2: CylinderMeasure, depth: int
) -> tuple[list[float], bool]:
    g = m1.graph
    segs = unit_segments(g)
    by_range: dict[str, list[Path]] = {}
    for s in segs:
        by_range.setdefault(s.range, []).append(s)
    positive = True

    def root(a, b) -> float:
        nonlocal positive
        if a <= 0 or b <= 0:
            positive = False
        return math.sqrt(float(a) * float(b)) if a > 0 and b > 0 else 0.0

    h: dict[Path, float] = {}
    for s in segs:
        w = root(m1.vertex_mass(s.range), m2.vertex_mass(s.range))
        h[s] = w * root(m1.transition(1, None, s), m2.transition(1, None, s))
    profile = [sum(h.values())]
    for t in range(2, depth + 1):
        nxt: dict[Path, float] = {s: 0.0 for s in segs}
        for prev, val in h.items():
            if val == 0.0:
                continue
            for s in by_range.get(prev.source, []):
                nxt[s] += val * root(m1.transition(t, prev, s), m2.transition(t, prev, s))
        h = nxt
        profile.append(sum(h.values()))
    return profile, positive


def hellinger_profile(m1: CylinderMeasure, m2: CylinderMeasure, depth: int) -> list[float]:
    """H_n = sum over Lambda^{(n,...,n)} of sqrt(m1 * m2), n = 1..depth."""
    if not _same_graph(m1.graph, m2.graph):
        raise GraphMismatch("measures live on different graphs")
    return _transfer_profile(m1, m2, depth)[0]


@dataclass
class Verdict:
    verdict: str
    profile: list[float]
    ratios: list[float]
    evidence: dict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "profile": self.profile,
            "ratios": self.ratios,
            "evidence": self.evidence,
        }


def equivalence_verdict(
    m1: CylinderMeasure,
    m2: CylinderMeasure,
    depth: int,
    eps: float = 1e-6,
    conv_tol: float = 1e-9,
    floor: float = 1e-6,
) -> Verdict:
    """Numeric equivalence/singularity decision from the Hellinger profile."""
    if not _same_graph(m1.graph, m2.graph):
        raise GraphMismatch("measures live on different graphs")
    if depth < 2:
        raise ValueError("depth must be at least 2")
    profile, positive = _transfer_profile(m1, m2, depth)
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(profile, profile[1:])]
    tail = ratios[-max(1, depth // 2) :]
    last_step = abs(profile[-1] - profile[-2])
    evidence = {
        "maxTailRatio": max(tail),
        "lastStep": last_step,
        "limit": profile[-1],
        "allCylindersPositive": positive,
        "eps": eps,
    }
    if max(tail) <= 1 - eps:
        verdict = "singular"
    elif last_step < conv_tol and profile[-1] > floor and positive:
        verdict = "equivalent"
    else:
        verdict = "inconclusive"
    return Verdict(verdict, profile, ratios, evidence)


def kakutani_hellinger_closed_form(gammas: Callable[[int], Fraction], depth: int) -> list[float]:
    """Product formula prod_i (sqrt((1/2+g)/2) + sqrt((1/2-g)/2)) against M."""
    out, acc = [], 1.0
    for i in range(1, depth + 1):
        g = float(gammas(i))
        acc *= math.sqrt((0.5 + g) * 0.5) + math.sqrt((0.5 - g) * 0.5)
        out.append(acc)
    return out


def degree_of(g: KGraph, n: int) -> Degree:
    return g.unit(n)

"""Named example graphs.

Color 1 is drawn blue and color 2 red throughout.
"""

from __future__ import annotations

from typing import Sequence

from .errors import InvalidPermutation, UnknownLibraryGraph
from .kgraph import Edge, KGraph, Square


def one_vertex_fefe() -> KGraph:
    """One vertex, blue loops f1 and f2, red loop e, with e f1 = f2 e and e f2 = f1 e."""
    edges = [Edge("f1", 1, "v", "v"), Edge("f2", 1, "v", "v"), Edge("e", 2, "v", "v")]
    squares = [Square(("f1", "e"), ("e", "f2")), Square(("f2", "e"), ("e", "f1"))]
    return KGraph(2, ["v"], edges, squares, "one_vertex_fefe")


def three_vertex_eight_edge() -> KGraph:
    """Three vertices u, v, w; blue a0, a1, c0, c1 and red b0, b1, d0, d1."""
    edges = [
        Edge("a0", 1, "v", "u"),
        Edge("a1", 1, "v", "w"),
        Edge("c0", 1, "u", "v"),
        Edge("c1", 1, "w", "v"),
        Edge("d0", 2, "v", "u"),
        Edge("d1", 2, "v", "w"),
        Edge("b0", 2, "u", "v"),
        Edge("b1", 2, "w", "v"),
    ]
    squares = [
        Square(("a0", "b0"), ("d0", "c0")),
        Square(("a1", "b1"), ("d1", "c1")),
        Square(("a1", "b0"), ("d1", "c0")),
        Square(("a0", "b1"), ("d0", "c1")),
        Square(("c0", "d0"), ("b1", "a1")),
        Square(("c1", "d1"), ("b0", "a0")),
    ]
    return KGraph(2, ["u", "v", "w"], edges, squares, "three_vertex_eight_edge")


def peripheral_names(n: int) -> list[str]:
    """Vertex ids Q_1..Q_{2N}: first u_1..u_N, then w_1..w_N."""
    return [f"u{i}" for i in range(1, n + 1)] + [f"w{i}" for i in range(1, n + 1)]


def check_permutation(perm: Sequence[int], size: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, size + 1)):
        raise InvalidPermutation(f"{perm} is not a permutation of 1..{size}")
    return perm


def lambda_2n(n: int, perm: Sequence[int]) -> KGraph:
    """Star-shaped 2-graph with central vertex v and 2N peripheral vertices.

    ``perm`` lists the images phi(1), ..., phi(2N). For every i the red-blue
    path v <- Q_i <- v equals the blue-red path v <- Q_phi(i) <- v. Paths
    through v with peripheral endpoints admit a single factorization each.
    Edge ids: ``bi{i}``/``ri{i}`` run from Q_i into v, ``bo{i}``/``ro{i}``
    from v out to Q_i (blue/red).
    """
    if n < 1:
        raise InvalidPermutation("N must be positive")
    phi = check_permutation(perm, 2 * n)
    qs = peripheral_names(n)
    edges = []
    for i, q in enumerate(qs, start=1):
        edges += [
            Edge(f"bi{i}", 1, q, "v"),
            Edge(f"bo{i}", 1, "v", q),
            Edge(f"ri{i}", 2, q, "v"),
            Edge(f"ro{i}", 2, "v", q),
        ]
    squares = []
    for i in range(1, 2 * n + 1):
        j = phi[i - 1]
        squares.append(Square((f"bi{j}", f"ro{j}"), (f"ri{i}", f"bo{i}")))
    for a in range(1, 2 * n + 1):
        for b in range(1, 2 * n + 1):
            squares.append(Square((f"bo{a}", f"ri{b}"), (f"ro{a}", f"bi{b}")))
    return KGraph(2, ["v", *qs], edges, squares, f"lambda_{2 * n}")


LIBRARY = ("one_vertex_fefe", "three_vertex_eight_edge", "lambda_2N")


def standard_library(name: str, params: dict | None = None) -> KGraph:
    params = params or {}
    if name == "one_vertex_fefe":
        return one_vertex_fefe()
    if name == "three_vertex_eight_edge":
        return three_vertex_eight_edge()
    if name in ("lambda_2N", "lambda_2n"):
        n = int(params.get("N", 1))
        perm = params.get("perm")
        if perm is None:
            perm = [2, 1] if n == 1 else list(range(1, 2 * n + 1))
        return lambda_2n(n, perm)
    raise UnknownLibraryGraph(f"unknown library graph {name!r}; choose from {LIBRARY}")

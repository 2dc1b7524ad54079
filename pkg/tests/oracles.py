"""Brute-force reference implementations used to cross-check the library.

These deliberately avoid the library's rewriting code: equivalence classes
are built by breadth-first search over square swaps in both directions.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def swap_table(g) -> dict[tuple[str, str], tuple[str, str]]:
    table = {}
    for sq in g.squares:
        table[tuple(sq.lhs)] = tuple(sq.rhs)
        table[tuple(sq.rhs)] = tuple(sq.lhs)
    return table


def equivalence_class(g, seq) -> set[tuple[str, ...]]:
    table = swap_table(g)
    seq = tuple(seq)
    seen = {seq}
    queue = deque([seq])
    while queue:
        cur = queue.popleft()
        for j in range(len(cur) - 1):
            pair = (cur[j], cur[j + 1])
            if pair in table:
                nxt = cur[:j] + table[pair] + cur[j + 2 :]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return seen


def sorted_representatives(g, seq) -> list[tuple[str, ...]]:
    colors = {e.id: e.color for e in g.edges.values()}
    return [s for s in equivalence_class(g, seq) if [colors[e] for e in s] == sorted(colors[e] for e in s)]


def composable_words(g, length: int):
    """Every composable edge word of the given length, read range to source."""
    edges = list(g.edges.values())
    words = [(e.id,) for e in edges]
    for _ in range(length - 1):
        words = [w + (e.id,) for w in words for e in edges if g.edges[w[-1]].source == e.range]
    return words


def words_of_degree(g, degree):
    """Every composable word (any color order) with the given color counts."""
    total = sum(degree)
    out = []
    for w in composable_words(g, total) if total else []:
        counts = [0] * g.k
        for e in w:
            counts[g.edges[e].color - 1] += 1
        if counts == list(degree):
            out.append(w)
    return out


def min_extensions(g, lam_edges, eta_edges, lam_deg, eta_deg, lam_src, eta_src, rng):
    """Pairs (alpha, beta) of sorted words with lam alpha ~ eta beta at the join degree."""
    top = [max(a, b) for a, b in zip(lam_deg, eta_deg)]
    da = [t - a for t, a in zip(top, lam_deg)]
    db = [t - b for t, b in zip(top, eta_deg)]

    def sorted_words(d, start):
        if sum(d) == 0:
            return [()]
        colors = {e.id: e.color for e in g.edges.values()}
        return [
            w
            for w in words_of_degree(g, d)
            if g.edges[w[0]].range == start and [colors[e] for e in w] == sorted(colors[e] for e in w)
        ]

    out = set()
    for alpha in sorted_words(da, lam_src):
        left = equivalence_class(g, tuple(lam_edges) + alpha)
        for beta in sorted_words(db, eta_src):
            if tuple(eta_edges) + beta in left:
                out.add((alpha, beta))
    return out


def path_count_matrix(g, degree) -> np.ndarray:
    """prod_i A_i^{n_i}, with A_i[v, w] = #color-i edges from w to v."""
    idx = {v: j for j, v in enumerate(g.vertices)}
    n = len(g.vertices)
    out = np.eye(n, dtype=np.int64)
    for i, power in enumerate(degree, start=1):
        a = np.zeros((n, n), dtype=np.int64)
        for e in g.edges.values():
            if e.color == i:
                a[idx[e.range], idx[e.source]] += 1
        out = out @ np.linalg.matrix_power(a, power)
    return out


def perron_vector(g):
    """Dominant eigenpairs from numpy's dense eigensolver, one per color."""
    idx = {v: j for j, v in enumerate(g.vertices)}
    n = len(g.vertices)
    radii, vecs = [], []
    for i in range(1, g.k + 1):
        a = np.zeros((n, n))
        for e in g.edges.values():
            if e.color == i:
                a[idx[e.range], idx[e.source]] += 1
        w, v = np.linalg.eig(a)
        top = int(np.argmax(w.real))
        vec = np.abs(v[:, top].real)
        radii.append(float(w[top].real))
        vecs.append(vec / vec.sum())
    return radii, vecs


def degrees_up_to(k: int, bound: int):
    return list(itertools.product(range(bound + 1), repeat=k))

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgraphs import (
    Degree,
    Edge,
    KGraph,
    Square,
    compose,
    infinite_path,
    lambda_min,
    normal_form,
    path_from_edges,
    path_prefix,
    paths_of_degree,
    product_graph,
    standard_library,
    structural_flags,
    validate_kgraph,
    vertex_matrix,
)
from kgraphs.errors import (
    ColorOutOfRange,
    DanglingReference,
    DuplicateSquare,
    IncompleteBijection,
    InvalidPermutation,
    MalformedGraph,
    NotComposable,
    PathNotInGraph,
    UnknownLibraryGraph,
)
from kgraphs.kgraph import factor, paths_up_to, point_segment, segment, shift_point

from . import oracles

LIBRARY_GRAPHS = ["fefe", "lattice", "star", "star4"]


@pytest.fixture(params=LIBRARY_GRAPHS)
def graph(request):
    return request.getfixturevalue(request.param)


# -- degrees ----------------------------------------------------------------


def test_degree_arithmetic():
    a, b = Degree((1, 2)), Degree((2, 0))
    assert a + b == (3, 2)
    assert a | b == (2, 2)
    assert Degree((1, 0)) <= a
    assert not b <= a
    assert (a + b) - b == a
    with pytest.raises(ValueError):
        b - a


@given(st.lists(st.integers(0, 5), min_size=2, max_size=2), st.lists(st.integers(0, 5), min_size=2, max_size=2))
def test_join_is_least_upper_bound(x, y):
    a, b = Degree(x), Degree(y)
    j = a | b
    assert a <= j and b <= j
    assert all(t == max(u, v) for t, u, v in zip(j, a, b))


# -- validation -------------------------------------------------------------


def test_library_graphs_validate(graph):
    rep = validate_kgraph(graph)
    assert rep.passed, rep.details
    assert rep.checks["commuting_matrices"]


def test_vertex_matrices_commute_exactly(graph):
    a1, a2 = vertex_matrix(graph, 1), vertex_matrix(graph, 2)
    assert a1.dtype == np.int64
    assert np.array_equal(a1 @ a2, a2 @ a1)


def test_one_vertex_matrices(fefe):
    assert vertex_matrix(fefe, 1).tolist() == [[2]]
    assert vertex_matrix(fefe, 2).tolist() == [[1]]
    with pytest.raises(ColorOutOfRange):
        vertex_matrix(fefe, 3)


def test_missing_square_is_reported(fefe):
    data = fefe.to_dict()
    data["squares"] = data["squares"][:1]
    rep = validate_kgraph(KGraph.from_dict(data))
    assert not rep.passed
    assert "IncompleteBijection" in rep.errors
    with pytest.raises(IncompleteBijection):
        validate_kgraph(KGraph.from_dict(data), strict=True)


def test_non_commuting_matrices_detected():
    # two blue loops at u, one red edge u -> w; no squares can be complete
    edges = [Edge("b", 1, "u", "u"), Edge("r", 2, "u", "w")]
    rep = validate_kgraph(KGraph(2, ["u", "w"], edges, []))
    assert not rep.checks["commuting_matrices"]
    assert not rep.passed


def test_construction_errors(fefe):
    data = fefe.to_dict()
    bad = json.loads(json.dumps(data))
    bad["edges"][0]["source"] = "nowhere"
    with pytest.raises(DanglingReference):
        KGraph.from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["edges"][0]["color"] = 3
    with pytest.raises(ColorOutOfRange):
        KGraph.from_dict(bad)
    bad = json.loads(json.dumps(data))
    bad["squares"].append({"lhs": ["f1", "e"], "rhs": ["e", "f1"]})
    with pytest.raises(DuplicateSquare):
        KGraph.from_dict(bad)
    with pytest.raises(MalformedGraph):
        KGraph.from_dict({"k": 2})
    with pytest.raises(UnknownLibraryGraph):
        standard_library("nope")
    with pytest.raises(InvalidPermutation):
        standard_library("lambda_2N", {"N": 1, "perm": [1, 1]})


def test_json_round_trip(graph):
    again = KGraph.from_dict(json.loads(graph.to_json()))
    assert again.to_dict() == graph.to_dict()
    assert validate_kgraph(again).passed


def test_structural_flags(graph):
    flags = structural_flags(graph)
    assert flags == {"strongly_connected": True, "has_sources": False, "row_finite": True}


def test_flags_detect_source_and_disconnection():
    g = KGraph(1, ["a", "b"], [Edge("x", 1, "a", "b")], [])
    flags = structural_flags(g)
    assert not flags["strongly_connected"]
    assert flags["has_sources"]


# -- paths ------------------------------------------------------------------


def test_one_vertex_normal_forms(fefe):
    # e f2 = f1 e, e f1 = f2 e; normal forms list blue before red
    assert normal_form(fefe, ["e", "f2"]).edges == ("f1", "e")
    assert normal_form(fefe, ["e", "f1", "e"]).edges == ("f2", "e", "e")
    assert normal_form(fefe, ["e", "f1", "e"]).degree == (1, 2)
    assert lambda_min(fefe, path_from_edges(fefe, ["e"]), path_from_edges(fefe, ["f1"])) == {
        (path_from_edges(fefe, ["f2"]), path_from_edges(fefe, ["e"]))
    }


def test_non_composable_rejected(lattice):
    with pytest.raises(NotComposable):
        normal_form(lattice, ["a0", "a0"])
    with pytest.raises(PathNotInGraph):
        normal_form(lattice, ["zz"])


@pytest.mark.parametrize("length", [2, 3, 4])
def test_normal_form_matches_brute_force(graph, length):
    for w in oracles.composable_words(graph, length):
        reps = oracles.sorted_representatives(graph, w)
        assert len(reps) == 1, (w, reps)
        assert normal_form(graph, w).edges == reps[0]


@pytest.mark.parametrize("degree", oracles.degrees_up_to(2, 2))
def test_path_counts_match_matrix_products(graph, degree):
    counts = oracles.path_count_matrix(graph, degree)
    idx = {v: j for j, v in enumerate(graph.vertices)}
    got = np.zeros_like(counts)
    for p in paths_of_degree(graph, degree):
        got[idx[p.range], idx[p.source]] += 1
    assert np.array_equal(got, counts)


def test_lambda_min_matches_brute_force(graph):
    paths = [p for p in paths_up_to(graph, (2, 2)) if p.edges]
    for lam in paths:
        for eta in paths:
            if lam.range != eta.range:
                continue
            got = {(a.edges, b.edges) for a, b in lambda_min(graph, lam, eta)}
            want = oracles.min_extensions(
                graph, lam.edges, eta.edges, lam.degree, eta.degree, lam.source, eta.source, lam.range
            )
            assert got == want, (lam, eta)


def test_factor_and_segment(lattice):
    lam = paths_of_degree(lattice, (2, 1))[0]
    head, tail = factor(lattice, lam, (1, 1))
    assert head.degree == (1, 1) and tail.degree == (1, 0)
    assert compose(lattice, head, tail) == lam
    mid = segment(lattice, lam, Degree((1, 0)), Degree((2, 1)))
    assert mid.degree == (1, 1)


@st.composite
def path_pairs(draw, name):
    g = standard_library(name)
    d1 = (draw(st.integers(0, 2)), draw(st.integers(0, 2)))
    lam = draw(st.sampled_from(paths_of_degree(g, d1)))
    d2 = (draw(st.integers(0, 2)), draw(st.integers(0, 2)))
    mus = paths_of_degree(g, d2, lam.source)
    mu = draw(st.sampled_from(mus))
    d3 = (draw(st.integers(0, 1)), draw(st.integers(0, 1)))
    nu = draw(st.sampled_from(paths_of_degree(g, d3, mu.source)))
    return g, lam, mu, nu


@settings(max_examples=60, deadline=None)
@given(path_pairs("three_vertex_eight_edge"))
def test_composition_is_associative_and_factors_back(data):
    g, lam, mu, nu = data
    left = compose(g, compose(g, lam, mu), nu)
    right = compose(g, lam, compose(g, mu, nu))
    assert left == right
    assert left.degree == lam.degree + mu.degree + nu.degree
    head, tail = factor(g, compose(g, lam, mu), lam.degree)
    assert (head, tail) == (lam, mu)


@settings(max_examples=60, deadline=None)
@given(path_pairs("one_vertex_fefe"))
def test_factorization_is_unique_in_one_vertex_graph(data):
    g, lam, mu, _ = data
    whole = compose(g, lam, mu)
    splits = [
        (a, b)
        for a in paths_of_degree(g, lam.degree)
        for b in paths_of_degree(g, mu.degree, a.source)
        if compose(g, a, b) == whole
    ]
    assert splits == [(lam, mu)]


# -- infinite paths ---------------------------------------------------------


def test_infinite_path_prefixes(fefe):
    x = infinite_path(fefe, [], ["f1", "e"])
    p3 = path_prefix(fefe, x, 3)
    assert p3.degree == (3, 3)
    assert factor(fefe, p3, Degree((2, 2)))[0] == path_prefix(fefe, x, 2)
    assert point_segment(fefe, x, 1, 3).degree == (2, 2)


def test_shift_point(lattice):
    x = infinite_path(lattice, ["a0", "b0"], ["d0", "c0"])
    y = shift_point(lattice, x, 1)
    for n in range(1, 5):
        assert path_prefix(lattice, y, n) == point_segment(lattice, x, 1, n + 1)


def test_point_degree_must_be_diagonal(fefe):
    with pytest.raises(ValueError):
        infinite_path(fefe, ["f1"], ["f1", "e"])


# -- products ---------------------------------------------------------------


def test_product_graph_is_valid(fefe, lattice):
    line = KGraph(1, ["p"], [Edge("g", 1, "p", "p"), Edge("h", 1, "p", "p")], [])
    for g in (product_graph(fefe, line), product_graph(line, lattice)):
        assert g.k == 3
        rep = validate_kgraph(g)
        assert rep.passed, rep.details
        assert rep.checks["hexagon"]


def test_product_of_two_2graphs(fefe, star):
    g = product_graph(fefe, star)
    assert g.k == 4
    assert len(g.vertices) == 3
    assert validate_kgraph(g).passed


def test_square_repr_and_swap(fefe):
    assert fefe.swap("e", "f1") == ("f2", "e")
    assert Square(("f1", "e"), ("e", "f2")) in fefe.squares

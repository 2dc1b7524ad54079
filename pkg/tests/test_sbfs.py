import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgraphs import validate_kgraph
from kgraphs.errors import DegeneratePiece, InvalidInput, MalformedRegion, OnBoundary
from kgraphs.poly import Poly
from kgraphs.sbfs import (
    GeometricSBFS,
    Piece,
    PiecewiseMap,
    Region,
    affine_map,
    binary_interval,
    coding_residual,
    difference,
    example_lebesgue_interval,
    example_unit_square,
    load_sbfs,
    measure_of,
    overlap,
    product_sbfs,
    region_measure,
    rn_derivative_geometric,
    rn_positivity,
    rn_table,
    same_region,
    validate_sbfs_conditions,
)

F = Fraction


@pytest.fixture(scope="module")
def lebesgue():
    return example_lebesgue_interval()


@pytest.fixture(scope="module")
def square():
    return example_unit_square()


@pytest.fixture(scope="module")
def square_report(square):
    return validate_sbfs_conditions(square)


def numeric_jacobian(fn, pt, h=1e-4, n=64):
    """Area of the image of a small disc divided by the disc's area."""
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    xs = [fn((pt[0] + h * np.cos(a), pt[1] + h * np.sin(a))) for a in t]
    u = np.array([p[0] for p in xs])
    v = np.array([p[1] for p in xs])
    image = 0.5 * abs(np.dot(u, np.roll(v, 1)) - np.dot(v, np.roll(u, 1)))
    disc = 0.5 * n * h * h * np.sin(2 * np.pi / n)
    return image / disc


# -- regions ----------------------------------------------------------------


def test_interval_measures():
    a = Region.intervals([(0, F(1, 2)), (F(3, 4), 1)])
    b = Region.interval(F(1, 4), F(7, 8))
    assert region_measure(a).value == F(3, 4)
    assert overlap(a, b).value == F(1, 4) + F(1, 8)
    assert difference(b, [a]).value == F(1, 4)
    assert same_region(a, a).is_zero
    assert overlap(a, b).exact


def test_box_and_cell_measures():
    sq = Region.box(0, 1, 0, 1)
    upper = Region.cell((0, 1, 0, 1), Poly.y() - Poly.x(), F(1, 2))
    lower = Region.cell((0, 1, 0, 1), Poly.x() - Poly.y(), F(1, 2))
    assert region_measure(sq).value == 1
    assert overlap(upper, lower).is_zero
    assert difference(sq, [upper, lower]).is_zero
    # the declared area answers either side of the curve exactly
    assert region_measure(upper).value == F(1, 2) and region_measure(upper).exact
    assert difference(sq, [upper]).value == F(1, 2)
    undeclared = Region.cell((0, 1, 0, 1), Poly.y() - Poly.x())
    assert region_measure(undeclared).value == pytest.approx(0.5, abs=0.02)
    assert upper.contains((F(1, 4), F(1, 2)))
    assert not upper.contains((F(1, 2), F(1, 4)))


def test_unrelated_cells_fall_back_to_sampling():
    a = Region.cell((0, 1, 0, 1), Poly.y() - Poly.x())
    b = Region.cell((0, 1, 0, 1), Poly.y() + Poly.x() - 1)
    m = overlap(a, b)
    assert not m.exact
    assert m.value == pytest.approx(0.25, abs=0.02)


def test_region_json_round_trip():
    for r in (
        Region.intervals([(0, F(1, 3)), (F(1, 2), 1)]),
        Region.box(0, 1, F(1, 2), 1),
        Region.cell((0, 1, 0, 1), Poly.y() - Poly.x() * Poly.x(), F(2, 3)),
    ):
        again = Region.from_json(json.loads(json.dumps(r.to_json())))
        assert again.to_json() == r.to_json()


def test_malformed_regions():
    with pytest.raises(MalformedRegion):
        Region.interval(1, 0)
    with pytest.raises(MalformedRegion):
        Region.from_json({"shapes": []})
    with pytest.raises(MalformedRegion):
        Region.interval(0, 1).union(Region.box(0, 1, 0, 1))


def test_measure_of_generic_predicate():
    a = Region.interval(0, F(1, 2))
    b = Region.interval(F(1, 3), 1)
    assert measure_of(lambda inside: inside[0] != inside[1], [a, b]).value == F(1, 3) + F(1, 2)


# -- polynomials ------------------------------------------------------------


def test_poly_parse_and_arithmetic():
    p = Poly.parse({"1": 1, "x": -1, "x*y": "1/2", "y^2": 0.25})
    assert p(F(1, 2), 2) == 1 - F(1, 2) + F(1, 2) + 1
    assert p.diff("y") == Poly.parse({"x": "1/2", "y": "1/2"})
    assert Poly.parse(p.to_json()) == p
    assert Poly.parse([[1, 0, 2], [0, 0, 1]]) == Poly.affine(2, 1)
    q = Poly.x().compose(Poly.y(), Poly.x())
    assert q == Poly.y()
    assert (Poly.x() + 1) ** 2 == Poly.parse({"x^2": 1, "x": 2, "1": 1})
    assert isinstance(p(0.5, 2.0), float)
    with pytest.raises(InvalidInput):
        Poly.parse({"z": 1})


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(-4, 4), min_size=6, max_size=6),
    st.fractions(-3, 3, max_denominator=7),
    st.fractions(-3, 3, max_denominator=7),
)
def test_poly_composition_matches_evaluation(cs, x, y):
    p = Poly({(0, 0): cs[0], (1, 0): cs[1], (0, 1): cs[2], (1, 1): cs[3]})
    fx = Poly({(1, 0): cs[4], (0, 0): 1})
    fy = Poly({(0, 1): cs[5], (1, 0): 1})
    assert p.compose(fx, fy)(x, y) == p(fx(x, y), fy(x, y))


# -- the interval system ----------------------------------------------------


def test_interval_system_passes_exactly(lebesgue):
    rep = validate_sbfs_conditions(lebesgue)
    assert rep.passed, rep.to_dict()
    for c in rep.conditions:
        assert c.method == "exact", c.name
        assert c.cases > 0


def test_interval_system_rn_values(lebesgue):
    table = rn_table(lebesgue)
    for e in ("a0", "a1", "d0", "d1"):
        assert table[e] == "1"
    for e in ("b0", "b1", "c0", "c1"):
        assert table[e] == "1/2"


def test_interval_rn_against_image_length(lebesgue):
    # oracle: length of the image of a small interval over its length
    for e, m in lebesgue.maps.items():
        iv = m.pieces[0].domain.parts[0]
        for t in (F(1, 5), F(1, 2), F(4, 5)):
            p = iv.lo + (iv.hi - iv.lo) * t
            h = F(1, 1000)
            ratio = abs(m(p + h) - m(p - h)) / (2 * h)
            assert rn_derivative_geometric(m, p) == ratio


def test_square_paths_compose_the_same_way(lebesgue):
    # a0 b0 = d0 c0 as maps on D_u
    m = lebesgue.maps
    for t in range(1, 10):
        p = F(t, 30)
        assert m["a0"](m["b0"](p)) == m["d0"](m["c0"](p))


def test_interval_coding_inverts_prefixing(lebesgue):
    for e in lebesgue.maps:
        assert coding_residual(lebesgue, e) == 0.0
    ok, count, low = rn_positivity(lebesgue)
    assert ok and count == 800 and low == 0.5


def test_rn_boundary_and_degenerate_pieces(lebesgue):
    with pytest.raises(OnBoundary):
        rn_derivative_geometric(lebesgue.maps["a0"], F(1, 3))
    flat = affine_map(0, 1, 0, F(1, 2))
    with pytest.raises(DegeneratePiece):
        rn_derivative_geometric(flat, F(1, 2))


def _modified(s, maps=None, domains=None):
    maps = {**s.maps, **(maps or {})}
    domains = {**s.domains, **(domains or {})}
    ranges = {}
    for e, m in maps.items():
        lo = min(min(p.fx(iv.lo), p.fx(iv.hi)) for p in m.pieces for iv in p.domain.parts)
        hi = max(max(p.fx(iv.lo), p.fx(iv.hi)) for p in m.pieces for iv in p.domain.parts)
        ranges[e] = Region.interval(lo, hi)
    return GeometricSBFS(s.graph, domains, maps, ranges)


def test_overlapping_domains_fail(lebesgue):
    s = _modified(lebesgue, domains={"v": Region.interval(F(1, 4), F(2, 3))})
    rep = validate_sbfs_conditions(s)
    assert not rep.condition("ii").passed
    assert not rep.passed


def test_non_commuting_square_fails(lebesgue):
    t = F(1, 3)
    s = _modified(lebesgue, maps={"a0": affine_map(t, 2 * t, -1, 1), "d0": affine_map(t, 2 * t, 1, -t)})
    rep = validate_sbfs_conditions(s)
    assert not rep.condition("iii").passed


def test_missing_cover_fails():
    s = binary_interval()
    s = _modified(s, maps={"g1": affine_map(0, 1, F(1, 4), F(1, 2))})
    rep = validate_sbfs_conditions(s)
    assert not rep.condition("v").passed
    assert rep.condition("ii").passed


def test_binary_interval_passes():
    assert validate_sbfs_conditions(binary_interval()).passed


# -- the unit square system -------------------------------------------------


def test_unit_square_passes(square_report):
    assert square_report.passed, square_report.to_dict()
    methods = {c.name: c.method for c in square_report.conditions}
    assert methods["iii"] == "exact"
    assert methods["iv"] == "sampled"


def test_unit_square_rn_values(square):
    table = rn_table(square)
    assert table == {"f1": "1 + -1*x", "f2": "x", "e": "1"}
    pt = (F(1, 3), F(3, 4))
    assert rn_derivative_geometric(square.maps["f1"], pt) == F(2, 3)
    assert rn_derivative_geometric(square.maps["f2"], pt) == F(1, 3)
    assert rn_derivative_geometric(square.maps["e"], pt) == 1


@pytest.mark.parametrize("edge", ["f1", "f2", "e"])
def test_unit_square_rn_against_image_area(square, edge):
    m = square.maps[edge]
    for pt in [(0.2, 0.3), (0.5, 0.5), (0.7, 0.1), (0.9, 0.8)]:
        want = numeric_jacobian(lambda p: m(p), pt)
        got = float(rn_derivative_geometric(m, (F(pt[0]).limit_denominator(), F(pt[1]).limit_denominator())))
        assert got == pytest.approx(want, rel=1e-3)


def test_unit_square_coding(square):
    for e in square.maps:
        assert coding_residual(square, e, 49) < 1e-10
    ok, _, low = rn_positivity(square, 49)
    assert ok and low > 0


def test_unit_square_range_is_image(square):
    m = square.maps["f2"]
    # (x, xy) lands below the diagonal
    assert square.ranges["f2"].contains(m((F(1, 2), F(1, 2))))
    assert not square.ranges["f1"].contains(m((F(1, 2), F(1, 2))))
    assert m.inverse((F(1, 2), F(1, 4))) == (F(1, 2), F(1, 2))


def test_system_json_round_trip(square, tmp_path):
    path = tmp_path / "sq.json"
    data = square.to_json()
    data["graph"] = "one_vertex_fefe"
    path.write_text(json.dumps(data))
    again = load_sbfs(str(path))
    assert again.to_json() == square.to_json()
    with pytest.raises(InvalidInput):
        GeometricSBFS.from_json({"graph": "one_vertex_fefe"})


# -- products ---------------------------------------------------------------


def test_product_of_binary_systems():
    s = product_sbfs(binary_interval(), binary_interval())
    assert validate_kgraph(s.graph).passed
    rep = validate_sbfs_conditions(s)
    assert rep.passed, rep.to_dict()
    assert all(rep.condition(n).passed for n in ("i", "ii", "iii", "iv", "v"))
    assert region_measure(s.space()).value == 1


def test_product_rn_is_factor_rn():
    s1, s2 = example_lebesgue_interval(), binary_interval()
    s = product_sbfs(s1, s2)
    assert s.graph.k == 3
    t = F(1, 3)
    pt = (t + F(1, 10), F(1, 4))
    for e in s1.graph.edges.values():
        if e.source != "v":
            continue
        m = s.maps[f"({e.id},v)"]
        assert rn_derivative_geometric(m, pt) == rn_derivative_geometric(s1.maps[e.id], pt[0])
    assert rn_derivative_geometric(s.maps["(v,g0)"], pt) == F(1, 2)


def test_product_needs_valid_1d_factors(square):
    with pytest.raises(InvalidInput):
        product_sbfs(square, binary_interval())
    bad = _modified(binary_interval(), maps={"g1": affine_map(0, 1, F(1, 4), F(1, 2))})
    with pytest.raises(InvalidInput):
        product_sbfs(bad, binary_interval())


def test_load_sbfs_names():
    assert load_sbfs("binary_interval").graph.k == 1
    assert load_sbfs("product:binary_interval,binary_interval").graph.k == 2
    with pytest.raises(InvalidInput):
        load_sbfs("product:binary_interval")


def test_mixed_dimensions_rejected():
    g = binary_interval().graph
    sq = Region.box(0, 1, 0, 1)
    maps = {"g0": affine_map(0, 1, F(1, 2), 0), "g1": PiecewiseMap((Piece(sq, Poly.x(), Poly.y()),))}
    with pytest.raises(MalformedRegion):
        GeometricSBFS(g, {"v": Region.interval(0, 1)}, maps, {"g0": Region.interval(0, 1), "g1": sq})

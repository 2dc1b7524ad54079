import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgraphs import infinite_path, path_from_edges, paths_of_degree, standard_library
from kgraphs.errors import (
    GraphMismatch,
    InvalidMeasure,
    NotStronglyConnected,
    RangeMismatch,
    UnsupportedGraphForKind,
    ZeroMassBase,
)
from kgraphs.kgraph import Edge, KGraph
from kgraphs.measures import (
    GammaSequence,
    KakutaniMeasure,
    MarkovMeasure,
    PFMeasure,
    StarMarkovMeasure,
    StarProductMeasure,
    check_kolmogorov,
    equivalence_verdict,
    hellinger_profile,
    kakutani_hellinger_closed_form,
    measure_from_spec,
    pf_data,
    rn_at_point,
    rn_on_cylinder,
    star_markov_matrix,
    to_number,
)

from . import oracles

F = Fraction


def P(g, *ids):
    return path_from_edges(g, list(ids))


# -- Perron-Frobenius data --------------------------------------------------


def test_pf_one_vertex_is_exact(fefe):
    pf = pf_data(fefe)
    assert pf.exact
    assert pf.radii == (2, 1)
    assert pf.kappa == (1,)


@pytest.mark.parametrize("name", ["three_vertex_eight_edge", "lambda_2N"])
def test_pf_matches_dense_eigensolver(name):
    g = standard_library(name)
    pf = pf_data(g)
    radii, vecs = oracles.perron_vector(g)
    assert np.allclose([float(r) for r in pf.radii], radii, atol=1e-10)
    for vec in vecs:
        assert np.allclose([float(k) for k in pf.kappa], vec, atol=1e-10)


def test_pf_lattice_values(lattice):
    pf = pf_data(lattice)
    assert abs(float(pf.radii[0]) - math.sqrt(2)) < 1e-10
    assert abs(float(pf.radii[1]) - math.sqrt(2)) < 1e-10
    # kappa is proportional to (1, sqrt 2, 1)
    assert abs(float(pf.kappa_of("v")) - (math.sqrt(2) - 1)) < 1e-10
    assert abs(float(pf.kappa_of("u")) - (1 - math.sqrt(2) / 2)) < 1e-10


def test_pf_star_graph_is_exact(star4):
    pf = pf_data(star4)
    assert pf.exact
    assert pf.radii == (2, 2)
    assert pf.kappa_of("v") == F(1, 3)
    assert pf.kappa_of("u1") == F(1, 6)


def test_pf_needs_strong_connectivity():
    g = KGraph(1, ["a", "b"], [Edge("x", 1, "a", "b"), Edge("y", 1, "b", "b")], [])
    with pytest.raises(NotStronglyConnected):
        pf_data(g)


def test_pf_measure_formula(fefe):
    m = PFMeasure(fefe)
    assert m.mass(P(fefe, "f1", "e")) == F(1, 2)
    assert m.mass(P(fefe, "f1", "f2", "e")) == F(1, 4)
    assert m.mass(fefe.vertex("v")) == 1


# -- concrete measures ------------------------------------------------------


def test_markov_masses_reproduce_transition_matrix(fefe):
    # with initial weights (1, 1) the masses of Z(e f_i e f_j) are T_ij
    m = MarkovMeasure.symmetric(fefe, F(3, 10), lam=(1, 1))
    for i in (1, 2):
        for j in (1, 2):
            want = F(3, 10) if i == j else F(7, 10)
            assert m.mass(P(fefe, "e", f"f{i}", "e", f"f{j}")) == want


def test_markov_default_weights_give_probability(fefe):
    m = MarkovMeasure.symmetric(fefe, "0.3")
    assert m.mass(fefe.vertex("v")) == 1
    assert m.mass(P(fefe, "e", "f1", "e", "f1")) == F(3, 20)


def test_markov_rejects_bad_data(fefe, lattice):
    with pytest.raises(InvalidMeasure):
        MarkovMeasure(fefe, [[F(1, 2), F(1, 3)], [F(1, 2), F(1, 2)]])
    with pytest.raises(InvalidMeasure):
        MarkovMeasure(fefe, [[F(1, 2), F(1, 2)], [F(1, 4), F(3, 4)]])
    with pytest.raises(InvalidMeasure):
        MarkovMeasure.symmetric(fefe, 1)
    with pytest.raises(UnsupportedGraphForKind):
        MarkovMeasure.symmetric(lattice, F(1, 3))


def test_kakutani_product_formula(fefe):
    m = KakutaniMeasure(fefe, GammaSequence.geometric(1, F(1, 4)))
    # (1/2 + 1/4)(1/2 - 1/16)
    assert m.mass(P(fefe, "e", "f1", "e", "f2")) == F(21, 64)
    assert m.mass(P(fefe, "e", "f2")) == F(1, 4)


def test_gamma_sequences():
    g = GammaSequence.geometric(1, F(1, 4))
    assert g(1) == F(1, 4) and g(3) == F(1, 64)
    assert g.tail_sum(2) == pytest.approx(float(F(1, 64) / F(3, 4)))
    lst = GammaSequence.listed(["0.1", "-0.2"], tail=0)
    assert lst(2) == F(-1, 5) and lst(5) == 0
    with pytest.raises(InvalidMeasure):
        GammaSequence.geometric(4, F(1, 2))
    with pytest.raises(InvalidMeasure):
        GammaSequence.listed([F(1, 2)])


def test_to_number_reads_float_text_exactly():
    assert to_number(0.3) == F(3, 10)
    assert to_number("1/3") == F(1, 3)


def test_star_matrix_follows_cycle_structure():
    # phi = (1 2 3)(4): rows on a cycle are shifts of the cycle's vector
    perm = [2, 3, 1, 4]
    xs = [[F(1, 10), F(2, 10), F(3, 10), F(4, 10)], [F(1, 4)] * 4]
    T = star_markov_matrix(perm, xs)
    phi = {i + 1: p for i, p in enumerate(perm)}
    assert T[0] == xs[0]
    assert T[3] == xs[1]
    for i in range(1, 5):
        assert sum(T[i - 1]) == 1
        for j in range(1, 5):
            assert T[i - 1][j - 1] == T[phi[i] - 1][phi[j] - 1]


def test_star_rn_values_with_three_cycle(star4):
    xs = [[F(1, 10), F(2, 10), F(3, 10), F(4, 10)], [F(1, 4)] * 4]
    m = StarMarkovMeasure(star4, xs)
    phi = {1: 2, 2: 3, 3: 1, 4: 4}
    for b1 in range(1, 5):
        xi = infinite_path(star4, [], [f"ri{b1}", f"bo{b1}", "ri4", "bo4"])
        for i in range(1, 5):
            assert rn_at_point(m, P(star4, f"ro{i}"), xi, 4).value == m.T[i - 1][phi[b1] - 1]
            assert rn_at_point(m, P(star4, f"bo{i}"), xi, 4).value == m.T[i - 1][b1 - 1]


def test_star_matrix_for_swap():
    T = star_markov_matrix([2, 1], [[F(1, 3), F(2, 3)]])
    assert T == [[F(1, 3), F(2, 3)], [F(2, 3), F(1, 3)]]


def test_measure_from_spec(fefe, star):
    assert isinstance(measure_from_spec(fefe, {"kind": "pf"}), PFMeasure)
    k = measure_from_spec(fefe, {"kind": "kakutani", "params": {"gammas": {"type": "geometric", "c": "1", "r": "1/4"}}})
    assert isinstance(k, KakutaniMeasure)
    m = measure_from_spec(fefe, {"kind": "markov", "params": {"T": [["0.3", "0.7"], ["0.7", "0.3"]]}})
    assert m.T[0][0] == F(3, 10)
    s = measure_from_spec(star, {"kind": "lambda2n", "params": {"x": [["1/3", "2/3"]]}})
    assert isinstance(s, StarMarkovMeasure)
    with pytest.raises(InvalidMeasure):
        measure_from_spec(fefe, {"kind": "nope"})
    with pytest.raises(InvalidMeasure):
        measure_from_spec(fefe, {"kind": "markov", "params": {}})


# -- consistency ------------------------------------------------------------


def all_measures():
    fefe = standard_library("one_vertex_fefe")
    lattice = standard_library("three_vertex_eight_edge")
    star = standard_library("lambda_2N")
    star4 = standard_library("lambda_2N", {"N": 2, "perm": [2, 3, 1, 4]})
    return {
        "pf_fefe": PFMeasure(fefe),
        "pf_lattice": PFMeasure(lattice),
        "pf_star": PFMeasure(star),
        "markov_0.3": MarkovMeasure.symmetric(fefe, F(3, 10)),
        "markov_general": MarkovMeasure(fefe, [[F(1, 5), F(4, 5)], [F(2, 5), F(3, 5)]], lam=[F(1, 3), F(2, 3)]),
        "kakutani": KakutaniMeasure(fefe, GammaSequence.geometric(1, F(1, 4))),
        "kakutani_list": KakutaniMeasure(fefe, GammaSequence.listed([F(1, 5), F(-1, 3), F(1, 7)])),
        "star_markov": StarMarkovMeasure(star, [[F(1, 3), F(2, 3)]]),
        "star_markov_4": StarMarkovMeasure(star4, [[F(1, 10), F(2, 10), F(3, 10), F(4, 10)], [F(1, 4)] * 4]),
        "star_product": StarProductMeasure(star, [GammaSequence.geometric(F(1, 2), F(1, 2))]),
    }


MEASURES = all_measures()


@pytest.mark.parametrize("name", sorted(MEASURES))
def test_kolmogorov_consistency(name):
    m = MEASURES[name]
    depth = 4 if name == "star_markov_4" else 6
    rep = check_kolmogorov(m, depth)
    assert rep.passed
    if m.exact:
        assert rep.exact and rep.worst_defect == 0
    else:
        assert rep.worst_defect < 1e-12
    assert abs(float(sum(m.mass(m.graph.vertex(v)) for v in m.graph.vertices)) - 1) < 1e-12


@settings(max_examples=40, deadline=None)
@given(
    st.fractions(min_value=F(1, 100), max_value=F(99, 100), max_denominator=100),
    st.fractions(min_value=F(1, 100), max_value=F(99, 100), max_denominator=100),
)
def test_general_markov_chains_are_consistent(a, b):
    fefe = standard_library("one_vertex_fefe")
    T = [[a, 1 - a], [b, 1 - b]]
    # stationary vector of a 2-state chain
    lam = [b / (1 - a + b), (1 - a) / (1 - a + b)]
    rep = check_kolmogorov(MarkovMeasure(fefe, T, lam), 4)
    assert rep.passed and rep.worst_defect == 0


# -- Radon-Nikodym ----------------------------------------------------------


@pytest.mark.parametrize("x", [F(3, 10), F(1, 2), F(9, 10)])
def test_markov_rn_values(fefe, x):
    m = MarkovMeasure.symmetric(fefe, x)
    T = {(1, 1): x, (1, 2): 1 - x, (2, 1): 1 - x, (2, 2): x}
    points = {1: infinite_path(fefe, [], ["e", "f1"]), 2: infinite_path(fefe, ["e", "f2"], ["e", "f1"])}
    for i1, z in points.items():
        est = rn_at_point(m, P(fefe, "e"), z, 6)
        assert est.exact and est.value == 1 and est.stable_from == 1
        for j in (1, 2):
            est = rn_at_point(m, P(fefe, f"f{j}"), z, 6)
            # indices are taken mod 2
            want = T[((j + 1) - 1) % 2 + 1, (i1 + 1 - 1) % 2 + 1]
            assert est.value == want
            assert est.stable_from == 1


def test_star_markov_rn_values(star):
    x = [F(1, 3), F(2, 3)]
    m = StarMarkovMeasure(star, [x])
    T = star_markov_matrix([2, 1], [x])
    phi = {1: 2, 2: 1}
    for b1 in (1, 2):
        # red edge listed first: (v, Q_b1, v, ...)
        xi = infinite_path(star, [], [f"ri{b1}", f"bo{b1}"])
        for i in (1, 2):
            red = rn_at_point(m, P(star, f"ro{i}"), xi, 4)
            blue = rn_at_point(m, P(star, f"bo{i}"), xi, 4)
            assert red.value == T[i - 1][phi[b1] - 1]
            assert blue.value == T[i - 1][b1 - 1]
            assert red.stable_from == 1 and blue.stable_from == 1
    for a1 in (1, 2):
        zeta = infinite_path(star, [], [f"ro{a1}", f"bi{a1}"])
        assert rn_at_point(m, P(star, f"bi{a1}"), zeta, 4).value == 1
        assert rn_at_point(m, P(star, f"ri{a1}"), zeta, 4).value == 1


def test_pf_rn_is_rho_power(lattice):
    m = PFMeasure(lattice)
    x = infinite_path(lattice, [], ["c0", "d0"])
    # M(Z(lam mu)) / M(Z(mu)) = rho^{-d(lam)} exactly
    est = rn_at_point(m, P(lattice, "c0", "d0"), x, 3)
    assert est.value == pytest.approx(0.5)
    assert rn_at_point(m, P(lattice, "a0"), x, 3).value == pytest.approx(1 / math.sqrt(2))


def test_kakutani_rn_error_bound(fefe):
    m = KakutaniMeasure(fefe, GammaSequence.geometric(1, F(1, 4)))
    est = rn_at_point(m, P(fefe, "f1"), infinite_path(fefe, [], ["e", "f2"]), 12)
    assert est.mult_error < 1.0001
    assert est.value > 0


def test_rn_errors(fefe, star):
    m = MarkovMeasure.symmetric(fefe, F(3, 10))
    x = infinite_path(fefe, [], ["e", "f1"])
    s = StarMarkovMeasure(star, [[F(1, 3), F(2, 3)]])
    with pytest.raises(RangeMismatch):
        rn_at_point(s, P(star, "ro1"), infinite_path(star, [], ["ro1", "bi1"]), 2)
    with pytest.raises(RangeMismatch):
        rn_on_cylinder(s, P(star, "ro1"), P(star, "bo1", "ri1"), 2)
    zero = MarkovMeasure(fefe, [[1, 0], [0, 1]], validate=False)
    with pytest.raises(ZeroMassBase):
        rn_on_cylinder(zero, P(fefe, "e"), P(fefe, "f1", "e", "f2", "e"), 2)
    assert rn_at_point(m, P(fefe, "e"), x, 2).value == 1


# -- Hellinger comparisons --------------------------------------------------


def test_markov_vs_pf_is_singular_with_predicted_ratio(fefe):
    v = equivalence_verdict(MarkovMeasure.symmetric(fefe, F(3, 10)), PFMeasure(fefe), 40)
    assert v.verdict == "singular"
    want = (math.sqrt(0.3) + math.sqrt(0.7)) / math.sqrt(2)
    assert all(abs(r - want) < 1e-6 for r in v.ratios[1:])


def test_two_markov_measures_are_singular(fefe):
    v = equivalence_verdict(MarkovMeasure.symmetric(fefe, F(3, 10)), MarkovMeasure.symmetric(fefe, F(6, 10)), 30)
    assert v.verdict == "singular"
    assert abs(v.ratios[-1] - (math.sqrt(0.18) + math.sqrt(0.28))) < 1e-6


def test_half_markov_is_pf(fefe):
    m = MarkovMeasure.symmetric(fefe, F(1, 2))
    for lam in paths_of_degree(fefe, (3, 3)):
        assert m.mass(lam) == PFMeasure(fefe).mass(lam)
    assert equivalence_verdict(m, PFMeasure(fefe), 30).verdict == "equivalent"


def test_kakutani_equivalent_and_matches_closed_form(fefe):
    gam = GammaSequence.geometric(1, F(1, 4))
    m = KakutaniMeasure(fefe, gam)
    v = equivalence_verdict(m, PFMeasure(fefe), 30)
    assert v.verdict == "equivalent"
    assert abs(v.profile[-1] - v.profile[-2]) < 1e-9
    closed = kakutani_hellinger_closed_form(gam, 30)
    assert max(abs(a - b) for a, b in zip(v.profile, closed)) < 1e-12


def test_star_product_equivalent_to_pf(star):
    m = StarProductMeasure(star, [GammaSequence.geometric(F(1, 2), F(1, 2))])
    assert equivalence_verdict(m, PFMeasure(star), 40).verdict == "equivalent"


def test_star_markov_nonconstant_is_singular(star):
    m = StarMarkovMeasure(star, [[F(1, 3), F(2, 3)]])
    assert equivalence_verdict(m, PFMeasure(star), 30).verdict == "singular"
    flat = StarMarkovMeasure(star, [[F(1, 2), F(1, 2)]])
    assert equivalence_verdict(flat, PFMeasure(star), 30).verdict == "equivalent"


def test_hellinger_profile_brute_force(fefe):
    a, b = MarkovMeasure.symmetric(fefe, F(3, 10)), KakutaniMeasure(fefe, GammaSequence.geometric(1, F(1, 4)))
    prof = hellinger_profile(a, b, 4)
    for n in range(1, 5):
        direct = sum(math.sqrt(float(a.mass(p)) * float(b.mass(p))) for p in paths_of_degree(fefe, (n, n)))
        assert abs(prof[n - 1] - direct) < 1e-12


def test_hellinger_needs_same_graph(fefe, lattice):
    with pytest.raises(GraphMismatch):
        hellinger_profile(PFMeasure(fefe), PFMeasure(lattice), 3)


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=F(1, 20), max_value=F(19, 20), max_denominator=40))
def test_markov_singular_unless_half(x):
    fefe = standard_library("one_vertex_fefe")
    v = equivalence_verdict(MarkovMeasure.symmetric(fefe, x), PFMeasure(fefe), 40)
    ratio = (math.sqrt(float(x)) + math.sqrt(1 - float(x))) / math.sqrt(2)
    if ratio <= 1 - 1e-5:
        assert v.verdict == "singular"
    if x == F(1, 2):
        assert v.verdict == "equivalent"

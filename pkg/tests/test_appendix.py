import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwde.appendix import (_Chart, dirichlet_monomial_integral, incidence_matrix, lhs_integral, monomial,
                           occupation_matrix, reduced_determinant, rhs_integral, spanning_tree_avoiding,
                           verify_identity)
from rwde.builders import two_vertex_full_graph
from rwde.graph import DirectedMultigraph

TRIANGLE = DirectedMultigraph.from_edges([("a", "b"), ("b", "c"), ("c", "a"), ("a", "c"), ("c", "b")],
                                         weights=[1.5, 1.0, 2.0, 1.0, 1.0])


def two_loops(alpha):
    return DirectedMultigraph.from_edges([("x", "x"), ("x", "x")], weights=alpha)


def test_uniform_segment():
    value, _ = lhs_integral(two_loops([1.0, 1.0]), monomial([0, 0]))
    assert value == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [[0.5, 2.0, 1.5, 0.7], [1, 1, 1, 1], [2, 1, 1, 2]])
@pytest.mark.parametrize("m", [[0, 0, 0, 0], [0, 1, 0, 0], [1, 1, 1, 1], [2, 0, 1, 3]])
def test_lhs_matches_dirichlet_moments(alpha, m):
    g = two_vertex_full_graph(alpha)
    value, change = lhs_integral(g, monomial(m))
    assert value == pytest.approx(dirichlet_monomial_integral(g, m), rel=1e-4)


def test_normalization_constant():
    g = two_vertex_full_graph([2.0, 1.0, 1.0, 2.0])
    assert dirichlet_monomial_integral(g, [0, 0, 0, 0]) == pytest.approx(0.25)


@pytest.mark.parametrize("alpha", [[1, 1, 1, 1], [2, 1, 1, 2], [0.7, 1.3, 2.0, 0.5]])
@pytest.mark.parametrize("m", [[0, 0, 0, 0], [0, 1, 0, 0], [1, 1, 1, 1]])
def test_identity_on_two_vertex_graph(alpha, m):
    g = two_vertex_full_graph(alpha)
    rhs, _ = rhs_integral(g, monomial(m), e0=1)
    assert rhs == pytest.approx(dirichlet_monomial_integral(g, m), rel=1e-6)


def test_identity_on_triangle_with_bounded_polytope():
    rep = verify_identity(TRIANGLE, monomial([1, 0, 0, 1, 0]), psi_name="p", graph_id="triangle")
    assert rep["pass"] and rep["rel_err"] < 1e-6


def test_identity_does_not_depend_on_e0_or_removed_vertex():
    psi = monomial([0, 0, 0, 0, 0])
    ref = dirichlet_monomial_integral(TRIANGLE, [0] * 5)
    for e0 in (0, 1, 3):
        assert rhs_integral(TRIANGLE, psi, e0=e0)[0] == pytest.approx(ref, rel=1e-6)
    assert rhs_integral(TRIANGLE, psi, removed_vertex=2)[0] == pytest.approx(ref, rel=1e-6)


def test_smallest_case_determinant():
    g = two_vertex_full_graph()
    z = np.array([0.3, 1.0, 1.0, 0.8])
    # U = {b}: Z_bb = z_b - z_bb = z_ba
    assert reduced_determinant(g, z, removed=0) == pytest.approx(1.0)
    Z = occupation_matrix(g, z)
    assert np.allclose(Z.sum(axis=0), 0) and np.allclose(Z.sum(axis=1), 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 5.0), min_size=2, max_size=2))
def test_determinant_is_independent_of_removed_vertex(free):
    chart = _Chart(TRIANGLE, 0, None)
    z = chart.assemble(np.array(free))
    if np.any(z <= 0):
        return
    dets = [reduced_determinant(TRIANGLE, z, x) for x in range(3)]
    assert np.allclose(dets, dets[0], rtol=1e-10)


@pytest.mark.parametrize("g,e0", [(two_vertex_full_graph(), 1), (TRIANGLE, 0), (TRIANGLE, 3)])
def test_spanning_tree_incidence_is_unimodular(g, e0):
    tree = spanning_tree_avoiding(g, e0)
    assert e0 not in tree and len(tree) == g.n_vertices - 1
    for removed in range(g.n_vertices):
        rows = [x for x in range(g.n_vertices) if x != removed]
        assert abs(np.linalg.det(incidence_matrix(g, tree, rows))) == pytest.approx(1.0)


def test_dimension_cap():
    g = DirectedMultigraph.from_edges([(i, (i + 1) % 4) for i in range(4)])
    with pytest.raises(ValueError):
        lhs_integral(g, monomial([0] * 4))

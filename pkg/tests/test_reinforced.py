import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gammaln

from rwde.builders import loop_graph, two_vertex_full_graph, zd_truncation
from rwde.graph import GraphError
from rwde.reinforced import (annealed_path_probability, derrw_paths, derrw_step, equivalence_test,
                             exact_path_law, rwde_paths, step_probabilities, total_variation)
from rwde.rng import stream


def dirichlet_moment(graph, alpha, path):
    """Oracle: E[prod_e p_e^{n_e}] for independent Dirichlet blocks, via Gamma functions."""
    n_e = np.bincount(path, minlength=graph.n_edges).astype(float)
    n_x = np.bincount(graph.tails, weights=n_e, minlength=graph.n_vertices)
    a_x = graph.vertex_weights(alpha)
    has = graph.out_degree > 0
    return float(np.exp(np.sum(gammaln(alpha + n_e) - gammaln(alpha))
                        + np.sum(gammaln(a_x[has]) - gammaln(a_x[has] + n_x[has]))))


def random_path(graph, rng, L):
    x = graph.index(graph.root)
    path = []
    for _ in range(L):
        out = graph.out_edges[x]
        if not len(out):
            break
        e = int(rng.choice(out))
        path.append(e)
        x = int(graph.heads[e])
    return path


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_urn_product_equals_dirichlet_moment(seed, L):
    rng = np.random.default_rng(seed)
    g = two_vertex_full_graph(rng.uniform(0.2, 3.0, 4))
    path = random_path(g, rng, L)
    assert annealed_path_probability(g, path) == pytest.approx(dirichlet_moment(g, g.weights, path), rel=1e-10)


def test_urn_product_on_z3():
    g = zd_truncation(3, 1, 0.7)
    path = random_path(g, np.random.default_rng(1), 6)
    assert annealed_path_probability(g, path) == pytest.approx(dirichlet_moment(g, g.weights, path), rel=1e-10)


def test_step_probabilities_reinforce():
    g = two_vertex_full_graph([1.0, 1.0, 1.0, 1.0])
    counts = np.zeros(4)
    assert np.allclose(step_probabilities(g, counts, "a"), [0.5, 0.5])
    counts[0] = 2
    assert np.allclose(step_probabilities(g, counts, "a"), [0.75, 0.25])
    y, e = derrw_step(g, counts, "a", stream(0))
    assert counts.sum() == 3 and g.vertices[g.heads[e]] == y


def test_inconsistent_path_is_refused():
    g = two_vertex_full_graph()
    with pytest.raises(GraphError):
        annealed_path_probability(g, [0, 2])


def test_exact_law_sums_to_one_and_stops_at_cemetery():
    g = loop_graph(2, 1)
    law = exact_path_law(g, "x0", 4)
    assert sum(law.values()) == pytest.approx(1.0)
    assert law[("x0", "delta")] == pytest.approx(1 / 3)
    assert law[("x0", "x0", "delta")] == pytest.approx(2 / 3 * 1 / 4)


def test_caps():
    with pytest.raises(ValueError):
        exact_path_law(loop_graph(), "x0", 7)


def test_empirical_laws_converge():
    g = two_vertex_full_graph()
    exact = exact_path_law(g, "a", 3)
    assert total_variation(derrw_paths(g, "a", 3, 50_000, stream(1)), exact) < 0.02
    assert total_variation(rwde_paths(g, "a", 3, 50_000, stream(2)), exact) < 0.02


def test_equivalence_report():
    rep, rows = equivalence_test(loop_graph(2, 1), "x0", 4, 20_000, stream(3))
    assert rep.passed and rep.statistic < 0.02
    assert sum(r[1] for r in rows) == pytest.approx(1.0)

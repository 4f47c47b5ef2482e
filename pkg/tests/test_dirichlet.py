import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rwde.builders import loop_graph, two_vertex_full_graph, zd_truncation
from rwde.dirichlet import (Environment, log_density, push_forward, quotient_multi_edges, sample_dirichlet,
                            sample_environment, sample_environment_array)
from rwde.estimators import ks_test_beta
from rwde.graph import DirectedMultigraph, GraphError
from rwde.rng import chunked_map, stream


@settings(deadline=None)
@given(st.lists(st.floats(0.05, 5.0), min_size=2, max_size=6), st.integers(0, 2**31))
def test_dirichlet_rows_lie_on_the_simplex(w, seed):
    x = sample_dirichlet(w, np.random.default_rng(seed), size=50)
    assert x.shape == (50, len(w))
    assert np.all(x >= 0)
    assert np.allclose(x.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("a,b", [(0.2, 0.2), (0.2, 1.0), (1.0, 1.0), (2.5, 0.7)])
def test_marginals_are_beta(a, b):
    x = sample_dirichlet([a, b], stream(11, int(a * 10), int(b * 10)), size=10_000)
    assert ks_test_beta(x[:, 0], a, b).passed


def test_three_edge_block_marginal():
    x = sample_dirichlet([0.2, 0.5, 1.3], stream(5), size=10_000)
    assert ks_test_beta(x[:, 1], 0.5, 1.5).passed


def test_environment_blocks_are_normalized():
    g = zd_truncation(3, 2, 0.2)
    P = sample_environment_array(g, stream(3), 200)
    sums = np.zeros((200, g.n_vertices))
    np.add.at(sums.T, g.tails, P.T)
    has_out = g.out_degree > 0
    assert np.allclose(sums[:, has_out], 1.0, atol=1e-12)
    Environment(g, P[0]).check()


def test_single_edge_block_is_exactly_one():
    g = DirectedMultigraph.from_edges([("a", "b"), ("b", "a"), ("b", "d")], cemetery="d")
    P = sample_environment_array(g, stream(1), 100)
    assert np.all(P[:, 0] == 1.0)


def test_dead_vertex_is_refused():
    g = DirectedMultigraph.from_edges([("a", "b")])
    with pytest.raises(GraphError):
        sample_environment(g, stream(0))


def test_log_density_matches_scipy():
    g = two_vertex_full_graph([0.5, 2.0, 1.5, 0.7])
    env = sample_environment(g, stream(2))
    p = env.p
    ref = stats.dirichlet([0.5, 2.0]).logpdf(p[:2][:, None]) + stats.dirichlet([1.5, 0.7]).logpdf(p[2:][:, None])
    assert log_density(p, g) == pytest.approx(float(np.squeeze(ref)), rel=1e-10)


def test_log_density_of_uniform_and_boundary():
    g = two_vertex_full_graph(1.0)
    assert log_density([0.3, 0.7, 0.5, 0.5], g) == pytest.approx(0.0)
    assert log_density([0.0, 1.0, 0.5, 0.5], g) == -np.inf


def test_merging_parallel_edges_adds_weights():
    g = DirectedMultigraph.from_edges([("a", "b"), ("a", "b"), ("a", "c"), ("b", "a"), ("c", "a")],
                                      weights=[0.3, 0.4, 1.0, 1.0, 1.0])
    merged, groups = quotient_multi_edges(g)
    assert merged.n_edges == 4
    assert merged.weights[0] == pytest.approx(0.7)
    P = push_forward(sample_environment_array(g, stream(9), 10_000), groups)
    assert ks_test_beta(P[:, 0], 0.7, 1.0).passed


def test_no_parallel_edges_returns_same_graph():
    g = loop_graph()
    merged, groups = quotient_multi_edges(g)
    assert merged is g and groups == [[0], [1]]


def test_seeded_sampling_is_reproducible_across_thread_counts():
    g = zd_truncation(3, 1, 0.5)
    fn = lambda r, m: sample_environment_array(g, r, m)  # noqa: E731
    a = chunked_map(fn, 10_000, 42, threads=1)
    b = chunked_map(fn, 10_000, 42, threads=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, chunked_map(fn, 10_000, 43, threads=1))

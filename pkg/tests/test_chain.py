import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwde.builders import lattice_ball_zd, loop_graph, two_cycle_graph, two_vertex_full_graph, zd_truncation
from rwde.chain import (NotStronglyConnectedError, SingularSystemError, green_diagonal_batch, green_function,
                        green_via_reversal, green_via_reversal_batch, invariant_distribution,
                        invariant_distribution_batch, reversed_environment, reversed_environment_batch,
                        simulate_walk, transition_matrix, visit_counts)
from rwde.dirichlet import Environment, sample_environment_array
from rwde.graph import DELTA, DirectedMultigraph, reachable_from
from rwde.rng import stream


def random_absorbing_graph(rng, n=6, m=12):
    while True:
        edges = [(int(a), int(b)) for a, b in rng.integers(n, size=(m, 2))]
        edges += [(i, DELTA) for i in range(n) if rng.random() < 0.3]
        g = DirectedMultigraph.from_edges(edges, vertices=list(range(n)), cemetery=DELTA, root=0)
        if g.n_vertices != n + 1 or np.any(g.out_degree[:n] == 0):
            continue
        rev = g.reversed()
        if len(reachable_from(rev.replace(cemetery=None), DELTA)) == n + 1:
            return g


def test_loop_graph_geometric_series():
    g = loop_graph()
    for q in (0.0, 0.3, 0.9):
        assert green_function(g, [q, 1 - q], "x0", "x0") == pytest.approx(1 / (1 - q), rel=1e-12)


def test_single_exit_path():
    g = DirectedMultigraph.from_edges([("a", DELTA)], cemetery=DELTA)
    assert green_function(g, [1.0], "a", "a") == 1.0


def test_two_cycle_green_is_inverse_exit_probability():
    g = two_cycle_graph()
    for p in (0.1, 0.5, 0.99):
        env = [1.0, 1 - p, p]
        assert green_function(g, env, "x0", "x0") == pytest.approx(1 / p, rel=1e-12)
        assert green_via_reversal(g, env, "x0") == pytest.approx(1 / p, rel=1e-10)


def test_unreachable_cemetery_names_the_vertex():
    g = DirectedMultigraph.from_edges([("a", DELTA), ("b", "b")], cemetery=DELTA)
    with pytest.raises(SingularSystemError, match="'b'"):
        green_function(g, [1.0, 1.0], "a", "a")


def test_transition_rows_lose_mass_at_exits():
    g = two_cycle_graph()
    P = transition_matrix(g, [1.0, 0.4, 0.6]).toarray()
    assert np.allclose(P.sum(axis=1), [1.0, 0.4])


def test_invariant_distributions_by_hand():
    g = two_vertex_full_graph()
    pi = invariant_distribution(g, [0.7, 0.3, 0.2, 0.8])
    assert np.allclose(pi, np.array([0.2, 0.3]) / 0.5, atol=1e-12)
    assert np.allclose(invariant_distribution(g, [0.5, 0.5, 0.5, 0.5]), [0.5, 0.5])
    cycle = DirectedMultigraph.from_edges([(0, 1), (1, 2), (2, 0)])
    assert np.allclose(invariant_distribution(cycle, [1, 1, 1]), 1 / 3)


def test_invariant_needs_strong_connectivity():
    g = DirectedMultigraph.from_edges([(0, 1), (1, 1)])
    with pytest.raises(NotStronglyConnectedError):
        invariant_distribution(g, [1.0, 1.0])


def test_deterministic_cycle_reverses_to_reversed_cycle():
    cycle = DirectedMultigraph.from_edges([(0, 1), (1, 2), (2, 0)])
    rev = reversed_environment(cycle, [1, 1, 1])
    assert np.allclose(rev.p, 1.0)
    assert rev.graph.edge_labels(0) == (1, 0)


def test_symmetric_environment_is_reversible():
    # simple random walk on a finite ball satisfies detailed balance
    ball = lattice_ball_zd(2, 2)
    env = np.array([1.0 / ball.out_degree[t] for t in ball.tails])
    rev = reversed_environment(ball, env)
    pos = {ball.edge_labels(i): i for i in range(ball.n_edges)}
    for i in range(ball.n_edges):
        # reversed edge i runs head -> tail; compare with the original edge along that direction
        assert rev.p[i] == pytest.approx(env[pos[rev.graph.edge_labels(i)]], abs=1e-12)


def test_reversal_is_an_involution():
    g = two_vertex_full_graph()
    P = sample_environment_array(g, stream(4), 50)
    for p in P:
        once = reversed_environment(g, p)
        twice = reversed_environment(once.graph, once.p)
        assert np.allclose(twice.p, p, atol=1e-10)
        once.check()


def test_batch_routes_match_scalar_routes():
    g = two_vertex_full_graph([1.0, 2.0, 0.5, 1.0])
    P = sample_environment_array(g, stream(6), 20)
    assert np.allclose(invariant_distribution_batch(g, P)[3], invariant_distribution(g, P[3]), atol=1e-12)
    assert np.allclose(reversed_environment_batch(g, P)[5], reversed_environment(g, P[5]).p, atol=1e-12)


def test_reversal_route_matches_direct_solve_on_random_graphs():
    rng = np.random.default_rng(2024)
    for _ in range(5):
        g = random_absorbing_graph(rng)
        P = sample_environment_array(g, rng, 100)
        direct = green_diagonal_batch(g, P, 0)
        via = green_via_reversal_batch(g, P, 0)
        assert np.allclose(via, direct, rtol=1e-8)
        assert green_via_reversal(g, P[0], 0) == pytest.approx(green_function(g, P[0], 0, 0), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_green_diagonal_at_least_one(seed):
    rng = np.random.default_rng(seed)
    g = random_absorbing_graph(rng)
    p = sample_environment_array(g, rng, 1)[0]
    assert green_function(g, p, 0, 0) >= 1 - 1e-12


def test_deterministic_walk():
    g = DirectedMultigraph.from_edges([("a", "b"), ("b", DELTA)], cemetery=DELTA)
    path, absorbed = simulate_walk(g, [1.0, 1.0], "a", 10, stream(0))
    assert path == ["a", "b", DELTA] and absorbed
    path, absorbed = simulate_walk(g, [1.0, 1.0], "a", 1, stream(0))
    assert path == ["a", "b"] and not absorbed


def test_long_walks_are_absorbed():
    g = two_cycle_graph()
    rng = stream(1)
    assert all(simulate_walk(g, [1.0, 0.9, 0.1], "x0", 10_000_000, rng)[1] for _ in range(50))


def test_visit_counts_estimate_the_green_function():
    g = zd_truncation(3, 1, 1.0)
    env = Environment(g, sample_environment_array(g, stream(8), 1)[0])
    exact = green_function(g, env, (0, 0, 0), (0, 0, 0))
    counts = visit_counts(g, env, (0, 0, 0), 100_000, stream(9))
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    assert abs(counts.mean() - exact) < 3 * se

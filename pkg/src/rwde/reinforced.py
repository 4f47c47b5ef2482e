"""Directed edge reinforced random walk and the annealed law of Dirichlet environments.

Exiting ``x`` along ``e`` has probability ``(alpha_e + N_e) / (alpha_x + N_x)``
where ``N`` counts previous crossings. Averaging the quenched path law over a
Dirichlet environment gives the same numbers (Polya urn at every vertex).
"""
from __future__ import annotations

from collections import defaultdict

import numpy as np
from scipy import stats

from .dirichlet import sample_environment_array
from .estimators import TestReport
from .graph import DirectedMultigraph, GraphError

MAX_PATH_LENGTH = 6
MAX_OUT_DEGREE = 6


def derrw_step(graph: DirectedMultigraph, counts: np.ndarray, x, rng: np.random.Generator,
               alpha=None):
    """One reinforced step from ``x``; ``counts`` (per edge position) is updated in place.

    Returns ``(next vertex, edge position taken)``.
    """
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    out = graph.out_edges[graph.index(x)]
    if not len(out):
        raise GraphError(f"vertex {x!r} has no outgoing edge")
    w = a[out] + counts[out]
    e = int(out[rng.choice(len(out), p=w / w.sum())])
    counts[e] += 1
    return graph.vertices[graph.heads[e]], e


def step_probabilities(graph: DirectedMultigraph, counts, x, alpha=None) -> np.ndarray:
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    out = graph.out_edges[graph.index(x)]
    w = a[out] + np.asarray(counts)[out]
    return w / w.sum()


def annealed_path_probability(graph: DirectedMultigraph, path, alpha=None) -> float:
    """Exact annealed probability of an edge path (sequence of edge positions)."""
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    ax = graph.vertex_weights(a)
    path = [int(e) for e in path]
    for e in path:
        if not 0 <= e < graph.n_edges:
            raise GraphError(f"unknown edge position {e}")
    for e, f in zip(path[:-1], path[1:]):
        if graph.heads[e] != graph.tails[f]:
            raise GraphError("path is not edge-consistent")
    edge_n = defaultdict(int)
    vert_n = defaultdict(int)
    prob = 1.0
    for e in path:
        x = int(graph.tails[e])
        prob *= (a[e] + edge_n[e]) / (ax[x] + vert_n[x])
        edge_n[e] += 1
        vert_n[x] += 1
    return prob


def _check_caps(graph: DirectedMultigraph, L: int):
    if L > MAX_PATH_LENGTH:
        raise ValueError(f"path length capped at {MAX_PATH_LENGTH}")
    if graph.max_out_degree > MAX_OUT_DEGREE:
        raise ValueError(f"out-degree capped at {MAX_OUT_DEGREE}")


def exact_path_law(graph: DirectedMultigraph, x0, L: int, alpha=None) -> dict:
    """Annealed law of the vertex path over ``L`` steps (shorter if absorbed)."""
    _check_caps(graph, L)
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    ax = graph.vertex_weights(a)
    law = defaultdict(float)
    edge_n = np.zeros(graph.n_edges)
    vert_n = np.zeros(graph.n_vertices)

    def rec(v, path, prob, steps):
        out = graph.out_edges[v]
        if steps == L or not len(out):
            law[tuple(graph.vertices[i] for i in path)] += prob
            return
        for e in out:
            q = (a[e] + edge_n[e]) / (ax[v] + vert_n[v])
            edge_n[e] += 1
            vert_n[v] += 1
            h = int(graph.heads[e])
            rec(h, path + [h], prob * q, steps + 1)
            edge_n[e] -= 1
            vert_n[v] -= 1

    rec(graph.index(x0), [graph.index(x0)], 1.0, 0)
    return dict(law)


def _padded(graph: DirectedMultigraph):
    width = max(1, graph.max_out_degree)
    table = np.full((graph.n_vertices, width), -1, dtype=np.int64)
    for v, out in enumerate(graph.out_edges):
        table[v, :len(out)] = out
    return table


def _walk(graph, x0, L, n, rng, weights_fn):
    table = _padded(graph)
    deg = graph.out_degree
    paths = np.full((n, L + 1), -1, dtype=np.int64)
    pos = np.full(n, graph.index(x0))
    paths[:, 0] = pos
    counts = np.zeros((n, graph.n_edges))
    for step in range(L):
        alive = np.flatnonzero(deg[pos] > 0)
        if not alive.size:
            break
        v = pos[alive]
        edges = table[v]
        valid = edges >= 0
        w = np.where(valid, weights_fn(alive, np.where(valid, edges, 0), counts), 0.0)
        cum = np.cumsum(w, axis=1)
        u = rng.random(alive.size) * cum[:, -1]
        k = np.minimum((cum <= u[:, None]).sum(axis=1), deg[v] - 1)
        e = edges[np.arange(alive.size), k]
        counts[alive, e] += 1
        pos[alive] = graph.heads[e]
        paths[alive, step + 1] = pos[alive]
    return paths


def _law_from_paths(graph, paths) -> dict:
    keys, freq = np.unique(paths, axis=0, return_counts=True)
    n = paths.shape[0]
    return {tuple(graph.vertices[i] for i in row if i >= 0): c / n for row, c in zip(keys, freq)}


def derrw_paths(graph: DirectedMultigraph, x0, L: int, n: int, rng: np.random.Generator,
                alpha=None) -> dict:
    """Empirical vertex-path law of ``n`` reinforced walks of ``L`` steps."""
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    return _law_from_paths(graph, _walk(graph, x0, L, n, rng,
                                        lambda rows, e, counts: a[e] + counts[rows[:, None], e]))


def rwde_paths(graph: DirectedMultigraph, x0, L: int, n: int, rng: np.random.Generator,
               alpha=None) -> dict:
    """Empirical vertex-path law of ``n`` walks, each in its own fresh Dirichlet environment."""
    env = sample_environment_array(graph, rng, n, alpha)
    return _law_from_paths(graph, _walk(graph, x0, L, n, rng,
                                        lambda rows, e, counts: env[rows[:, None], e]))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _gof_pvalue(emp: dict, exact: dict, n: int) -> float:
    keys = sorted(exact, key=lambda k: -exact[k])
    obs = np.array([emp.get(k, 0.0) * n for k in keys])
    exp = np.array([exact[k] * n for k in keys])
    small = exp < 5
    if small.any():
        obs = np.append(obs[~small], obs[small].sum())
        exp = np.append(exp[~small], exp[small].sum())
    if len(exp) < 2:
        return 1.0
    exp *= obs.sum() / exp.sum()
    return float(stats.chisquare(obs, exp).pvalue)


def equivalence_test(graph: DirectedMultigraph, x0, L: int, n: int, rng: np.random.Generator,
                     alpha=None, tolerance: float = 0.02):
    """Compare reinforced walks, annealed Dirichlet walks and the exact path law.

    The statistic is the largest of the three pairwise total-variation distances;
    the test passes when it is below ``tolerance``. The p-value is the smaller
    chi-square goodness-of-fit p-value of the two empirical laws against the
    exact one. Returns ``(report, rows)`` with rows
    ``(path, exact, derrw_freq, rwde_freq)``.
    """
    exact = exact_path_law(graph, x0, L, alpha)
    reinforced = derrw_paths(graph, x0, L, n, rng, alpha)
    annealed = rwde_paths(graph, x0, L, n, rng, alpha)
    tv = max(total_variation(reinforced, annealed), total_variation(reinforced, exact),
             total_variation(annealed, exact))
    p = min(_gof_pvalue(reinforced, exact, n), _gof_pvalue(annealed, exact, n))
    keys = sorted(set(exact) | set(reinforced) | set(annealed), key=lambda k: tuple(map(repr, k)))
    rows = [(k, exact.get(k, 0.0), reinforced.get(k, 0.0), annealed.get(k, 0.0)) for k in keys]
    report = TestReport(f"derrw-equivalence-L{L}", tv, p, n, bool(tv < tolerance))
    return report, rows

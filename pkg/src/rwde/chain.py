"""Markov chains in a fixed environment: Green functions, invariant laws, time reversal."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .dirichlet import Environment
from .graph import DirectedMultigraph, GraphError, identify_vertices, induced_subgraph, reachable_from

RESIDUAL_TOL = 1e-10
SPARSE_LU_MAX = 10_000
DENSE_BATCH_MAX = 400


class SingularSystemError(GraphError):
    pass


class NotStronglyConnectedError(GraphError):
    pass


def _p(graph, env) -> np.ndarray:
    p = env.p if isinstance(env, Environment) else np.asarray(env, dtype=float)
    if p.shape[-1] != graph.n_edges:
        raise GraphError("environment length does not match the edge count")
    return p


def transient_vertices(graph: DirectedMultigraph) -> np.ndarray:
    cem = graph.cemetery_index
    return np.array([i for i in range(graph.n_vertices) if i != cem], dtype=np.int64)


def transition_matrix(graph: DirectedMultigraph, env, vertices=None) -> sp.csr_matrix:
    """Sparse transition matrix restricted to ``vertices`` (default: all but the cemetery).

    Parallel edges are summed; edges leaving the vertex set are dropped, so rows
    of vertices with an exit lose mass.
    """
    p = _p(graph, env)
    verts = transient_vertices(graph) if vertices is None else np.asarray(vertices)
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[verts] = np.arange(len(verts))
    t, h = pos[graph.tails], pos[graph.heads]
    keep = (t >= 0) & (h >= 0)
    n = len(verts)
    return sp.csr_matrix((p[keep], (t[keep], h[keep])), shape=(n, n))


def _check_absorption(graph: DirectedMultigraph) -> None:
    """Every non-cemetery vertex must reach the cemetery."""
    cem = graph.cemetery_index
    if cem is None:
        raise SingularSystemError("graph has no cemetery: the Green function is infinite")
    pred = [[] for _ in range(graph.n_vertices)]
    for t, h in zip(graph.tails.tolist(), graph.heads.tolist()):
        pred[h].append(t)
    seen = {cem}
    stack = [cem]
    while stack:
        u = stack.pop()
        for v in pred[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    for i in range(graph.n_vertices):
        if i not in seen:
            raise SingularSystemError(f"vertex {graph.vertices[i]!r} cannot reach the cemetery")


def green_column(graph: DirectedMultigraph, env, y) -> np.ndarray:
    """``G(., y)`` over the non-cemetery vertices (order of :func:`transient_vertices`)."""
    _check_absorption(graph)
    verts = transient_vertices(graph)
    iy = int(np.flatnonzero(verts == graph.index(y))[0]) if graph.index(y) in set(verts.tolist()) else None
    if iy is None:
        raise GraphError("the Green function is defined off the cemetery only")
    P = transition_matrix(graph, env, verts)
    A = (sp.identity(len(verts), format="csc") - P.tocsc()).tocsc()
    b = np.zeros(len(verts))
    b[iy] = 1.0
    if len(verts) <= SPARSE_LU_MAX:
        v = spla.splu(A).solve(b)
    else:
        v, info = spla.bicgstab(A, b, rtol=RESIDUAL_TOL, atol=0.0, maxiter=10 * len(verts))
        if info != 0:
            raise SingularSystemError(f"iterative solve did not converge (info={info})")
    res = np.abs(A @ v - b).max()
    if not np.isfinite(res) or res > RESIDUAL_TOL * max(1.0, np.abs(v).max()):
        raise SingularSystemError(f"linear solve residual {res:.3g} too large")
    return v


def green_function(graph: DirectedMultigraph, env, x, y) -> float:
    """Expected number of visits to ``y`` starting from ``x`` before absorption."""
    verts = transient_vertices(graph).tolist()
    col = green_column(graph, env, y)
    return float(col[verts.index(graph.index(x))])


def green_diagonal_batch(graph: DirectedMultigraph, P_env: np.ndarray, x) -> np.ndarray:
    """``G(x, x)`` for each row of an ``(n_samples, n_edges)`` environment array.

    Dense batched solves on small graphs, sparse LU per sample otherwise.
    """
    _check_absorption(graph)
    P_env = np.atleast_2d(np.asarray(P_env, dtype=float))
    verts = transient_vertices(graph)
    n = len(verts)
    ix = int(np.flatnonzero(verts == graph.index(x))[0])
    if n > DENSE_BATCH_MAX:
        return np.array([green_column(graph, row, x)[ix] for row in P_env])
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[verts] = np.arange(n)
    t, h = pos[graph.tails], pos[graph.heads]
    keep = (t >= 0) & (h >= 0)
    out = np.empty(len(P_env))
    step = max(1, 2_000_000 // (n * n))
    eye = np.eye(n)
    for lo in range(0, len(P_env), step):
        block = P_env[lo:lo + step]
        A = np.broadcast_to(eye, (len(block), n, n)).copy()
        np.add.at(A, (slice(None), t[keep], h[keep]), -block[:, keep])
        b = np.zeros((len(block), n, 1))
        b[:, ix, 0] = 1.0
        out[lo:lo + step] = np.linalg.solve(A, b)[:, ix, 0]
    return out


def _require_strongly_connected(graph: DirectedMultigraph) -> None:
    adj = sp.csr_matrix((np.ones(graph.n_edges), (graph.tails, graph.heads)),
                        shape=(graph.n_vertices, graph.n_vertices))
    k, _ = connected_components(adj, directed=True, connection="strong")
    if k != 1:
        raise NotStronglyConnectedError(f"graph has {k} strongly connected components")


def invariant_distribution(graph: DirectedMultigraph, env) -> np.ndarray:
    """Unique invariant probability of the chain on a strongly connected finite graph.

    Solves the transposed balance equations with one row swapped for the
    normalization.
    """
    _require_strongly_connected(graph)
    p = _p(graph, env)
    n = graph.n_vertices
    P = transition_matrix(graph, p, np.arange(n))
    A = (P.T - sp.identity(n)).tolil()
    A[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[n - 1] = 1.0
    pi = spla.spsolve(A.tocsc(), b)
    res = np.abs(pi @ P - pi).max()
    if abs(pi.sum() - 1) > RESIDUAL_TOL or res > RESIDUAL_TOL or np.any(pi < -RESIDUAL_TOL):
        raise SingularSystemError(f"invariant distribution residual {res:.3g}")
    return np.clip(pi, 0.0, None)


def invariant_distribution_batch(graph: DirectedMultigraph, P_env: np.ndarray) -> np.ndarray:
    """Invariant laws for a batch of environments on a small strongly connected graph."""
    _require_strongly_connected(graph)
    P_env = np.atleast_2d(np.asarray(P_env, dtype=float))
    n = graph.n_vertices
    M = np.zeros((len(P_env), n, n))
    # Row y of (P^T - I): sum_e p_e [head=y] pi_tail - pi_y.
    np.add.at(M, (slice(None), graph.heads, graph.tails), P_env)
    M -= np.eye(n)
    M[:, n - 1, :] = 1.0
    b = np.zeros((len(P_env), n, 1))
    b[:, n - 1, 0] = 1.0
    return np.linalg.solve(M, b)[:, :, 0]


def reversed_environment(graph: DirectedMultigraph, env) -> Environment:
    """Time reversal: edge ``e`` reversed carries ``pi(tail e) p_e / pi(head e)``."""
    p = _p(graph, env)
    pi = invariant_distribution(graph, p)
    return Environment(graph.reversed(), pi[graph.tails] * p / pi[graph.heads])


def reversed_environment_batch(graph: DirectedMultigraph, P_env: np.ndarray) -> np.ndarray:
    pi = invariant_distribution_batch(graph, P_env)
    return pi[:, graph.tails] * P_env / pi[:, graph.heads]


def _reversal_setup(graph: DirectedMultigraph, x0):
    """Drop what ``x0`` cannot reach, then glue the cemetery onto ``x0``."""
    if graph.cemetery is None:
        raise GraphError("green_via_reversal needs a cemetery")
    reach = reachable_from(graph, x0)
    cem = graph.cemetery_index
    if cem not in reach:
        raise SingularSystemError("the cemetery is not reachable from x0")
    sub = induced_subgraph(graph, [graph.vertices[i] for i in sorted(reach)])
    into_cem = sub.heads == sub.cemetery_index
    glued = identify_vertices(sub, x0, sub.cemetery)
    kept_pos = np.array([graph.edge_position(e) for e in sub.edge_ids], dtype=np.int64)
    return glued, kept_pos, into_cem


def green_via_reversal(graph: DirectedMultigraph, env, x0) -> float:
    """``G(x0, x0)`` as the reciprocal of the reversed mass entering the cemetery edges."""
    p = _p(graph, env)
    glued, kept, into_cem = _reversal_setup(graph, x0)
    q = p[kept]
    pi = invariant_distribution(glued, q)
    rev = pi[glued.tails] * q / pi[glued.heads]
    return float(1.0 / rev[into_cem].sum())


def green_via_reversal_batch(graph: DirectedMultigraph, P_env: np.ndarray, x0) -> np.ndarray:
    glued, kept, into_cem = _reversal_setup(graph, x0)
    rev = reversed_environment_batch(glued, np.atleast_2d(P_env)[:, kept])
    return 1.0 / rev[:, into_cem].sum(axis=1)


# -- simulation ----------------------------------------------------------------

def _step_tables(graph: DirectedMultigraph, p: np.ndarray):
    width = max(1, graph.max_out_degree)
    cum = np.full((graph.n_vertices, width), 2.0)
    edge = np.full((graph.n_vertices, width), -1, dtype=np.int64)
    for v, out in enumerate(graph.out_edges):
        if len(out):
            c = np.cumsum(p[out])
            c[-1] = 1.0
            cum[v, :len(out)] = c
            edge[v, :len(out)] = out
    return cum, edge


def simulate_walk(graph: DirectedMultigraph, env, x0, max_steps: int, rng: np.random.Generator):
    """One trajectory; stops at a vertex without exits or after ``max_steps`` steps.

    Returns ``(vertex labels, absorbed)``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    p = _p(graph, env)
    cum, edge = _step_tables(graph, p)
    deg = graph.out_degree
    v = graph.index(x0)
    path = [v]
    absorbed = deg[v] == 0
    steps = 0
    while not absorbed and steps < max_steps:
        k = int(np.searchsorted(cum[v, :deg[v]], rng.random(), side="right"))
        v = int(graph.heads[edge[v, min(k, deg[v] - 1)]])
        path.append(v)
        steps += 1
        absorbed = deg[v] == 0
    return [graph.vertices[i] for i in path], bool(absorbed)


def visit_counts(graph: DirectedMultigraph, env, x0, n_walks: int, rng: np.random.Generator,
                 max_steps: int = 10_000_000) -> np.ndarray:
    """Number of visits to ``x0`` (time 0 included) for ``n_walks`` independent walks."""
    p = _p(graph, env)
    cum, edge = _step_tables(graph, p)
    deg = graph.out_degree
    start = graph.index(x0)
    pos = np.full(n_walks, start)
    counts = np.ones(n_walks, dtype=np.int64)
    alive = deg[pos] > 0
    for _ in range(max_steps):
        idx = np.flatnonzero(alive)
        if not idx.size:
            break
        v = pos[idx]
        k = (cum[v] <= rng.random(idx.size)[:, None]).sum(axis=1)
        k = np.minimum(k, deg[v] - 1)
        nxt = graph.heads[edge[v, k]]
        pos[idx] = nxt
        counts[idx] += nxt == start
        alive[idx] = deg[nxt] > 0
    return counts

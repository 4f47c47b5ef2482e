"""Graph builders: Z^d balls, free-group Cayley balls, and small named graphs."""
from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .graph import DELTA, DirectedMultigraph, GraphError


def unit_vectors(d: int) -> list[tuple]:
    """``e_1..e_d, -e_1..-e_d`` in that order."""
    pos = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    return pos + [tuple(-c for c in v) for v in pos]


def _direction_weights(d: int, alpha) -> np.ndarray:
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (2 * d,)).copy()
    if np.any(~(a > 0)):
        raise GraphError("direction weights must be strictly positive")
    return a


def lattice_ball_zd(d: int, N: int, alpha=1.0) -> DirectedMultigraph:
    """L1 ball of radius ``N`` in Z^d with both orientations of every lattice edge.

    Only edges between ball vertices are present. ``alpha`` is a scalar or a
    per-direction vector ordered ``e_1..e_d, -e_1..-e_d``. Vertex order is
    breadth-first from the origin, neighbors visited in that direction order.
    """
    if d < 1 or N < 0:
        raise GraphError("need d >= 1 and N >= 0")
    a = _direction_weights(d, alpha)
    dirs = unit_vectors(d)
    origin = (0,) * d
    order = [origin]
    seen = {origin}
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        if sum(map(abs, x)) >= N:
            continue
        for u in dirs:
            y = tuple(a_ + b_ for a_, b_ in zip(x, u))
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    edges, w = [], []
    for x in order:
        for k, u in enumerate(dirs):
            y = tuple(a_ + b_ for a_, b_ in zip(x, u))
            if y in seen:
                edges.append((x, y))
                w.append(a[k])
    return DirectedMultigraph.from_edges(edges, vertices=order, weights=w, root=origin)


def zd_truncation(d: int, N: int, alpha=1.0) -> DirectedMultigraph:
    """``G_N`` for Z^d: the radius-``N`` ball plus a cemetery collecting every exit edge.

    Equivalent to ``truncate_to_cemetery(lattice_ball_zd(d, N + 1), 0, N)``.
    """
    a = _direction_weights(d, alpha)
    inner = lattice_ball_zd(d, N, a)
    dirs = unit_vectors(d)
    edges = [inner.edge_labels(i) for i in range(inner.n_edges)]
    w = list(inner.weights)
    for x in inner.vertices:
        if sum(map(abs, x)) == N:
            for k, u in enumerate(dirs):
                y = tuple(a_ + b_ for a_, b_ in zip(x, u))
                if sum(map(abs, y)) > N:
                    edges.append((x, DELTA))
                    w.append(a[k])
    # Reorder so that every vertex's out-edges follow the direction order.
    verts = list(inner.vertices) + [DELTA]
    idx = {v: i for i, v in enumerate(verts)}
    order = sorted(range(len(edges)), key=lambda i: (idx[edges[i][0]], _dir_rank(edges[i], dirs)))
    return DirectedMultigraph.from_edges([edges[i] for i in order], vertices=verts,
                                         weights=[w[i] for i in order], cemetery=DELTA,
                                         root=inner.root)


def _dir_rank(edge, dirs):
    x, y = edge
    if y == DELTA:
        return len(dirs)
    u = tuple(b - a for a, b in zip(x, y))
    return dirs.index(u)


def free_group_cayley_ball(rank: int, N: int, alpha=1.0) -> DirectedMultigraph:
    """Ball of radius ``N`` in the Cayley graph of the free group on ``rank`` generators.

    Elements are reduced words, encoded as tuples of signed generator numbers
    (``+i`` for ``g_i``, ``-i`` for its inverse). ``alpha`` is a scalar or one weight
    per generator ordered ``g_1..g_r, g_1^-1..g_r^-1``; the weight of ``(w, w s)``
    is that of ``s``.
    """
    if rank < 2 or N < 0:
        raise GraphError("need rank >= 2 and N >= 0")
    a = _direction_weights(rank, alpha)
    gens = list(range(1, rank + 1)) + [-i for i in range(1, rank + 1)]
    words = [()]
    frontier = [()]
    for _ in range(N):
        nxt = []
        for w in frontier:
            for s in gens:
                if w and w[-1] == -s:
                    continue
                nxt.append(w + (s,))
        words.extend(nxt)
        frontier = nxt
    present = set(words)
    edges, w = [], []
    for word in words:
        for k, s in enumerate(gens):
            y = word[:-1] if word and word[-1] == -s else word + (s,)
            if y in present:
                edges.append((word, y))
                w.append(a[k])
    return DirectedMultigraph.from_edges(edges, vertices=words, weights=w, root=())


def loop_graph(alpha_loop: float = 2.0, alpha_exit: float = 1.0) -> DirectedMultigraph:
    """One vertex ``x0`` with a loop and an exit edge to the cemetery."""
    return DirectedMultigraph.from_edges([("x0", "x0"), ("x0", DELTA)],
                                         weights=[alpha_loop, alpha_exit], cemetery=DELTA, root="x0")


def two_cycle_graph(a: float = 2.0, c: float = 1.0, e: float = 1.0) -> DirectedMultigraph:
    """``x0 -> x1`` (weight a), ``x1 -> x0`` (c), ``x1 -> delta`` (e)."""
    return DirectedMultigraph.from_edges([("x0", "x1"), ("x1", "x0"), ("x1", DELTA)],
                                         weights=[a, c, e], cemetery=DELTA, root="x0")


def two_vertex_full_graph(alpha: Sequence[float] = (1.0, 1.0, 1.0, 1.0)) -> DirectedMultigraph:
    """Edges ``a->a, a->b, b->a, b->b`` in that order."""
    return DirectedMultigraph.from_edges([("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")],
                                         weights=alpha, root="a")


def path_graph(labels: Sequence, weights=None) -> DirectedMultigraph:
    edges = list(zip(labels[:-1], labels[1:]))
    return DirectedMultigraph.from_edges(edges, vertices=list(labels), weights=weights,
                                         root=labels[0])


def tree_with_half_line(depth: int, length: int) -> DirectedMultigraph:
    """Binary tree of the given depth glued by its root to a half-line, both ways oriented.

    Tree vertices are ``("t", path)`` with ``path`` a 0/1 tuple; half-line
    vertices are ``("z", k)`` for ``k = 1..length``. The root is ``("t", ())``.
    """
    root = ("t", ())
    edges = []
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for p in frontier:
            for b in (0, 1):
                c = p + (b,)
                edges += [(("t", p), ("t", c)), (("t", c), ("t", p))]
                nxt.append(c)
        frontier = nxt
    prev = root
    for k in range(1, length + 1):
        cur = ("z", k)
        edges += [(prev, cur), (cur, prev)]
        prev = cur
    return DirectedMultigraph.from_edges(edges, vertices=[root], root=root)


def random_graph(n_vertices: int, n_edges: int, rng: np.random.Generator,
                 loops: bool = True) -> DirectedMultigraph:
    """Uniform random multigraph on ``0..n-1`` (parallel edges allowed)."""
    edges = []
    while len(edges) < n_edges:
        t, h = rng.integers(n_vertices, size=2)
        if t == h and not loops:
            continue
        edges.append((int(t), int(h)))
    return DirectedMultigraph.from_edges(edges, vertices=list(range(n_vertices)))

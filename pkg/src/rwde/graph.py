"""Directed multigraphs with stable edge ids, divergence calculus and surgeries.

Vertices carry arbitrary hashable labels (ints, strings, coordinate tuples);
internally everything is indexed ``0..n-1`` in insertion order. Edges are
stored as parallel ``tails``/``heads`` index arrays plus a stable integer id
and a positive weight per edge. Loops and parallel edges are allowed.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

DELTA = "delta"


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DirectedMultigraph:
    vertices: tuple
    tails: np.ndarray
    heads: np.ndarray
    edge_ids: np.ndarray
    weights: np.ndarray
    cemetery: Hashable | None = None
    root: Hashable | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        index = {v: i for i, v in enumerate(self.vertices)}
        if len(index) != len(self.vertices):
            raise GraphError("duplicate vertex labels")
        object.__setattr__(self, "_index", index)
        for name in ("tails", "heads", "edge_ids"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        m = len(self.tails)
        if not (len(self.heads) == len(self.edge_ids) == len(w) == m):
            raise GraphError("edge arrays have inconsistent lengths")
        n = len(self.vertices)
        if m and (self.tails.min() < 0 or self.heads.min() < 0
                  or self.tails.max() >= n or self.heads.max() >= n):
            raise GraphError("edge endpoint is not a vertex")
        if len(set(self.edge_ids.tolist())) != m:
            raise GraphError("duplicate edge ids")
        if np.any(~(w > 0)):
            raise GraphError("edge weights must be strictly positive")
        if self.cemetery is not None:
            if self.cemetery not in index:
                raise GraphError(f"cemetery {self.cemetery!r} is not a vertex")
            if np.any(self.tails == index[self.cemetery]):
                raise GraphError("cemetery vertex has an outgoing edge")
        if self.root is not None and self.root not in index:
            raise GraphError(f"root {self.root!r} is not a vertex")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], vertices: Sequence | None = None,
                   weights: Sequence[float] | None = None, edge_ids: Sequence[int] | None = None,
                   cemetery=None, root=None) -> "DirectedMultigraph":
        """Build from ``(tail, head)`` label pairs.

        Vertices not listed explicitly are appended in order of first appearance.
        """
        edges = list(edges)
        verts = list(vertices) if vertices is not None else []
        seen = set(verts)
        for t, h in edges:
            for v in (t, h):
                if v not in seen:
                    seen.add(v)
                    verts.append(v)
        for v in (root, cemetery):
            if v is not None and v not in seen:
                seen.add(v)
                verts.append(v)
        index = {v: i for i, v in enumerate(verts)}
        tails = [index[t] for t, _ in edges]
        heads = [index[h] for _, h in edges]
        m = len(edges)
        w = np.ones(m) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), (m,)).copy()
        ids = np.arange(m) if edge_ids is None else np.asarray(edge_ids)
        return cls(tuple(verts), np.array(tails, dtype=np.int64), np.array(heads, dtype=np.int64),
                   ids, w, cemetery=cemetery, root=root)

    def replace(self, **kw) -> "DirectedMultigraph":
        args = dict(vertices=self.vertices, tails=self.tails, heads=self.heads,
                    edge_ids=self.edge_ids, weights=self.weights,
                    cemetery=self.cemetery, root=self.root)
        args.update(kw)
        return DirectedMultigraph(**args)

    def with_weights(self, weights) -> "DirectedMultigraph":
        return self.replace(weights=np.broadcast_to(np.asarray(weights, dtype=float),
                                                    (self.n_edges,)).copy())

    # -- basic accessors --------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except (KeyError, TypeError):
            raise GraphError(f"unknown vertex {v!r}") from None

    def has_vertex(self, v) -> bool:
        try:
            return v in self._index
        except TypeError:
            return False

    def edge_position(self, edge_id: int) -> int:
        pos = self._edge_pos.get(int(edge_id))
        if pos is None:
            raise GraphError(f"unknown edge id {edge_id}")
        return pos

    @cached_property
    def _edge_pos(self) -> dict:
        return {int(e): i for i, e in enumerate(self.edge_ids)}

    @property
    def cemetery_index(self) -> int | None:
        return None if self.cemetery is None else self._index[self.cemetery]

    @cached_property
    def out_edges(self) -> tuple:
        """Per-vertex arrays of outgoing edge positions, in edge order."""
        order = np.argsort(self.tails, kind="stable")
        counts = np.bincount(self.tails, minlength=self.n_vertices)
        return tuple(np.split(order, np.cumsum(counts)[:-1]))

    @cached_property
    def in_edges(self) -> tuple:
        order = np.argsort(self.heads, kind="stable")
        counts = np.bincount(self.heads, minlength=self.n_vertices)
        return tuple(np.split(order, np.cumsum(counts)[:-1]))

    @cached_property
    def out_degree(self) -> np.ndarray:
        return np.bincount(self.tails, minlength=self.n_vertices)

    @cached_property
    def in_degree(self) -> np.ndarray:
        return np.bincount(self.heads, minlength=self.n_vertices)

    @property
    def max_out_degree(self) -> int:
        return int(self.out_degree.max(initial=0))

    @property
    def max_in_degree(self) -> int:
        return int(self.in_degree.max(initial=0))

    def vertex_weights(self, alpha=None) -> np.ndarray:
        """alpha_x: total weight of the edges leaving each vertex."""
        a = self.weights if alpha is None else np.asarray(alpha, dtype=float)
        return np.bincount(self.tails, weights=a, minlength=self.n_vertices)

    def edge_labels(self, pos: int) -> tuple:
        return self.vertices[self.tails[pos]], self.vertices[self.heads[pos]]

    @cached_property
    def undirected_neighbors(self) -> tuple:
        """Neighbor index lists of the undirected shadow (loops dropped, sorted)."""
        nbrs = [set() for _ in range(self.n_vertices)]
        for t, h in zip(self.tails.tolist(), self.heads.tolist()):
            if t != h:
                nbrs[t].add(h)
                nbrs[h].add(t)
        return tuple(tuple(sorted(s)) for s in nbrs)

    @cached_property
    def successors(self) -> tuple:
        succ = [set() for _ in range(self.n_vertices)]
        for t, h in zip(self.tails.tolist(), self.heads.tolist()):
            succ[t].add(h)
        return tuple(tuple(sorted(s)) for s in succ)

    def reversed(self) -> "DirectedMultigraph":
        """Every edge reversed, ids and weights kept. Drops the cemetery tag."""
        return self.replace(tails=self.heads, heads=self.tails, cemetery=None)

    def is_directed_symmetric(self) -> bool:
        pairs = set(zip(self.tails.tolist(), self.heads.tolist()))
        return all((h, t) in pairs for t, h in pairs)

    def __repr__(self):
        return (f"DirectedMultigraph(n_vertices={self.n_vertices}, n_edges={self.n_edges}, "
                f"cemetery={self.cemetery!r}, root={self.root!r})")


# -- divergence --------------------------------------------------------------

def divergence_vector(graph: DirectedMultigraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != graph.n_edges:
        raise GraphError("edge function has the wrong length")
    n = graph.n_vertices
    out = np.bincount(graph.tails, weights=f, minlength=n)
    inn = np.bincount(graph.heads, weights=f, minlength=n)
    return out - inn


def divergence(graph: DirectedMultigraph, f, x) -> float:
    """Outflow minus inflow of the edge function ``f`` at vertex ``x``."""
    i = graph.index(x)
    f = np.asarray(f, dtype=float)
    if f.shape != (graph.n_edges,):
        raise GraphError("edge function has the wrong length")
    return float(f[graph.out_edges[i]].sum() - f[graph.in_edges[i]].sum())


# -- balls, boundaries, subsets -----------------------------------------------

@dataclass(frozen=True)
class VertexSubset:
    vertices: frozenset
    connected: bool

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.vertices

    def __iter__(self):
        return iter(self.vertices)


def undirected_distances(graph: DirectedMultigraph, x0, max_radius: int | None = None) -> dict:
    """Breadth-first distances in the undirected shadow, keyed by vertex index."""
    src = graph.index(x0)
    dist = {src: 0}
    queue = deque([src])
    nbrs = graph.undirected_neighbors
    while queue:
        u = queue.popleft()
        d = dist[u]
        if max_radius is not None and d >= max_radius:
            continue
        for v in nbrs[u]:
            if v not in dist:
                dist[v] = d + 1
                queue.append(v)
    return dist


def is_connected_subset(graph: DirectedMultigraph, idx: Iterable[int]) -> bool:
    idx = set(idx)
    if not idx:
        return False
    start = next(iter(idx))
    seen = {start}
    stack = [start]
    nbrs = graph.undirected_neighbors
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v in idx and v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(idx)


def is_strongly_connected_subset(graph: DirectedMultigraph, idx: Iterable[int]) -> bool:
    idx = set(idx)
    if not idx:
        return False
    succ = [[] for _ in range(graph.n_vertices)]
    pred = [[] for _ in range(graph.n_vertices)]
    for t, h in zip(graph.tails.tolist(), graph.heads.tolist()):
        if t in idx and h in idx:
            succ[t].append(h)
            pred[h].append(t)

    def reach(adj):
        start = next(iter(idx))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    return len(reach(succ)) == len(idx) and len(reach(pred)) == len(idx)


def ball(graph: DirectedMultigraph, x0, r: int) -> VertexSubset:
    """Vertices within undirected graph distance ``r`` of ``x0``."""
    if r < 0:
        raise GraphError("radius must be nonnegative")
    dist = undirected_distances(graph, x0, r)
    return VertexSubset(frozenset(graph.vertices[i] for i in dist), connected=True)


def edge_boundary(graph: DirectedMultigraph, K) -> np.ndarray:
    """Positions of the edges with tail in ``K`` and head outside ``K``."""
    members = set(K)
    if not members:
        raise GraphError("K must be nonempty")
    mask = np.zeros(graph.n_vertices, dtype=bool)
    mask[[graph.index(v) for v in members]] = True
    return np.flatnonzero(mask[graph.tails] & ~mask[graph.heads])


def connected_subsets_containing(graph: DirectedMultigraph, x0, max_size: int = 12,
                                 exclude=()) -> Iterator[VertexSubset]:
    """Every connected vertex set containing ``x0`` with at most ``max_size`` members.

    Each set is produced exactly once: the search branches on one frontier vertex
    at a time (take it, or ban it for the rest of the branch). Vertices listed in
    ``exclude`` (e.g. a cemetery) are never used.
    """
    if max_size < 1:
        raise GraphError("max_size must be at least 1")
    root = graph.index(x0)
    nbrs = graph.undirected_neighbors
    banned0 = {graph.index(v) for v in exclude if graph.has_vertex(v)}
    if root in banned0:
        return
    verts = graph.vertices

    def rec(current: list, frontier: list, banned: set):
        yield VertexSubset(frozenset(verts[i] for i in current), connected=True)
        if len(current) >= max_size:
            return
        frontier = list(frontier)
        banned = set(banned)
        while frontier:
            v = frontier.pop(0)
            in_set = set(current)
            in_set.add(v)
            new_frontier = frontier + [u for u in nbrs[v]
                                       if u not in in_set and u not in banned and u not in frontier]
            yield from rec(current + [v], new_frontier, banned | {v})
            banned.add(v)

    start_frontier = [u for u in nbrs[root] if u not in banned0]
    yield from rec([root], start_frontier, banned0 | {root})


def brute_force_connected_subsets(graph: DirectedMultigraph, x0, max_size: int, exclude=()) -> set:
    """Exhaustive oracle for :func:`connected_subsets_containing` (small graphs only)."""
    root = graph.index(x0)
    skip = {graph.index(v) for v in exclude if graph.has_vertex(v)}
    others = [i for i in range(graph.n_vertices) if i != root and i not in skip]
    found = set()
    for k in range(0, max_size):
        for combo in combinations(others, k):
            idx = (root,) + combo
            if is_connected_subset(graph, idx):
                found.add(frozenset(graph.vertices[i] for i in idx))
    return found


# -- surgeries ------------------------------------------------------------------

def truncate_to_cemetery(graph: DirectedMultigraph, x0, N: int, cemetery=DELTA) -> DirectedMultigraph:
    """Keep ``ball(x0, N)``; contract its complement to an absorbing cemetery.

    Edges leaving the complement are deleted, edges from the ball into it are
    redirected to the cemetery with their ids and weights.
    """
    if N < 1:
        raise GraphError("N must be at least 1")
    inside_idx = undirected_distances(graph, x0, N)
    if graph.has_vertex(cemetery):
        raise GraphError(f"label {cemetery!r} already used by a vertex")
    keep = sorted(inside_idx)
    new_index = {old: new for new, old in enumerate(keep)}
    d = len(keep)
    tails, heads, ids, w = [], [], [], []
    for pos in range(graph.n_edges):
        t = int(graph.tails[pos])
        if t not in new_index:
            continue
        h = int(graph.heads[pos])
        tails.append(new_index[t])
        heads.append(new_index.get(h, d))
        ids.append(int(graph.edge_ids[pos]))
        w.append(float(graph.weights[pos]))
    verts = tuple(graph.vertices[i] for i in keep) + (cemetery,)
    return DirectedMultigraph(verts, np.array(tails, dtype=np.int64), np.array(heads, dtype=np.int64),
                              np.array(ids, dtype=np.int64), np.array(w), cemetery=cemetery, root=x0)


def identify_vertices(graph: DirectedMultigraph, u, v) -> DirectedMultigraph:
    """Quotient merging ``v`` into ``u``; the merged vertex keeps the label of ``u``.

    Edges, ids and weights are kept; loops and parallel edges appear as needed.
    """
    iu, iv = graph.index(u), graph.index(v)
    if iu == iv:
        raise GraphError("cannot identify a vertex with itself")
    keep = [i for i in range(graph.n_vertices) if i != iv]
    new_index = {old: new for new, old in enumerate(keep)}
    new_index[iv] = new_index[iu]
    remap = np.array([new_index[i] for i in range(graph.n_vertices)], dtype=np.int64)
    cem = graph.cemetery if graph.cemetery not in (u, v) else None
    root = graph.root if graph.root != v else u
    return DirectedMultigraph(tuple(graph.vertices[i] for i in keep), remap[graph.tails],
                              remap[graph.heads], graph.edge_ids, graph.weights,
                              cemetery=cem, root=root)


def induced_subgraph(graph: DirectedMultigraph, keep_labels) -> DirectedMultigraph:
    keep = sorted(graph.index(v) for v in keep_labels)
    new_index = {old: new for new, old in enumerate(keep)}
    mask = np.array([t in new_index and h in new_index
                     for t, h in zip(graph.tails.tolist(), graph.heads.tolist())], dtype=bool)
    remap = np.full(graph.n_vertices, -1, dtype=np.int64)
    for old, new in new_index.items():
        remap[old] = new
    cem = graph.cemetery if graph.cemetery is not None and graph.index(graph.cemetery) in new_index else None
    root = graph.root if graph.root is not None and graph.index(graph.root) in new_index else None
    return DirectedMultigraph(tuple(graph.vertices[i] for i in keep), remap[graph.tails[mask]],
                              remap[graph.heads[mask]], graph.edge_ids[mask], graph.weights[mask],
                              cemetery=cem, root=root)


def reachable_from(graph: DirectedMultigraph, x0) -> set:
    """Indices reachable from ``x0`` along directed edges (``x0`` included)."""
    src = graph.index(x0)
    seen = {src}
    stack = [src]
    succ = graph.successors
    while stack:
        u = stack.pop()
        for w in succ[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def shells_strongly_connected(graph: DirectedMultigraph, x0, radii: Sequence[int]) -> list:
    """Check that each shell ``B(x0, radii[n+1]) \\ B(x0, radii[n])`` is strongly connected.

    Only shells lying entirely inside ``graph`` are meaningful: the caller passes
    radii accordingly. The cemetery, if any, never belongs to a shell. Returns a
    list of ``(inner, outer, ok)`` triples.
    """
    dist = undirected_distances(graph, x0)
    cem = graph.cemetery_index
    out = []
    for lo, hi in zip(radii[:-1], radii[1:]):
        if hi <= lo:
            raise GraphError("shell radii must be strictly increasing")
        shell = [i for i, d in dist.items() if lo < d <= hi and i != cem]
        out.append((lo, hi, bool(shell) and is_strongly_connected_subset(graph, shell)))
    return out

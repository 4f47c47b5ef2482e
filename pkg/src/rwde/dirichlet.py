"""Dirichlet environments: sampling through independent gammas, densities, merging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .graph import DirectedMultigraph, GraphError

NORMALIZATION_TOL = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"beta parameters must be positive, got ({self.a}, {self.b})")


@dataclass(frozen=True, eq=False)
class Environment:
    """Transition probability per edge of ``graph`` (aligned with its edge order)."""
    graph: DirectedMultigraph
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.graph.n_edges,):
            raise GraphError("environment length does not match the edge count")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def check(self, tol: float = NORMALIZATION_TOL) -> None:
        if np.any(~(self.p > 0)) or np.any(self.p > 1):
            raise ValueError("probabilities must lie in (0, 1]")
        sums = self.graph.vertex_weights(self.p)
        has_out = self.graph.out_degree > 0
        bad = np.flatnonzero(has_out & (np.abs(sums - 1.0) > tol))
        if bad.size:
            raise ValueError(f"outgoing probabilities at {self.graph.vertices[bad[0]]!r} sum to {sums[bad[0]]!r}")

    def by_id(self) -> dict:
        return {int(e): float(v) for e, v in zip(self.graph.edge_ids, self.p)}


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if np.any(~(w > 0)):
        raise ValueError("Dirichlet weights must be strictly positive")
    return w


def sample_dirichlet(weights, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Normalized independent gamma draws: Dirichlet(weights) on the simplex."""
    w = _check_weights(weights)
    shape = w.shape if size is None else (size,) + w.shape
    g = rng.standard_gamma(np.broadcast_to(w, shape))
    return g / g.sum(axis=-1, keepdims=True)


def _check_sampleable(graph: DirectedMultigraph) -> None:
    cem = graph.cemetery_index
    dead = [i for i in np.flatnonzero(graph.out_degree == 0) if i != cem]
    if dead:
        raise GraphError(f"vertex {graph.vertices[dead[0]]!r} has no outgoing edge and is not the cemetery")


def sample_environment_array(graph: DirectedMultigraph, rng: np.random.Generator,
                             size: int, alpha=None) -> np.ndarray:
    """``size`` independent environments as a ``(size, n_edges)`` array.

    One Dirichlet block per vertex over its outgoing edges; single-edge blocks
    are exactly 1.
    """
    _check_sampleable(graph)
    a = graph.weights if alpha is None else _check_weights(alpha)
    g = rng.standard_gamma(np.broadcast_to(a, (size, graph.n_edges)))
    sums = np.zeros((size, graph.n_vertices))
    np.add.at(sums.T, graph.tails, g.T)
    p = g / sums[:, graph.tails]
    single = graph.out_degree[graph.tails] == 1
    p[:, single] = 1.0
    return p


def sample_environment(graph: DirectedMultigraph, rng: np.random.Generator, alpha=None) -> Environment:
    return Environment(graph, sample_environment_array(graph, rng, 1, alpha)[0])


def log_density(p, graph: DirectedMultigraph, alpha=None) -> float:
    """Log density of a Dirichlet environment w.r.t. the product of simplex Lebesgue measures.

    Probabilities that are exactly zero lie outside the environment space and
    give ``-inf``.
    """
    a = graph.weights if alpha is None else _check_weights(alpha)
    p = np.asarray(p, dtype=float)
    if np.any(p == 0):
        return -np.inf
    has_out = graph.out_degree > 0
    ax = graph.vertex_weights(a)[has_out]
    const = gammaln(ax).sum() - gammaln(a).sum()
    return float(const + np.sum((a - 1.0) * np.log(np.maximum(p, LOG_FLOOR))))


def quotient_multi_edges(graph: DirectedMultigraph, alpha=None):
    """Merge parallel edges into one edge whose weight is the sum.

    Returns ``(simple_graph, groups)`` where ``groups[i]`` lists the positions in
    ``graph`` merged into edge ``i`` of the result. The merged edge keeps the
    smallest id of its group. A graph without parallel edges comes back as is.
    """
    a = graph.weights if alpha is None else _check_weights(alpha)
    groups: dict = {}
    for pos, key in enumerate(zip(graph.tails.tolist(), graph.heads.tolist())):
        groups.setdefault(key, []).append(pos)
    if all(len(g) == 1 for g in groups.values()):
        return (graph if alpha is None else graph.with_weights(a)), [[i] for i in range(graph.n_edges)]
    keys = list(groups)
    members = [groups[k] for k in keys]
    merged = graph.replace(
        tails=np.array([k[0] for k in keys], dtype=np.int64),
        heads=np.array([k[1] for k in keys], dtype=np.int64),
        edge_ids=np.array([min(int(graph.edge_ids[i]) for i in g) for g in members], dtype=np.int64),
        weights=np.array([a[g].sum() for g in members]),
    )
    return merged, members


def push_forward(p, groups) -> np.ndarray:
    """Sum environment coordinates over merged edge groups (works on batches)."""
    p = np.asarray(p, dtype=float)
    return np.stack([p[..., g].sum(axis=-1) for g in groups], axis=-1)

"""Flows, cutsets, max-flow/min-cut, the finite-energy max-flow construction and kappa."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .builders import unit_vectors, zd_truncation
from .graph import (DirectedMultigraph, GraphError, connected_subsets_containing, divergence_vector,
                    edge_boundary, induced_subgraph, is_strongly_connected_subset, undirected_distances)
from .maxflow import push_relabel

FLOW_TOL = 1e-10


class ShellConditionError(GraphError):
    """Raised when the strongly-connected-shells hypothesis (H3) fails."""


@dataclass(frozen=True, eq=False)
class Flow:
    graph: DirectedMultigraph
    values: np.ndarray
    source: object
    sink: object = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def strength(self) -> float:
        return strength(self)

    @property
    def energy(self) -> float:
        return energy(self)

    def check(self, tol: float = FLOW_TOL) -> None:
        if self.values.shape != (self.graph.n_edges,):
            raise GraphError("flow length does not match the edge count")
        if np.any(self.values < -tol):
            raise GraphError("flow has a negative value")
        div = divergence_vector(self.graph, self.values)
        src = self.graph.index(self.source)
        skip = {src}
        for v in (self.sink, self.graph.cemetery):
            if v is not None:
                skip.add(self.graph.index(v))
        scale = max(1.0, float(np.abs(self.values).max(initial=0.0)))
        for i, d in enumerate(div):
            if i not in skip and abs(d) > tol * scale:
                raise GraphError(f"flow divergence {d:.3g} at {self.graph.vertices[i]!r}")
        if div[src] < -tol * scale:
            raise GraphError("negative strength")

    def scaled(self, factor: float) -> "Flow":
        return Flow(self.graph, self.values * factor, self.source, self.sink)


@dataclass(frozen=True)
class Cutset:
    edges: tuple
    value: float
    certified: bool


@dataclass(frozen=True)
class KappaResult:
    value: float
    minimizer: frozenset
    loop_at_root: bool
    attained_at_cap: bool = False

    def to_dict(self) -> dict:
        return {"kappa": self.value,
                "minimizer_vertices": sorted(self.minimizer, key=repr),
                "attained_at_cap": self.attained_at_cap}


def strength(flow: Flow) -> float:
    """Divergence of the flow at its source."""
    g = flow.graph
    i = g.index(flow.source)
    return float(flow.values[g.out_edges[i]].sum() - flow.values[g.in_edges[i]].sum())


def energy(flow: Flow) -> float:
    return float(np.sum(np.square(flow.values)))


# -- max-flow / min-cut -------------------------------------------------------------

def _sink(graph: DirectedMultigraph, sink):
    sink = graph.cemetery if sink is None else sink
    if sink is None:
        raise GraphError("no sink given and the graph has no cemetery")
    return sink


def separates(graph: DirectedMultigraph, edges, source, sink) -> bool:
    """True if deleting the edge positions ``edges`` disconnects ``source`` from ``sink``."""
    removed = set(int(e) for e in edges)
    s, t = graph.index(source), graph.index(sink)
    succ = [[] for _ in range(graph.n_vertices)]
    for pos, (a, b) in enumerate(zip(graph.tails.tolist(), graph.heads.tolist())):
        if pos not in removed:
            succ[a].append(b)
    seen = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        if u == t:
            return False
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return t not in seen


def max_flow_min_cut(graph: DirectedMultigraph, capacities=None, source=None, sink=None):
    """Maximum compatible flow from ``source`` to ``sink`` and a minimum cutset.

    Integer or Fraction capacities are handled in exact arithmetic; the cut value
    then equals the flow strength exactly. ``sink`` defaults to the cemetery.
    """
    source = graph.root if source is None else source
    sink = _sink(graph, sink)
    caps = list(graph.weights) if capacities is None else list(capacities)
    if len(caps) != graph.n_edges:
        raise GraphError("capacity vector has the wrong length")
    s, t = graph.index(source), graph.index(sink)
    value, flow, reach = push_relabel(graph.n_vertices, graph.tails, graph.heads, caps, s, t)
    cut = tuple(int(e) for e in np.flatnonzero(reach[graph.tails] & ~reach[graph.heads]))
    cut_value = sum((caps[e] for e in cut), start=type(value)(0))
    certified = separates(graph, cut, source, sink)
    f = Flow(graph, np.array([float(x) for x in flow]), source, sink)
    return f, Cutset(cut, cut_value, certified), value


def min_cut_by_enumeration(graph: DirectedMultigraph, capacities, source, sink):
    """Exhaustive oracle: cheapest edge set whose removal separates source and sink."""
    m = graph.n_edges
    if m > 20:
        raise ValueError("enumeration oracle limited to 20 edges")
    best, best_set = None, None
    for k in range(m + 1):
        for combo in itertools.combinations(range(m), k):
            c = sum((capacities[e] for e in combo), start=0)
            if best is not None and c >= best:
                continue
            if separates(graph, combo, source, sink):
                best, best_set = c, combo
    return best, best_set


# -- kappa ----------------------------------------------------------------------

def kappa_zd(alpha, d: int) -> KappaResult:
    """Closed form on Z^d: ``2 * sum(alpha) - max_i(alpha_{e_i} + alpha_{-e_i})``.

    ``alpha`` is ordered ``e_1..e_d, -e_1..-e_d``; the minimizer is ``{0, e_i0}``
    for the first direction ``i0`` attaining the maximum.
    """
    a = np.asarray(alpha, dtype=float)
    if a.shape != (2 * d,):
        raise ValueError(f"need {2 * d} direction weights")
    if np.any(~(a > 0)):
        raise ValueError("direction weights must be strictly positive")
    pair = a[:d] + a[d:]
    i0 = int(np.argmax(pair))
    origin = (0,) * d
    return KappaResult(float(2 * a.sum() - pair[i0]), frozenset({origin, unit_vectors(d)[i0]}), False)


def kappa_min_cut(graph: DirectedMultigraph, x0=None, max_size: int = 12, alpha=None) -> KappaResult:
    """Minimum of ``alpha(boundary(K))`` over connected ``K`` containing ``x0``.

    ``{x0}`` itself is admissible only when there is a loop at ``x0``. The
    cemetery never belongs to ``K``. A minimizer of size ``max_size`` triggers a
    warning, since a larger set might do better.
    """
    if max_size < 2:
        raise ValueError("max_size must be at least 2")
    x0 = graph.root if x0 is None else x0
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    i0 = graph.index(x0)
    loop = bool(np.any((graph.tails == i0) & (graph.heads == i0)))
    exclude = [graph.cemetery] if graph.cemetery is not None else []
    best, best_k = math.inf, None
    for K in connected_subsets_containing(graph, x0, max_size, exclude=exclude):
        if len(K) == 1 and not loop:
            continue
        val = float(a[edge_boundary(graph, K.vertices)].sum())
        if val < best - 1e-12:
            best, best_k = val, K.vertices
    if best_k is None:
        raise GraphError("no admissible set")
    at_cap = len(best_k) >= max_size
    if at_cap:
        warnings.warn("kappa minimum attained at the size cap; it may not be optimal", stacklevel=2)
    return KappaResult(best, best_k, loop, at_cap)


def kappa_min_cut_zd(alpha, d: int, max_size: int = 4) -> KappaResult:
    """:func:`kappa_min_cut` on the Z^d truncation of radius ``max_size - 1``.

    Every connected ``K`` of that size containing the origin fits inside, and the
    cemetery edges complete its boundary.
    """
    g = zd_truncation(d, max(1, max_size - 1), alpha)
    return kappa_min_cut(g, (0,) * d, max_size)


def kappa_fin_cut(graph: DirectedMultigraph, x0=None, alpha=None) -> float:
    """Minimum cutset weight among cutsets missing at least one edge out of ``x0``.

    Computed as the smallest min cut after making one out-edge of ``x0``
    uncuttable, over every choice of that edge (needs a cemetery sink).
    """
    x0 = graph.root if x0 is None else x0
    a = np.asarray(graph.weights if alpha is None else alpha, dtype=float)
    big = float(a.sum()) + 1.0
    best = math.inf
    for e in graph.out_edges[graph.index(x0)]:
        caps = a.copy()
        caps[e] = big
        _, _, value = max_flow_min_cut(graph, caps, x0)
        best = min(best, float(value))
    return best


# -- explicit flows ---------------------------------------------------------------

def radial_unit_flow_zd(d: int, N: int, graph: DirectedMultigraph | None = None) -> Flow:
    """Unit flow from the origin of Z^d spread over the L1 spheres.

    It is the edge-occupation law of a random outward path: pick an orthant
    uniformly, then from ``x`` on the sphere of radius ``r`` step along ``i``
    with probability ``(|x_i| + 1) / (r + d)``. The position on each sphere is then
    uniform inside the orthant. Supported on outward edges of ``zd_truncation(d, N)``,
    the exit edges carrying what leaves the ball.
    """
    if d <= 2:
        raise GraphError("no finite-energy flow to infinity exists on Z^1 or Z^2")
    g = zd_truncation(d, N) if graph is None else graph
    dirs = unit_vectors(d)
    vals = np.zeros(g.n_edges)
    cem = g.cemetery_index
    for pos in range(g.n_edges):
        x = g.vertices[g.tails[pos]]
        if g.heads[pos] == cem:
            # Exit edges keep the direction order of zd_truncation; recover it.
            out = [p for p in g.out_edges[g.tails[pos]] if g.heads[p] == cem]
            outward = [u for u in dirs if sum(map(abs, (a + b for a, b in zip(x, u)))) > sum(map(abs, x))]
            u = outward[list(out).index(pos)]
        else:
            y = g.vertices[g.heads[pos]]
            u = tuple(b - a for a, b in zip(x, y))
        vals[pos] = _radial_value(x, u, d)
    return Flow(g, vals, (0,) * d, g.cemetery)


def _radial_value(x, u, d: int) -> float:
    r = sum(map(abs, x))
    i = next(j for j, c in enumerate(u) if c != 0)
    step = u[i]
    if x[i] != 0 and np.sign(x[i]) != step:
        return 0.0  # inward edge
    free = sum(1 for j, c in enumerate(x) if c == 0 and j != i)
    n_orthants = 2 ** free
    return n_orthants / 2 ** d / comb(r + d - 1, d - 1) * (abs(x[i]) + 1) / (r + d)


def symmetric_to_directed_flow(graph: DirectedMultigraph, undirected: dict, source) -> Flow:
    """Turn a signed flow on the undirected shadow into a nonnegative directed flow.

    ``undirected`` maps ``(u, v)`` to the flow along ``u -> v`` (negative means
    ``v -> u``). Each value lands on the directed edge pointing the way it flows;
    the opposite edge gets 0.
    """
    vals = np.zeros(graph.n_edges)
    lookup = {}
    for pos in range(graph.n_edges):
        lookup.setdefault(graph.edge_labels(pos), pos)
    for (u, v), val in undirected.items():
        key = (u, v) if val >= 0 else (v, u)
        if key not in lookup:
            raise GraphError(f"graph has no edge {key!r}")
        vals[lookup[key]] += abs(val)
    return Flow(graph, vals, source)


# -- finite-energy max-flow ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class L2FlowResult:
    flow: Flow
    min_cut: float
    n0: int
    n1: int
    n1_bound: int
    radii: tuple
    capacities: np.ndarray = field(repr=False)


def default_radii(max_radius: int) -> tuple:
    return tuple(range(0, max_radius + 1, 2))


def _distances_without_cemetery(graph: DirectedMultigraph, x0) -> np.ndarray:
    if graph.cemetery is None:
        dist = undirected_distances(graph, x0)
    else:
        sub = induced_subgraph(graph, [v for v in graph.vertices if v != graph.cemetery])
        dist = {graph.index(sub.vertices[i]): d for i, d in undirected_distances(sub, x0).items()}
    out = np.full(graph.n_vertices, np.iinfo(np.int64).max, dtype=np.int64)
    for i, dd in dist.items():
        out[i] = dd
    return out


def check_shells(graph: DirectedMultigraph, x0, radii) -> list:
    """Strong connectivity of each complete shell ``B(eta_{n+1}) \\ B(eta_n)`` of a truncation."""
    dist = _distances_without_cemetery(graph, x0)
    cem = graph.cemetery_index
    finite = dist[dist < np.iinfo(np.int64).max]
    R = int(finite.max())
    out = []
    for lo, hi in zip(radii[:-1], radii[1:]):
        if hi <= lo:
            raise GraphError("shell radii must be strictly increasing")
        if hi > R:
            break
        shell = [i for i in range(graph.n_vertices) if lo < dist[i] <= hi and i != cem]
        out.append((lo, hi, bool(shell) and is_strongly_connected_subset(graph, shell)))
    return out


def l2_compatible_maxflow(graph: DirectedMultigraph, capacities, x0, theta: Flow,
                          radii=None) -> L2FlowResult:
    """Maximum compatible flow of finite energy on a truncation, built from a unit flow.

    Capacities are replaced by ``2 * mincut * theta`` on edges whose tail lies
    outside ``B(x0, eta_{n1})`` and kept elsewhere; ``n0`` is the first shell index
    past which ``theta <= inf(c) / (2 * mincut)``. ``n1`` is the smallest index
    from ``n0`` on for which the modified capacities keep the min cut, searched up
    to the sufficient bound ``n0 + floor(2 * mincut / inf(c)) + 1`` (returned as
    ``n1_bound``). Raises :class:`ShellConditionError` when a shell is not
    strongly connected.
    """
    c = np.asarray(capacities, dtype=float)
    if c.shape != (graph.n_edges,):
        raise GraphError("capacity vector has the wrong length")
    cem = graph.cemetery_index
    if cem is None:
        raise GraphError("need a truncation with a cemetery")
    c_inf = float(c.min())
    if not c_inf > 0:
        raise GraphError("capacities must be bounded away from zero")
    dist = _distances_without_cemetery(graph, x0)
    R = int(dist[dist < np.iinfo(np.int64).max].max())
    radii = default_radii(R + 2) if radii is None else tuple(radii)
    shells = check_shells(graph, x0, radii)
    if not shells:
        raise ShellConditionError("(H3): truncation too small to contain a complete shell")
    for lo, hi, ok in shells:
        if not ok:
            raise ShellConditionError(f"(H3) fails: shell B({hi}) \\ B({lo}) is not strongly connected")
    th = theta.values if isinstance(theta, Flow) else np.asarray(theta, dtype=float)
    th_flow = Flow(graph, th, x0, graph.cemetery)
    th_flow.check()
    if abs(th_flow.strength - 1.0) > 1e-9:
        raise GraphError("seed flow must have unit strength")

    _, _, mincut = max_flow_min_cut(graph, c, x0)
    mincut = float(mincut)
    if mincut <= 0:
        raise GraphError("the cemetery is unreachable from x0")

    big = np.iinfo(np.int64).max
    tail_d = dist[graph.tails]
    head_d = np.where(graph.heads == cem, big, dist[graph.heads])
    bound = c_inf / (2 * mincut)
    n0 = None
    for n, eta in enumerate(radii):
        outside = ~((tail_d <= eta) & (head_d <= eta))
        if np.all(th[outside] <= bound * (1 + 1e-12)):
            n0 = n
            break
    if n0 is None:
        raise GraphError("seed flow never drops below inf(c) / (2 mincut) inside the truncation")
    n1_bound = n0 + int(math.floor(2 * mincut / c_inf)) + 1

    def modified(n1):
        eta = radii[n1] if n1 < len(radii) else big
        return np.where(tail_d <= eta, c, 2 * mincut * th)

    for n1 in range(n0, n1_bound + 1):
        c_mod = modified(n1)
        flow, _, value = max_flow_min_cut(graph, c_mod, x0)
        if float(value) >= mincut * (1 - 1e-9):
            break
    out = Flow(graph, flow.values, x0, graph.cemetery)
    return L2FlowResult(out, mincut, n0, n1, n1_bound, radii, c_mod)


def kappa0_lower_bound(alpha, flow: Flow) -> float:
    """``strength * min(alpha_e / theta_e)`` over the support: the bound for the unit-normalized flow."""
    a = np.asarray(alpha, dtype=float)
    th = flow.values
    s = flow.strength
    if s <= 0 or not np.any(th > 0):
        raise ValueError("flow must be nonzero")
    sup = th > 0
    return float(s * np.min(a[sup] / th[sup]))

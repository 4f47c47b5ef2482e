"""Deterministic quadrature check of the occupation-density change of variables.

Both sides of the identity

    int_Delta psi(p) prod_e p_e^(alpha_e - 1) dlambda(p)
      = int psi(z_e / z_tail) prod_e z_e^(alpha_e - 1) / prod_x z_x^alpha_x
            * det(Z restricted to U) prod_{e not in B} dz_e

are evaluated on tiny strongly connected graphs. The right side lives on the
positive part of ``{z : z_e0 = 1, div z = 0}`` parameterized by the coordinates
outside ``B = T + e0`` for a spanning tree ``T`` avoiding ``e0``.

``Z`` has ``Z[x, y] = -z_xy`` off the diagonal and ``Z[x, x] = z_x - z_xx``
(total exit mass minus the loop mass at ``x``). Rows and columns of this ``Z``
sum to zero on the divergence-free space, which is what makes the determinant
independent of the deleted vertex; on loop-free graphs it is simply ``z_x``.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np
from scipy import integrate
from scipy.optimize import linprog
from scipy.special import gammaln, roots_jacobi

from .graph import DirectedMultigraph, GraphError, is_strongly_connected_subset

MAX_VERTICES = 3
MAX_EDGES = 6
QUAD_TOL = 1e-4


class UnboundedPolytopeError(GraphError):
    pass


def _check_graph(graph: DirectedMultigraph):
    if graph.n_vertices > MAX_VERTICES or graph.n_edges > MAX_EDGES:
        raise ValueError(f"dimension cap exceeded: at most {MAX_VERTICES} vertices and {MAX_EDGES} edges")
    if not is_strongly_connected_subset(graph, range(graph.n_vertices)):
        raise GraphError("graph must be strongly connected")


def monomial(exponents):
    """``psi(p) = prod_e p_e ** exponents[e]`` (vectorized over leading axes)."""
    m = np.asarray(exponents, dtype=float)

    def psi(p):
        return np.prod(np.asarray(p) ** m, axis=-1)

    psi.exponents = m
    return psi


def dirichlet_monomial_integral(graph: DirectedMultigraph, exponents, alpha=None) -> float:
    """Closed form of the left side for a monomial: product of Dirichlet normalizers."""
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    b = a + np.asarray(exponents, dtype=float)
    bx = graph.vertex_weights(b)[graph.out_degree > 0]
    return float(np.exp(gammaln(b).sum() - gammaln(bx).sum()))


# -- left side ------------------------------------------------------------------------

def _jacobi01(n: int, a: float, b: float):
    """Nodes/weights on [0, 1] for the weight ``t^(a-1) (1-t)^(b-1)``."""
    x, w = roots_jacobi(n, b - 1.0, a - 1.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (a + b - 1.0)


def _lhs_at(graph: DirectedMultigraph, a: np.ndarray, psi, n: int) -> float:
    # Per block, stick-breaking coordinates t_1..t_k with Beta-type weights.
    axes = []  # (edge positions of the block, j, nodes, weights)
    for out in graph.out_edges:
        k = len(out) - 1
        for j in range(k):
            rest = a[out[j + 1:]].sum()
            t, w = _jacobi01(n, a[out[j]], rest)
            axes.append((out, j, t, w))
    if not axes:
        return float(psi(np.ones(graph.n_edges)))
    grids = np.meshgrid(*[ax[2] for ax in axes], indexing="ij")
    wgrid = np.ones_like(grids[0])
    for g_w in np.meshgrid(*[ax[3] for ax in axes], indexing="ij"):
        wgrid = wgrid * g_w
    p = np.ones(grids[0].shape + (graph.n_edges,))
    remaining = {}
    for (out, j, _, _), t in zip(axes, grids):
        key = tuple(out)
        stick = remaining.get(key, np.ones_like(t))
        p[..., out[j]] = stick * t
        remaining[key] = stick * (1.0 - t)
    for key, stick in remaining.items():
        p[..., key[-1]] = stick
    return float(np.sum(wgrid * psi(p)))


def lhs_integral(graph: DirectedMultigraph, psi, alpha=None, resolution: int = 8,
                 max_resolution: int = 256, tol: float = QUAD_TOL):
    """Tensorized Gauss-Jacobi quadrature of the left side, doubling the node count
    until two successive values agree to ``tol`` (relative). Returns ``(value, rel_change)``.
    """
    _check_graph(graph)
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    dims = graph.n_edges - int(np.count_nonzero(graph.out_degree))
    cap = max(resolution, int(round(2e6 ** (1.0 / max(dims, 1)))))
    n = resolution
    prev = _lhs_at(graph, a, psi, n)
    change = math.inf
    while n * 2 <= min(max_resolution, cap):
        n *= 2
        cur = _lhs_at(graph, a, psi, n)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if change <= tol:
            break
    return prev, change


# -- right side -----------------------------------------------------------------------

def spanning_tree_avoiding(graph: DirectedMultigraph, e0: int) -> list:
    """Edge positions of a spanning tree of the undirected shadow that avoids ``e0``."""
    n = graph.n_vertices
    links = [[] for _ in range(n)]
    for pos in range(graph.n_edges):
        t, h = int(graph.tails[pos]), int(graph.heads[pos])
        if pos != e0 and t != h:
            links[t].append((h, pos))
            links[h].append((t, pos))
    seen = {0}
    tree = []
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v, pos in links[u]:
            if v not in seen:
                seen.add(v)
                tree.append(pos)
                queue.append(v)
    if len(seen) != n:
        raise GraphError("no spanning tree avoids e0")
    return tree


def incidence_matrix(graph: DirectedMultigraph, edges, rows) -> np.ndarray:
    """``d div(z)(x) / d z_e`` for ``x`` in ``rows`` and ``e`` in ``edges``."""
    M = np.zeros((len(rows), len(edges)))
    for j, e in enumerate(edges):
        for i, x in enumerate(rows):
            if graph.tails[e] == x:
                M[i, j] += 1.0
            if graph.heads[e] == x:
                M[i, j] -= 1.0
    return M


def occupation_matrix(graph: DirectedMultigraph, z) -> np.ndarray:
    """``Z`` with ``Z[x, y] = -z_xy`` for ``x != y`` and ``Z[x, x] = z_x - z_xx``."""
    z = np.asarray(z, dtype=float)
    n = graph.n_vertices
    Z = np.zeros(z.shape[:-1] + (n, n))
    for pos in range(graph.n_edges):
        t, h = int(graph.tails[pos]), int(graph.heads[pos])
        if t != h:
            Z[..., t, t] += z[..., pos]
            Z[..., t, h] -= z[..., pos]
    return Z


def reduced_determinant(graph: DirectedMultigraph, z, removed: int) -> np.ndarray:
    keep = [i for i in range(graph.n_vertices) if i != removed]
    Z = occupation_matrix(graph, z)
    return np.linalg.det(Z[..., keep, :][..., :, keep])


class _Chart:
    """Affine parameterization of ``{z_e0 = 1, div z = 0}`` by the free coordinates."""

    def __init__(self, graph: DirectedMultigraph, e0: int, removed: int | None):
        self.graph = graph
        self.e0 = e0
        self.tree = spanning_tree_avoiding(graph, e0)
        self.removed = int(graph.tails[e0]) if removed is None else removed
        self.U = [x for x in range(graph.n_vertices) if x != self.removed]
        in_b = set(self.tree) | {e0}
        self.free = [e for e in range(graph.n_edges) if e not in in_b]
        MT = incidence_matrix(graph, self.tree, self.U)
        self.tree_det = float(np.linalg.det(MT)) if self.U else 1.0
        rest = [e0] + self.free
        Mr = incidence_matrix(graph, rest, self.U)
        # z_T = -MT^{-1} Mr z_rest  =  c + D @ z_free
        if self.U:
            sol = -np.linalg.solve(MT, Mr)
        else:
            sol = np.zeros((0, len(rest)))
        self.const = sol[:, 0]
        self.lin = sol[:, 1:]

    def assemble(self, free_vals: np.ndarray) -> np.ndarray:
        free_vals = np.asarray(free_vals, dtype=float)
        z = np.zeros(free_vals.shape[:-1] + (self.graph.n_edges,))
        z[..., self.e0] = 1.0
        z[..., self.free] = free_vals
        if self.tree:
            z[..., self.tree] = self.const + free_vals @ self.lin.T
        return z

    def bounds(self, k: int, fixed: list) -> tuple:
        """Range of free coordinate ``k`` given the values of coordinates ``< k``.

        Linear programs over the remaining coordinates keep every ``z_e >= 0``.
        """
        nf = len(self.free)
        # constraints: tree coords const + lin @ y >= 0, y >= 0 (bounds)
        A_ub = -self.lin if self.tree else np.zeros((0, nf))
        b_ub = self.const if self.tree else np.zeros(0)
        bnds = [(v, v) for v in fixed] + [(0, None)] * (nf - len(fixed))
        lo_hi = []
        for sign in (1.0, -1.0):
            c = np.zeros(nf)
            c[k] = sign
            res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bnds, method="highs")
            if res.status == 3:
                lo_hi.append(math.inf if sign < 0 else -math.inf)
            elif res.status != 0:
                lo_hi.append(None)
            else:
                lo_hi.append(sign * res.fun)
        lo, hi = lo_hi
        if lo is None or hi is None:
            return 0.0, 0.0
        return max(0.0, lo), hi


def rhs_integrand(chart: _Chart, alpha: np.ndarray, psi, free_vals) -> float:
    graph = chart.graph
    z = chart.assemble(np.asarray(free_vals, dtype=float))
    if np.any(z <= 0):
        return 0.0
    zx = graph.vertex_weights(z)
    ax = graph.vertex_weights(alpha)
    p = z / zx[graph.tails]
    log_w = np.sum((alpha - 1.0) * np.log(z)) - np.sum(ax * np.log(zx))
    det = reduced_determinant(graph, z, chart.removed)
    return float(psi(p) * math.exp(log_w) * det)


def rhs_integral(graph: DirectedMultigraph, psi, alpha=None, e0: int | None = None,
                 removed_vertex: int | None = None, tol: float = 1e-9):
    """Adaptive quadrature of the right side over the free coordinates.

    Coordinate ranges come from linear programs; unbounded directions are
    integrated to infinity. Returns ``(value, abserr)``.
    """
    _check_graph(graph)
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    if e0 is None:
        e0 = next(i for i in range(graph.n_edges) if graph.tails[i] != graph.heads[i])
    chart = _Chart(graph, e0, removed_vertex)
    nf = len(chart.free)
    if nf == 0:
        return rhs_integrand(chart, a, psi, np.zeros(0)), 0.0
    if nf > 3:
        raise ValueError("more than three free coordinates")

    # nquad integrates its first argument innermost; our free[0] is outermost.
    def f(*args):
        return rhs_integrand(chart, a, psi, np.array(args[::-1]))

    def make_range(k):
        def rng(*outer):
            return chart.bounds(k, list(outer[::-1]))
        return rng

    ranges = [make_range(k) for k in reversed(range(nf))]
    opts = {"epsabs": 0.0, "epsrel": tol, "limit": 200}
    val, err = integrate.nquad(f, ranges, opts=opts)
    return float(val), float(err)


def verify_identity(graph: DirectedMultigraph, psi, alpha=None, e0: int | None = None,
                    graph_id: str = "graph", psi_name: str = "psi", tol: float = 1e-3) -> dict:
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    lhs, _ = lhs_integral(graph, psi, a)
    rhs, _ = rhs_integral(graph, psi, a, e0)
    rel = abs(lhs - rhs) / abs(lhs)
    return {"graph_id": graph_id, "alpha": [float(v) for v in a], "psi": psi_name,
            "lhs": lhs, "rhs": rhs, "rel_err": rel, "pass": bool(rel < tol)}

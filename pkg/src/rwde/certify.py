"""Monte Carlo certification of exact laws: time reversal and the return-time Green function."""
from __future__ import annotations

import numpy as np

from .chain import green_diagonal_batch, reversed_environment_batch
from .dirichlet import BetaParams, sample_environment_array
from .estimators import SIGNIFICANCE, dominance_test, inverse_beta_cdf, ks_test_beta, ks_test_inverse_beta
from .graph import DirectedMultigraph, GraphError, divergence_vector
from .rng import chunked_map

DIV_TOL = 1e-12

TAG_ENV = 1
TAG_GREEN = 2


def sample_environments(graph: DirectedMultigraph, n: int, seed: int, alpha=None, tag: int = TAG_ENV) -> np.ndarray:
    return chunked_map(lambda r, m: sample_environment_array(graph, r, m, alpha), n, seed, tag)


def sample_green(graph: DirectedMultigraph, x0, n: int, seed: int, alpha=None, tag: int = TAG_GREEN) -> np.ndarray:
    """``n`` i.i.d. draws of ``G(x0, x0)`` under the Dirichlet law."""
    return chunked_map(lambda r, m: green_diagonal_batch(graph, sample_environment_array(graph, r, m, alpha), x0),
                       n, seed, tag)


def certify_reversal(graph: DirectedMultigraph, n: int, seed: int, alpha=None,
                     level: float = SIGNIFICANCE):
    """KS test of every reversed edge against its Dirichlet marginal.

    Needs a strongly connected graph with divergence-free weights. The reversed
    edge of ``e`` leaves ``head(e)``, whose reversed block has total weight
    ``alpha_head``, so its marginal is ``Beta(alpha_e, alpha_head - alpha_e)``.
    Blocks with one edge are deterministic and skipped. Bonferroni over the
    tested edges. Returns ``(reports, passed)``.
    """
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    div = divergence_vector(graph, a)
    if np.any(np.abs(div) > DIV_TOL * max(1.0, a.sum())):
        raise GraphError("reversal law needs divergence-free weights")
    P = sample_environments(graph, n, seed, a)
    R = reversed_environment_batch(graph, P)
    in_w = np.bincount(graph.heads, weights=a, minlength=graph.n_vertices)
    tested = [e for e in range(graph.n_edges) if graph.in_degree[graph.heads[e]] > 1]
    if not tested:
        return [], True
    per = level / len(tested)
    reports = []
    for e in tested:
        b = in_w[graph.heads[e]] - a[e]
        reports.append(ks_test_beta(R[:, e], a[e], b, f"reversed-edge-{int(graph.edge_ids[e])}", per))
    return reports, all(r.passed for r in reports)


def green_law_params(graph: DirectedMultigraph, x0, alpha=None) -> BetaParams:
    """``Beta(div(x0), alpha_x0 - div(x0))`` when the divergence vanishes off ``x0`` and the cemetery."""
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    div = divergence_vector(graph, a)
    i0 = graph.index(x0)
    for i, d in enumerate(div):
        if i not in (i0, graph.cemetery_index) and abs(d) > DIV_TOL * max(1.0, a.sum()):
            raise GraphError(f"divergence {d:.3g} at {graph.vertices[i]!r}: the exact law needs zero")
    ax = graph.vertex_weights(a)[i0]
    return BetaParams(float(div[i0]), float(ax - div[i0]))


def certify_green_law(graph: DirectedMultigraph, x0, n: int, seed: int, alpha=None,
                      level: float = SIGNIFICANCE):
    """KS test of ``G(x0, x0)`` against ``1/W``, ``W ~ Beta(div(x0), alpha_x0 - div(x0))``."""
    params = green_law_params(graph, x0, alpha)
    g = sample_green(graph, x0, n, seed, alpha)
    return ks_test_inverse_beta(g, params, "green-inverse-beta", level), params, g


def certify_green_domination(graph: DirectedMultigraph, x0, n: int, seed: int, gamma: float | None = None,
                             alpha=None, level: float = SIGNIFICANCE):
    """One-sided DKW check that ``G(x0, x0)`` is dominated by ``1/W``, ``W ~ Beta(gamma, alpha_x0 - gamma)``.

    Needs nonnegative divergence off the cemetery and ``0 < gamma <= div(x0)``;
    ``gamma`` defaults to ``div(x0)``.
    """
    a = graph.weights if alpha is None else np.asarray(alpha, dtype=float)
    div = divergence_vector(graph, a)
    cem = graph.cemetery_index
    tol = DIV_TOL * max(1.0, a.sum())
    if any(d < -tol for i, d in enumerate(div) if i != cem):
        raise GraphError("domination needs nonnegative divergence off the cemetery")
    i0 = graph.index(x0)
    gamma = float(div[i0]) if gamma is None else float(gamma)
    if not 0 < gamma <= div[i0] + tol:
        raise GraphError(f"need 0 < gamma <= div(x0) = {div[i0]:.6g}")
    params = BetaParams(gamma, float(graph.vertex_weights(a)[i0] - gamma))
    g = sample_green(graph, x0, n, seed, a)
    cdf = lambda t: inverse_beta_cdf(t, params.a, params.b)  # noqa: E731
    return dominance_test(g, cdf, "green-domination", level), params, g


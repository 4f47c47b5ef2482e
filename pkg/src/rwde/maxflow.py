"""Highest-label push-relabel max-flow with the gap heuristic.

Works on multigraph edge arrays. Capacities may be ints or Fractions (exact
arithmetic, zero tolerance) or floats.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np


def _is_exact(caps) -> bool:
    return all(isinstance(c, (int, Rational)) and not isinstance(c, bool) for c in caps)


def push_relabel(n: int, tails, heads, caps, s: int, t: int, eps: float = 1e-12):
    """Maximum ``s -> t`` flow; returns ``(value, per-edge flow, source side mask)``.

    The source side is the set of vertices reachable from ``s`` in the final
    residual graph, so the edges leaving it form a minimum cut.
    """
    tails = [int(x) for x in tails]
    heads = [int(x) for x in heads]
    caps = list(caps)
    m = len(caps)
    exact = _is_exact(caps)
    zero = Fraction(0) if exact else 0.0
    if exact:
        caps = [Fraction(c) for c in caps]
        tol = zero
    else:
        caps = [float(c) for c in caps]
        tol = eps * max(1.0, max(caps, default=1.0))
    if any(c < 0 for c in caps):
        raise ValueError("capacities must be nonnegative")
    # arc 2e: tail -> head with capacity c_e; arc 2e+1: reverse, residual 0.
    res = []
    to = []
    adj = [[] for _ in range(n)]
    for e in range(m):
        u, v = tails[e], heads[e]
        res += [caps[e], zero]
        to += [v, u]
        if u != v:
            adj[u].append(2 * e)
            adj[v].append(2 * e + 1)

    height = [0] * n
    excess = [zero] * n
    count = [0] * (2 * n + 2)
    height[s] = n
    count[0] = n - 1
    count[n] += 1
    buckets = [set() for _ in range(2 * n + 2)]
    top = 0
    current = [0] * n

    def activate(v):
        nonlocal top
        if v != s and v != t and excess[v] > tol:
            buckets[height[v]].add(v)
            top = max(top, height[v])

    for a in adj[s]:
        if a % 2 == 0 and res[a] > tol:
            d = res[a]
            v = to[a]
            res[a] -= d
            res[a ^ 1] += d
            excess[v] += d
            excess[s] -= d
            activate(v)

    while True:
        while top >= 0 and not buckets[top]:
            top -= 1
        if top < 0:
            break
        u = buckets[top].pop()
        # discharge u
        while excess[u] > tol:
            arcs = adj[u]
            if current[u] >= len(arcs):
                old = height[u]
                new = 2 * n
                for a in arcs:
                    if res[a] > tol:
                        new = min(new, height[to[a]] + 1)
                count[old] -= 1
                height[u] = new
                count[new] += 1
                current[u] = 0
                if count[old] == 0 and 0 < old < n:
                    for v in range(n):
                        if old < height[v] < n and v != s:
                            count[height[v]] -= 1
                            buckets[height[v]].discard(v)
                            height[v] = n + 1
                            count[n + 1] += 1
                            activate(v)
                    if height[u] < n + 1:
                        count[height[u]] -= 1
                        height[u] = n + 1
                        count[n + 1] += 1
                if height[u] >= 2 * n:
                    break
                continue
            a = arcs[current[u]]
            v = to[a]
            if res[a] > tol and height[u] == height[v] + 1:
                d = min(excess[u], res[a])
                res[a] -= d
                res[a ^ 1] += d
                excess[u] -= d
                was_active = excess[v] > tol
                excess[v] += d
                if not was_active:
                    activate(v)
            else:
                current[u] += 1
        if excess[u] > tol:
            activate(u)

    flow = [res[2 * e + 1] for e in range(m)]
    for e in range(m):
        if tails[e] == heads[e]:
            flow[e] = zero
    reach = [False] * n
    reach[s] = True
    stack = [s]
    while stack:
        u = stack.pop()
        for a in adj[u]:
            if res[a] > tol and not reach[to[a]]:
                reach[to[a]] = True
                stack.append(to[a])
    value = excess[t]
    return value, flow, np.array(reach)

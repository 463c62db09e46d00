"""Minimum-weight closure problems solved by max-flow / min-cut.

Given per-element weights ``v`` and a preorder, find an upper set ``A``
minimising ``sum(v[A])``. The classic reduction (Picard 1976): a source edge
``s -> i`` of capacity ``-v_i`` for negative weights, a sink edge ``i -> t`` of
capacity ``v_i`` for positive weights, and an infinite edge ``i -> j`` for each
order relation ``i ⪯ j``. The source side of a minimum cut is a minimiser.

Capacities are floats. Residual capacities at or below ``tol`` count as
saturated, which is what makes the maximal / minimal minimiser extraction
stable under rounding.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .space import Preorder

MAXIMAL = "maximal"
MINIMAL = "minimal"


class _FlowNetwork:
    """Dinic max-flow on an adjacency list with paired reverse edges."""

    def __init__(self, n_nodes: int, tol: float):
        self.n = n_nodes
        self.tol = tol
        self.head: list[list[int]] = [[] for _ in range(n_nodes)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def _levels(self, s: int, t: int):
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                if self.cap[e] > self.tol and level[self.to[e]] < 0:
                    level[self.to[e]] = level[u] + 1
                    queue.append(self.to[e])
        return level if level[t] >= 0 else None

    def _push(self, u, t, f, level, it):
        if u == t:
            return f
        edges = self.head[u]
        while it[u] < len(edges):
            e = edges[it[u]]
            v = self.to[e]
            if self.cap[e] > self.tol and level[v] == level[u] + 1:
                d = self._push(v, t, min(f, self.cap[e]), level, it)
                if d > self.tol:
                    self.cap[e] -= d
                    self.cap[e ^ 1] += d
                    return d
            it[u] += 1
        return 0.0

    def max_flow(self, s: int, t: int) -> float:
        total = 0.0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                f = self._push(s, t, float("inf"), level, it)
                if f <= self.tol:
                    break
                total += f

    def reachable_from(self, s: int) -> np.ndarray:
        seen = np.zeros(self.n, dtype=bool)
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if self.cap[e] > self.tol and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen

    def reaching(self, t: int) -> np.ndarray:
        """Nodes with a residual path *to* ``t``."""
        seen = np.zeros(self.n, dtype=bool)
        seen[t] = True
        queue = deque([t])
        while queue:
            v = queue.popleft()
            for e in self.head[v]:
                # e is v -> u; the paired edge e^1 is u -> v
                u = self.to[e]
                if self.cap[e ^ 1] > self.tol and not seen[u]:
                    seen[u] = True
                    queue.append(u)
        return seen


def _constraint_edges(order: Preorder) -> np.ndarray:
    """Edges enforcing upward closure: Hasse edges between classes plus class cycles."""
    labels, q = order.quotient()
    k = labels.max() + 1
    edges = []
    members = [np.flatnonzero(labels == c) for c in range(k)]
    for c in range(k):
        m = members[c]
        for a, b in zip(m, np.roll(m, -1)):
            if a != b:
                edges.append((a, b))
    for ci, cj in q.covers():
        edges.append((members[ci][0], members[cj][0]))
    return np.array(edges, dtype=int).reshape(-1, 2)


def min_closure(order: Preorder, weights, policy: str = MAXIMAL, tol: float | None = None):
    """Upper set minimising ``sum(weights[A])``.

    ``policy="maximal"`` returns the union of all minimisers, ``"minimal"``
    their intersection; both are minimisers because the objective is modular.
    Returns ``(mask, value)``.
    """
    v = np.asarray(weights, dtype=float).reshape(-1)
    n = order.n
    if v.size != n:
        raise ValueError("weights length does not match the preorder")
    if policy not in (MAXIMAL, MINIMAL):
        raise ValueError(f"unknown policy {policy!r}")
    scale = float(np.abs(v).sum())
    if tol is None:
        tol = 1e-12 * max(scale, 1e-300)
    if scale == 0.0:
        mask = np.ones(n, dtype=bool) if policy == MAXIMAL else np.zeros(n, dtype=bool)
        return mask, 0.0

    s, t = n, n + 1
    net = _FlowNetwork(n + 2, tol)
    inf = 2.0 * scale + 1.0
    for i in range(n):
        if v[i] < 0:
            net.add_edge(s, i, -v[i])
        elif v[i] > 0:
            net.add_edge(i, t, v[i])
    for i, j in _constraint_edges(order):
        net.add_edge(int(i), int(j), inf)
    net.max_flow(s, t)

    if policy == MINIMAL:
        mask = net.reachable_from(s)[:n]
    else:
        mask = ~net.reaching(t)[:n]
    return mask, float(v[mask].sum())

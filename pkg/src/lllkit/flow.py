"""Integral maximum flow (Dinic: blocking flows on shortest-path level graphs)."""

from __future__ import annotations

from collections import deque


class FlowNetwork:
    """Directed network with integer capacities.

    Edges are stored in pairs: edge ``e`` and its residual twin ``e ^ 1``.
    """

    def __init__(self, n: int):
        self.n = n
        self.adj = [[] for _ in range(n)]
        self.to: list = []
        self.cap: list = []
        self.orig: list = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        if cap < 0:
            raise ValueError("capacities must be non-negative")
        e = len(self.to)
        self.to += [v, u]
        self.cap += [int(cap), 0]
        self.orig += [int(cap), 0]
        self.adj[u].append(e)
        self.adj[v].append(e + 1)
        return e

    def flow_on(self, e: int) -> int:
        return self.orig[e] - self.cap[e]

    def _levels(self, s: int, t: int):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.to[e]
                if self.cap[e] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int) -> int:
        if s == t:
            raise ValueError("source and sink coincide")
        total = 0
        to, cap, adj = self.to, self.cap, self.adj
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                path: list = []
                u = s
                while u != t:
                    moved = False
                    while it[u] < len(adj[u]):
                        e = adj[u][it[u]]
                        v = to[e]
                        if cap[e] > 0 and level[v] == level[u] + 1:
                            path.append(e)
                            u = v
                            moved = True
                            break
                        it[u] += 1
                    if not moved:
                        if u == s:
                            break
                        level[u] = -1
                        e = path.pop()
                        u = to[e ^ 1]
                        it[u] += 1
                if u != t:
                    break
                f = min(cap[e] for e in path)
                for e in path:
                    cap[e] -= f
                    cap[e ^ 1] += f
                total += f

    def source_side(self, s: int) -> set:
        """Vertices reachable from ``s`` in the residual network (a minimum cut after max_flow)."""
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.to[e]
                if self.cap[e] > 0 and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen

    def cut_value(self, side: set) -> int:
        total = 0
        for e in range(0, len(self.to), 2):
            u, v = self.to[e ^ 1], self.to[e]
            if u in side and v not in side:
                total += self.orig[e]
        return total

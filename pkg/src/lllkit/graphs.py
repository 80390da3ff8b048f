"""Simple undirected graphs, the edge-list format and a few generators."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Simple graph on vertices ``0..n-1``; edges are normalised ``(u, v)`` with u < v."""

    n: int
    edges: tuple
    adj: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        norm = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"parallel edge {e}")
            seen.add(e)
            norm.append(e)
        adj = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(norm):
            adj[u].append((v, i))
            adj[v].append((u, i))
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "adj", tuple(tuple(a) for a in adj))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def other(self, e: int, v: int) -> int:
        u, w = self.edges[e]
        return w if u == v else u

    def neighbors(self, v: int) -> list:
        return [w for w, _ in self.adj[v]]


def parse_edge_list(text: str) -> Graph:
    """``n m`` header then ``m`` lines ``u v`` (0-based). Blank and ``#`` lines are skipped."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty edge list")
    try:
        n, m = (int(t) for t in rows[0])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
    except ValueError:
        raise ValueError("edge list lines must hold exactly two integers") from None
    if len(edges) != m:
        raise ValueError(f"header announces {m} edges, found {len(edges)}")
    return Graph(n, tuple(edges))


def to_edge_list(g: Graph) -> str:
    return "\n".join([f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges]) + "\n"


def girth(g: Graph) -> float:
    """Length of a shortest cycle (``math.inf`` for forests)."""
    best = math.inf
    for s in range(g.n):
        dist = {s: 0}
        parent_edge = {s: -1}
        q = deque([s])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for w, e in g.adj[u]:
                if e == parent_edge[u]:
                    continue
                if w in dist:
                    best = min(best, dist[u] + dist[w] + 1)
                else:
                    dist[w] = dist[u] + 1
                    parent_edge[w] = e
                    q.append(w)
    return best


# -------------------------------------------------------------- generators

def path_graph(n_vertices: int) -> Graph:
    return Graph(n_vertices, tuple((i, i + 1) for i in range(n_vertices - 1)))


def cycle_graph(n_vertices: int) -> Graph:
    return Graph(n_vertices, tuple((i, (i + 1) % n_vertices) for i in range(n_vertices)))


def complete_graph(n_vertices: int) -> Graph:
    return Graph(n_vertices, tuple((i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)))


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def petersen_graph() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


def random_bounded_degree_graph(n: int, max_degree: int, rng: np.random.Generator,
                                attempts_per_vertex: int | None = None) -> Graph:
    """Random simple graph with every degree at most ``max_degree``.

    Random vertex pairs are proposed and kept when both endpoints still have
    room; this fills most vertices close to the cap.
    """
    deg = [0] * n
    seen: set = set()
    edges = []
    tries = attempts_per_vertex if attempts_per_vertex is not None else 4 * max_degree
    pairs = rng.integers(0, n, size=(n * tries, 2)).tolist()
    for u, v in pairs:
        if u == v or deg[u] >= max_degree or deg[v] >= max_degree:
            continue
        e = (min(u, v), max(u, v))
        if e in seen:
            continue
        seen.add(e)
        edges.append(e)
        deg[u] += 1
        deg[v] += 1
    return Graph(n, tuple(edges))


def gnm_graph(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Uniform simple graph with exactly ``m`` edges."""
    total = n * (n - 1) // 2
    if m > total:
        raise ValueError("too many edges requested")
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pick = rng.choice(total, size=m, replace=False)
    return Graph(n, tuple(all_pairs[int(i)] for i in sorted(pick)))


def all_graphs(n: int, max_edges: int) -> Iterable[Graph]:
    """Every labelled simple graph on ``n`` vertices with at most ``max_edges`` edges."""
    from itertools import combinations
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for r in range(max_edges + 1):
        for es in combinations(pairs, r):
            yield Graph(n, es)


def coloring_lines(coloring: Sequence[int]) -> str:
    return "".join(f"{i} {c}\n" for i, c in enumerate(coloring))

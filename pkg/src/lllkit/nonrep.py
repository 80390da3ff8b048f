"""Non-repetitive edge colouring.

A path is repetitive when its colour sequence has the form ``ww``. The
resampling loop only watches paths of length at most ``2L`` (the core); longer
paths are left to chance and can be checked with the exponential verifier on
small graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Violation, implicit_cap, mt_run_implicit
from .errors import GraphTooLarge
from .graphs import Graph
from .acyclic import ColoringResult

BASE_CONSTANT = 2.0 * math.exp(16) + 1.0
CORE_LENGTH_CONSTANT = 3.0
FULL_VERIFY_LIMIT = 24


def is_squarefree(seq: Sequence) -> bool:
    """No block is immediately followed by an identical block."""
    seq = list(seq)
    n = len(seq)
    for h in range(1, n // 2 + 1):
        run = 0
        # Count consecutive positions where seq[i] == seq[i + h].
        for i in range(n - h):
            if seq[i] == seq[i + h]:
                run += 1
                if run >= h:
                    return False
            else:
                run = 0
    return True


@dataclass(frozen=True)
class NonRepConfig:
    eps_prime: float
    max_degree: int
    base_palette: int
    palette: int
    L: int
    overridden: bool = False

    def x_value(self, i: int) -> float:
        """Budget x-value ``1/(2^i Δ^{2i})`` for a path of length 2i."""
        return 1.0 / (2.0 ** i * float(self.max_degree) ** (2 * i))


def base_palette(max_degree: int) -> int:
    """``⌈(2e^16+1)Δ²⌉``."""
    return math.ceil(BASE_CONSTANT * max_degree * max_degree)


def core_length(edge_count: int, eps_prime: float, max_degree: int,
                constant: float = CORE_LENGTH_CONSTANT) -> int:
    """``L = ⌈3·log2(n_e)/(ε′·max(1, log2 Δ))⌉``, at least 1."""
    if edge_count <= 1:
        return 1
    lg_d = max(1.0, math.log2(max_degree)) if max_degree > 0 else 1.0
    return max(1, math.ceil(constant * math.log2(edge_count) / (eps_prime * lg_d)))


def nonrep_config(g: Graph, eps_prime: float, palette_override: int | None = None,
                  L: int | None = None) -> NonRepConfig:
    if not 0.0 < eps_prime < 1.0:
        raise ValueError("eps_prime must lie in (0, 1)")
    D = g.max_degree
    if palette_override is None and D < 2:
        raise ValueError("maximum degree below 2 needs an explicit palette")
    C = base_palette(max(D, 1))
    if palette_override is not None:
        if palette_override < 1:
            raise ValueError("palette must be positive")
        Cp = int(palette_override)
    else:
        # Integer ceiling of C^{1/(1-eps')}, corrected for float error.
        Cp = math.ceil(math.exp(math.log(C) / (1.0 - eps_prime)))
    if L is None:
        L = core_length(g.m, eps_prime, D)
    if L < 1:
        raise ValueError("L must be at least 1")
    return NonRepConfig(eps_prime, D, C, Cp, int(L), palette_override is not None)


def dependency_bound(i: int, j: int, max_degree: int) -> int:
    """Paths of length 2j meeting a fixed path of length 2i: at most ``4ijΔ^{2j}``."""
    return 4 * i * j * max_degree ** (2 * j)


def lll_margin(max_degree: int, palette: int, i: int, j_max: int) -> float:
    """``log(x_i ∏_j (1−x_j)^{4ijΔ^{2j}}) − log(C^{-i})`` with x_j = 1/(2^jΔ^{2j}).

    Non-negative means the condition holds for paths of length 2i when
    neighbours up to length ``2·j_max`` are counted.
    """
    D = float(max_degree)
    lhs = -i * math.log(2.0) - 2 * i * math.log(D)
    for j in range(1, j_max + 1):
        xj = 1.0 / (2.0 ** j * D ** (2 * j))
        lhs += dependency_bound(i, j, max_degree) * math.log1p(-xj)
    return lhs + i * math.log(palette)


# ------------------------------------------------------------ path search

def _repeated_color_adjacency(g: Graph, coloring: Sequence[int]):
    """Adjacency restricted to edges whose colour occurs at least twice.

    A square path uses every one of its colours at least twice, so edges
    with a unique colour can be dropped.
    """
    counts: dict = {}
    for c in coloring:
        counts[c] = counts.get(c, 0) + 1
    return [[(w, e) for w, e in g.adj[v] if counts[coloring[e]] > 1] for v in range(g.n)]


def find_repetitive_path(g: Graph, coloring: Sequence[int], L: int) -> tuple | None:
    """First simple path of length 2i ≤ 2L whose colours read ``ww``.

    Returns the path as a tuple of edge ids in walk order, or None. Start
    vertices are tried in order and edges in adjacency order.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if len(coloring) != g.m:
        raise ValueError("colouring length does not match the edge count")
    adj = _repeated_color_adjacency(g, coloring)
    max_len = 2 * L
    for s in range(g.n):
        if not adj[s]:
            continue
        on_path = [False] * g.n
        on_path[s] = True
        edges: list = []
        cols: list = []
        # Iterative DFS: stack of (vertex, next adjacency index).
        stack = [(s, 0)]
        while stack:
            v, idx = stack[-1]
            if idx >= len(adj[v]) or len(edges) >= max_len:
                stack.pop()
                if edges:
                    edges.pop()
                    cols.pop()
                on_path[v] = False if v != s else on_path[v]
                continue
            stack[-1] = (v, idx + 1)
            w, e = adj[v][idx]
            if on_path[w]:
                continue
            edges.append(e)
            cols.append(coloring[e])
            ln = len(edges)
            if ln % 2 == 0 and cols[: ln // 2] == cols[ln // 2:]:
                return tuple(edges)
            on_path[w] = True
            stack.append((w, 0))
    return None


def repetitive_paths(g: Graph, coloring: Sequence[int], L: int) -> list:
    """All repetitive paths of length ≤ 2L, one representative per reversal pair."""
    out = set()
    max_len = 2 * L

    def dfs(v, on_path, edges, cols):
        ln = len(edges)
        if ln and ln % 2 == 0 and cols[: ln // 2] == cols[ln // 2:]:
            key = tuple(edges)
            out.add(min(key, key[::-1]))
        if ln >= max_len:
            return
        for w, e in g.adj[v]:
            if w in on_path:
                continue
            on_path.add(w)
            edges.append(e)
            cols.append(coloring[e])
            dfs(w, on_path, edges, cols)
            edges.pop()
            cols.pop()
            on_path.discard(w)

    for s in range(g.n):
        dfs(s, {s}, [], [])
    return sorted(out)


def verify_nonrepetitive_full(g: Graph, coloring: Sequence[int],
                              max_edges: int = FULL_VERIFY_LIMIT) -> bool:
    """Check every simple path for squarefreeness (exponential; small graphs only)."""
    if g.m > max_edges:
        raise GraphTooLarge(f"{g.m} edges exceed the full-verification limit {max_edges}")

    def dfs(v, on_path, cols):
        if not is_squarefree(cols):
            return False
        for w, e in g.adj[v]:
            if w in on_path:
                continue
            on_path.add(w)
            cols.append(coloring[e])
            ok = dfs(w, on_path, cols)
            cols.pop()
            on_path.discard(w)
            if not ok:
                return False
        return True

    return all(dfs(s, {s}, []) for s in range(g.n))


# ------------------------------------------------------------------ solver

def draw_colors(rng: np.random.Generator, palette: int, count: int) -> list:
    """Uniform colours from ``range(palette)``; arbitrary-size palettes via rejection."""
    if palette <= (1 << 62):
        return rng.integers(0, palette, size=count).tolist()
    bits = palette.bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    out = []
    while len(out) < count:
        val = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if val < palette:
            out.append(val)
    return out


class _PathSystem:
    def __init__(self, g: Graph, palette: int, L: int):
        self.g = g
        self.palette = palette
        self.L = L

    def sample(self, rng):
        return draw_colors(rng, self.palette, self.g.m)

    def find_violated(self, state):
        path = find_repetitive_path(self.g, state, self.L)
        if path is None:
            return None
        key = min(path, path[::-1])
        return Violation(key, tuple(path))

    def redraw(self, state, vbl, rng):
        for e, c in zip(vbl, draw_colors(rng, self.palette, len(vbl))):
            state[e] = c


def mt_nonrep(g: Graph, eps_prime: float, rng: np.random.Generator, palette_override: int | None = None,
              *, L: int | None = None, cap: int | None = None, cap_factor: float = 50.0,
              seed: int | None = None) -> ColoringResult:
    """Colouring with no repetitive path of length ≤ 2L."""
    cfg = nonrep_config(g, eps_prime, palette_override, L)
    if cap is None:
        D = max(cfg.max_degree, 2)
        log_inv_delta = (cfg.L + 1) * math.log2(2.0 * D * D) + 1.0
        cap = implicit_cap(max(g.m, 1), log_inv_delta, 1.0 / (2.0 * D * D), eps=eps_prime,
                           cap_factor=cap_factor)
    if g.m == 0:
        raise ValueError("graph has no edges")
    report, log = mt_run_implicit(_PathSystem(g, cfg.palette, cfg.L), cap, rng, seed=seed)
    info = {"L": cfg.L, "base_palette": cfg.base_palette, "eps_prime": eps_prime,
            "overridden": cfg.overridden}
    return ColoringResult(list(report.assignment), cfg.palette, report, log, info)

"""Acyclic edge colouring by resampling.

A colouring is acyclic when it is proper and every cycle sees at least three
colours. Two algorithms are provided:

* :func:`mt_acyclic_16` draws from ``16Δ`` colours and recolours the edges of
  whatever violation the verifier reports;
* :func:`mt_acyclic_girth` starts from a proper ``Δ+1`` colouring and moves
  random edges to one extra colour, resampling those switch coins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ResampleLog, RunReport, Violation, implicit_cap, mt_run_implicit
from .errors import GirthTooSmall
from .graphs import Graph, girth

GIRTH_COEFF = 2.0


@dataclass(frozen=True)
class AcyclicViolation:
    """``kind`` is ``"incident"`` (two edges at ``vertex``) or ``"cycle"``.

    For a cycle, ``edges`` is the closed walk in order and ``colors`` the two
    alternating colours.
    """

    kind: str
    edges: tuple
    colors: tuple
    vertex: int | None = None


def _color_maps(g: Graph, coloring: Sequence[int]):
    """Per vertex ``{colour: edge}``; returns the first clash found, if any."""
    at = []
    for v in range(g.n):
        seen: dict = {}
        for _, e in g.adj[v]:
            c = coloring[e]
            if c in seen:
                f = seen[c]
                return None, AcyclicViolation("incident", (min(e, f), max(e, f)), (c,), v)
            seen[c] = e
        at.append(seen)
    return at, None


def _pair_cycles(g: Graph, at, a: int, b: int, both: Sequence[int], first_only: bool):
    """Cycles of the proper two-colour subgraph on colours ``a`` and ``b``."""
    found = []
    visited = set()
    for v in both:
        if v in visited:
            continue
        cur, col, walk = v, a, []
        visited.add(v)
        while True:
            e = at[cur].get(col)
            if e is None:
                break
            walk.append(e)
            cur = g.other(e, cur)
            col = b if col == a else a
            if cur == v:
                found.append(AcyclicViolation("cycle", tuple(walk), (a, b)))
                if first_only:
                    return found
                break
            visited.add(cur)
    return found


def _sorted_pairs(at):
    pairs = set()
    by_color: dict = {}
    for v, cmap in enumerate(at):
        cs = sorted(cmap)
        for c in cs:
            by_color.setdefault(c, []).append(v)
        for i, c1 in enumerate(cs):
            for c2 in cs[i + 1:]:
                pairs.add((c1, c2))
    return sorted(pairs), {c: set(vs) for c, vs in by_color.items()}


def find_acyclic_violation(g: Graph, coloring: Sequence[int]) -> AcyclicViolation | None:
    """First violation: incident pairs by vertex order, then colour pairs lexicographically."""
    if len(coloring) != g.m:
        raise ValueError("colouring length does not match the edge count")
    at, clash = _color_maps(g, coloring)
    if clash is not None:
        return clash
    pairs, by_color = _sorted_pairs(at)
    for a, b in pairs:
        both = sorted(by_color[a] & by_color[b])
        if len(both) < 4:
            continue
        hit = _pair_cycles(g, at, a, b, both, first_only=True)
        if hit:
            return hit[0]
    return None


def bichromatic_cycles(g: Graph, coloring: Sequence[int]) -> list:
    """Every two-coloured cycle of a proper colouring."""
    at, clash = _color_maps(g, coloring)
    if clash is not None:
        raise ValueError("colouring is not proper")
    pairs, by_color = _sorted_pairs(at)
    out = []
    for a, b in pairs:
        both = sorted(by_color[a] & by_color[b])
        if len(both) >= 4:
            out.extend(_pair_cycles(g, at, a, b, both, first_only=False))
    return out


def is_proper(g: Graph, coloring: Sequence[int]) -> bool:
    return _color_maps(g, coloring)[1] is None


# ------------------------------------------------------------------- Vizing

def vizing_color(g: Graph) -> list:
    """Proper edge colouring with at most Δ+1 colours (fan rotation and path flips)."""
    color = [-1] * g.m
    at = [dict() for _ in range(g.n)]
    palette = g.max_degree + 1

    def set_color(e, c):
        u, v = g.edges[e]
        old = color[e]
        if old >= 0:
            del at[u][old]
            del at[v][old]
        color[e] = c
        if c >= 0:
            at[u][c] = e
            at[v][c] = e

    def first_free(v):
        for c in range(palette):
            if c not in at[v]:
                return c
        raise AssertionError("no free colour at a vertex")

    for e0 in range(g.m):
        u, v0 = g.edges[e0]
        # Maximal fan at u starting from the uncoloured edge.
        fan, fan_edges, in_fan = [v0], [e0], {v0}
        grown = True
        while grown:
            grown = False
            last = fan[-1]
            for c, f in sorted(at[u].items()):
                w = g.other(f, u)
                if w not in in_fan and c not in at[last]:
                    fan.append(w)
                    fan_edges.append(f)
                    in_fan.add(w)
                    grown = True
                    break
        c = first_free(u)
        d = first_free(fan[-1])
        if c != d:
            # Flip the c/d path starting at u (it begins with colour d).
            path, cur, col = [], u, d
            while col in at[cur]:
                f = at[cur][col]
                path.append(f)
                cur = g.other(f, cur)
                col = c if col == d else d
            old = [color[f] for f in path]
            for f in path:
                set_color(f, -1)
            for f, oc in zip(path, old):
                set_color(f, c if oc == d else d)
        # Shortest fan prefix ending at a vertex where d is free.
        stop = None
        for i, w in enumerate(fan):
            if i > 0 and color[fan_edges[i]] in at[fan[i - 1]]:
                break
            if d not in at[w]:
                stop = i
                break
        if stop is None:
            raise AssertionError("fan rotation failed")
        shifted = [color[fan_edges[j + 1]] for j in range(stop)]
        for j in range(1, stop + 1):
            set_color(fan_edges[j], -1)
        for j in range(stop):
            set_color(fan_edges[j], shifted[j])
        set_color(fan_edges[stop], d)
    return color


# ----------------------------------------------------------------- 16Δ run

@dataclass
class ColoringResult:
    coloring: list
    palette: int
    report: RunReport
    log: ResampleLog
    info: dict = field(default_factory=dict)

    @property
    def colors_used(self) -> int:
        return len(set(self.coloring))


class _RecolorSystem:
    def __init__(self, g: Graph, palette: int):
        self.g = g
        self.palette = palette

    def sample(self, rng):
        return rng.integers(0, self.palette, size=self.g.m).tolist()

    def find_violated(self, state):
        v = find_acyclic_violation(self.g, state)
        if v is None:
            return None
        return Violation((v.kind, v.edges), v.edges)

    def redraw(self, state, vbl, rng):
        for e, c in zip(vbl, rng.integers(0, self.palette, size=len(vbl)).tolist()):
            state[e] = c


def acyclic_palette(max_degree: int) -> int:
    return max(16, 16 * max_degree)


def mt_acyclic_16(g: Graph, rng: np.random.Generator, *, palette: int | None = None,
                  cap: int | None = None, cap_factor: float = 50.0, seed: int | None = None) -> ColoringResult:
    """Acyclic edge colouring from ``16Δ`` colours.

    Budgeting uses x = 2/C for incident pairs and (2/C)^{2(k−1)} for 2k-cycles,
    so ``log2(1/δ)`` is at most about ``n·log2(C/2)``.
    """
    D = g.max_degree
    if D < 1:
        raise ValueError("graph has no edges")
    C = palette if palette is not None else acyclic_palette(D)
    if cap is None:
        log_inv_delta = max(g.n, 2) * math.log2(C / 2.0) + 2.0
        cap = implicit_cap(g.m, log_inv_delta, 2.0 / C, cap_factor=cap_factor)
    report, log = mt_run_implicit(_RecolorSystem(g, C), cap, rng, seed=seed)
    return ColoringResult(list(report.assignment), C, report, log, {"x_incident": 2.0 / C})


def cycle_x(k: int, palette: int) -> float:
    """Budget x-value of a bichromatic 2k-cycle event."""
    return (2.0 / palette) ** (2 * (k - 1))


# -------------------------------------------------------------- girth run

def girth_requirement(max_degree: int, coeff: float = GIRTH_COEFF) -> float:
    return coeff * max_degree * math.log2(max_degree + 1)


class _SwitchSystem:
    """Coins decide which stage-1 edges move to the extra colour Δ+1."""

    def __init__(self, g: Graph, base: list, extra: int, p: float):
        self.g = g
        self.base = base
        self.extra = extra
        self.p = p

    def colors(self, coins):
        return [self.extra if s else c for s, c in zip(coins, self.base)]

    def sample(self, rng):
        return [int(u < self.p) for u in rng.random(self.g.m).tolist()]

    def classify(self, coins):
        v = find_acyclic_violation(self.g, self.colors(coins))
        if v is None:
            return None, None
        if v.kind == "incident":
            if not all(coins[e] for e in v.edges):
                raise AssertionError("stage-1 colouring was not proper")
            return "type1", v
        if self.extra in v.colors:
            return "type3", v
        return "type2", v

    def find_violated(self, coins):
        kind, v = self.classify(coins)
        if v is None:
            return None
        return Violation((kind, v.edges), v.edges)

    def redraw(self, coins, vbl, rng):
        for e, u in zip(vbl, rng.random(len(vbl)).tolist()):
            coins[e] = int(u < self.p)


def girth_event_x(kind: str, max_degree: int, k: int = 0) -> float:
    D = max_degree
    if kind == "type1":
        return 1.0 / (512.0 * D * D)
    if kind == "type2":
        return 1.0 / (128.0 * D * D)
    return 1.0 / ((2.0 * D) ** k)


def mt_acyclic_girth(g: Graph, rng: np.random.Generator, *, coeff: float = GIRTH_COEFF,
                     cap: int | None = None, cap_factor: float = 50.0,
                     seed: int | None = None, stage1: Sequence[int] | None = None) -> ColoringResult:
    """Acyclic colouring with Δ+2 colours for graphs of girth at least ``coeff·Δ·log2(Δ+1)``.

    Violations are found with the exact verifier and sorted into the three
    event types by colour: two switched incident edges (type 1), a stage-1
    bichromatic cycle with no switched edge (type 2), a cycle using the
    extra colour (type 3). The coins of the violation's edges are redrawn.

    ``stage1`` replaces the Vizing colouring with a given proper colouring
    from colours ``0..Δ``.
    """
    D = g.max_degree
    if D < 1:
        raise ValueError("graph has no edges")
    gi = girth(g)
    need = girth_requirement(D, coeff)
    if gi < need:
        raise GirthTooSmall(f"girth {gi} below required {need:.2f}")
    if stage1 is None:
        base = vizing_color(g)
    else:
        base = [int(c) for c in stage1]
        if len(base) != g.m or not is_proper(g, base) or any(not 0 <= c <= D for c in base):
            raise ValueError("stage1 must be a proper colouring with colours 0..Δ")
    p = 1.0 / (32.0 * D)
    system = _SwitchSystem(g, base, D + 1, p)
    if cap is None:
        x_min_cycle = g.n * math.log2(2.0 * D)
        log_inv_delta = x_min_cycle + math.log2(512.0 * D * D) + 2.0
        cap = implicit_cap(g.m, log_inv_delta, 1.0 / (128.0 * D * D), cap_factor=cap_factor)
    report, log = mt_run_implicit(system, cap, rng, seed=seed)
    coins = report.assignment
    kinds: dict = {}
    for key in log.steps:
        kinds[key[0]] = kinds.get(key[0], 0) + 1
    info = {
        "stage1": base,
        "switched": sum(coins),
        "switch_prob": p,
        "girth": gi,
        "girth_required": need,
        "events_by_type": kinds,
        "stage2_bichromatic": len(bichromatic_cycles(g, base)),
    }
    return ColoringResult(system.colors(coins), D + 2, report, log, info)

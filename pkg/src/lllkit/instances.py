"""Explicit (table-defined) event instances: JSON format and small random generators.

JSON layout::

    {"variables": [[w0, w1], ...]   # or "n": 3 for fair bits
     "events":    [{"vbl": [0, 1], "bad": [[1, 1]]}, ...],
     "x":         [0.5, 0.5]        # optional; default 1/(d+1)
     "eps":       0.0,              # optional
     "core":      [0, 1],           # optional; default all events
     "monitors":  [{"vbl": [0], "bad": [[1]]}, ...]}

``bad`` rows list the value tuples (aligned with ``vbl``) on which the event
holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BadEvent, EventSet, LLLParams, VariableSpace, build_dependency_graph, check_lll


@dataclass
class ExplicitInstance:
    space: VariableSpace
    events: EventSet
    x: tuple | None = None
    eps: float = 0.0
    core: list | None = None
    monitors: list | None = None

    def __post_init__(self):
        self.graph = build_dependency_graph(self.space, self.events)
        if self.monitors is None:
            self.monitors = []

    def params(self, cap_factor: float = 50.0) -> LLLParams:
        if self.x is None:
            return LLLParams.symmetric(self.graph, eps=self.eps, cap_factor=cap_factor)
        return LLLParams.build(self.graph, self.x, eps=self.eps, cap_factor=cap_factor)

    def core_ids(self) -> list:
        return list(range(len(self.events))) if self.core is None else sorted(self.core)

    def to_dict(self) -> dict:
        def table(ev):
            return {"vbl": list(ev.vbl), "bad": sorted(list(t) for t in ev.table)}

        out = {"variables": [list(w) for w in self.space.weights],
               "events": [table(ev) for ev in self.events]}
        if self.x is not None:
            out["x"] = list(self.x)
        if self.eps:
            out["eps"] = self.eps
        if self.core is not None:
            out["core"] = list(self.core)
        if self.monitors:
            out["monitors"] = [table(b) for b in self.monitors]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExplicitInstance":
        if "variables" in data:
            space = VariableSpace(tuple(tuple(w) for w in data["variables"]))
        elif "n" in data:
            space = VariableSpace.uniform(int(data["n"]))
        else:
            raise ValueError("instance needs 'variables' or 'n'")
        evs = data.get("events")
        if not isinstance(evs, list):
            raise ValueError("instance needs an 'events' list")
        events = EventSet(BadEvent.from_table(i, e["vbl"], e["bad"], space) for i, e in enumerate(evs))
        monitors = [BadEvent.from_table(i, b["vbl"], b["bad"], space)
                    for i, b in enumerate(data.get("monitors", []))]
        x = tuple(data["x"]) if "x" in data else None
        core = list(data["core"]) if "core" in data else None
        return cls(space, events, x, float(data.get("eps", 0.0)), core, monitors)


def fixed_point_x(graph, probs: Sequence[float], inflate: float = 1.05, iters: int = 500) -> tuple | None:
    """Smallest x with ``inflate·P(A) ≤ x(A)∏(1−x(B))``, or None when it blows up.

    Iterates ``x ← inflate·P/∏(1−x)`` from ``x = inflate·P``; the sequence
    increases and converges exactly when such an x exists.
    """
    target = [inflate * p for p in probs]
    x = list(target)
    for _ in range(iters):
        nxt = []
        for a in range(graph.m):
            s = math.prod(1.0 - x[b] for b in graph.adjacency[a])
            if s <= 0:
                return None
            nxt.append(target[a] / s)
        if any(v >= 0.999 for v in nxt):
            return None
        if max(abs(u - v) for u, v in zip(nxt, x)) < 1e-15:
            x = nxt
            break
        x = nxt
    # A final small bump restores the inequality lost to the stopping tolerance.
    return tuple(min(v * (1.0 + 1e-9), 0.999) for v in x)


def random_table_event(i: int, space: VariableSpace, rng: np.random.Generator, max_vbl: int,
                       bad_fraction: float, min_vbl: int = 1) -> BadEvent:
    size = int(rng.integers(min_vbl, max_vbl + 1))
    vbl = sorted(rng.choice(space.n, size=size, replace=False).tolist())
    combos = [()]
    for v in vbl:
        combos = [c + (val,) for c in combos for val in range(space.domain_sizes[v])]
    most = max(1, min(len(combos) - 1, int(bad_fraction * len(combos))))
    nbad = int(rng.integers(1, most + 1))
    pick = rng.choice(len(combos), size=nbad, replace=False)
    return BadEvent.from_table(i, vbl, [combos[j] for j in pick], space)


def random_instance(rng: np.random.Generator, n_vars: int = 12, m: int = 6, max_vbl: int = 4,
                    bad_fraction: float = 0.15, min_vbl: int = 3, monitors: int = 5, biased: bool = True,
                    max_tries: int = 200) -> ExplicitInstance:
    """Random binary-variable instance satisfying the local lemma condition.

    Events hold on random subsets of their footprint's value tuples; x comes
    from :func:`fixed_point_x`. Rejection sampling repeats until feasible.
    """
    for _ in range(max_tries):
        if biased:
            ps = rng.uniform(0.2, 0.8, size=n_vars).tolist()
            space = VariableSpace(tuple((1.0 - p, p) for p in ps))
        else:
            space = VariableSpace.uniform(n_vars)
        events = EventSet(random_table_event(i, space, rng, max_vbl, bad_fraction, min_vbl)
                          for i in range(m))
        graph = build_dependency_graph(space, events)
        x = fixed_point_x(graph, [ev.prob for ev in events])
        if x is None:
            continue
        params = LLLParams.build(graph, x)
        if not check_lll(events, graph, params).ok:
            continue
        mons = [random_table_event(j, space, rng, max_vbl, 0.5) for j in range(monitors)]
        return ExplicitInstance(space, events, x, 0.0, None, mons)
    raise RuntimeError("no feasible instance found; lower bad_fraction or m")


def clique_instance(sizes: Sequence[int], x_values: Sequence[float]) -> ExplicitInstance:
    """One variable per clique; event ``i`` of a clique is "variable = i".

    Value weights are set to ``x∏(1−x)`` so every event meets the local
    lemma condition with equality (up to float rounding). Produces
    per-variable sums close to the bound ``log2(1/δ)``.
    """
    weights = []
    vbl_bad = []
    xs = []
    for var, (s, x) in enumerate(zip(sizes, x_values)):
        p = x * (1.0 - x) ** (s - 1) * (1.0 - 1e-12)
        if s * p >= 1.0:
            raise ValueError("clique weights exceed 1")
        weights.append(tuple([p] * s + [1.0 - s * p]))
        for i in range(s):
            vbl_bad.append((var, i))
            xs.append(x)
    space = VariableSpace(tuple(weights))
    events = EventSet(BadEvent.from_table(j, [v], [(i,)], space) for j, (v, i) in enumerate(vbl_bad))
    return ExplicitInstance(space, events, tuple(xs))


def tight_clique_x(s: int) -> float:
    """x maximising ``s·x / log2(1/(x(1−x)^{s−1}))`` on a grid (the tightest clique)."""
    best, arg = -1.0, 0.5
    for j in range(1, 1000):
        x = j / 1000.0
        d = x * (1.0 - x) ** (s - 1)
        r = s * x / math.log2(1.0 / min(d, 0.25))
        if r > best:
            best, arg = r, x
    return arg

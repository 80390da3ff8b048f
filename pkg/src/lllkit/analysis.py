"""Witness trees, the exact conditional oracle and output-distribution checks."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (BadEvent, DependencyGraph, LLLParams, VariableSpace, build_dependency_graph,
                   mt_core_run)
from .errors import CapExceeded, DepthCapExceeded, NoGoodAssignment, SpaceTooLarge
from .rng import derive_rng

ORACLE_LIMIT = 1 << 24
GW_DEPTH_CAP = 64
MONITOR_ROOT = "B"


# ------------------------------------------------------------ witness trees

@dataclass
class WitnessNode:
    label: object
    children: list = field(default_factory=list)


@dataclass
class WitnessTree:
    root: WitnessNode

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    @property
    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def depth(self) -> int:
        best = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in node.children)
        return best

    def labels(self) -> list:
        return [n.label for n in self.nodes()]

    def canonical(self) -> tuple:
        """Order-independent shape used to compare trees."""
        def canon(node):
            return (str(node.label), tuple(sorted(canon(c) for c in node.children)))
        return canon(self.root)


def build_witness_tree(log, t: int, graph: DependencyGraph) -> WitnessTree:
    """Tree for step ``t`` of a log by the backward deepest-eligible-node scan."""
    steps = log.steps if hasattr(log, "steps") else list(log)
    if not 0 <= t < len(steps):
        raise IndexError(f"step {t} outside a log of length {len(steps)}")
    root = WitnessNode(steps[t])
    placed = [(root, 0)]
    for s in range(t - 1, -1, -1):
        _attach(placed, steps[s], set(graph.closed(steps[s])))
    return WitnessTree(root)


def build_monitor_tree(log, t_end: int, graph: DependencyGraph, monitor_vbl: Sequence[int],
                       exclude: int | None = None) -> WitnessTree:
    """Tree explaining that an external event B holds after step ``t_end - 1``.

    The root is labelled ``"B"``. Its eligible children are the logged
    events sharing a variable with B (never B itself).
    """
    steps = log.steps if hasattr(log, "steps") else list(log)
    root_nb = set(graph.neighbors_of_footprint(monitor_vbl, exclude=exclude))
    root = WitnessNode(MONITOR_ROOT)
    placed = [(root, 0)]
    for s in range(t_end - 1, -1, -1):
        lab = steps[s]
        eligible = set(graph.closed(lab))
        best = None
        for node, d in placed:
            ok = (lab in root_nb) if node is root else (node.label in eligible)
            if ok and (best is None or d > best[1]):
                best = (node, d)
        if best is not None:
            child = WitnessNode(lab)
            best[0].children.append(child)
            placed.append((child, best[1] + 1))
    return WitnessTree(root)


def _attach(placed, lab, eligible):
    best = None
    for node, d in placed:
        if node.label in eligible and (best is None or d > best[1]):
            best = (node, d)
    if best is not None:
        child = WitnessNode(lab)
        best[0].children.append(child)
        placed.append((child, best[1] + 1))


def is_proper(tree: WitnessTree, graph: DependencyGraph, monitor_vbl=None,
              core: Sequence[int] | None = None, exclude: int | None = None) -> bool:
    """Children of each node have distinct labels from ``Γ(σ(u)) ∪ {σ(u)}``."""
    core_set = None if core is None else set(core)
    root_nb = None
    if monitor_vbl is not None:
        root_nb = set(graph.neighbors_of_footprint(monitor_vbl, exclude=exclude))
    for node in tree.nodes():
        labels = [c.label for c in node.children]
        if len(set(labels)) != len(labels):
            return False
        if node is tree.root and root_nb is not None:
            allowed = root_nb
        else:
            allowed = set(graph.closed(node.label))
        if core_set is not None:
            allowed = allowed & core_set
        if any(lab not in allowed for lab in labels):
            return False
    return True


def log_tree_probability(tree: WitnessTree, events: Sequence[BadEvent],
                         monitor: BadEvent | None = None) -> float:
    total = 0.0
    for node in tree.nodes():
        p = monitor.prob if node.label == MONITOR_ROOT else events[node.label].prob
        if p <= 0:
            return -math.inf
        total += math.log(p)
    return total


def tree_probability(tree: WitnessTree, events: Sequence[BadEvent],
                     monitor: BadEvent | None = None) -> float:
    """``∏_v P(σ(v))``, accumulated in log space."""
    return math.exp(log_tree_probability(tree, events, monitor))


def tree_occurs(tree: WitnessTree, log, graph: DependencyGraph) -> bool:
    """Whether some step of ``log`` produces a tree equal to ``tree``."""
    steps = log.steps if hasattr(log, "steps") else list(log)
    target = tree.canonical()
    want = tree.root.label
    size = tree.size
    for t, lab in enumerate(steps):
        if lab != want or t + 1 < size:
            continue
        if build_witness_tree(steps, t, graph).canonical() == target:
            return True
    return False


def galton_watson_sample(root: int, graph: DependencyGraph, x: Sequence[float],
                         rng: np.random.Generator, max_depth: int = GW_DEPTH_CAP) -> WitnessTree:
    """Each node labelled A spawns each B in ``Γ(A) ∪ {A}`` with probability x(B)."""
    top = WitnessNode(root)
    frontier = [top]
    depth = 0
    while frontier:
        nxt = []
        for node in frontier:
            cands = graph.closed(node.label)
            us = rng.random(len(cands)).tolist()
            for b, u in zip(cands, us):
                if u < x[b]:
                    child = WitnessNode(b)
                    node.children.append(child)
                    nxt.append(child)
        if nxt and depth + 1 > max_depth:
            raise DepthCapExceeded(f"Galton-Watson tree deeper than {max_depth}")
        frontier = nxt
        depth += 1
    return WitnessTree(top)


# ------------------------------------------------------------ exact oracle

@dataclass(frozen=True)
class ConditionalResult:
    good_probability: Fraction
    monitors: tuple


def _fractions(space: VariableSpace) -> list:
    return [[Fraction(w).limit_denominator(1 << 40) if w else Fraction(0) for w in row]
            for row in space.weights]


def brute_force_conditional(space: VariableSpace, events: Sequence[BadEvent],
                            monitors: Sequence[BadEvent], limit: int = ORACLE_LIMIT) -> ConditionalResult:
    """Exact ``Pr[B | no event holds]`` for each monitor, by enumeration.

    Weights are converted to rationals (denominators up to 2^40) so sums over
    the good set are exact.
    """
    total = space.outcome_count()
    if total > limit:
        raise SpaceTooLarge(f"{total} outcomes exceed the enumeration limit {limit}")
    fr = _fractions(space)
    good = Fraction(0)
    hits = [Fraction(0)] * len(monitors)
    for combo in itertools.product(*(range(d) for d in space.domain_sizes)):
        if any(ev.holds(combo) for ev in events):
            continue
        w = Fraction(1)
        for row, c in zip(fr, combo):
            w *= row[c]
        if not w:
            continue
        good += w
        for i, b in enumerate(monitors):
            if b.holds(combo):
                hits[i] += w
    if good == 0:
        raise NoGoodAssignment("no assignment avoids every event")
    return ConditionalResult(good, tuple(h / good for h in hits))


def distrib_bound(monitor: BadEvent, graph: DependencyGraph, x: Sequence[float], *,
                  exclude: int | None = None, restrict_to=None) -> float:
    """``P(B)·∏_{C∈Γ(B)}(1−x_C)^{-1}``.

    Γ(B) is computed from B's footprint against the family; ``exclude`` drops
    B's own id when B is a member. ``restrict_to`` limits Γ(B) to a core.
    """
    nb = graph.neighbors_of_footprint(monitor.vbl, exclude=exclude)
    if restrict_to is not None:
        keep = set(restrict_to)
        nb = [c for c in nb if c in keep]
    log_s = math.fsum(math.log1p(-x[c]) for c in nb)
    return monitor.prob * math.exp(-log_s)


# -------------------------------------------------------- empirical report

@dataclass
class MonitorStats:
    monitor: int
    exact: float | None
    empirical: float
    final_frequency: float
    bound: float
    trials: int

    @property
    def ci(self) -> float:
        f = self.empirical
        return 3.0 * math.sqrt(f * (1.0 - f) / self.trials)

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + self.ci

    def to_dict(self) -> dict:
        return {
            "monitor": self.monitor,
            "exact": self.exact,
            "empirical": self.empirical,
            "bound": self.bound,
            "trials": self.trials,
            "ci": self.ci,
            "pass": self.passed,
        }


@dataclass
class DistributionReport:
    monitors: list
    trials: int
    cap_exceeded: int = 0

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.monitors)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "cap_exceeded": self.cap_exceeded,
            "monitors": [m.to_dict() for m in self.monitors],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _member_id(monitor: BadEvent, events: Sequence[BadEvent]) -> int | None:
    for ev in events:
        if ev is monitor:
            return ev.id
    return None


@dataclass
class EverTrueCounts:
    """Raw tallies from a block of trials; blocks merge by addition."""

    ever: list
    final: list
    completed: int
    capped: int

    def __add__(self, other: "EverTrueCounts") -> "EverTrueCounts":
        return EverTrueCounts([a + b for a, b in zip(self.ever, other.ever)],
                              [a + b for a, b in zip(self.final, other.final)],
                              self.completed + other.completed, self.capped + other.capped)


def ever_true_counts(space: VariableSpace, events: Sequence[BadEvent], core, monitors: Sequence[BadEvent],
                     trials: range, seed: int, params: LLLParams, *, policy: str = "first",
                     graph: DependencyGraph | None = None) -> EverTrueCounts:
    """Tally, over the trial indices in ``trials``, which monitors were ever / finally true.

    Trial ``i`` uses the stream derived from ``(seed, i)``. Monitors are
    checked after the initial sample and after every step.
    """
    graph = graph or build_dependency_graph(space, events)
    core = list(range(len(events))) if core is None else sorted(set(core))
    by_var: dict = {}
    for i, b in enumerate(monitors):
        for v in b.vbl:
            by_var.setdefault(v, []).append(i)
    counts = EverTrueCounts([0] * len(monitors), [0] * len(monitors), 0, 0)
    for t in trials:
        seen = [False] * len(monitors)

        def observe(values, changed):
            if changed is None:
                todo = range(len(monitors))
            else:
                todo = {i for v in changed for i in by_var.get(v, ())}
            for i in todo:
                if not seen[i] and monitors[i].holds(values):
                    seen[i] = True

        try:
            res = mt_core_run(space, events, core, params, policy, derive_rng(seed, t),
                              post_check=False, graph=graph, observer=observe, override=True)
        except CapExceeded:
            counts.capped += 1
            continue
        counts.completed += 1
        for i, b in enumerate(monitors):
            counts.ever[i] += seen[i]
            counts.final[i] += b.holds(res.report.assignment)
    return counts


def distribution_report(space: VariableSpace, events: Sequence[BadEvent], core, monitors: Sequence[BadEvent],
                        counts: EverTrueCounts, params: LLLParams, *, exact: bool = True,
                        graph: DependencyGraph | None = None) -> DistributionReport:
    """Combine tallies with the exact oracle (when enumerable) and the bounds."""
    graph = graph or build_dependency_graph(space, events)
    core = list(range(len(events))) if core is None else sorted(set(core))
    done = max(counts.completed, 1)
    exact_vals = [None] * len(monitors)
    if exact and space.outcome_count() <= ORACLE_LIMIT:
        res = brute_force_conditional(space, events, monitors)
        exact_vals = [float(v) for v in res.monitors]
    stats = []
    for i, b in enumerate(monitors):
        bound = distrib_bound(b, graph, params.x, exclude=_member_id(b, events), restrict_to=core)
        stats.append(MonitorStats(i, exact_vals[i], counts.ever[i] / done, counts.final[i] / done,
                                  bound, done))
    return DistributionReport(stats, counts.completed + counts.capped, counts.capped)


def empirical_ever_true(space: VariableSpace, events: Sequence[BadEvent], core, monitors: Sequence[BadEvent],
                        trials: int, seed: int, params: LLLParams, *, policy: str = "first",
                        exact: bool = True, graph: DependencyGraph | None = None) -> DistributionReport:
    """Run the core loop ``trials`` times and compare ever-true frequencies with the bounds.

    Γ(B) in the bound is restricted to the core, matching the events that
    are actually resampled. Runs hitting the cap are counted separately.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    graph = graph or build_dependency_graph(space, events)
    counts = ever_true_counts(space, events, core, monitors, range(trials), seed, params,
                              policy=policy, graph=graph)
    return distribution_report(space, events, core, monitors, counts, params, exact=exact, graph=graph)

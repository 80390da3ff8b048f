"""Variable/event model, local-lemma checks and the resampling loop.

Events live over a finite product space. Each :class:`BadEvent` names the
variables it reads (``vbl``) and a predicate on their values. The predicate
receives the restriction of the assignment as a tuple ordered like ``vbl``.

Two loop flavours are provided:

* :func:`mt_run` / :func:`mt_core_run` for explicit event lists, and
* :func:`mt_run_implicit` for families that are too large to list, where an
  application supplies the "find a violated event" search itself.
"""

from __future__ import annotations

import bisect
import itertools
import math
import time
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Callable, Hashable, Iterable, Protocol, Sequence

import numpy as np

from .errors import CapExceeded, ConditionViolated

PROB_TOL = 1e-12
ENUM_LIMIT = 1 << 20
LOG_SPACE_DEGREE = 10_000
V2_CONSTANT = 8.0
DEFAULT_CAP_FACTOR = 50.0

POLICIES = ("first", "uniform")


# ---------------------------------------------------------------- variables

@dataclass(frozen=True)
class VariableSpace:
    """Independent finite variables; ``weights[i][v]`` is P(variable i = v)."""

    weights: tuple

    def __post_init__(self):
        ws = tuple(tuple(float(w) for w in row) for row in self.weights)
        for i, row in enumerate(ws):
            if len(row) < 1:
                raise ValueError(f"variable {i} has an empty domain")
            if any(w < 0 for w in row):
                raise ValueError(f"variable {i} has a negative weight")
            if abs(math.fsum(row) - 1.0) > PROB_TOL:
                raise ValueError(f"weights of variable {i} do not sum to 1")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "_cum", tuple(tuple(itertools.accumulate(row))[:-1] for row in ws))
        object.__setattr__(
            self, "_uniform",
            tuple(all(w == row[0] for w in row) for row in ws),
        )

    @classmethod
    def uniform(cls, n: int, domain_size: int = 2) -> "VariableSpace":
        return cls(tuple((1.0 / domain_size,) * domain_size for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def domain_sizes(self) -> tuple:
        return tuple(len(row) for row in self.weights)

    def outcome_count(self, var_ids: Iterable[int] | None = None) -> int:
        sizes = self.domain_sizes
        ids = range(self.n) if var_ids is None else var_ids
        return math.prod(sizes[i] for i in ids)

    def draw(self, var_ids: Sequence[int], rng: np.random.Generator) -> list:
        """Fresh independent values for ``var_ids``."""
        if not var_ids:
            return []
        us = rng.random(len(var_ids)).tolist()
        out = []
        for v, u in zip(var_ids, us):
            row = self.weights[v]
            d = len(row)
            if self._uniform[v]:
                out.append(min(int(u * d), d - 1))
            else:
                out.append(min(bisect.bisect_right(self._cum[v], u), d - 1))
        return out

    def validate_assignment(self, values: Sequence[int]) -> None:
        if len(values) != self.n:
            raise ValueError(f"assignment has length {len(values)}, expected {self.n}")
        for i, (v, d) in enumerate(zip(values, self.domain_sizes)):
            if not 0 <= v < d:
                raise ValueError(f"value {v} out of range for variable {i}")


def sample_assignment(space: VariableSpace, rng: np.random.Generator) -> list:
    """Draw every variable independently from its weights."""
    return space.draw(range(space.n), rng)


# ------------------------------------------------------------------- events

def exact_probability(space: VariableSpace, vbl: Sequence[int], predicate) -> float:
    """Probability of ``predicate`` by enumeration over the footprint."""
    parts = []
    rows = [space.weights[v] for v in vbl]
    for combo in itertools.product(*(range(len(r)) for r in rows)):
        if predicate(combo):
            parts.append(math.prod(r[c] for r, c in zip(rows, combo)))
    return math.fsum(parts)


@dataclass(frozen=True, eq=False)
class BadEvent:
    """A bad event: ``predicate(values restricted to vbl)`` is true when it occurs."""

    id: int
    vbl: tuple
    predicate: Callable
    prob: float

    def __post_init__(self):
        vbl = tuple(int(v) for v in self.vbl)
        if not vbl:
            raise ValueError("an event must depend on at least one variable")
        if list(vbl) != sorted(set(vbl)):
            raise ValueError("vbl must be sorted and duplicate free")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"event probability {self.prob} outside [0, 1]")
        object.__setattr__(self, "vbl", vbl)
        if len(vbl) == 1:
            v0 = vbl[0]
            getter = lambda values: (values[v0],)  # noqa: E731
        else:
            getter = itemgetter(*vbl)
        object.__setattr__(self, "_get", getter)

    def holds(self, values: Sequence[int]) -> bool:
        return bool(self.predicate(self._get(values)))

    def restrict(self, values: Sequence[int]) -> tuple:
        return self._get(values)

    def with_id(self, new_id: int) -> "BadEvent":
        return BadEvent(new_id, self.vbl, self.predicate, self.prob)

    @classmethod
    def from_predicate(cls, id: int, vbl: Sequence[int], predicate, space: VariableSpace,
                       prob: float | None = None) -> "BadEvent":
        """Build an event, enumerating its probability when the footprint is small."""
        vbl = tuple(vbl)
        if prob is None:
            if space.outcome_count(vbl) > ENUM_LIMIT:
                raise ValueError("footprint too large to enumerate; pass prob explicitly")
            prob = exact_probability(space, vbl, predicate)
        return cls(id, vbl, predicate, prob)

    @classmethod
    def from_table(cls, id: int, vbl: Sequence[int], bad: Iterable[Sequence[int]],
                   space: VariableSpace) -> "BadEvent":
        """Event that holds exactly on the listed value tuples (aligned with ``vbl``)."""
        vbl = list(vbl)
        order = sorted(range(len(vbl)), key=vbl.__getitem__)
        svbl = tuple(vbl[i] for i in order)
        table = frozenset(tuple(int(t[i]) for i in order) for t in bad)
        sizes = space.domain_sizes
        for t in table:
            if len(t) != len(svbl) or any(not 0 <= val < sizes[v] for val, v in zip(t, svbl)):
                raise ValueError(f"bad tuple {t} does not fit the footprint")
        prob = math.fsum(math.prod(space.weights[v][val] for v, val in zip(svbl, t)) for t in table)
        ev = cls(id, svbl, table.__contains__, prob)
        object.__setattr__(ev, "table", table)
        return ev


def clause_event(id: int, literals: Sequence[int], space: VariableSpace | None = None) -> BadEvent:
    """The event "this CNF clause is false".

    Literals are DIMACS style (``+v``/``-v``, 1-based). Value 1 means true.
    """
    pairs = sorted((abs(l) - 1, 0 if l > 0 else 1) for l in literals)
    vbl = tuple(v for v, _ in pairs)
    falsifying = tuple(b for _, b in pairs)
    if len(set(vbl)) != len(vbl):
        raise ValueError("clause mentions a variable twice")
    if space is None:
        prob = 0.5 ** len(vbl)
    else:
        prob = math.prod(space.weights[v][b] for v, b in pairs)
    return BadEvent(id, vbl, falsifying.__eq__, prob)


class EventSet(Sequence):
    """Events with ids ``0..m-1`` in order."""

    def __init__(self, events: Iterable[BadEvent]):
        self.events = tuple(events)
        for i, ev in enumerate(self.events):
            if ev.id != i:
                raise ValueError(f"event at position {i} has id {ev.id}")

    @classmethod
    def renumbered(cls, events: Iterable[BadEvent]) -> "EventSet":
        return cls(ev.with_id(i) for i, ev in enumerate(events))

    @property
    def m(self) -> int:
        return len(self.events)

    def __len__(self):
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __iter__(self):
        return iter(self.events)


# ---------------------------------------------------------- dependency graph

@dataclass(frozen=True)
class DependencyGraph:
    """Variable-sharing graph: A ~ B iff A != B and their footprints meet."""

    adjacency: tuple
    footprints: tuple
    var_events: dict = field(repr=False)

    @classmethod
    def from_footprints(cls, footprints: Sequence[Sequence[int]]) -> "DependencyGraph":
        fps = tuple(tuple(fp) for fp in footprints)
        var_events: dict = {}
        for a, fp in enumerate(fps):
            for v in fp:
                var_events.setdefault(v, []).append(a)
        adj = []
        for a, fp in enumerate(fps):
            nb = set()
            for v in fp:
                nb.update(var_events[v])
            nb.discard(a)
            adj.append(tuple(sorted(nb)))
        return cls(tuple(adj), fps, {v: tuple(es) for v, es in var_events.items()})

    @property
    def m(self) -> int:
        return len(self.adjacency)

    def neighbors(self, a: int) -> tuple:
        return self.adjacency[a]

    def closed(self, a: int) -> tuple:
        """``Γ(a) ∪ {a}`` in sorted order."""
        return tuple(sorted(self.adjacency[a] + (a,)))

    def degree(self, a: int) -> int:
        return len(self.adjacency[a])

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.adjacency), default=0)

    @property
    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.adjacency) // 2

    def events_on(self, var: int) -> tuple:
        """The clique ``A_P`` of events reading variable ``var``."""
        return self.var_events.get(var, ())

    def neighbors_of_footprint(self, vbl: Iterable[int], exclude: int | None = None) -> tuple:
        """Events sharing a variable with an arbitrary footprint."""
        out = set()
        for v in vbl:
            out.update(self.var_events.get(v, ()))
        out.discard(exclude)
        return tuple(sorted(out))


def build_dependency_graph(space: VariableSpace, events: Sequence[BadEvent]) -> DependencyGraph:
    for ev in events:
        for v in ev.vbl:
            if not 0 <= v < space.n:
                raise ValueError(f"event {ev.id} references unknown variable {v}")
    return DependencyGraph.from_footprints([ev.vbl for ev in events])


# ------------------------------------------------------------------ params

def _log_survival(x: Sequence[float], ids: Iterable[int]) -> float:
    return math.fsum(math.log1p(-x[b]) for b in ids)


def _survival(x: Sequence[float], ids: Sequence[int]) -> float:
    """∏(1 - x_b), in log space for very large neighbourhoods."""
    if len(ids) > LOG_SPACE_DEGREE:
        return math.exp(_log_survival(x, ids))
    return math.prod(1.0 - x[b] for b in ids)


def _validate_x(x: Sequence[float], m: int) -> tuple:
    x = tuple(float(v) for v in x)
    if len(x) != m:
        raise ValueError(f"expected {m} x-values, got {len(x)}")
    for i, v in enumerate(x):
        if not 0.0 < v < 1.0:
            raise ValueError(f"x[{i}] = {v} is not in (0, 1)")
    return x


def compute_delta(graph: DependencyGraph, x: Sequence[float]) -> float:
    """``min_A x(A)·∏_{B∈Γ(A)}(1−x(B))`` (1.0 for an empty family)."""
    x = _validate_x(x, graph.m)
    if not x:
        return 1.0
    return min(x[a] * _survival(x, graph.adjacency[a]) for a in range(graph.m))


@dataclass(frozen=True)
class LLLParams:
    x: tuple
    eps: float = 0.0
    cap_factor: float = DEFAULT_CAP_FACTOR
    delta: float = 1.0
    T: float = 0.0

    @classmethod
    def build(cls, graph: DependencyGraph, x: Sequence[float], eps: float = 0.0,
              cap_factor: float = DEFAULT_CAP_FACTOR) -> "LLLParams":
        x = _validate_x(x, graph.m)
        if not 0.0 <= eps < 1.0:
            raise ValueError("eps must lie in [0, 1)")
        if cap_factor <= 0:
            raise ValueError("cap_factor must be positive")
        return cls(x, float(eps), float(cap_factor), compute_delta(graph, x), math.fsum(x))

    @classmethod
    def symmetric(cls, graph: DependencyGraph, **kw) -> "LLLParams":
        """x = 1/(d+1) for every event, d the maximum degree."""
        d = graph.max_degree
        return cls.build(graph, [1.0 / (d + 1)] * graph.m, **kw)


@dataclass(frozen=True)
class LLLCheck:
    ok: bool
    margins: tuple

    def __bool__(self):
        return self.ok

    @property
    def worst(self) -> float:
        return min(self.margins, default=math.inf)


def check_lll(events: Sequence[BadEvent], graph: DependencyGraph, params: LLLParams,
              restrict_to: Iterable[int] | None = None) -> LLLCheck:
    """``P(A) ≤ (1−ε)x(A)∏_{B∈Γ(A)}(1−x(B))`` for every event.

    With ``restrict_to`` the product only runs over neighbours inside that
    subset (the condition needed when resampling a core subfamily).
    Margins are right-hand side minus left-hand side.
    """
    x = params.x
    keep = None if restrict_to is None else set(restrict_to)
    margins = []
    for ev in events:
        nb = graph.adjacency[ev.id]
        if keep is not None:
            nb = [b for b in nb if b in keep]
        rhs = (1.0 - params.eps) * x[ev.id] * _survival(x, nb)
        margins.append(rhs - ev.prob)
    return LLLCheck(all(mg >= -PROB_TOL for mg in margins), tuple(margins))


def check_lll_exponential(events: Sequence[BadEvent], graph: DependencyGraph,
                          params: LLLParams) -> LLLCheck:
    """``P(A)^{1−ε} ≤ x(A)∏_{B∈Γ(A)}(1−x(B))`` for every event.

    The usual side condition ``x < 1−ε`` is not enforced; it only matters
    for the running-time bound, not for evaluating the inequality.
    """
    eps = params.eps
    if not 0.0 < eps < 1.0:
        raise ValueError("the exponential condition needs eps in (0, 1)")
    x = params.x
    margins = []
    for ev in events:
        rhs = x[ev.id] * _survival(x, graph.adjacency[ev.id])
        margins.append(rhs - ev.prob ** (1.0 - eps))
    return LLLCheck(all(mg >= -PROB_TOL for mg in margins), tuple(margins))


@dataclass(frozen=True)
class TBound:
    T: float
    delta: float
    log_inv_delta: float
    bound: float
    holds: bool
    per_variable: dict
    per_variable_holds: bool


def compute_T(graph: DependencyGraph, params: LLLParams, n: int) -> TBound:
    """T = Σx together with ``T ≤ n·log2(1/δ)`` and the per-variable clique sums.

    δ is normalised to at most 1/4 first. For a graph with an edge this
    changes nothing; for isolated events it is the usual without-loss-of-
    generality reduction (adding one dummy neighbour pair).
    """
    delta = min(params.delta, 0.25)
    log_inv = math.log2(1.0 / delta)
    per_var = {v: math.fsum(params.x[a] for a in evs) for v, evs in sorted(graph.var_events.items())}
    T = math.fsum(params.x)
    bound = n * log_inv
    return TBound(
        T=T,
        delta=params.delta,
        log_inv_delta=log_inv,
        bound=bound,
        holds=T <= bound + 1e-9,
        per_variable=per_var,
        per_variable_holds=all(s <= log_inv + 1e-9 for s in per_var.values()),
    )


@dataclass(frozen=True)
class ResampleBounds:
    v1: float
    v2: float


def resample_bounds(params: LLLParams, n: int, T: float | None = None,
                    max_x: float | None = None) -> ResampleBounds:
    """Expected-resampling bounds ``v1 = T·max 1/(1−x)`` and ``v2 = 8(n/ε)ln(max(T/ε, 2))``."""
    T = params.T if T is None else T
    mx = max(params.x, default=0.0) if max_x is None else max_x
    v1 = T / (1.0 - mx) if T > 0 else 0.0
    if params.eps > 0:
        v2 = V2_CONSTANT * (n / params.eps) * math.log(max(T / params.eps, 2.0))
    else:
        v2 = math.inf
    return ResampleBounds(v1, v2)


def resample_cap(bounds: ResampleBounds, eps: float, cap_factor: float) -> int:
    v = bounds.v2 if eps > 0 else bounds.v1
    return max(1, math.ceil(cap_factor * v))


# -------------------------------------------------------------------- runs

@dataclass
class ResampleLog:
    steps: list
    seed: int | None = None


@dataclass
class RunReport:
    resample_count: int
    per_event: dict
    status: str
    assignment: list
    wall_time: float
    cap: int

    @property
    def success(self) -> bool:
        return self.status == "success"

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "resample_count": self.resample_count,
            "per_event": {str(k): v for k, v in sorted(self.per_event.items(), key=lambda kv: str(kv[0]))},
            "status": self.status,
            "cap": self.cap,
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


def find_violated(events: Sequence[BadEvent], values: Sequence[int], policy: str = "first",
                  rng: np.random.Generator | None = None) -> int | None:
    """Id of an event that currently holds, or None."""
    if policy == "first":
        for ev in events:
            if ev.holds(values):
                return ev.id
        return None
    if policy == "uniform":
        true_ids = [ev.id for ev in events if ev.holds(values)]
        if not true_ids:
            return None
        if rng is None:
            raise ValueError("uniform policy needs an rng")
        return true_ids[int(rng.random() * len(true_ids))]
    raise ValueError(f"unknown policy {policy!r}")


def _pick(violated: set, policy: str, rng: np.random.Generator) -> int:
    if policy == "first":
        return min(violated)
    ordered = sorted(violated)
    return ordered[min(int(rng.random() * len(ordered)), len(ordered) - 1)]


def _resample_loop(space, events, closed, ids, cap, policy, rng, seed, observer):
    """Core loop over the events listed in ``ids``.

    ``closed[a]`` is the closed neighbourhood of ``a`` restricted to ``ids``.
    Only that neighbourhood can change truth value after resampling ``a``.
    """
    t0 = time.perf_counter()
    values = sample_assignment(space, rng)
    if observer is not None:
        observer(values, None)
    violated = {a for a in ids if events[a].holds(values)}
    steps = []
    counts: dict = {}
    while violated:
        if len(steps) >= cap:
            report = RunReport(len(steps), counts, "cap_exceeded", values,
                               time.perf_counter() - t0, cap)
            log = ResampleLog(steps, seed)
            raise CapExceeded(f"resampling cap {cap} reached", report, log)
        a = _pick(violated, policy, rng)
        vbl = events[a].vbl
        for v, val in zip(vbl, space.draw(vbl, rng)):
            values[v] = val
        steps.append(a)
        counts[a] = counts.get(a, 0) + 1
        for b in closed[a]:
            if events[b].holds(values):
                violated.add(b)
            else:
                violated.discard(b)
        if observer is not None:
            observer(values, vbl)
    report = RunReport(len(steps), counts, "success", values, time.perf_counter() - t0, cap)
    return report, ResampleLog(steps, seed)


def mt_run(space: VariableSpace, events: Sequence[BadEvent], params: LLLParams,
           policy: str = "first", rng: np.random.Generator | None = None, *,
           graph: DependencyGraph | None = None, seed: int | None = None,
           override: bool = False, cap: int | None = None, observer=None):
    """Resample violated events until none holds.

    Returns ``(RunReport, ResampleLog)``. The step budget defaults to
    ``⌈λ·v1⌉`` (``⌈λ·v2⌉`` when ε > 0). ``observer(values, changed_vbl)`` is
    called after the initial draw (with ``None``) and after every step.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if rng is None:
        from .rng import derive_rng
        rng = derive_rng(0 if seed is None else seed)
    graph = graph or build_dependency_graph(space, events)
    chk = check_lll(events, graph, params)
    if not chk.ok and not override:
        raise ConditionViolated("local lemma condition fails for the supplied x-values", chk.margins)
    if cap is None:
        cap = resample_cap(resample_bounds(params, space.n), params.eps, params.cap_factor)
    closed = [graph.closed(a) for a in range(graph.m)]
    return _resample_loop(space, events, closed, range(graph.m), cap, policy, rng, seed, observer)


@dataclass(frozen=True)
class CoreSubset:
    ids: tuple
    threshold: float
    size_bound: float

    @property
    def size(self) -> int:
        return len(self.ids)


def select_core(events: Sequence[BadEvent], p_threshold: float, params: LLLParams | None = None,
                n: int | None = None) -> CoreSubset:
    """Events of probability at least ``p_threshold``.

    The reported size bound is ``T/p``; with ``n`` given it is the weaker
    ``n·log2(1/δ)/p`` which only needs δ.
    """
    if not 0.0 <= p_threshold < 1.0:
        raise ValueError("p_threshold must lie in [0, 1)")
    ids = tuple(ev.id for ev in events if ev.prob >= p_threshold)
    bound = math.inf
    if params is not None and p_threshold > 0:
        if n is not None:
            bound = n * math.log2(1.0 / min(params.delta, 0.25)) / p_threshold
        else:
            bound = params.T / p_threshold
    return CoreSubset(ids, p_threshold, bound)


@dataclass
class CoreRunResult:
    report: RunReport
    log: ResampleLog
    violated_noncore: list | None
    failure_bound: float


def mt_core_run(space: VariableSpace, events: Sequence[BadEvent], core: Iterable[int],
                params: LLLParams, policy: str = "first", rng: np.random.Generator | None = None,
                post_check: bool = True, *, graph: DependencyGraph | None = None,
                seed: int | None = None, override: bool = False, cap: int | None = None,
                observer=None) -> CoreRunResult:
    """Resample only the core events; optionally list non-core events left true.

    The precondition is the restricted condition
    ``P(A) ≤ (1−ε)x(A)∏_{B∈Γ(A)∩core}(1−x(B))``, required of every event in
    the family (core or not) since the failure bound sums x over non-core ones.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if rng is None:
        from .rng import derive_rng
        rng = derive_rng(0 if seed is None else seed)
    core_ids = sorted(set(core))
    graph = graph or build_dependency_graph(space, events)
    if any(not 0 <= a < graph.m for a in core_ids):
        raise ValueError("core contains an id outside the event set")
    chk = check_lll(events, graph, params, restrict_to=core_ids)
    if not chk.ok and not override:
        raise ConditionViolated("restricted local lemma condition fails", chk.margins)
    in_core = set(core_ids)
    if cap is None:
        T_core = math.fsum(params.x[a] for a in core_ids)
        mx = max((params.x[a] for a in core_ids), default=0.0)
        cap = resample_cap(resample_bounds(params, space.n, T=T_core, max_x=mx),
                           params.eps, params.cap_factor)
    closed = {a: tuple(b for b in graph.closed(a) if b in in_core) for a in core_ids}
    report, log = _resample_loop(space, events, closed, core_ids, cap, policy, rng, seed, observer)
    failure_bound = math.fsum(params.x[a] for a in range(graph.m) if a not in in_core)
    violated = None
    if post_check:
        violated = [ev.id for ev in events if ev.id not in in_core and ev.holds(report.assignment)]
    return CoreRunResult(report, log, violated, failure_bound)


# -------------------------------------------------------- implicit families

@dataclass(frozen=True)
class Violation:
    """A violated event of an implicit family: a stable key plus its footprint."""

    key: Hashable
    vbl: tuple


class ImplicitSystem(Protocol):
    def sample(self, rng: np.random.Generator) -> list: ...

    def find_violated(self, state: list) -> Violation | None: ...

    def redraw(self, state: list, vbl: Sequence[int], rng: np.random.Generator) -> None: ...


def implicit_cap(n: int, log_inv_delta: float, max_x: float, eps: float = 0.0,
                 cap_factor: float = DEFAULT_CAP_FACTOR) -> int:
    """Budget for an implicit family from the bound ``T ≤ n·log2(1/δ)``.

    Implicit families cannot sum their x-values, so T is replaced by its
    upper bound. With ``max x ≥ 1`` (palette overrides) there is no
    certificate and the budget falls back to ``T``.
    """
    T = n * log_inv_delta
    v1 = T / (1.0 - max_x) if max_x < 1 else max(T, 1.0)
    v = v1
    if eps > 0:
        v = V2_CONSTANT * (n / eps) * math.log(max(T / eps, 2.0))
    return max(1, math.ceil(cap_factor * v))


def mt_run_implicit(system: ImplicitSystem, cap: int, rng: np.random.Generator, *,
                    seed: int | None = None, observer=None):
    """Resampling loop for a family that supplies its own violated-event search.

    Log steps record the violation keys. Returns ``(RunReport, ResampleLog)``.
    """
    t0 = time.perf_counter()
    state = system.sample(rng)
    if observer is not None:
        observer(state, None)
    steps = []
    counts: dict = {}
    while True:
        viol = system.find_violated(state)
        if viol is None:
            break
        if len(steps) >= cap:
            report = RunReport(len(steps), counts, "cap_exceeded", state, time.perf_counter() - t0, cap)
            raise CapExceeded(f"resampling cap {cap} reached", report, ResampleLog(steps, seed))
        system.redraw(state, viol.vbl, rng)
        steps.append(viol.key)
        counts[viol.key] = counts.get(viol.key, 0) + 1
        if observer is not None:
            observer(state, viol.vbl)
    report = RunReport(len(steps), counts, "success", state, time.perf_counter() - t0, cap)
    return report, ResampleLog(steps, seed)


def replay_log(space: VariableSpace, events: Sequence[BadEvent], log: ResampleLog,
               rng: np.random.Generator) -> list:
    """Re-run a log with the same stream and return per-step snapshots.

    Snapshot ``t`` is the assignment just before step ``t``; the last entry is
    the final assignment. Only meaningful for first-index logs produced by
    :func:`mt_run` with a fresh copy of the same stream.
    """
    values = sample_assignment(space, rng)
    snaps = [list(values)]
    for a in log.steps:
        vbl = events[a].vbl
        for v, val in zip(vbl, space.draw(vbl, rng)):
            values[v] = val
        snaps.append(list(values))
    return snaps

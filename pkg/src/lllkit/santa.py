"""(k, l, β)-systems: reductions, the flow base case and γ-goodness.

A system has ``p`` groups; each group holds up to ``l`` children and each
child is a set of exactly ``k`` items. ``β·l`` bounds how many sets any item
belongs to. The goal is to choose one child per group and hand each chosen
child ``⌊γk⌋`` of its own items, disjointly.

The pipeline shrinks ``l`` (random sub-selection of children) and ``k``
(random halving of the item universe) by resampling, solves the small system
with a flow, and reuses the chosen children on the original system.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Violation, implicit_cap, mt_run_implicit
from .errors import CapExceeded, CoreTooLarge, FlowInfeasible, InfeasibleParams, RetriesExhausted
from .flow import FlowNetwork
from .rng import derive_rng

log = logging.getLogger(__name__)

LOOP_THRESHOLD = 8
CORE_MULTIPLIER = 2
COLLECTION_BUDGET = 200_000
QUOTA_FUZZ = 1e-9


@dataclass(frozen=True)
class KLBSystem:
    """Groups of children; ``groups[g][j]`` is the sorted item tuple of child ``j``.

    ``child_ids[g][j]`` remembers the child's index in the original system.
    """

    groups: tuple
    k: int
    child_ids: tuple | None = None

    def __post_init__(self):
        groups = tuple(tuple(tuple(sorted(int(i) for i in ch)) for ch in grp) for grp in self.groups)
        if not groups:
            raise ValueError("a system needs at least one group")
        for g, grp in enumerate(groups):
            if not grp:
                raise ValueError(f"group {g} has no children")
            for j, ch in enumerate(grp):
                if len(ch) != self.k or len(set(ch)) != self.k:
                    raise ValueError(f"child {j} of group {g} is not a set of {self.k} items")
        ids = self.child_ids
        if ids is None:
            ids = tuple(tuple(range(len(grp))) for grp in groups)
        ids = tuple(tuple(int(i) for i in row) for row in ids)
        if [len(r) for r in ids] != [len(grp) for grp in groups]:
            raise ValueError("child_ids shape does not match groups")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "child_ids", ids)
        occ = Counter(i for grp in groups for ch in grp for i in ch)
        object.__setattr__(self, "_occ", occ)

    @property
    def p(self) -> int:
        return len(self.groups)

    @property
    def l(self) -> int:
        return max(len(grp) for grp in self.groups)

    @property
    def occurrences(self) -> Counter:
        return self._occ

    @property
    def max_occurrence(self) -> int:
        return max(self._occ.values())

    @property
    def beta(self) -> float:
        return self.max_occurrence / self.l

    @property
    def items(self) -> list:
        return sorted(self._occ)

    @property
    def set_count(self) -> int:
        return sum(len(grp) for grp in self.groups)

    def to_dict(self) -> dict:
        return {"p": self.p, "l": self.l, "k": self.k,
                "groups": [[list(ch) for ch in grp] for grp in self.groups]}

    @classmethod
    def from_dict(cls, data: dict) -> "KLBSystem":
        try:
            groups = data["groups"]
            k = int(data["k"])
        except (KeyError, TypeError, ValueError):
            raise ValueError("system JSON needs 'k' and 'groups'") from None
        S = cls(tuple(tuple(tuple(ch) for ch in grp) for grp in groups), k)
        if "p" in data and int(data["p"]) != S.p:
            raise ValueError(f"declared p = {data['p']} but found {S.p} groups")
        if "l" in data and S.l > int(data["l"]):
            raise ValueError(f"declared l = {data['l']} but a group has {S.l} children")
        return S

    @classmethod
    def from_json(cls, text: str) -> "KLBSystem":
        return cls.from_dict(json.loads(text))


def gen_system(p: int, l: int, k: int, beta_target: float, rng: np.random.Generator,
               universe: int | None = None, slack: float = 1.25, attempts: int = 5) -> KLBSystem:
    """Random system with ``l`` children per group and multiplicity at most ``⌈β·l⌉``.

    Items are drawn with probability proportional to their remaining
    capacity, which spreads occurrences evenly.
    """
    if min(p, l, k) < 1 or beta_target <= 0:
        raise InfeasibleParams("p, l, k and beta must be positive")
    cap = math.ceil(beta_target * l - QUOTA_FUZZ)
    need = p * l * k
    U = universe if universe is not None else max(k, math.ceil(slack * need / cap))
    if U * cap < need or U < k:
        raise InfeasibleParams(f"universe of {U} items with multiplicity {cap} cannot hold {need} slots")
    for _ in range(attempts):
        rem = np.full(U, cap, dtype=np.int64)
        groups = []
        ok = True
        for _g in range(p):
            grp = []
            for _j in range(l):
                avail = int(np.count_nonzero(rem))
                if avail < k:
                    ok = False
                    break
                pick = rng.choice(U, size=k, replace=False, p=rem / rem.sum())
                rem[pick] -= 1
                grp.append(tuple(sorted(int(i) for i in pick)))
            if not ok:
                break
            groups.append(tuple(grp))
        if ok:
            return KLBSystem(tuple(groups), k)
    raise InfeasibleParams("could not place all sets within the multiplicity bound")


# ------------------------------------------------------------------ trace

@dataclass
class ReductionStep:
    kind: str
    params: dict
    survivors: list
    resamplings: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "survivors": self.survivors,
                "resamplings": self.resamplings}


def reduce_l_size(l: int) -> int:
    """``min(l, ⌊(log2 l)^5⌋)``."""
    if l < 2:
        return l
    return min(l, math.floor(math.log2(l) ** 5))


def reduce_l_x(l: int) -> float:
    """Budget x-value ``1/(e·l^{(log2 l)^2})``."""
    lg = math.log2(l)
    return math.exp(-1.0 - lg * lg * math.log(l))


class _SelectionSystem:
    def __init__(self, S: KLBSystem, sizes: list, threshold: float):
        self.S = S
        self.sizes = sizes
        self.threshold = threshold
        groups_of: dict = {}
        for g, grp in enumerate(S.groups):
            for ch in grp:
                for i in ch:
                    groups_of.setdefault(i, set()).add(g)
        self.groups_of = {i: tuple(sorted(gs)) for i, gs in groups_of.items()}

    def _draw(self, g, rng):
        n = len(self.S.groups[g])
        return tuple(sorted(rng.choice(n, size=self.sizes[g], replace=False).tolist()))

    def sample(self, rng):
        return [self._draw(g, rng) for g in range(self.S.p)]

    def counts(self, state) -> Counter:
        cnt: Counter = Counter()
        for g, sel in enumerate(state):
            grp = self.S.groups[g]
            for j in sel:
                cnt.update(grp[j])
        return cnt

    def find_violated(self, state):
        cnt = self.counts(state)
        bad = [i for i, c in cnt.items() if c > self.threshold + QUOTA_FUZZ]
        if not bad:
            return None
        j = min(bad)
        return Violation(j, self.groups_of[j])

    def redraw(self, state, vbl, rng):
        for g in vbl:
            state[g] = self._draw(g, rng)


def reduce_l(S: KLBSystem, rng: np.random.Generator, *, target_l: int | None = None,
             cap_factor: float = 50.0, cap: int | None = None):
    """Keep ``l′ = ⌊(log2 l)^5⌋`` random children per group (whole group when smaller).

    Bad event A_j: item j has more than ``β′l′`` copies among kept sets, with
    ``β′ = β(1 + 1/log2 l)``. ``target_l`` overrides l′ for experiments.
    Returns ``(S′, ReductionStep)``.
    """
    l = S.l
    if l < 2:
        raise ValueError("reduce_l needs l ≥ 2")
    lp = reduce_l_size(l) if target_l is None else int(target_l)
    if not 1 <= lp <= l:
        raise ValueError("target l must lie in 1..l")
    beta = S.beta
    beta_p = beta * (1.0 + 1.0 / math.log2(l))
    threshold = beta_p * lp
    sizes = [min(lp, len(grp)) for grp in S.groups]
    system = _SelectionSystem(S, sizes, threshold)
    x = reduce_l_x(l)
    if cap is None:
        cap = implicit_cap(S.p, -math.log2(x) + 1.0, x, cap_factor=cap_factor)
    report, _ = mt_run_implicit(system, cap, rng)
    state = report.assignment
    groups = tuple(tuple(S.groups[g][j] for j in sel) for g, sel in enumerate(state))
    ids = tuple(tuple(S.child_ids[g][j] for j in sel) for g, sel in enumerate(state))
    S2 = KLBSystem(groups, S.k, ids)
    step = ReductionStep(
        "reduce-l",
        {"l": l, "l_prime": lp, "beta": beta, "beta_prime": beta_p, "threshold": threshold,
         "x": x, "max_copies": max(system.counts(state).values())},
        [list(row) for row in ids],
        report.resample_count,
    )
    return S2, step


# ---------------------------------------------------------------- reduce-k

def reduce_k_kprime(k: int) -> int:
    """``⌈(1 − log2 k/√k)·k/2⌉``."""
    return math.ceil((1.0 - math.log2(k) / math.sqrt(k)) * k / 2.0)


def gamma_forward(gamma: float, k: int, k_prime: int) -> float:
    """γ after one reduce-k round: ``δ′·(k/2)/k′`` with ``δ′ = γ(1 + log2 k/√(γk))``."""
    if gamma <= 0:
        return 0.0
    delta_p = gamma + math.log2(k) * math.sqrt(gamma / k)
    return delta_p * (k / 2.0) / k_prime


def gamma_backward(gamma_after: float, k: int, k_prime: int) -> float:
    """Inverse of :func:`gamma_forward` (closed form in √γ)."""
    if gamma_after <= 0:
        return 0.0
    delta_p = gamma_after * k_prime / (k / 2.0)
    b = math.log2(k) / math.sqrt(k)
    root = (-b + math.sqrt(b * b + 4.0 * delta_p)) / 2.0
    return root * root


def gamma_chain_step(gamma: float, k: int) -> float:
    """The coarser closed-form chain ``γ(1 + 3·log2 k/√(γk))``, kept for comparison."""
    if gamma <= 0:
        return 0.0
    return gamma * (1.0 + 3.0 * math.log2(k) / math.sqrt(gamma * k))


def core_collection_length(set_count: int, k: int, c_k: int = CORE_MULTIPLIER) -> int:
    """``L_core = ⌈log2 m/log2 k⌉·c_k`` (at least c_k)."""
    if set_count < 2 or k < 2:
        return c_k
    return max(1, math.ceil(math.log2(set_count) / math.log2(k))) * c_k


def enumerate_collections(S: KLBSystem, gamma: float, max_size: int,
                          budget: int = COLLECTION_BUDGET) -> list:
    """Connected collections of sets from distinct groups with union ≤ |Q|·γ·k.

    Sets are indexed in group order. Returns ``(set_ids, union)`` pairs,
    sorted. Extensions whose union already exceeds ``max_size·γ·k`` are
    pruned (the union only grows).
    """
    k = S.k
    limit = max_size * gamma * k
    if limit < k:
        return []
    flat = [(g, ch) for g, grp in enumerate(S.groups) for ch in grp]
    by_item: dict = {}
    for s, (_, ch) in enumerate(flat):
        for i in ch:
            by_item.setdefault(i, []).append(s)
    nbrs = []
    for s, (_, ch) in enumerate(flat):
        nb = set()
        for i in ch:
            nb.update(by_item[i])
        nb.discard(s)
        nbrs.append(nb)
    out = []
    level = {(s,): frozenset(flat[s][1]) for s in range(len(flat))}
    seen = 0
    for size in range(1, max_size + 1):
        for q, union in level.items():
            if len(union) <= size * gamma * k + QUOTA_FUZZ:
                out.append((q, tuple(sorted(union))))
        if size == max_size:
            break
        nxt: dict = {}
        for q, union in level.items():
            groups = {flat[s][0] for s in q}
            cand = set().union(*(nbrs[s] for s in q)) - set(q)
            for t in cand:
                if flat[t][0] in groups:
                    continue
                key = tuple(sorted(q + (t,)))
                if key in nxt:
                    continue
                u2 = union.union(flat[t][1])
                if len(u2) > limit + QUOTA_FUZZ:
                    continue
                nxt[key] = u2
                seen += 1
                if seen > budget:
                    raise CoreTooLarge(f"more than {budget} connected collections")
        level = nxt
        if not level:
            break
    out.sort()
    return out


class _CoinSystem:
    def __init__(self, S: KLBSystem, k_prime: int, delta_p: float, collections: list):
        self.items = S.items
        index = {it: n for n, it in enumerate(self.items)}
        self.flat = [ch for grp in S.groups for ch in grp]
        self.mat = np.array([[index[i] for i in ch] for ch in self.flat], dtype=np.int64)
        self.k_prime = k_prime
        self.k = S.k
        self.delta_p = delta_p
        self.collections = collections
        self.coll_idx = [np.array([index[i] for i in u], dtype=np.int64) for _, u in collections]

    def sample(self, rng):
        return (rng.random(len(self.items)) < 0.5).astype(np.int8)

    def find_violated(self, coins):
        surv = coins[self.mat].sum(axis=1)
        low = np.flatnonzero(surv < self.k_prime)
        if low.size:
            s = int(low[0])
            return Violation(("B1", s), tuple(self.mat[s].tolist()))
        for (q, _), idx in zip(self.collections, self.coll_idx):
            if int(coins[idx].sum()) > len(q) * self.delta_p * self.k / 2.0 + QUOTA_FUZZ:
                return Violation(("B", q), tuple(idx.tolist()))
        return None

    def redraw(self, coins, vbl, rng):
        idx = np.fromiter(vbl, dtype=np.int64)
        coins[idx] = (rng.random(idx.size) < 0.5).astype(np.int8)


def reduce_k(S: KLBSystem, gamma: float, rng: np.random.Generator, *, c_k: int = CORE_MULTIPLIER,
             k_prime: int | None = None, budget: int = COLLECTION_BUDGET, cap_factor: float = 50.0,
             cap: int | None = None):
    """Keep each item with probability 1/2 and cut every set to its k′ lowest surviving ids.

    Core events: B_1 (a set keeps fewer than k′ items) and, for connected
    collections Q of i ≤ L_core sets from distinct groups with union at most
    iγk, "more than iδ′k/2 items of the union survive".
    Returns ``(S′, ReductionStep)``.
    """
    k = S.k
    if k < 2:
        raise ValueError("reduce_k needs k ≥ 2")
    kp = reduce_k_kprime(k) if k_prime is None else int(k_prime)
    if not 1 <= kp <= k:
        raise ValueError(f"k' = {kp} outside 1..{k}")
    lg = math.log2(k)
    delta_p = gamma + lg * math.sqrt(gamma / k) if gamma > 0 else 0.0
    L_core = core_collection_length(S.set_count, k, c_k)
    collections = enumerate_collections(S, gamma, L_core, budget) if gamma > 0 else []
    system = _CoinSystem(S, kp, delta_p, collections)
    x1 = 2.0 ** (-10.0 * lg)
    if cap is None:
        cap = implicit_cap(len(system.items), 10.0 * lg * max(L_core, 1) + 1.0, x1, cap_factor=cap_factor)
    report, _ = mt_run_implicit(system, cap, rng)
    coins = report.assignment
    alive = {it for it, c in zip(system.items, coins.tolist()) if c}
    groups = tuple(tuple(tuple([i for i in ch if i in alive][:kp]) for ch in grp) for grp in S.groups)
    S2 = KLBSystem(groups, kp, S.child_ids)
    step = ReductionStep(
        "reduce-k",
        {"k": k, "k_prime": kp, "gamma_before": gamma, "gamma_after": gamma_forward(gamma, k, kp),
         "gamma_after_chain": gamma_chain_step(gamma, k), "delta_prime": delta_p,
         "L_core": L_core, "collections": len(collections), "x1": x1},
        sorted(alive),
        report.resample_count,
    )
    return S2, step


def reduce_k_postcheck(S: KLBSystem, step: ReductionStep, budget: int = COLLECTION_BUDGET) -> bool:
    """Re-evaluate B_1 and every enumerated collection against the surviving items."""
    p = step.params
    alive = set(step.survivors)
    for grp in S.groups:
        for ch in grp:
            if sum(1 for i in ch if i in alive) < p["k_prime"]:
                return False
    if p["gamma_before"] <= 0:
        return True
    for q, union in enumerate_collections(S, p["gamma_before"], p["L_core"], budget):
        if sum(1 for i in union if i in alive) > len(q) * p["delta_prime"] * S.k / 2.0 + QUOTA_FUZZ:
            return False
    return True


# ------------------------------------------------------------ flow checks

def quota(gamma: float, k: int) -> int:
    return math.floor(gamma * k + QUOTA_FUZZ)


@dataclass
class FlowOutcome:
    value: int
    demand: int
    assignment: list | None
    cut_value: int

    @property
    def feasible(self) -> bool:
        return self.value == self.demand


def assignment_flow(S: KLBSystem, f: Sequence[int], q: int) -> FlowOutcome:
    """Max flow source → chosen children (cap q) → own items (1) → sink (1)."""
    if len(f) != S.p:
        raise ValueError("choice function must cover every group")
    chosen = [S.groups[g][f[g]] for g in range(S.p)]
    items = sorted({i for ch in chosen for i in ch})
    index = {it: 1 + S.p + n for n, it in enumerate(items)}
    src, sink = 0, 1 + S.p + len(items)
    net = FlowNetwork(sink + 1)
    child_edges = []
    for g, ch in enumerate(chosen):
        net.add_edge(src, 1 + g, q)
        child_edges.append([(it, net.add_edge(1 + g, index[it], 1)) for it in ch])
    for it in items:
        net.add_edge(index[it], sink, 1)
    value = net.max_flow(src, sink)
    demand = q * S.p
    side = net.source_side(src)
    assignment = None
    if value == demand:
        assignment = [tuple(sorted(it for it, e in edges if net.flow_on(e))) for edges in child_edges]
    return FlowOutcome(value, demand, assignment, net.cut_value(side))


def check_gamma_good(S: KLBSystem, f: Sequence[int], gamma: float) -> list | None:
    """Disjoint ``⌊γk⌋``-item shares for the chosen children, or None."""
    q = quota(gamma, S.k)
    if q == 0:
        return [() for _ in range(S.p)]
    return assignment_flow(S, f, q).assignment


def verify_assignment(S: KLBSystem, f: Sequence[int], assignment: Sequence[Sequence[int]], q: int) -> None:
    """Raise AssertionError unless shares are disjoint, owned and of size at least q."""
    if len(f) != S.p or len(assignment) != S.p:
        raise AssertionError("choice function or assignment is not total")
    used: set = set()
    for g, share in enumerate(assignment):
        own = set(S.groups[g][f[g]])
        if len(share) < q:
            raise AssertionError(f"group {g} received {len(share)} < {q} items")
        if not set(share) <= own:
            raise AssertionError(f"group {g} received items outside its chosen set")
        if used & set(share):
            raise AssertionError(f"group {g} shares items with another group")
        used |= set(share)


def base_quota(S: KLBSystem) -> int:
    """``⌊k/⌈βl⌉⌋``, with ``⌈βl⌉`` the largest item multiplicity."""
    return S.k // S.max_occurrence


def base_case(S: KLBSystem):
    """First child per group and a flow assignment of ``⌊k/⌈βl⌉⌋`` items each.

    Any i chosen sets cover at least ``ik/⌈βl⌉`` distinct items, so Hall's
    condition guarantees the flow saturates.
    Returns ``(f, assignment, q)``.
    """
    f = [0] * S.p
    q = base_quota(S)
    if q == 0:
        return f, [() for _ in range(S.p)], 0
    out = assignment_flow(S, f, q)
    if not out.feasible:
        raise FlowInfeasible(f"flow {out.value} below demand {out.demand}")
    return f, out.assignment, q


def best_quota(S: KLBSystem, f: Sequence[int]) -> int:
    """Largest q for which the chosen children can all receive q items."""
    lo, hi = 0, S.k
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if assignment_flow(S, f, mid).feasible:
            lo = mid
        else:
            hi = mid - 1
    return lo


# --------------------------------------------------------------- pipeline

@dataclass
class PlannedStep:
    kind: str
    size_before: int
    size_after: int
    gamma_before: float = 0.0
    gamma_after: float = 0.0


def plan_schedule(S: KLBSystem, c: int = LOOP_THRESHOLD,
                  l_target: Callable[[int], int] | None = None):
    """Reduction order and planned γ values, fixed before any randomness.

    Rounds run while l > c: reduce-l when l > k, reduce-k otherwise. A
    reduce-l round that cannot shrink l, or a reduce-k round whose k′ would
    fall below ``⌈βl⌉`` (leaving a zero base quota), ends the reductions.
    Returns ``(steps, base_gamma)``.
    """
    k, l, beta = S.k, S.l, S.beta
    steps: list = []
    while l > c:
        if l > k:
            lp = reduce_l_size(l) if l_target is None else min(l, int(l_target(l)))
            if lp >= l:
                break
            steps.append(PlannedStep("reduce-l", l, lp))
            beta *= 1.0 + 1.0 / math.log2(l)
            l = lp
        else:
            if k < 2:
                break
            kp = reduce_k_kprime(k)
            if kp < 1 or kp < math.ceil(beta * l - QUOTA_FUZZ):
                break
            steps.append(PlannedStep("reduce-k", k, kp))
            k = kp
    base_q = k // math.ceil(beta * l - QUOTA_FUZZ)
    gamma = base_q / k
    for st in reversed(steps):
        st.gamma_after = gamma
        if st.kind == "reduce-k":
            gamma = gamma_backward(gamma, st.size_before, st.size_after)
        st.gamma_before = gamma
    return steps, base_q / k


@dataclass
class SantaResult:
    f: list
    assignment: list
    gamma_final: float
    quota: int
    gamma_achieved: float
    trace: list
    attempts: int
    base_quota: int
    base_flow: int
    base_system: KLBSystem | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "f": self.f,
            "assignment": [list(a) for a in self.assignment],
            "gamma_final": self.gamma_final,
            "quota": self.quota,
            "gamma_achieved": self.gamma_achieved,
            "attempts": self.attempts,
            "base_quota": self.base_quota,
            "base_flow": self.base_flow,
            "trace": [st.to_dict() for st in self.trace],
        }


def run_pipeline(S: KLBSystem, rng: np.random.Generator, c: int = LOOP_THRESHOLD,
                 l_target: Callable[[int], int] | None = None, c_k: int = CORE_MULTIPLIER):
    """One attempt: reductions, base case, map back. Returns a SantaResult or None."""
    plan, _ = plan_schedule(S, c, l_target)
    cur = S
    trace = []
    for st in plan:
        if st.kind == "reduce-l":
            cur, step = reduce_l(cur, rng, target_l=st.size_after)
            step.params["gamma"] = st.gamma_before
        else:
            cur, step = reduce_k(cur, st.gamma_before, rng, c_k=c_k, k_prime=st.size_after)
        trace.append(step)
    f_small, shares_small, q_base = base_case(cur)
    base_flow = sum(len(sh) for sh in shares_small)
    gamma_final = plan[0].gamma_before if plan else q_base / cur.k
    f = [cur.child_ids[g][f_small[g]] for g in range(S.p)]
    q = quota(gamma_final, S.k)
    shares = check_gamma_good(S, f, gamma_final)
    if shares is None:
        return None
    verify_assignment(S, f, shares, q)
    achieved = best_quota(S, f)
    if achieved > q:
        # Report the largest shares the chosen sets admit; they still meet q.
        shares = assignment_flow(S, f, achieved).assignment
        verify_assignment(S, f, shares, q)
    return SantaResult(f, shares, gamma_final, q, achieved / S.k, trace, 1, q_base, base_flow, cur)


def solve(S: KLBSystem, seed: int = 0, *, c: int = LOOP_THRESHOLD, retries: int = 2,
          l_target: Callable[[int], int] | None = None, c_k: int = CORE_MULTIPLIER) -> SantaResult:
    """Pipeline with up to ``retries`` reruns, attempt r on the stream ``(seed, r)``."""
    for attempt in range(retries + 1):
        rng = derive_rng(seed, attempt)
        try:
            res = run_pipeline(S, rng, c, l_target, c_k)
        except CapExceeded as exc:
            log.info("attempt %d hit the resampling cap: %s", attempt, exc)
            continue
        if res is not None:
            res.attempts = attempt + 1
            return res
        log.info("attempt %d produced a choice that is not γ-good", attempt)
    raise RetriesExhausted(f"no success in {retries + 1} attempts")

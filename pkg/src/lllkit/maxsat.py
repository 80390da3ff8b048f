"""MAX-k-SAT for formulas whose clause degrees sit above the local-lemma threshold.

A random subset of clauses (the core) is chosen, over-connected clauses are
eliminated from it, and the resampling loop is run on the core only. The
remaining clauses are left to chance; their violation rate is compared with
``λ(α)·m·2^{-k}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (LLLParams, VariableSpace, build_dependency_graph, check_lll, clause_event,
                   mt_run, resample_bounds, sample_assignment)
from .errors import ConditionViolated, DimacsError, InfeasibleParams

BETA_INFLATION = 1.01
EPS_CONSTANT = 3.0


@dataclass(frozen=True)
class CnfFormula:
    n: int
    clauses: tuple

    def __post_init__(self):
        cl = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for i, c in enumerate(cl):
            if not c:
                raise ValueError(f"clause {i} is empty")
            vs = [abs(l) for l in c]
            if any(l == 0 or v > self.n for l, v in zip(c, vs)):
                raise ValueError(f"clause {i} has a literal out of range")
            if len(set(vs)) != len(vs):
                raise ValueError(f"clause {i} repeats a variable")
        object.__setattr__(self, "clauses", cl)

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def k(self) -> int | None:
        """Common clause width, or None for mixed widths."""
        widths = {len(c) for c in self.clauses}
        return widths.pop() if len(widths) == 1 else None

    def events(self, ids: Sequence[int] | None = None):
        """Clause-violation events for ``ids`` (all clauses by default), renumbered from 0."""
        ids = range(self.m) if ids is None else ids
        return [clause_event(j, self.clauses[i]) for j, i in enumerate(ids)]


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF. Comments (``c``) are skipped; ``%`` ends the clause list."""
    n = m = None
    clauses = []
    cur: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if n is not None:
                raise DimacsError(f"line {lineno}: second header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {line!r}")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {line!r}") from None
            if n < 0 or m < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            continue
        if n is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad token {tok!r}") from None
            if lit == 0:
                if not cur:
                    raise DimacsError(f"line {lineno}: empty clause")
                clauses.append(tuple(cur))
                cur = []
            elif abs(lit) > n:
                raise DimacsError(f"line {lineno}: literal {lit} out of range 1..{n}")
            else:
                cur.append(lit)
    if n is None:
        raise DimacsError("missing header")
    if cur:
        clauses.append(tuple(cur))
    if len(clauses) != m:
        raise DimacsError(f"header announces {m} clauses, found {len(clauses)}")
    try:
        return CnfFormula(n, tuple(clauses))
    except ValueError as exc:
        raise DimacsError(str(exc)) from None


def to_dimacs(formula: CnfFormula) -> str:
    lines = [f"p cnf {formula.n} {formula.m}"]
    lines += [" ".join(map(str, c)) + " 0" for c in formula.clauses]
    return "\n".join(lines) + "\n"


def clause_neighbors(formula: CnfFormula) -> list:
    """For each clause, the sorted ids of other clauses sharing a variable."""
    by_var: dict = {}
    for i, c in enumerate(formula.clauses):
        for l in c:
            by_var.setdefault(abs(l), []).append(i)
    out = []
    for i, c in enumerate(formula.clauses):
        nb = set()
        for l in c:
            nb.update(by_var[abs(l)])
        nb.discard(i)
        out.append(sorted(nb))
    return out


def clause_degrees(formula: CnfFormula) -> list:
    return [len(nb) for nb in clause_neighbors(formula)]


def lambda_bound(alpha: float) -> float:
    """Guaranteed violation factor λ(α)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha <= 1:
        return 0.0
    if alpha >= math.e:
        return 1.0
    return math.e * math.log(alpha) / alpha


def degree_threshold(k: int, alpha: float = 1.0) -> float:
    """``α(2^k/e − 1)``, the admissible maximum clause degree."""
    return alpha * (2.0 ** k / math.e - 1.0)


@dataclass(frozen=True)
class CoreParams:
    alpha: float
    gamma: float
    beta: float
    eps: float
    theta: float
    d: float

    @property
    def elimination_threshold(self) -> float:
        return self.d / (self.alpha * self.beta)


def core_params(alpha: float, d: float) -> CoreParams:
    """γ = 1/α, β = 1.01/(α(1−ln α)), ε = min(1/2, 3√(ln d/d)), θ = (1−ε)/(αβ)."""
    if not 1.0 < alpha < math.e:
        raise InfeasibleParams(f"alpha = {alpha} outside (1, e)")
    if d < 8:
        raise InfeasibleParams(f"degree parameter d = {d} below 8")
    gamma = 1.0 / alpha
    beta = BETA_INFLATION / (alpha * (1.0 - math.log(alpha)))
    eps = min(0.5, EPS_CONSTANT * math.sqrt(math.log(d) / d))
    theta = (1.0 - eps) / (alpha * beta)
    theta = min(max(theta, 0.0), 1.0)
    if not 1.0 / math.e < gamma * math.exp(-gamma / beta):
        raise InfeasibleParams("1/e < γ·exp(−γ/β) fails")
    return CoreParams(alpha, gamma, beta, eps, theta, float(d))


@dataclass
class CoreSelection:
    params: CoreParams
    core: list
    eliminated: list
    candidates: list
    core_degree: list

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def beta(self):
        return self.params.beta

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def eps(self):
        return self.params.eps

    @property
    def theta(self):
        return self.params.theta

    @property
    def d(self):
        return self.params.d


def select_candidates(formula: CnfFormula, params: CoreParams, candidate_mask,
                      neighbors: list | None = None) -> CoreSelection:
    """Eliminate clauses with too many candidate neighbours and form the core."""
    nb = neighbors if neighbors is not None else clause_neighbors(formula)
    cand = [bool(c) for c in candidate_mask]
    limit = params.elimination_threshold
    cand_deg = [sum(cand[j] for j in nb[i]) for i in range(formula.m)]
    eliminated = [i for i in range(formula.m) if cand_deg[i] > limit]
    elim = set(eliminated)
    core = [i for i in range(formula.m) if cand[i] and i not in elim]
    in_core = set(core)
    core_degree = [sum(1 for j in nb[i] if j in in_core) for i in range(formula.m)]
    if any(core_degree[i] > limit for i in core):
        raise AssertionError("core degree exceeds the elimination threshold")
    return CoreSelection(params, core, eliminated, [i for i in range(formula.m) if cand[i]], core_degree)


def build_random_core(formula: CnfFormula, alpha: float, rng: np.random.Generator,
                      d: float | None = None, neighbors: list | None = None) -> CoreSelection:
    """Pick candidates with probability θ, then eliminate over-connected clauses."""
    k = formula.k
    if d is None:
        if k is None:
            raise ValueError("mixed-width formula needs an explicit d")
        d = degree_threshold(k, alpha)
    params = core_params(alpha, d)
    mask = rng.random(formula.m) < params.theta
    return select_candidates(formula, params, mask, neighbors)


def lemma_core_solve(formula: CnfFormula, core: Sequence[int], rng: np.random.Generator,
                     x: float | None = None, *, override: bool = False):
    """Satisfy every clause of ``core`` by resampling core clauses only.

    Default x-values are ``e/2^k``; the step budget is ``n^3·v1``.
    Returns ``(assignment, RunReport)``; the report is None for an empty core.
    """
    space = VariableSpace.uniform(formula.n)
    core = sorted(set(core))
    if not core:
        return sample_assignment(space, rng), None
    events = formula.events(core)
    graph = build_dependency_graph(space, events)
    if x is None:
        k = max(len(formula.clauses[i]) for i in core)
        x = math.e / 2.0 ** k
    params = LLLParams.build(graph, [x] * len(events))
    chk = check_lll(events, graph, params)
    if not chk.ok and not override:
        raise ConditionViolated("core clauses violate the local lemma condition", chk.margins)
    v1 = resample_bounds(params, space.n).v1
    cap = max(1, math.ceil(formula.n ** 3 * v1))
    report, _ = mt_run(space, events, params, "first", rng, graph=graph, cap=cap, override=True)
    return report.assignment, report


def clause_satisfied(clause: Sequence[int], values: Sequence[int]) -> bool:
    for l in clause:
        if (values[abs(l) - 1] == 1) == (l > 0):
            return True
    return False


@dataclass
class ViolationCounts:
    core: int
    noncore: int
    eliminated: int

    @property
    def total(self) -> int:
        return self.core + self.noncore + self.eliminated


def count_violated(formula: CnfFormula, assignment: Sequence[int],
                   selection: CoreSelection | None = None) -> ViolationCounts:
    """Violated clauses split into core / non-core / eliminated buckets.

    Without a selection every clause counts as non-core.
    """
    if len(assignment) != formula.n:
        raise ValueError(f"assignment has {len(assignment)} values for {formula.n} variables")
    core = set(selection.core) if selection else set()
    elim = set(selection.eliminated) if selection else set()
    counts = ViolationCounts(0, 0, 0)
    for i, c in enumerate(formula.clauses):
        if clause_satisfied(c, assignment):
            continue
        if i in core:
            counts.core += 1
        elif i in elim:
            counts.eliminated += 1
        else:
            counts.noncore += 1
    return counts


@dataclass
class MaxSatReport:
    alpha: float
    k: int
    m: int
    n: int
    violated_core: int
    violated_noncore: int
    violated_eliminated: int
    core_size: int
    eliminated_size: int
    resamplings: int
    lambda_alpha: float
    assignment: list = field(repr=False, default_factory=list)
    params: CoreParams | None = None

    @property
    def violated_total(self) -> int:
        return self.violated_core + self.violated_noncore + self.violated_eliminated

    @property
    def fraction(self) -> float:
        return self.violated_total / self.m if self.m else 0.0

    @property
    def expected_bound(self) -> float:
        """``λ(α)·m·2^{-k}``."""
        return self.lambda_alpha * self.m * 2.0 ** -self.k

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha, "k": self.k, "m": self.m, "n": self.n,
            "violated_core": self.violated_core,
            "violated_noncore": self.violated_noncore,
            "violated_eliminated": self.violated_eliminated,
            "violated_total": self.violated_total,
            "fraction": self.fraction,
            "lambda_alpha": self.lambda_alpha,
            "bound": self.expected_bound,
            "core_size": self.core_size,
            "eliminated_size": self.eliminated_size,
            "resamplings": self.resamplings,
        }
        if self.params is not None:
            p = self.params
            out["params"] = {"gamma": p.gamma, "beta": p.beta, "eps": p.eps, "theta": p.theta, "d": p.d}
        return out


def solve_beyond_threshold(formula: CnfFormula, alpha: float, rng: np.random.Generator) -> MaxSatReport:
    """Assignment violating about ``λ(α)·m·2^{-k}`` clauses or fewer.

    α ≤ 1: resampling on every clause (all satisfied). 1 < α < e: core
    selection followed by resampling on the core with x = γα/d. α ≥ e: a
    uniform random assignment.
    """
    k = formula.k
    if k is None:
        raise ValueError("formula must have a common clause width")
    degs = clause_degrees(formula)
    limit = degree_threshold(k, alpha)
    if degs and max(degs) > limit + 1e-9:
        raise ValueError(f"max clause degree {max(degs)} exceeds α(2^k/e − 1) = {limit:.3f}")
    lam = lambda_bound(alpha)
    params = None
    selection = None
    if alpha <= 1:
        assignment, rep = lemma_core_solve(formula, range(formula.m), rng)
    elif alpha >= math.e:
        assignment, rep = sample_assignment(VariableSpace.uniform(formula.n), rng), None
    else:
        selection = build_random_core(formula, alpha, rng, d=limit)
        params = selection.params
        x = params.gamma * alpha / params.d
        assignment, rep = lemma_core_solve(formula, selection.core, rng, x=x)
    counts = count_violated(formula, assignment, selection)
    return MaxSatReport(
        alpha=alpha, k=k, m=formula.m, n=formula.n,
        violated_core=counts.core, violated_noncore=counts.noncore,
        violated_eliminated=counts.eliminated,
        core_size=len(selection.core) if selection else (formula.m if alpha <= 1 else 0),
        eliminated_size=len(selection.eliminated) if selection else 0,
        resamplings=rep.resample_count if rep else 0,
        lambda_alpha=lam, assignment=assignment, params=params,
    )


# -------------------------------------------------------------- generators

def random_kcnf(n: int, m: int, k: int, rng: np.random.Generator) -> CnfFormula:
    """Each clause: k distinct variables uniformly at random, random signs."""
    if k > n:
        raise ValueError("k exceeds n")
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=k, replace=False) + 1
        signs = rng.random(k) < 0.5
        clauses.append(tuple(int(v) if s else -int(v) for v, s in zip(vs, signs)))
    return CnfFormula(n, tuple(clauses))


def regular_kcnf(n: int, m: int, k: int, rng: np.random.Generator, max_tries: int = 1000) -> CnfFormula:
    """k-CNF where every variable occurs ``⌊mk/n⌋`` or ``⌈mk/n⌉`` times.

    Bounded occurrences keep clause degrees at most ``k(⌈mk/n⌉ − 1)``.
    """
    if k > n:
        raise ValueError("k exceeds n")
    slots = np.arange(m * k) % n
    for _ in range(max_tries):
        perm = rng.permutation(slots).reshape(m, k)
        bad = [i for i in range(m) if len(set(perm[i].tolist())) < k]
        # Repair clashes by swapping with random positions.
        for _ in range(50 * m):
            if not bad:
                break
            i = bad.pop()
            row = perm[i]
            if len(set(row.tolist())) == k:
                continue
            j = int(rng.integers(m))
            a, b = int(rng.integers(k)), int(rng.integers(k))
            row_j = perm[j]
            row[a], row_j[b] = row_j[b], row[a]
            for r in (i, j):
                if len(set(perm[r].tolist())) < k:
                    bad.append(r)
        if all(len(set(perm[i].tolist())) == k for i in range(m)):
            signs = rng.random((m, k)) < 0.5
            clauses = tuple(
                tuple(int(v) + 1 if s else -(int(v) + 1) for v, s in zip(perm[i], signs[i]))
                for i in range(m)
            )
            return CnfFormula(n, clauses)
    raise RuntimeError("could not build a clash-free formula")


def planted_kcnf(n: int, m: int, k: int, rng: np.random.Generator):
    """Random k-CNF satisfied by a hidden assignment; returns ``(formula, assignment)``."""
    hidden = (rng.random(n) < 0.5).astype(int).tolist()
    clauses = []
    while len(clauses) < m:
        vs = rng.choice(n, size=k, replace=False)
        signs = rng.random(k) < 0.5
        c = tuple(int(v) + 1 if s else -(int(v) + 1) for v, s in zip(vs, signs))
        if clause_satisfied(c, hidden):
            clauses.append(c)
    return CnfFormula(n, tuple(clauses)), hidden

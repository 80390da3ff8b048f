import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lllkit.core import (BadEvent, DependencyGraph, EventSet, LLLParams, VariableSpace,
                         build_dependency_graph, check_lll, check_lll_exponential, clause_event,
                         compute_T, compute_delta, exact_probability, find_violated, implicit_cap,
                         mt_core_run, mt_run, replay_log, resample_bounds, resample_cap,
                         sample_assignment, select_core)
from lllkit.errors import CapExceeded, ConditionViolated
from lllkit.instances import clique_instance, random_instance, tight_clique_x
from lllkit.rng import derive_rng, derive_seed

from conftest import full_probability, neighbour_sets_quadratic


def coin_event(i, var, value=1, space=None):
    space = space or VariableSpace.uniform(var + 1)
    return BadEvent.from_table(i, [var], [(value,)], space)


# ------------------------------------------------------------------ rng

def test_derive_rng_is_deterministic_and_splits():
    a = derive_rng(7, 3).random(4)
    b = derive_rng(7, 3).random(4)
    c = derive_rng(7, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(7, 3) == derive_seed(7, 3) != derive_seed(7, 4)


# ------------------------------------------------------------ variables

def test_variable_space_validates_weights():
    with pytest.raises(ValueError):
        VariableSpace(((0.5, 0.4),))
    with pytest.raises(ValueError):
        VariableSpace(((),))
    with pytest.raises(ValueError):
        VariableSpace(((1.2, -0.2),))


def test_domain_size_one_has_single_value():
    space = VariableSpace(((1.0,), (1.0,)))
    assert sample_assignment(space, derive_rng(0)) == [0, 0]


def test_fair_coin_frequency():
    space = VariableSpace.uniform(1)
    rng = derive_rng(11)
    ones = sum(sample_assignment(space, rng)[0] for _ in range(100_000))
    assert abs(ones / 100_000 - 0.5) < 0.01


def test_sampling_reproducible_for_fixed_seed():
    space = VariableSpace(((0.2, 0.3, 0.5),) * 6)
    assert sample_assignment(space, derive_rng(5)) == sample_assignment(space, derive_rng(5))


def test_biased_draw_matches_weights():
    space = VariableSpace(((0.1, 0.6, 0.3),))
    rng = derive_rng(3)
    vals = np.array([space.draw([0], rng)[0] for _ in range(60_000)])
    for v, w in enumerate((0.1, 0.6, 0.3)):
        f = np.mean(vals == v)
        assert abs(f - w) < 4 * math.sqrt(w * (1 - w) / 60_000)


# --------------------------------------------------------------- events

@given(st.data())
def test_event_depends_only_on_footprint(data):
    n = data.draw(st.integers(2, 6))
    space = VariableSpace.uniform(n)
    vbl = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
    bad = data.draw(st.lists(st.tuples(*[st.integers(0, 1)] * len(vbl)), max_size=4))
    ev = BadEvent.from_table(0, vbl, bad, space)
    vals = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    flipped = [v if i in vbl else 1 - v for i, v in enumerate(vals)]
    assert ev.holds(vals) == ev.holds(flipped)


@given(st.data())
def test_event_probability_matches_full_enumeration(data):
    n = data.draw(st.integers(1, 5))
    ps = data.draw(st.lists(st.floats(0.05, 0.95), min_size=n, max_size=n))
    weights = tuple((1 - p, p) for p in ps)
    space = VariableSpace(weights)
    vbl = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
    bad = data.draw(st.sets(st.tuples(*[st.integers(0, 1)] * len(vbl)), max_size=4))
    ev = BadEvent.from_table(0, vbl, bad, space)
    oracle = full_probability(weights, ev.holds)
    assert ev.prob == pytest.approx(oracle, abs=1e-12)
    assert exact_probability(space, ev.vbl, ev.predicate) == pytest.approx(oracle, abs=1e-12)


def test_clause_event_is_falsifying_assignment():
    ev = clause_event(0, [1, -3])
    assert ev.vbl == (0, 2)
    assert ev.prob == 0.25
    assert ev.holds([0, 1, 1])
    assert not ev.holds([1, 0, 1])
    assert not ev.holds([0, 0, 0])


def test_event_rejects_bad_footprints():
    space = VariableSpace.uniform(3)
    with pytest.raises(ValueError):
        BadEvent(0, (), lambda t: True, 0.5)
    with pytest.raises(ValueError):
        BadEvent.from_table(0, [0, 1], [(0, 2)], space)
    with pytest.raises(ValueError):
        EventSet([coin_event(1, 0)])


# --------------------------------------------------------------- graph

def test_disjoint_footprints_have_no_edges():
    g = DependencyGraph.from_footprints([(0,), (1,), (2, 3)])
    assert g.edge_count == 0 and g.max_degree == 0


def test_shared_variable_gives_edge_and_clique():
    g = DependencyGraph.from_footprints([(0, 1), (1, 2), (1, 3), (4,)])
    assert g.neighbors(0) == (1, 2)
    assert g.events_on(1) == (0, 1, 2)
    assert g.closed(3) == (3,)


@given(st.lists(st.sets(st.integers(0, 7), min_size=1, max_size=3), min_size=1, max_size=10))
def test_dependency_graph_matches_quadratic_oracle(fps):
    fps = [tuple(sorted(f)) for f in fps]
    g = DependencyGraph.from_footprints(fps)
    assert [list(nb) for nb in g.adjacency] == neighbour_sets_quadratic(fps)


def test_unknown_variable_rejected():
    space = VariableSpace.uniform(2)
    ev = BadEvent(0, (5,), lambda t: True, 0.5)
    with pytest.raises(ValueError):
        build_dependency_graph(space, [ev])


# ------------------------------------------------------ lemma conditions

def isolated(prob):
    space = VariableSpace(((1 - prob, prob),))
    ev = BadEvent.from_table(0, [0], [(1,)], space)
    return space, EventSet([ev]), DependencyGraph.from_footprints([(0,)])


def test_symmetric_condition_on_chained_ksat():
    # Consecutive 6-clauses share one variable: d = 2, p = 1/64 <= (1/3)(2/3)^2.
    k = 6
    space = VariableSpace.uniform(5 * 4 + 1)
    events = EventSet(clause_event(i, [1 + 5 * i + j for j in range(k)]) for i in range(4))
    graph = build_dependency_graph(space, events)
    assert graph.max_degree == 2
    assert check_lll(events, graph, LLLParams.symmetric(graph)).ok


@pytest.mark.parametrize("d", [1, 2, 5, 20])
def test_symmetric_reference_example(d):
    # Star of d + 1 events on a shared variable space with p = 1/(e(d+1)).
    p = 1 / (math.e * (d + 1))
    fps = [(0, 1)] + [(1, 2 + j) for j in range(d)]
    g = DependencyGraph.from_footprints(fps)
    evs = EventSet(BadEvent(i, fp, lambda t: False, p) for i, fp in enumerate(fps))
    assert check_lll(evs, g, LLLParams.build(g, [1 / (d + 1)] * len(fps))).ok


def test_isolated_condition_threshold():
    _, ev, g = isolated(0.3)
    assert check_lll(ev, g, LLLParams.build(g, [0.5])).ok
    _, ev, g = isolated(0.6)
    assert not check_lll(ev, g, LLLParams.build(g, [0.5])).ok


@pytest.mark.parametrize("p, ok", [(0.25, True), (0.49, False)])
def test_exponential_condition_examples(p, ok):
    # 0.25^0.5 = 0.5 <= 0.6; 0.49^0.5 = 0.7 > 0.6.
    _, ev, g = isolated(p)
    chk = check_lll_exponential(ev, g, LLLParams.build(g, [0.6], eps=0.5))
    assert chk.ok is ok


def test_exponential_condition_needs_positive_eps():
    _, ev, g = isolated(0.25)
    with pytest.raises(ValueError):
        check_lll_exponential(ev, g, LLLParams.build(g, [0.6], eps=0.0))


@pytest.mark.parametrize("k, i", [(64, 1), (256, 1), (64, 2)])
def test_exponential_condition_reduce_k_shape(k, i):
    lg = math.log2(k)
    x = 2.0 ** (-10 * i * lg)
    p = 2.0 ** (-20 * i * lg)
    space = VariableSpace(((1 - p, p),))
    ev = EventSet([BadEvent(0, (0,), lambda t: t == (1,), p)])
    g = DependencyGraph.from_footprints([(0,)])
    assert check_lll_exponential(ev, g, LLLParams.build(g, [x], eps=0.5)).ok


def test_compute_delta_examples():
    g1 = DependencyGraph.from_footprints([(0,)])
    assert compute_delta(g1, [0.3]) == pytest.approx(0.3)
    g2 = DependencyGraph.from_footprints([(0,), (0,)])
    assert compute_delta(g2, [0.5, 0.5]) == pytest.approx(0.25)


@given(st.integers(0, 10_000))
def test_delta_at_most_quarter_with_an_edge(seed):
    inst = random_instance(derive_rng(seed), n_vars=10, m=5, monitors=0)
    if inst.graph.edge_count:
        assert inst.params().delta <= 0.25


def test_x_validation():
    g = DependencyGraph.from_footprints([(0,)])
    for bad in ([0.0], [1.0], [0.5, 0.5]):
        with pytest.raises(ValueError):
            LLLParams.build(g, bad)


# -------------------------------------------------------------- T-bound

def test_T_bound_isolated_events():
    n = 8
    g = DependencyGraph.from_footprints([(i,) for i in range(n)])
    tb = compute_T(g, LLLParams.build(g, [0.25] * n), n)
    assert tb.T == pytest.approx(n / 4)
    assert tb.T <= 2 * n and tb.holds


def test_T_bound_single_variable_high_x():
    g = DependencyGraph.from_footprints([(0,)])
    tb = compute_T(g, LLLParams.build(g, [0.9]), 1)
    assert tb.per_variable[0] == pytest.approx(0.9)
    assert tb.per_variable_holds and tb.holds


@pytest.mark.parametrize("s", [2, 3, 5, 8, 16, 40])
def test_T_bound_tight_cliques(s):
    x = tight_clique_x(s)
    inst = clique_instance([s], [x])
    params = inst.params()
    assert check_lll(inst.events, inst.graph, params).ok
    tb = compute_T(inst.graph, params, inst.space.n)
    # Independent arithmetic for the single-variable clique.
    delta = min(x * (1 - x) ** (s - 1), 0.25)
    assert tb.T == pytest.approx(s * x)
    assert tb.T <= math.log2(1 / delta) + 1e-9
    assert tb.holds and tb.per_variable_holds


# -------------------------------------------------------------- budgets

def test_resample_bounds_examples():
    g = DependencyGraph.from_footprints([(0,), (1,), (2,)])
    b = resample_bounds(LLLParams.build(g, [0.25, 0.25, 0.25]), 3)
    assert b.v1 == pytest.approx(0.75 / 0.75)
    assert math.isinf(b.v2)
    b = resample_bounds(LLLParams.build(g, [0.25] * 3, eps=0.1), 3)
    assert b.v2 == pytest.approx(8 * 30 * math.log(max(7.5, 2)))
    assert resample_cap(b, 0.1, 2.0) == math.ceil(2 * b.v2)


def test_resample_bound_symmetric_path():
    # Path of three events: d = 2, x = 1/3, v1 = T/(1 - x) = 1/(2/3).
    g = DependencyGraph.from_footprints([(0, 1), (1, 2), (2, 3)])
    params = LLLParams.symmetric(g)
    assert params.x == (1 / 3, 1 / 3, 1 / 3)
    assert resample_bounds(params, 4).v1 == pytest.approx(1.0 / (2 / 3))


def test_implicit_cap_formula():
    assert implicit_cap(10, 3.0, 0.5, cap_factor=2.0) == math.ceil(2 * 30 / 0.5)
    v2 = 8 * (10 / 0.2) * math.log(max(30 / 0.2, 2))
    assert implicit_cap(10, 3.0, 0.5, eps=0.2, cap_factor=1.0) == math.ceil(v2)


# ------------------------------------------------------------- the loop

def test_find_violated_policies():
    space = VariableSpace.uniform(3)
    evs = EventSet(coin_event(i, i, space=space) for i in range(3))
    assert find_violated(evs, [0, 0, 0]) is None
    assert find_violated(evs, [0, 1, 0]) == 1
    assert find_violated(evs, [0, 1, 1], "first") == 1
    rng = derive_rng(2)
    picks = {find_violated(evs, [0, 1, 1], "uniform", rng) for _ in range(50)}
    assert picks == {1, 2}
    with pytest.raises(ValueError):
        find_violated(evs, [0, 1, 1], "nope")


def test_no_true_event_means_zero_resamplings():
    space = VariableSpace(((1.0, 0.0),) * 3)
    evs = EventSet(coin_event(i, i, space=space) for i in range(3))
    g = build_dependency_graph(space, evs)
    rep, log = mt_run(space, evs, LLLParams.build(g, [0.5] * 3), rng=derive_rng(0))
    assert rep.success and rep.resample_count == 0 and log.steps == []


def test_single_coin_event_mean_matches_geometric():
    # Closed form: resamplings of an isolated event of probability p are
    # geometric with mean p/(1-p).
    p = 0.5
    space, evs, g = isolated(p)
    params = LLLParams.build(g, [0.5])
    counts = [mt_run(space, evs, params, rng=derive_rng(4, t), override=True)[0].resample_count
              for t in range(20_000)]
    mean = float(np.mean(counts))
    sigma = math.sqrt(p / (1 - p) ** 2 / len(counts))
    assert abs(mean - p / (1 - p)) <= 3 * sigma


def test_disjoint_clauses_are_all_satisfied():
    space = VariableSpace.uniform(9)
    evs = EventSet(clause_event(i, [3 * i + 1, -(3 * i + 2), 3 * i + 3]) for i in range(3))
    g = build_dependency_graph(space, evs)
    for t in range(20):
        rep, _ = mt_run(space, evs, LLLParams.build(g, [0.5] * 3), rng=derive_rng(1, t))
        assert rep.success
        assert not any(ev.holds(rep.assignment) for ev in evs)


@pytest.mark.parametrize("policy", ["first", "uniform"])
def test_termination_soundness_and_counts(policy):
    for seed in range(30):
        inst = random_instance(derive_rng(seed), monitors=0)
        rep, log = mt_run(inst.space, inst.events, inst.params(), policy, derive_rng(seed, 1))
        assert rep.success
        assert not any(ev.holds(rep.assignment) for ev in inst.events)
        assert rep.resample_count == sum(rep.per_event.values()) == len(log.steps)


def test_resampling_locality_and_truth_of_logged_events():
    for seed in range(30):
        inst = random_instance(derive_rng(seed), monitors=0)
        params = inst.params()
        rep, log = mt_run(inst.space, inst.events, params, "first", derive_rng(seed, 2))
        snaps = replay_log(inst.space, inst.events, log, derive_rng(seed, 2))
        assert snaps[-1] == rep.assignment
        for t, a in enumerate(log.steps):
            before, after = snaps[t], snaps[t + 1]
            assert inst.events[a].holds(before)
            changed = {i for i, (u, v) in enumerate(zip(before, after)) if u != v}
            assert changed <= set(inst.events[a].vbl)


def test_observer_sees_only_footprint_changes():
    inst = random_instance(derive_rng(99), monitors=0)
    seen = []

    def obs(values, changed):
        seen.append((list(values), changed))

    mt_run(inst.space, inst.events, inst.params(), rng=derive_rng(3), observer=obs)
    assert seen[0][1] is None
    for (prev, _), (cur, vbl) in zip(seen, seen[1:]):
        diff = {i for i, (u, v) in enumerate(zip(prev, cur)) if u != v}
        assert diff <= set(vbl)


def test_condition_violation_and_cap_exceeded():
    # "x0 = 0" and "x0 = 1": one of them always holds.
    space = VariableSpace.uniform(1)
    evs = EventSet([coin_event(0, 0, 0, space), coin_event(1, 0, 1, space)])
    g = build_dependency_graph(space, evs)
    params = LLLParams.build(g, [0.5, 0.5])
    with pytest.raises(ConditionViolated) as info:
        mt_run(space, evs, params, rng=derive_rng(0))
    assert min(info.value.margins) < 0
    with pytest.raises(CapExceeded) as info:
        mt_run(space, evs, params, rng=derive_rng(0), override=True, cap=25)
    rep = info.value.report
    assert rep.status == "cap_exceeded" and rep.resample_count == 25
    assert len(info.value.log.steps) == 25


def test_unknown_policy_rejected():
    space, evs, g = isolated(0.2)
    with pytest.raises(ValueError):
        mt_run(space, evs, LLLParams.build(g, [0.5]), "random")


def test_report_to_dict_excludes_timing_by_default():
    space, evs, g = isolated(0.2)
    rep, _ = mt_run(space, evs, LLLParams.build(g, [0.5]), rng=derive_rng(1))
    assert "wall_time" not in rep.to_dict()
    assert "wall_time" in rep.to_dict(timing=True)


# ------------------------------------------------------------- core runs

def test_select_core_extremes():
    inst = random_instance(derive_rng(1), monitors=0)
    params = inst.params()
    assert select_core(inst.events, 0.0).size == len(inst.events)
    assert select_core(inst.events, 0.999).size == 0
    p = sorted(ev.prob for ev in inst.events)[2]
    core = select_core(inst.events, p, params)
    assert core.size <= core.size_bound
    assert core.size <= params.T / p + 1e-9


def test_full_core_equals_plain_run():
    inst = random_instance(derive_rng(5), monitors=0)
    params = inst.params()
    rep, log = mt_run(inst.space, inst.events, params, rng=derive_rng(8))
    res = mt_core_run(inst.space, inst.events, range(len(inst.events)), params, rng=derive_rng(8))
    assert res.report.assignment == rep.assignment
    assert res.log.steps == log.steps
    assert res.violated_noncore == [] and res.failure_bound == 0


def test_empty_core_reports_initial_violations():
    inst = random_instance(derive_rng(6), monitors=0)
    params = inst.params()
    res = mt_core_run(inst.space, inst.events, [], params, rng=derive_rng(9))
    init = sample_assignment(inst.space, derive_rng(9))
    assert res.report.resample_count == 0
    assert res.violated_noncore == [ev.id for ev in inst.events if ev.holds(init)]
    assert res.failure_bound == pytest.approx(params.T)


def test_core_rejects_foreign_ids():
    inst = random_instance(derive_rng(6), monitors=0)
    with pytest.raises(ValueError):
        mt_core_run(inst.space, inst.events, [99], inst.params())

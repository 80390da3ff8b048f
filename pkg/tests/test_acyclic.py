import itertools
import math

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from lllkit.acyclic import (_RecolorSystem, acyclic_palette, bichromatic_cycles, cycle_x,
                            find_acyclic_violation, girth_requirement, is_proper,
                            mt_acyclic_16, mt_acyclic_girth, vizing_color)
from lllkit.core import mt_run_implicit
from lllkit.data import read_text
from lllkit.errors import CapExceeded, GirthTooSmall
from lllkit.graphs import (Graph, complete_graph, cycle_graph, gnm_graph, girth, parse_edge_list,
                           path_graph, petersen_graph, random_bounded_degree_graph, star_graph,
                           to_edge_list)
from lllkit.rng import derive_rng


def to_nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    for i, (u, v) in enumerate(g.edges):
        G.add_edge(u, v, idx=i)
    return G


def acyclic_oracle(g, coloring) -> bool:
    """Proper and no simple cycle with at most two colours (networkx enumeration)."""
    for v in range(g.n):
        cols = [coloring[e] for _, e in g.adj[v]]
        if len(cols) != len(set(cols)):
            return False
    G = to_nx(g)
    for cyc in nx.simple_cycles(G):
        if len(cyc) < 3:
            continue
        cols = {coloring[G[a][b]["idx"]] for a, b in zip(cyc, cyc[1:] + cyc[:1])}
        if len(cols) <= 2:
            return False
    return True


graphs_st = st.integers(3, 7).flatmap(
    lambda n: st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=12).map(
        lambda es: Graph(n, tuple({(min(a, b), max(a, b)) for a, b in es if a != b}))))


# -------------------------------------------------------------- graphs

def test_edge_list_round_trip_and_errors():
    g = petersen_graph()
    assert parse_edge_list(to_edge_list(g)) == g
    with pytest.raises(ValueError):
        parse_edge_list("3 2\n0 1\n")
    with pytest.raises(ValueError):
        Graph(3, ((0, 0),))
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (1, 0)))


@pytest.mark.parametrize("g, want", [(path_graph(5), math.inf), (cycle_graph(3), 3),
                                     (petersen_graph(), 5), (complete_graph(4), 3),
                                     (cycle_graph(64), 64)])
def test_girth_examples(g, want):
    assert girth(g) == want


@given(graphs_st)
def test_girth_matches_networkx(g):
    G = to_nx(g)
    assert girth(g) == nx.girth(G)


def test_bounded_degree_generator():
    g = random_bounded_degree_graph(200, 10, derive_rng(0))
    assert g.max_degree <= 10 and g.m > 800


# ------------------------------------------------------------- verifier

def test_verifier_examples():
    tri = cycle_graph(3)
    assert find_acyclic_violation(tri, [0, 1, 2]) is None
    c4 = cycle_graph(4)
    v = find_acyclic_violation(c4, [0, 1, 0, 1])
    assert v.kind == "cycle" and sorted(v.edges) == [0, 1, 2, 3] and v.colors == (0, 1)
    v = find_acyclic_violation(path_graph(3), [5, 5])
    assert v.kind == "incident" and v.vertex == 1
    with pytest.raises(ValueError):
        find_acyclic_violation(c4, [0, 1])


def test_verifier_incident_pairs_first():
    # C4 with one clash: the clash is reported even though no 2-cycle exists.
    v = find_acyclic_violation(cycle_graph(4), [0, 0, 1, 2])
    assert v.kind == "incident"


@given(graphs_st, st.data())
def test_verifier_agrees_with_cycle_enumeration(g, data):
    col = data.draw(st.lists(st.integers(0, 3), min_size=g.m, max_size=g.m))
    assert (find_acyclic_violation(g, col) is None) == acyclic_oracle(g, col)


def test_bichromatic_cycles_lists_all():
    # Two disjoint alternating 4-cycles on the same colour pair.
    g = Graph(8, ((0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4)))
    cyc = bichromatic_cycles(g, [0, 1, 0, 1, 0, 1, 0, 1])
    assert len(cyc) == 2
    with pytest.raises(ValueError):
        bichromatic_cycles(g, [0] * 8)


# --------------------------------------------------------------- Vizing

@pytest.mark.parametrize("g", [cycle_graph(6), cycle_graph(7), complete_graph(4), complete_graph(5),
                               star_graph(5), petersen_graph()])
def test_vizing_examples(g):
    col = vizing_color(g)
    assert is_proper(g, col)
    assert len(set(col)) <= g.max_degree + 1


def test_vizing_star_uses_exactly_degree():
    assert len(set(vizing_color(star_graph(5)))) == 5


@given(st.integers(0, 100_000))
def test_vizing_random_graphs(seed):
    rng = derive_rng(seed)
    g = gnm_graph(12, int(rng.integers(0, 40)), rng)
    col = vizing_color(g)
    assert is_proper(g, col)
    assert all(0 <= c <= g.max_degree for c in col)


# ---------------------------------------------------------- 16Δ solver

def test_single_edge_needs_no_resampling():
    res = mt_acyclic_16(path_graph(2), derive_rng(0))
    assert res.report.resample_count == 0 and res.palette == 16


def test_two_edge_path_uses_32_colours():
    res = mt_acyclic_16(path_graph(3), derive_rng(1))
    assert res.palette == 32
    assert res.coloring[0] != res.coloring[1]


def test_palette_formula():
    assert acyclic_palette(1) == 16 and acyclic_palette(10) == 160
    assert cycle_x(2, 32) == pytest.approx((2 / 32) ** 2)


def test_shipped_graph_is_coloured():
    g = parse_edge_list(read_text("graph_n200_d10.txt"))
    res = mt_acyclic_16(g, derive_rng(3))
    assert find_acyclic_violation(g, res.coloring) is None
    assert res.report.success


def test_c4_two_colours_is_impossible():
    c4 = cycle_graph(4)
    # Exhaustive: no acyclic colouring of C4 with two colours exists.
    assert not any(acyclic_oracle(c4, list(col)) for col in itertools.product(range(2), repeat=4))
    with pytest.raises(CapExceeded):
        mt_acyclic_16(c4, derive_rng(0), palette=2, cap=200)


def test_recolouring_only_touches_violation_edges():
    g = random_bounded_degree_graph(40, 4, derive_rng(5))
    system = _RecolorSystem(g, 6)  # small palette so many steps happen
    frames = []

    def obs(state, vbl):
        frames.append((list(state), vbl))

    try:
        mt_run_implicit(system, 500, derive_rng(6), observer=obs)
    except CapExceeded:
        pass
    assert len(frames) > 2
    for (prev, _), (cur, vbl) in zip(frames, frames[1:]):
        changed = {i for i, (a, b) in enumerate(zip(prev, cur)) if a != b}
        assert changed <= set(vbl)


# --------------------------------------------------------- girth variant

def test_girth_variant_rejects_small_girth():
    with pytest.raises(GirthTooSmall):
        mt_acyclic_girth(complete_graph(4), derive_rng(0))


def test_girth_requirement():
    assert girth_requirement(2) == pytest.approx(2 * 2 * math.log2(3))


def test_girth_variant_on_c64():
    g = cycle_graph(64)
    for t in range(5):
        res = mt_acyclic_girth(g, derive_rng(t))
        assert res.palette == 4 and res.colors_used <= 4
        assert find_acyclic_violation(g, res.coloring) is None


def test_type2_events_match_stage1_cycles():
    # Alternating stage-1 colouring of C64 is one bichromatic cycle; it must be
    # broken by switching some edge to the extra colour.
    g = cycle_graph(64)
    stage1 = [i % 2 for i in range(64)]
    assert len(bichromatic_cycles(g, stage1)) == 1
    res = mt_acyclic_girth(g, derive_rng(2), stage1=stage1)
    assert res.info["stage2_bichromatic"] == 1
    assert res.info["switched"] >= 1
    assert find_acyclic_violation(g, res.coloring) is None
    assert set(res.info["events_by_type"]) <= {"type1", "type2", "type3"}


def test_girth_variant_rejects_bad_stage1():
    with pytest.raises(ValueError):
        mt_acyclic_girth(cycle_graph(64), derive_rng(0), stage1=[0] * 64)

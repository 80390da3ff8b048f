import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from lllkit.flow import FlowNetwork
from lllkit.rng import derive_rng


def scipy_max_flow(n, edges, s, t):
    """Independent Edmonds-Karp value (parallel edges merged by summing)."""
    cap = np.zeros((n, n), dtype=np.int32)
    for u, v, c in edges:
        if u != v:
            cap[u, v] += c
    return maximum_flow(csr_matrix(cap), s, t, method="edmonds_karp").flow_value


def test_simple_network():
    net = FlowNetwork(4)
    net.add_edge(0, 1, 3)
    net.add_edge(0, 2, 2)
    net.add_edge(1, 2, 5)
    net.add_edge(1, 3, 2)
    net.add_edge(2, 3, 3)
    assert net.max_flow(0, 3) == 5
    side = net.source_side(0)
    assert 0 in side and 3 not in side
    assert net.cut_value(side) == 5


def test_disconnected_sink():
    net = FlowNetwork(3)
    net.add_edge(0, 1, 4)
    assert net.max_flow(0, 2) == 0


def test_errors():
    net = FlowNetwork(2)
    with pytest.raises(ValueError):
        net.add_edge(0, 1, -1)
    with pytest.raises(ValueError):
        net.max_flow(0, 0)


@given(st.integers(0, 1_000_000))
def test_dinic_matches_scipy_and_min_cut(seed):
    rng = derive_rng(seed)
    n = int(rng.integers(2, 12))
    m = int(rng.integers(0, 40))
    edges = [(int(rng.integers(n)), int(rng.integers(n)), int(rng.integers(0, 6))) for _ in range(m)]
    net = FlowNetwork(n)
    ids = [net.add_edge(u, v, c) for u, v, c in edges if u != v]
    val = net.max_flow(0, n - 1)
    assert val == scipy_max_flow(n, edges, 0, n - 1)
    side = net.source_side(0)
    assert n - 1 not in side
    assert net.cut_value(side) == val
    # Conservation and capacity on the recorded flow.
    bal = [0] * n
    for e, (u, v, c) in zip(ids, [x for x in edges if x[0] != x[1]]):
        f = net.flow_on(e)
        assert 0 <= f <= c
        bal[u] -= f
        bal[v] += f
    assert bal[n - 1] == val and bal[0] == -val
    assert all(b == 0 for b in bal[1:n - 1])

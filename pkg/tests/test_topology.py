import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import floyd_warshall

from chipletdse.errors import UndefinedInputError
from chipletdse.topology import (KINDS, Placement, average_hop_count, build_topology,
                                 full_grid_graph, shortest_hops)


def _fw(g):
    n = g.n_nodes
    a = np.zeros((n, n))
    for e in g.edges:
        a[e.u, e.v] = a[e.v, e.u] = 1
    return floyd_warshall(csr_matrix(a), unweighted=True)


@pytest.mark.parametrize("kind,ports,tol", [("Mesh", 3.6, 0), ("Kite", 4.0, 0),
                                            ("HexaMesh", 4.86, 0.3), ("Floret", 2.1, 0.3)])
def test_router_ports_10x10(kind, ports, tol):
    g = full_grid_graph(kind, 10, 10)
    assert abs(g.average_ports() - ports) <= tol + 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_single_node(kind):
    assert full_grid_graph(kind, 1, 1).average_ports() == 0


def test_link_count_ordering():
    n = {k: full_grid_graph(k, 10, 10).n_lateral_links for k in KINDS}
    assert n["Floret"] < n["Mesh"] <= n["Kite"] < n["HexaMesh"]


def test_vertical_hops():
    pl = Placement(2, 2, 1.0, "Mesh", (0, 0, 0, 0), ((0, 0), (1, 0)))
    g = build_topology("Mesh", pl)
    assert shortest_hops(g, 0, 0) == 0
    assert shortest_hops(g, 0, 4) == 1  # surface 0 to the chiplet beneath it
    # positions 0 and 1 are Mesh neighbours: up, across, down
    assert g.hops[0, 1] == 1
    assert shortest_hops(g, 4, 5) == 3
    assert np.array_equal(g.hops, _fw(g))


def test_average_hops_chains():
    two = build_topology("Floret", Placement(1, 2, 1.0, "Floret", (0, 0)))
    assert average_hop_count(two, np.array([[0, 1], [1, 0]])) == 1.0
    three = build_topology("Floret", Placement(1, 3, 1.0, "Floret", (0, 0, 0)))
    f = np.ones((3, 3)) - np.eye(3)
    assert average_hop_count(three, f) == pytest.approx(4 / 3)
    assert average_hop_count(three, 2 * f) == pytest.approx(4 / 3)


def test_average_hops_zero_traffic():
    g = full_grid_graph("Mesh", 2, 2)
    with pytest.raises(UndefinedInputError):
        average_hop_count(g, np.zeros((4, 4)))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), st.integers(1, 6), st.integers(1, 6), st.data())
def test_bfs_matches_floyd_warshall(kind, rows, cols, data):
    n_s = data.draw(st.integers(1, rows * cols))
    n_e = data.draw(st.integers(0, n_s))
    hosts = data.draw(st.lists(st.integers(0, n_s - 1), min_size=n_e, max_size=n_e, unique=True))
    pl = Placement(rows, cols, 1.0, kind, (0,) * n_s, tuple((h, 0) for h in hosts))
    g = build_topology(kind, pl)
    h = g.hops
    assert np.array_equal(h, _fw(g))
    assert np.array_equal(h, h.T)
    # triangle inequality
    assert (h[:, None, :] <= h[:, :, None] + h[None, :, :]).all()

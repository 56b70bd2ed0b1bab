import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggsim.grid_routing import (GridNetwork, build_tree, check_traffic_bounds, cone_area_bounds,
                                 traffic_bounds, max_load_fraction, node_rows, route)
from oracles import route_exact


@pytest.fixture(scope="module")
def big():
    net = GridNetwork(101)
    return net, build_tree(net)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridNetwork(10)
    with pytest.raises(ValueError):
        GridNetwork.from_n(10)
    assert GridNetwork.from_n(10201).side == 101


def test_route_examples():
    net = GridNetwork(9)
    assert route((1, 0), net) == [(1, 0), (0, 0)]
    assert route((3, 0), net) == [(3, 0), (2, 0), (1, 0), (0, 0)]
    assert route((2, 2), net) == route_exact(2, 2)
    with pytest.raises(ValueError):
        route((5, 0), net)
    with pytest.raises(ValueError):
        route((0, 0), net)


def test_routes_match_rational_geometry_everywhere():
    net = GridNetwork(31)
    for x in range(-15, 16):
        for y in range(-15, 16):
            if (x, y) != (0, 0):
                assert route((x, y), net) == route_exact(x, y), (x, y)


@given(st.integers(-60, 60), st.integers(-60, 60))
def test_route_properties(x, y):
    net = GridNetwork(121)
    if (x, y) == (0, 0):
        return
    path = route((x, y), net)
    assert path == route_exact(x, y)
    assert path[-1] == (0, 0)
    assert len(path) - 1 <= 2 * net.side
    for (ax, ay), (bx, by) in zip(path, path[1:]):
        assert abs(ax - bx) + abs(ay - by) == 1
        assert bx * bx + by * by < ax * ax + ay * ay


def test_three_by_three_tree():
    net = GridNetwork(3)
    tm = build_tree(net)
    xs, ys = net.coords()
    for i in range(net.n):
        if (xs[i], ys[i]) == (0, 0):
            continue
        p = tm.parent[i]
        assert abs(xs[p]) + abs(ys[p]) <= 1
        assert (int(xs[p]), int(ys[p])) == route_exact(int(xs[i]), int(ys[i]))[1]
    neighbours = sum(tm.at(*u) for u in ((1, 0), (-1, 0), (0, 1), (0, -1)))
    assert neighbours == 8


def test_loads_count_routes_exactly():
    net = GridNetwork(15)
    tm = build_tree(net)
    count = np.zeros(net.n, dtype=int)
    xs, ys = net.coords()
    for x, y in zip(xs.tolist(), ys.tolist()):
        if (x, y) == (0, 0):
            continue
        for u in route_exact(x, y)[:-1]:
            count[net.index(*u)] += 1
    sink = net.index(0, 0)
    count[sink] = net.n - 1
    np.testing.assert_array_equal(tm.load, count)


def test_tree_invariants(big):
    net, tm = big
    edges = tm.edges()
    assert len(edges) == net.n - 1
    # acyclic and connected: every node reaches the sink
    sink = net.index(0, 0)
    for start in range(net.n):
        u, steps = start, 0
        while u != sink:
            u = tm.parent[u]
            steps += 1
            assert steps <= 2 * net.side
    assert tm.subtree[sink] == net.n


def test_traffic_conservation_and_corners(big):
    net, tm = big
    h = net.half
    assert sum(tm.at(*u) for u in ((1, 0), (-1, 0), (0, 1), (0, -1))) == net.n - 1
    for c in ((h, h), (-h, h), (h, -h), (-h, -h)):
        assert tm.at(*c) == 1
    sink = net.index(0, 0)
    assert np.all(np.delete(tm.load, sink) >= 1)


def test_rotation_symmetry(big):
    _, tm = big
    g = tm.grid()
    np.testing.assert_array_equal(np.rot90(g), g)


def test_bound_formula_examples():
    lo, hi = traffic_bounds(10201, 3, 4)
    assert (lo, hi) == (721, 2041)
    lo0, hi0 = traffic_bounds(10201, 0, 5)
    assert (lo0, hi0) == (lo, hi)


def test_load_balance(big):
    _, tm = big
    rep = check_traffic_bounds(tm)
    assert rep.checked > 1000
    assert rep.spread <= 4 * 4 / math.sqrt(2)


def test_true_cell_geometry_brackets_loads(big):
    net, tm = big
    rep = check_traffic_bounds(tm)
    assert 0.95 < rep.cone_lower_ratio and rep.cone_upper_ratio < 1.05
    lo, hi = cone_area_bounds(net.n, np.array([3.0]), np.array([4.0]))
    assert lo[0] < hi[0]


def test_annulus_warning(big):
    _, tm = big
    with pytest.warns(UserWarning):
        check_traffic_bounds(tm, annulus=(1, 10201))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_traffic_bounds(tm)


def test_node_rows_and_c2(big):
    net, tm = big
    rows = node_rows(tm)
    assert len(rows) == net.n - 1
    assert set(rows[0]) == {"x", "y", "load", "lower_bound", "upper_bound", "ok"}
    c2 = max_load_fraction(tm)
    assert 0 < c2 < 1
    assert c2 == pytest.approx(0.25, abs=1e-3)

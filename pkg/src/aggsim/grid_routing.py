"""Voronoi-line routing on a square grid with the sink at the centre.

On a unit grid the Voronoi cells are unit squares, so the relays of ``u`` are
the nodes whose squares the segment ``u -> O`` crosses. The segment is tilted
counterclockwise by an infinitesimal angle about ``O``; when it would pass
exactly through a cell corner, the tilt decides which side is crossed first.
Each source's data follows its own route, so the traffic ``T(x, y)`` of a
node is the number of routes through it (its own included). First hops
``parent(u) = route(u)[1]`` form a spanning tree of the grid, but routes do
not nest: the route of ``u`` need not continue along the route of its
parent, so subtree sizes of that tree are reported separately and are not
the traffic.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class GridNetwork:
    """``side x side`` grid, odd side, nodes at integer ``|x|, |y| <= half``."""

    side: int

    def __post_init__(self):
        if self.side < 1 or self.side % 2 == 0:
            raise ValueError(f"grid side must be odd so the sink is a node, got {self.side}")

    @classmethod
    def from_n(cls, n):
        side = math.isqrt(int(n))
        if side * side != n:
            raise ValueError(f"n={n} is not a perfect square")
        return cls(side)

    @property
    def n(self):
        return self.side * self.side

    @property
    def half(self):
        return (self.side - 1) // 2

    def contains(self, u):
        return abs(u[0]) <= self.half and abs(u[1]) <= self.half

    def coords(self):
        """All node coordinates, row-major from ``(-half, -half)``."""
        r = np.arange(-self.half, self.half + 1, dtype=np.int64)
        yy, xx = np.meshgrid(r, r, indexing="ij")
        return xx.ravel(), yy.ravel()

    def index(self, x, y):
        return (np.asarray(y) + self.half) * self.side + (np.asarray(x) + self.half)


def route(u, net):
    """Ordered relay path ``[u, u1, ..., O]`` from ``u`` to the sink."""
    x, y = int(u[0]), int(u[1])
    if not net.contains((x, y)):
        raise ValueError(f"node {u} lies outside the {net.side}x{net.side} grid")
    if x == 0 and y == 0:
        raise ValueError("the sink has no route")
    path = [(x, y)]
    cx, cy = x, y
    while (cx, cy) != (0, 0):
        cx, cy = kernels.next_hop(x, y, cx, cy)
        path.append((int(cx), int(cy)))
    return path


@dataclass
class TrafficMap:
    """Per-node traffic in units of the sensor rate, plus the first-hop tree."""

    net: GridNetwork
    load: np.ndarray
    parent: np.ndarray
    subtree: np.ndarray

    def at(self, x, y):
        return int(self.load[self.net.index(x, y)])

    def grid(self):
        """Loads as a ``side x side`` array indexed ``[y + half, x + half]``."""
        return self.load.reshape(self.net.side, self.net.side)

    def edges(self):
        """Tree edges as ``(child_x, child_y, parent_x, parent_y)`` rows."""
        xs, ys = self.net.coords()
        sink = self.net.index(0, 0)
        child = np.flatnonzero(np.arange(self.net.n) != sink)
        p = self.parent[child]
        return np.column_stack([xs[child], ys[child], xs[p], ys[p]])


def build_tree(net):
    """Route every node to the sink; return traffic and the first-hop tree."""
    xs, ys = net.coords()
    px, py = kernels.route_parents(xs, ys)
    parent = np.asarray(net.index(px, py), dtype=np.int64)
    sink = int(net.index(0, 0))
    parent[sink] = sink
    depth = np.abs(xs) + np.abs(ys)
    subtree = np.asarray(kernels.subtree_loads(parent, depth), dtype=np.int64)
    load = np.asarray(kernels.route_loads(xs, ys, net.half), dtype=np.int64)
    load[sink] = net.n - 1
    return TrafficMap(net, load, parent, subtree)


def traffic_bounds(n, x, y):
    """``floor(n/rho * sqrt(2)/4)`` and ``ceil(n/rho)`` with ``rho = |(x, y)|``."""
    rho = np.hypot(x, y)
    lower = np.floor(n / rho * math.sqrt(2.0) / 4.0)
    upper = np.ceil(n / rho)
    return lower, upper


def cone_area_bounds(n, x, y):
    """Sector areas bracketing ``T`` with the cell's true in/circumradii.

    Inner cone: tangent to the radius-1/2 disk, cut at the inscribed circle
    (squared radius ``n/4``). Outer cone: radius ``sqrt(2)/2``, cut at the
    circumscribed circle (``n/2``). Lattice counts scatter a few percent
    around these areas.
    """
    rho = np.hypot(x, y)
    lower = np.arcsin(np.minimum(1.0, 0.5 / rho)) * (n / 4.0 - rho * rho)
    upper = np.arcsin(np.minimum(1.0, math.sqrt(0.5) / rho)) * (n / 2.0 - rho * rho)
    return lower, upper


@dataclass
class BoundsReport:
    checked: int
    violations: list
    ratio_min: float
    ratio_max: float
    annulus: tuple
    cone_lower_ratio: float = math.nan
    cone_upper_ratio: float = math.nan

    @property
    def ok(self):
        return not self.violations

    @property
    def spread(self):
        return self.ratio_max / self.ratio_min if self.ratio_min > 0 else math.inf


def check_traffic_bounds(tm, net=None, annulus=None):
    """Certify the strict traffic bounds on an annulus of squared radii.

    The default annulus ``[25, n/25]`` stands in for ``1 << x^2 + y^2 << n``.
    Violations are ``(x, y, load, lower, upper)`` tuples. The load-balance
    ratio is ``T * rho / n``; ``cone_lower_ratio`` (min of ``T`` over the
    inner sector area) and ``cone_upper_ratio`` (max over the outer one)
    compare the same loads with :func:`cone_area_bounds`.
    """
    net = net or tm.net
    n = net.n
    lo2, hi2 = annulus if annulus is not None else (25.0, n / 25.0)
    if lo2 < 25 or hi2 > n / 25:
        warnings.warn(f"annulus {(lo2, hi2)} leaves the asymptotic regime [25, n/25]",
                      stacklevel=2)
    xs, ys = net.coords()
    r2 = xs * xs + ys * ys
    sel = np.flatnonzero((r2 >= lo2) & (r2 <= hi2))
    x, y, t = xs[sel], ys[sel], tm.load[sel]
    lower, upper = traffic_bounds(n, x, y)
    bad = ~((lower < t) & (t < upper))
    violations = [(int(a), int(b), int(c), int(d), int(e))
                  for a, b, c, d, e in zip(x[bad], y[bad], t[bad], lower[bad], upper[bad])]
    ratio = t * np.hypot(x, y) / n
    if not sel.size:
        return BoundsReport(0, [], math.nan, math.nan, (lo2, hi2))
    c_lo, c_hi = cone_area_bounds(n, x, y)
    return BoundsReport(
        checked=int(sel.size),
        violations=violations,
        ratio_min=float(ratio.min()),
        ratio_max=float(ratio.max()),
        annulus=(lo2, hi2),
        cone_lower_ratio=float((t / c_lo).min()),
        cone_upper_ratio=float((t / c_hi).max()),
    )


def max_load_fraction(tm):
    """Largest non-sink load over ``n``; the baseline's ``c2``."""
    sink = int(tm.net.index(0, 0))
    loads = np.delete(tm.load, sink)
    return float(loads.max()) / tm.net.n


def node_rows(tm, annulus=None):
    """Per-node CSV records ``x, y, load, lower_bound, upper_bound, ok``.

    ``ok`` is 0 only for nodes inside the certification annulus that break a
    bound; the sink is omitted.
    """
    net = tm.net
    n = net.n
    lo2, hi2 = annulus if annulus is not None else (25.0, n / 25.0)
    xs, ys = net.coords()
    rows = []
    for x, y, t in zip(xs.tolist(), ys.tolist(), tm.load.tolist()):
        if x == 0 and y == 0:
            continue
        lower, upper = traffic_bounds(n, x, y)
        inside = lo2 <= x * x + y * y <= hi2
        ok = (not inside) or (lower < t < upper)
        rows.append({"x": x, "y": y, "load": t, "lower_bound": int(lower),
                     "upper_bound": int(upper), "ok": int(ok)})
    return rows

"""Hot inner loops.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version. The module-level names (``cluster_x``,
``route_parents`` ...) point at the numba build unless ``AGGSIM_NUMBA=0``.
Both builds are always importable as ``<name>_numba`` / ``<name>_numpy`` so
tests and the benchmark can compare them.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit


# ---------------------------------------------------------------------------
# fading-channel synthesis + decision statistic for one cluster
# ---------------------------------------------------------------------------

def _trapz_weights(nbins, df):
    w = np.full(nbins, df)
    w[0] = w[-1] = 0.5 * df
    return w


def cluster_x_numpy(z, window, df, bandwidth):
    """Moving-average channels from raw noise, then the unit-distance X.

    Parameters
    ----------
    z : complex ndarray, shape (m, nbins + window - 1)
        Unit-variance circular complex Gaussian samples.
    window : int
        Moving-average length in bins.
    df, bandwidth : float
        Grid spacing and total bandwidth.

    Returns
    -------
    x : float
        ``(1/B) * int (sum_i |H_i|^2 / sqrt(E_i))^2 df`` at unit distance.
    s_over_m : ndarray
        The inner sum divided by ``m`` on every grid bin.
    """
    m, length = z.shape
    nbins = length - window + 1
    c = np.zeros((m, length + 1), dtype=np.complex128)
    np.cumsum(z, axis=1, out=c[:, 1:])
    h = c[:, window:] - c[:, :nbins]
    power = (h.real * h.real + h.imag * h.imag) / window
    w = _trapz_weights(nbins, df)
    energy = power @ w / bandwidth
    s = (power / np.sqrt(energy)[:, None]).sum(axis=0)
    x = float((s * s) @ w / bandwidth)
    return x, s / m


def _cluster_x_loops(z, window, df, bandwidth):
    m, length = z.shape
    nbins = length - window + 1
    inv = 1.0 / window
    s = np.zeros(nbins)
    power = np.empty(nbins)
    for i in range(m):
        acc = 0.0 + 0.0j
        for j in range(window):
            acc += z[i, j]
        power[0] = (acc.real * acc.real + acc.imag * acc.imag) * inv
        for k in range(1, nbins):
            acc += z[i, k + window - 1] - z[i, k - 1]
            power[k] = (acc.real * acc.real + acc.imag * acc.imag) * inv
        e = 0.5 * (power[0] + power[nbins - 1])
        for k in range(1, nbins - 1):
            e += power[k]
        e *= df / bandwidth
        scale = 1.0 / math.sqrt(e)
        for k in range(nbins):
            s[k] += power[k] * scale
    x = 0.5 * (s[0] * s[0] + s[nbins - 1] * s[nbins - 1])
    for k in range(1, nbins - 1):
        x += s[k] * s[k]
    x *= df / bandwidth
    return x, s / m


# ---------------------------------------------------------------------------
# grid routing: first hop of the tilted source->sink segment, subtree loads
# ---------------------------------------------------------------------------

def route_parents_numpy(xs, ys):
    """Next cell along the tilted segment from each (x, y) toward the origin.

    The segment is rotated counterclockwise by an infinitesimal angle, so
    corner crossings resolve by the first-order term; all arithmetic is on
    integers.
    """
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    sx, sy = np.sign(xs), np.sign(ys)
    bx = 2 * xs - sx
    by = 2 * ys - sy
    n0 = bx * ys - by * xs
    nsign = np.where(n0 != 0, np.sign(n0), 1)
    x_first = nsign * np.sign(xs * ys) > 0
    step_x = np.where(xs == 0, False, np.where(ys == 0, True, x_first))
    px = np.where(step_x, xs - sx, xs)
    py = np.where(step_x, ys, ys - sy)
    return px, py


def next_hop(x, y, cx, cy):
    """Cell after ``(cx, cy)`` on the tilted segment from ``(x, y)`` to O."""
    sx = (x > 0) - (x < 0)
    sy = (y > 0) - (y < 0)
    if cx == 0:
        return cx, cy - sy
    if cy == 0:
        return cx - sx, cy
    bx = 2 * cx - sx
    by = 2 * cy - sy
    n0 = bx * y - by * x
    # a zero leading term is a corner hit; the tilt term is always positive
    nsign = -1 if n0 < 0 else 1
    if nsign * sx * sy > 0:
        return cx - sx, cy
    return cx, cy - sy


def _route_parents_loops(xs, ys):
    n = xs.shape[0]
    px = np.empty(n, dtype=np.int64)
    py = np.empty(n, dtype=np.int64)
    for i in range(n):
        px[i], py[i] = _next_hop_jit(xs[i], ys[i], xs[i], ys[i])
    return px, py


def route_loads_numpy(xs, ys, half):
    """Number of source routes through every node (sources included).

    All sources advance one hop per sweep until they reach the origin.
    Returns a ``(2*half+1)**2`` array indexed ``(y+half)*side + (x+half)``.
    """
    side = 2 * half + 1
    x0 = np.asarray(xs, dtype=np.int64)
    y0 = np.asarray(ys, dtype=np.int64)
    live = (x0 != 0) | (y0 != 0)
    x0, y0 = x0[live], y0[live]
    cx, cy = x0.copy(), y0.copy()
    loads = np.zeros(side * side, dtype=np.int64)
    while x0.size:
        np.add.at(loads, (cy + half) * side + (cx + half), 1)
        sx, sy = np.sign(x0), np.sign(y0)
        bx = 2 * cx - sx
        by = 2 * cy - sy
        n0 = bx * y0 - by * x0
        nsign = np.where(n0 < 0, -1, 1)
        x_first = nsign * sx * sy > 0
        step_x = np.where(cx == 0, False, np.where(cy == 0, True, x_first))
        cx = np.where(step_x, cx - sx, cx)
        cy = np.where(step_x, cy, cy - sy)
        going = (cx != 0) | (cy != 0)
        x0, y0, cx, cy = x0[going], y0[going], cx[going], cy[going]
    return loads


def _route_loads_loops(xs, ys, half):
    side = 2 * half + 1
    loads = np.zeros(side * side, dtype=np.int64)
    for i in range(xs.shape[0]):
        x, y = xs[i], ys[i]
        cx, cy = x, y
        while cx != 0 or cy != 0:
            loads[(cy + half) * side + (cx + half)] += 1
            cx, cy = _next_hop_jit(x, y, cx, cy)
    return loads


def subtree_loads_numpy(parent, depth):
    """Subtree sizes for a parent array whose depth drops by one per hop."""
    loads = np.ones(parent.shape[0], dtype=np.int64)
    for level in range(int(depth.max()), 0, -1):
        idx = np.flatnonzero(depth == level)
        np.add.at(loads, parent[idx], loads[idx])
    return loads


def _subtree_loads_loops(parent, depth):
    n = parent.shape[0]
    loads = np.ones(n, dtype=np.int64)
    order = np.argsort(-depth, kind="mergesort")
    for j in range(n):
        i = order[j]
        if depth[i] > 0:
            loads[parent[i]] += loads[i]
    return loads


# ---------------------------------------------------------------------------
# co-channel lattice sum for the TDMA interference constant
# ---------------------------------------------------------------------------

def _diamond_distance(qx, qy, radius):
    # Euclidean distance from a first-quadrant point to {|x| + |y| <= radius}
    if qx + qy <= radius:
        return 0.0
    if abs(qx - qy) <= radius:
        return (qx + qy - radius) / math.sqrt(2.0)
    if qx > qy:
        return math.hypot(qx - radius, qy)
    return math.hypot(qx, qy - radius)


def _lattice_quadrant_loops(k, alpha, s_lo, s_hi):
    span = 2.0 * (k + 1)
    radius = float(k + 1)
    total = 0.0
    for a in range(1, s_hi + 1):
        b0 = 0 if a > s_lo else s_lo + 1
        for b in range(b0, s_hi + 1):
            d = _diamond_distance(span * a, span * b, radius)
            total += (radius / d) ** alpha
    return total


def lattice_quadrant_numpy(k, alpha, s_lo, s_hi):
    """Sum of ``((k+1)/dist)^alpha`` over lattice points a >= 1, b >= 0 whose
    Chebyshev index lies in ``(s_lo, s_hi]``; dist is measured from the point
    ``2(k+1)(a, b)`` to the Manhattan ball of radius ``k+1``.
    """
    span = 2.0 * (k + 1)
    radius = float(k + 1)
    total = 0.0
    b = np.arange(0, s_hi + 1, dtype=np.float64)
    for a in range(1, s_hi + 1):
        bb = b if a > s_lo else b[s_lo + 1:]
        if bb.size == 0:
            continue
        qx = span * a
        qy = span * bb
        edge = (qx + qy - radius) / math.sqrt(2.0)
        vx = np.hypot(qx - radius, qy)
        vy = np.hypot(qx, qy - radius)
        d = np.where(np.abs(qx - qy) <= radius, edge, np.where(qx > qy, vx, vy))
        total += float(np.sum((radius / d) ** alpha))
    return total


# ---------------------------------------------------------------------------
# worst-receiver SINR of a TDMA schedule on a finite board
# ---------------------------------------------------------------------------

def _schedule_min_sinr_loops(tx, slots, offsets, width, height, alpha, power, noise):
    ntx = tx.shape[0]
    best = np.inf
    violations = 0
    for t in range(ntx):
        for o in range(offsets.shape[0]):
            rx = tx[t, 0] + offsets[o, 0]
            ry = tx[t, 1] + offsets[o, 1]
            if rx < 0 or ry < 0 or rx >= width or ry >= height:
                continue
            d = math.hypot(rx - tx[t, 0], ry - tx[t, 1])
            signal = power * d ** (-alpha)
            interference = 0.0
            for u in range(ntx):
                if u == t or slots[u] != slots[t]:
                    continue
                du = math.hypot(rx - tx[u, 0], ry - tx[u, 1])
                if du == 0.0:
                    violations += 1
                    continue
                interference += power * du ** (-alpha)
            sinr = signal / (noise + interference)
            if sinr < best:
                best = sinr
    return best, violations


def schedule_min_sinr_numpy(tx, slots, offsets, width, height, alpha, power, noise):
    """Minimum SINR over every (transmitter, receiver) pair of a schedule.

    Returns ``(min_sinr, collisions)`` where collisions counts receivers that
    coincide with another concurrent transmitter.
    """
    tx = np.asarray(tx, dtype=np.float64)
    best = np.inf
    violations = 0
    for slot in np.unique(slots):
        active = tx[slots == slot]
        rx = active[:, None, :] + offsets[None, :, :]
        inside = ((rx[..., 0] >= 0) & (rx[..., 1] >= 0)
                  & (rx[..., 0] < width) & (rx[..., 1] < height))
        own = np.hypot(offsets[:, 0], offsets[:, 1])
        signal = power * own ** (-alpha)
        diff = rx[:, :, None, :] - active[None, None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        same = np.eye(active.shape[0], dtype=bool)[:, None, :]
        hit = (dist == 0.0) & ~same
        violations += int(np.count_nonzero(hit & inside[..., None]))
        with np.errstate(divide="ignore"):
            contrib = np.where(same | hit, 0.0, power * dist ** (-alpha))
        interference = contrib.sum(axis=2)
        sinr = signal[None, :] / (noise + interference)
        sinr = np.where(inside, sinr, np.inf)
        best = min(best, float(sinr.min()))
    return best, violations


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    _next_hop_jit = njit(cache=True)(next_hop)
    _diamond_distance = njit(cache=True)(_diamond_distance)
    cluster_x_numba = njit(cache=True, nogil=True)(_cluster_x_loops)
    route_parents_numba = njit(cache=True)(_route_parents_loops)
    subtree_loads_numba = njit(cache=True)(_subtree_loads_loops)
    route_loads_numba = njit(cache=True)(_route_loads_loops)
    lattice_quadrant_numba = njit(cache=True)(_lattice_quadrant_loops)
    schedule_min_sinr_numba = njit(cache=True)(_schedule_min_sinr_loops)
else:  # pragma: no cover
    _next_hop_jit = next_hop
    cluster_x_numba = route_parents_numba = subtree_loads_numba = None
    route_loads_numba = None
    lattice_quadrant_numba = schedule_min_sinr_numba = None

if USE_NUMBA:
    cluster_x = cluster_x_numba
    route_parents = route_parents_numba
    subtree_loads = subtree_loads_numba
    route_loads = route_loads_numba
    lattice_quadrant = lattice_quadrant_numba
    schedule_min_sinr = schedule_min_sinr_numba
else:
    cluster_x = cluster_x_numpy
    route_parents = route_parents_numpy
    subtree_loads = subtree_loads_numpy
    route_loads = route_loads_numpy
    lattice_quadrant = lattice_quadrant_numpy
    schedule_min_sinr = schedule_min_sinr_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

"""Time the numba kernels against their pure-numpy counterparts.

Run ``python3 benchmarks/bench_kernels.py``. Each kernel is warmed up once
(so numba compilation is excluded), then timed over several repeats; the
outputs of the two backends are compared before timing.
"""

import sys
import time

import numpy as np

from aggsim import kernels
from aggsim.agg_protocol import build_schedule
from aggsim.grid_routing import GridNetwork
from aggsim.phy_channel import ChannelParams, channel_stream, draw_noise


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    params = ChannelParams(bandwidth=64.0)
    z = draw_noise(channel_stream(0), 64, params)
    window, df, b = params.window_bins, params.df, params.bandwidth
    yield "cluster_x (m=64, B/delta=64)", \
        lambda f: f(z, window, df, b), kernels.cluster_x_numba, kernels.cluster_x_numpy

    net = GridNetwork(201)
    xs, ys = net.coords()
    yield "route_parents (201x201)", \
        lambda f: f(xs, ys), kernels.route_parents_numba, kernels.route_parents_numpy
    yield "route_loads (201x201)", \
        lambda f: f(xs, ys, net.half), kernels.route_loads_numba, kernels.route_loads_numpy

    yield "lattice_quadrant (extent 1024)", \
        lambda f: f(1, 3.0, 0, 1024), kernels.lattice_quadrant_numba, kernels.lattice_quadrant_numpy

    sched = build_schedule(1, 1)
    cx, cy, slots = sched.board(32)
    tx = np.column_stack([cx, cy]).astype(np.float64)
    offsets = sched.receiver_offsets()
    yield "schedule_min_sinr (32x32, k=1)", \
        lambda f: f(tx, slots.astype(np.int64), offsets, 32, 32, 3.0, 100.0, 1.0), \
        kernels.schedule_min_sinr_numba, kernels.schedule_min_sinr_numpy


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=0)


def main():
    if kernels.cluster_x_numba is None:
        print("numba is not installed; nothing to compare")
        return 1
    print(f"{'kernel':34s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}  match")
    for name, call, fast, slow in cases():
        a, b = call(fast), call(slow)
        t_fast = best_of(lambda: call(fast))
        t_slow = best_of(lambda: call(slow))
        print(f"{name:34s} {1e3 * t_fast:11.2f} {1e3 * t_slow:11.2f} "
              f"{t_slow / t_fast:8.1f}  {'yes' if _same(a, b) else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Three-area aggregation protocol: partition, TDMA reuse and rate scaling.

Area I is the inner diamond of multihop relaying, Area II a ring of ``R x R``
clusters that reach the sink by cooperative time reversal, Area III the outer
multihop zone. Every area runs in its own third of the frame, and each
multihop area uses the broadcast schedule with ``k = 1``, so its links get
``1/16`` of their third: hence the common factor ``1/48``.
"""

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels

AREA_SLOTS = 3
K1_MAX_EXTENT = 4096
K1_REL_TOL = 1e-6


@dataclass(frozen=True)
class AreaPartition:
    """Geometry of the three areas for ``d = n**beta`` and ``R = n**gamma``."""

    n: float
    beta: float
    gamma: float
    alpha: float
    d: float
    R: float
    d_prime: float
    M: float
    m: float
    n1: float
    n2: float
    n3: float
    in_regime: bool

    def as_dict(self):
        return asdict(self)


def partition(n, beta, gamma, alpha):
    """Build the area partition; ``in_regime`` is False when ``beta >= 4 gamma / alpha``."""
    if n < 100:
        raise ValueError(f"partition needs n >= 100, got {n}")
    if not 0 < gamma < beta < 0.5:
        raise ValueError(f"need 0 < gamma < beta < 1/2, got beta={beta}, gamma={gamma}")
    d = float(n) ** beta
    R = float(n) ** gamma
    outer = math.sqrt(2.0) * d + 2.0 * R
    return AreaPartition(
        n=float(n), beta=beta, gamma=gamma, alpha=alpha,
        d=d, R=R,
        d_prime=d + R / math.sqrt(2.0),
        M=4.0 * (math.sqrt(2.0) * d + R) / R,
        m=R * R,
        n1=2.0 * d * d,
        n2=4.0 * math.sqrt(2.0) * d * R + 4.0 * R * R,
        n3=float(n) - outer * outer,
        in_regime=bool(alpha < 4 and beta < 4.0 * gamma / alpha),
    )


# ---------------------------------------------------------------------------
# TDMA broadcast schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TdmaSchedule:
    """Square-cell reuse pattern with period ``2(k+1)`` in each axis."""

    l: int
    k: int

    @property
    def period(self):
        return 2 * (self.k + 1)

    @property
    def frame_length(self):
        return self.period ** 2

    def slot(self, cx, cy):
        p = self.period
        return np.mod(cx, p) + p * np.mod(cy, p)

    def board(self, width, height=None):
        """Cell coordinates and slots of a ``width x height`` board, row-major."""
        height = width if height is None else height
        cy, cx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        cx, cy = cx.ravel(), cy.ravel()
        return cx, cy, self.slot(cx, cy)

    def reuse_violations(self, width, height=None):
        """Co-slot cell pairs closer than one period in Chebyshev distance."""
        cx, cy, slots = self.board(width, height)
        bad = 0
        for s in np.unique(slots):
            x, y = cx[slots == s], cy[slots == s]
            cheb = np.maximum(np.abs(x[:, None] - x[None, :]), np.abs(y[:, None] - y[None, :]))
            np.fill_diagonal(cheb, self.period)
            bad += int(np.count_nonzero(cheb < self.period)) // 2
        return bad

    def receiver_offsets(self):
        """Node offsets within Manhattan distance ``l(k+1)`` of a transmitter."""
        reach = self.l * (self.k + 1)
        r = np.arange(-reach, reach + 1)
        ox, oy = np.meshgrid(r, r, indexing="ij")
        keep = (np.abs(ox) + np.abs(oy) <= reach) & ((ox != 0) | (oy != 0))
        return np.column_stack([ox[keep], oy[keep]]).astype(np.float64)


def build_schedule(l, k):
    if l < 1 or k < 0:
        raise ValueError(f"need l >= 1 and k >= 0, got l={l}, k={k}")
    return TdmaSchedule(int(l), int(k))


@dataclass(frozen=True)
class K1Result:
    value: float
    partial: float
    tail: float
    extent: int
    converged: bool


def _k1_tail(extent, alpha):
    # 8s terms at Chebyshev index s, each at most (2s-1)^-alpha
    return 4.0 * (2.0 * extent - 1.0) ** (2.0 - alpha) / (alpha - 2.0)


@functools.lru_cache(maxsize=64)
def derive_K1(k, alpha, max_extent=K1_MAX_EXTENT, rel_tol=K1_REL_TOL):
    """Worst-case co-channel interference constant of the reuse lattice.

    Each co-channel transmitter at ``2(k+1)(a, b)`` contributes
    ``((k+1)/dist)**alpha`` with ``dist`` its distance to the nearest possible
    receiver, so the sum bounds the interference at any receiver. The lattice
    is summed over growing Chebyshev shells until the analytic tail bound is
    below ``rel_tol`` of the partial sum or ``max_extent`` is reached;
    ``value`` adds the tail bound and is never an underestimate.
    """
    if not alpha > 2:
        raise ValueError(f"lattice sum diverges for alpha <= 2, got {alpha}")
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    partial = 0.0
    lo, hi = 0, 16
    while True:
        hi = min(hi, max_extent)
        partial += 4.0 * kernels.lattice_quadrant(int(k), float(alpha), lo, hi)
        tail = _k1_tail(hi, alpha)
        if tail <= rel_tol * partial or hi >= max_extent:
            return K1Result(partial + tail, partial, tail, hi, tail <= rel_tol * partial)
        lo, hi = hi, 2 * hi


@dataclass(frozen=True)
class RateConstants:
    K_prime: float = 1.0
    K_double_prime: float = 1.0
    K1: float = 0.0

    def __post_init__(self):
        if self.K_prime <= 0 or self.K_double_prime <= 0 or self.K1 < 0:
            raise ValueError("rate constants must be positive")

    @classmethod
    def from_params(cls, params, l=1, k=1, K_prime=1.0):
        """``K'' = [l(k+1)]**alpha + K1 P/(B N0)`` so ``R(1)`` reads ``(B/16) log(1 + P/(B N0 K''))``."""
        k1 = derive_K1(k, params.alpha).value
        snr = params.power_cap / (params.bandwidth * params.noise_density)
        return cls(K_prime, (l * (k + 1)) ** params.alpha + k1 * snr, k1)


def tdma_broadcast_rate(l, k, consts, params):
    """Guaranteed broadcast rate of the reuse schedule (nats/s)."""
    p, b, n0 = params.power_cap, params.bandwidth, params.noise_density
    frame = 4.0 * (k + 1) ** 2
    return b / frame * math.log1p(p / (b * n0 * (l * (k + 1)) ** params.alpha + consts.K1 * p))


def schedule_sinr_rate(l, k, params, board=32):
    """Worst-receiver rate of the schedule simulated on a finite board.

    Every cell transmits in its slot from its corner node; every node within
    Manhattan distance ``l(k+1)`` must decode it. Interference from all other
    co-slot cells on the board is counted exactly.
    """
    sched = build_schedule(l, k)
    cx, cy, slots = sched.board(board)
    tx = np.column_stack([cx * l, cy * l]).astype(np.float64)
    offsets = sched.receiver_offsets()
    span = board * l
    sinr, collisions = kernels.schedule_min_sinr(
        tx, slots.astype(np.int64), offsets, span, span,
        float(params.alpha), float(params.power_cap),
        float(params.bandwidth * params.noise_density))
    rate = params.bandwidth / sched.frame_length * math.log1p(sinr)
    return {"rate": rate, "min_sinr": float(sinr), "collisions": int(collisions),
            "reuse_violations": sched.reuse_violations(board)}


# ---------------------------------------------------------------------------
# per-area constraints
# ---------------------------------------------------------------------------

def multihop_rate(consts, params):
    """Per-link multihop rate inside one area's third of the frame."""
    b = params.bandwidth
    snr = params.power_cap / (b * params.noise_density * consts.K_double_prime)
    return b / (16.0 * AREA_SLOTS) * math.log1p(snr)


def _trc_log(p, consts, params):
    bs = params.symbol_rate
    gain = p.R ** 4 * p.d_prime ** (-params.alpha)
    return math.log1p(gain * params.power_cap / (bs * params.noise_density * consts.K_prime))


def inter_cluster_rate(p, consts, params):
    """Effective cooperative rate of one cluster under TDMA across clusters and areas."""
    return params.symbol_rate / (AREA_SLOTS * p.M) * _trc_log(p, consts, params)


def cluster_traffic(p, lam, exact=True):
    """Traffic a cluster carries: its own ``lam R^2`` plus its share of Area III.

    ``exact=False`` gives the large-``n`` form ``16 n lam / M``.
    """
    if exact:
        return lam * p.R ** 2 + 16.0 * p.n * lam / (p.M + 4.0)
    return 16.0 * p.n * lam / p.M


def area_constraints(p, consts, params):
    """Largest per-sensor rates ``(lam_I, lam_II, lam_III)`` each area sustains."""
    link = multihop_rate(consts, params)
    root_load = math.ceil(2.0 * p.n / (math.sqrt(2.0) * p.d + 2.0 * p.R))
    lam_iii = link / root_load
    lam_i = link / (2.0 * p.d - p.R) ** 2
    lam_ii = params.symbol_rate / (16.0 * AREA_SLOTS * p.n) * _trc_log(p, consts, params)
    return lam_i, lam_ii, lam_iii


def achievable_lambda(p, consts, params):
    return min(area_constraints(p, consts, params))


def genie_upper_bound(n, params):
    b = params.bandwidth
    return b * math.log1p(n * n * params.power_cap / (b * params.noise_density)) / n


SCALING_COLUMNS = ("n", "lambda", "lambda_norm", "lambda_I", "lambda_II", "lambda_III",
                   "binding", "genie", "genie_norm", "in_regime")


def scaling_experiment(n_list, beta, gamma, alpha, params, consts=None, rate_fn=None):
    """Achievable rate and genie bound over ``n_list``, normalised by ``log n / n``.

    ``rate_fn(n)`` replaces the protocol rate (harness self-test). Returns
    ``(rows, spread)`` with ``spread`` the max/min of the normalised rate over
    the top two decades of the sweep.
    """
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    params = params.replace(alpha=alpha)
    consts = consts or RateConstants.from_params(params)
    rows = []
    for n in n_list:
        p = partition(n, beta, gamma, alpha)
        lams = area_constraints(p, consts, params)
        lam = rate_fn(n) if rate_fn is not None else min(lams)
        genie = genie_upper_bound(n, params)
        norm = n / math.log(n)
        rows.append({
            "n": n, "lambda": lam, "lambda_norm": lam * norm,
            "lambda_I": lams[0], "lambda_II": lams[1], "lambda_III": lams[2],
            "binding": ("I", "II", "III")[int(np.argmin(lams))],
            "genie": genie, "genie_norm": genie * norm, "in_regime": int(p.in_regime),
        })
    top = [r["lambda_norm"] for r in rows if r["n"] >= n_list[-1] / 100.0 * (1 - 1e-12)]
    spread = max(top) / min(top) if min(top) > 0 else math.inf
    return rows, spread


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` on ``log x``."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])

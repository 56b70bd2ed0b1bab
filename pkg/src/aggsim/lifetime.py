"""Transmit-power budgets and network lifetime in the low-SNR regime.

Transmitting at rate ``c`` over a link with unit gain and symbol rate ``W``
needs power ``W N0 (exp(c / W) - 1)`` (natural-log Shannon formula). Lifetime
is the time until the busiest non-sink node spends its energy ``e0``; the
sink is externally powered and never counted.
"""

import math
from dataclasses import dataclass

import numpy as np

from .agg_protocol import RateConstants, loglog_slope, partition


def default_lambda(n):
    """Per-sensor rate ``1e-3 / (n log n)``: vanishes faster than ``1/n``."""
    return 1e-3 / (n * math.log(n))


@dataclass(frozen=True)
class LifetimeParams:
    e0: float = 1.0
    lambda_fn: object = default_lambda
    c2: float = 0.25
    alpha: float = 3.0
    beta: float = 0.35
    gamma: float = 0.3

    def __post_init__(self):
        if not self.e0 > 0:
            raise ValueError(f"e0 must be positive, got {self.e0}")
        if not 0 < self.c2 < 1:
            raise ValueError(f"c2 must lie in (0, 1), got {self.c2}")


def shannon_power(rate, symbol_rate, n0):
    """``W N0 (exp(rate/W) - 1)``; ``inf`` once it overflows."""
    x = rate / symbol_rate
    if x > 700.0:
        return math.inf
    return symbol_rate * n0 * math.expm1(x)


def _lifetime(e0, power):
    if power == 0.0:
        return math.inf
    return e0 / power


def baseline_power(n, lp, params):
    lam = lp.lambda_fn(n)
    return shannon_power(lp.c2 * n * lam, params.bandwidth, params.noise_density)


def baseline_lifetime(n, lp, params, asymptotic=False):
    """Lifetime of plain multihop aggregation; ``inf`` when there is no traffic.

    The exact form uses ``B N0 (exp(c2 n lam / B) - 1)``, evaluated in log
    space when the exponent is large; ``asymptotic=True`` uses ``c2 n lam N0``.
    """
    lam = lp.lambda_fn(n)
    if lam == 0:
        return math.inf
    x = lp.c2 * n * lam / params.bandwidth
    if asymptotic:
        return lp.e0 / (lp.c2 * n * lam * params.noise_density)
    if x > 700.0:
        log_power = math.log(params.bandwidth * params.noise_density) + x + math.log1p(-math.exp(-x))
        return math.exp(math.log(lp.e0) - log_power)
    return _lifetime(lp.e0, shannon_power(lp.c2 * n * lam, params.bandwidth, params.noise_density))


@dataclass(frozen=True)
class PowerProfile:
    P_I: float
    P_intra: float
    P_inter: float
    P_II: float
    P_I_linear: float
    P_intra_linear: float
    P_inter_linear: float

    @property
    def P_II_linear(self):
        return self.P_intra_linear + self.P_inter_linear

    @property
    def peak(self):
        return max(self.P_I, self.P_II)


def trc_power_profile(p, lam, consts, params):
    """Per-node transmit power in Areas I and II at per-sensor rate ``lam``.

    An Area II node broadcasts its cluster's traffic inside the cluster and
    joins the cooperative transmission to the sink; an Area I node next to
    the sink relays ``(2d - R)**2`` sensors' data.
    """
    bs, b, n0 = params.symbol_rate, params.bandwidth, params.noise_density
    load = lam * p.R ** 2 + 16.0 * p.n * lam / (p.M + 4.0)
    gain = p.R ** 4 * p.d_prime ** (-params.alpha)
    inter_rate = 48.0 * p.n * lam
    p_intra = shannon_power(load, bs, n0)
    p_inter = consts.K_prime / gain * shannon_power(inter_rate, bs, n0)
    inner = (2.0 * p.d - p.R) ** 2 * lam
    return PowerProfile(
        P_I=shannon_power(inner, b, n0),
        P_intra=p_intra,
        P_inter=p_inter,
        P_II=p_intra + p_inter,
        P_I_linear=n0 * inner,
        P_intra_linear=n0 * load,
        P_inter_linear=n0 * consts.K_prime * inter_rate / gain,
    )


def area2_terms(p, consts, alpha):
    """Linearised ``P_II / (lam N0 n)`` split into own, relayed and cooperative parts."""
    return (p.R ** 2 / p.n,
            16.0 / (p.M + 4.0),
            48.0 * consts.K_prime * p.d_prime ** alpha / p.R ** 4)


def area2_terms_asymptotic(n, alpha, beta, gamma, K_prime=1.0, relay_const=16.0):
    """Power-law form ``(n^(2g-1), c n^-(b-g), 48 K' n^-(4g - a b))``.

    ``M ~ 4 sqrt(2) n^(b-g)`` makes the relayed constant ``16/(4 sqrt 2)``;
    ``relay_const`` selects which constant is used.
    """
    return (n ** (2 * gamma - 1),
            relay_const * n ** (-(beta - gamma)),
            48.0 * K_prime * n ** (-(4 * gamma - alpha * beta)))


def lifetime_exponent(alpha, beta, gamma):
    return min(1 - 2 * beta, 4 * gamma - alpha * beta, beta - gamma)


def trc_lifetime(n, lp, params, consts=None):
    consts = consts or RateConstants()
    p = partition(n, lp.beta, lp.gamma, lp.alpha)
    lam = lp.lambda_fn(n)
    return _lifetime(lp.e0, trc_power_profile(p, lam, consts, params.replace(alpha=lp.alpha)).peak)


def normalized_lifetime(n, lp, params, consts=None):
    """``trc_lifetime * n * lam * N0 / e0``; its slope in ``log n`` is the lifetime exponent."""
    lam = lp.lambda_fn(n)
    return trc_lifetime(n, lp, params, consts) * n * lam * params.noise_density / lp.e0


def fit_lifetime_exponent(n_list, lp, params, consts=None):
    """Regression of log normalised lifetime on log n: ``(slope, c3)``.

    ``c3`` is the constant in ``lifetime = e0 / (c3 n lam N0) * n**slope``.
    """
    y = [normalized_lifetime(n, lp, params, consts) for n in n_list]
    slope, icpt = np.polyfit(np.log(n_list), np.log(y), 1)
    return float(slope), float(math.exp(-icpt))


LIFETIME_COLUMNS = ("n", "lambda", "baseline_lifetime", "trc_lifetime", "ratio",
                    "P_I", "P_intra", "P_inter", "P_II")


def lifetime_ratio_experiment(n_list, lp, params, consts=None):
    """TRC versus baseline lifetime over ``n_list``; ratio is TRC / baseline."""
    consts = consts or RateConstants()
    params = params.replace(alpha=lp.alpha)
    rows = []
    for n in n_list:
        n = float(n)
        p = partition(n, lp.beta, lp.gamma, lp.alpha)
        lam = lp.lambda_fn(n)
        prof = trc_power_profile(p, lam, consts, params)
        base = baseline_lifetime(n, lp, params)
        trc = _lifetime(lp.e0, prof.peak)
        rows.append({"n": n, "lambda": lam, "baseline_lifetime": base, "trc_lifetime": trc,
                     "ratio": trc / base, "P_I": prof.P_I, "P_intra": prof.P_intra,
                     "P_inter": prof.P_inter, "P_II": prof.P_II})
    return rows


def ratio_slope(rows):
    return loglog_slope([r["n"] for r in rows], [r["ratio"] for r in rows])

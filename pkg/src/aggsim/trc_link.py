"""Cooperative TRC link: the decision statistic X, its constants and rate.

``X = (r^-alpha / B) * int (sum_i |H_i(f)|^2 / sqrt(E_i))^2 df`` is the
channel-dependent gain at the sink's matched-filter output. Interference and
noise at that output both scale with X, so the link rate depends on the
channels only through X.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from . import kernels
from ._accel import thread_count
from .phy_channel import (ChannelParams, FadingChannel, GridMismatchError,
                          autocorrelation_phi, channel_stream, draw_noise)

QUAD_POINTS = 10_001
REFINE_TOL = 1e-3


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1`` (unnormalised)."""
    return np.sinc(np.asarray(x, dtype=np.float64) / np.pi)


def hyp2f1_m1m1(z):
    """``2F1(-1, -1; 1; z)``; the series terminates at ``1 + z``."""
    return 1.0 + np.asarray(z, dtype=np.float64)


def hyp2f1_22(z):
    """``2F1(2, 2; 1; z) = (1 + z) / (1 - z)^3`` for ``|z| < 1``."""
    z = np.asarray(z, dtype=np.float64)
    return (1.0 + z) / (1.0 - z) ** 3


def hyp2f1_series(a, b, c, z, terms=400):
    """Direct Gauss series, used to cross-check the closed forms."""
    total, term = 1.0, 1.0
    for k in range(terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0:
            break
    return total


def _channel_matrix(channels, params):
    rows = [c.response if isinstance(c, FadingChannel) else np.asarray(c)
            for c in channels] if not isinstance(channels, np.ndarray) else channels
    h = np.atleast_2d(np.asarray(rows, dtype=np.complex128))
    if h.shape[-1] != params.freq_bins:
        raise GridMismatchError(
            f"channels have {h.shape[-1]} bins, params grid has {params.freq_bins}")
    return h


def compute_x(channels, r, params):
    """Decision statistic X for one cluster at common distance ``r``."""
    if r <= 0:
        raise ValueError("distance r must be positive")
    h = _channel_matrix(channels, params)
    power = np.abs(h) ** 2
    energy = np.trapezoid(power, dx=params.df, axis=1) / params.bandwidth
    if np.any(energy <= 0):
        raise ValueError("zero-energy channel in cluster")
    s = (power / np.sqrt(energy)[:, None]).sum(axis=0)
    x = np.trapezoid(s * s, dx=params.df) / params.bandwidth
    return float(r ** (-params.alpha) * x)


def _trapz_sym(func, half_width, points):
    v = np.linspace(-half_width, half_width, points)
    return float(np.trapezoid(func(v), v))


def k0_constant(params, points=QUAD_POINTS, phi=autocorrelation_phi):
    """``K0 = (1/B) int_{-delta/2}^{delta/2} sinc(2 pi (delta+B) v / (delta B)) phi(v)^2 dv``."""
    b, dl = params.bandwidth, params.coherence_delta
    scale = 2.0 * np.pi * (dl + b) / (dl * b)
    integrand = lambda v: sinc(scale * v) * phi(v, params) ** 2  # noqa: E731
    return _trapz_sym(integrand, 0.5 * dl, points) / b


def k0_refinement_ok(params, points=QUAD_POINTS, tol=REFINE_TOL):
    coarse = k0_constant(params, points)
    fine = k0_constant(params, 2 * points - 1)
    return abs(fine - coarse) <= tol * abs(fine)


def _interference_scale(params):
    if params.alpha <= 2:
        raise ValueError("interference integral diverges for alpha <= 2")
    return 2.0 * np.pi / ((params.alpha - 2.0) * params.rho0 ** (params.alpha - 2.0))


def interference_and_noise(x, params, k0=None):
    """Variances ``(sigma_I^2, sigma_N^2)`` at the matched-filter output."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if k0 is None:
        k0 = k0_constant(params)
    b, dl = params.bandwidth, params.coherence_delta
    sigma_i = _interference_scale(params) * params.power_cap * (1.0 + b / dl) * k0 * x
    sigma_n = b * params.noise_density * x
    return sigma_i, sigma_n


def trc_rate(x, params, k0=None):
    """Rate of a cooperative TRC link (nats/s) given its statistic X.

    Transmit power is the cap ``P_max``.
    """
    if k0 is None:
        k0 = k0_constant(params)
    p = params.power_cap
    denom = params.symbol_rate * params.noise_density + _interference_scale(params) * p * k0
    x = np.asarray(x, dtype=np.float64)
    rate = params.symbol_rate * np.log1p(p * x / denom)
    return float(rate) if rate.ndim == 0 else rate


def concentration_rate(m, r, params, k_mu=1.0, k0=None):
    """Rate with X replaced by its concentration value ``K_mu m^2 r^-alpha``."""
    return trc_rate(k_mu * m * m * r ** (-params.alpha), params, k0)


def k_sigma_closed_form(params, points=QUAD_POINTS, phi=autocorrelation_phi):
    """Large-bandwidth variance constant, evaluated exactly as printed.

    ``(8/B) [int_0^{B/2} (1 - f/B) (1 - phi^2) 2F1(-1,-1;1;phi^2) df - 1]``.
    The printed expression does not reproduce Monte Carlo variances; see
    :func:`k_sigma_moment` for the value that does.
    """
    b = params.bandwidth
    f = _dense_grid(0.0, b / 2, params.coherence_delta, points)
    p2 = phi(f, params) ** 2
    integral = np.trapezoid((1.0 - f / b) * (1.0 - p2) * hyp2f1_m1m1(p2), f)
    return float(8.0 / b * (integral - 1.0))


def energy_variance(params, points=QUAD_POINTS, phi=autocorrelation_phi, power=3):
    """Variance of the per-channel energy ``E_i``.

    ``(2/B) int_0^B (1 - f/B) (1 - phi^2)^power 2F1(2,2;1;phi^2) df - 1``.
    ``power=3`` is the Gaussian fourth-moment identity
    ``(1-z)^3 2F1(2,2;1;z) = 1 + z`` and matches Monte Carlo; ``power=4``
    is the form carried over from the derivation and yields a negative value.
    """
    b = params.bandwidth
    f = _dense_grid(0.0, b, params.coherence_delta, points)
    p2 = phi(f, params) ** 2
    # (1-z)^power * (1+z)/(1-z)^3 without the 0*inf at z = 1
    kernel = (1.0 + p2) * (1.0 - p2) ** (power - 3)
    integral = np.trapezoid((1.0 - f / b) * kernel, f)
    return float(2.0 / b * integral - 1.0)


def k_sigma_moment(params, normalized=True, points=QUAD_POINTS, phi=autocorrelation_phi):
    """Leading-order ``K_sigma`` from a first-order expansion of X in m.

    With per-channel energy normalisation ``X ~ m^2 + m sum_i (E_i - 1)`` so
    ``K_sigma = var(E_i)``; without it the linear term doubles and
    ``K_sigma = 4 var(E_i)``.
    """
    b = params.bandwidth
    f = _dense_grid(0.0, b, params.coherence_delta, points)
    var_e = 2.0 / b * float(np.trapezoid((1.0 - f / b) * phi(f, params) ** 2, f))
    return var_e if normalized else 4.0 * var_e


def _dense_grid(lo, hi, delta, points):
    # resolve the correlation support finely; the tail is smooth and linear
    knee = min(hi, lo + 0.5 * delta)
    inner = np.linspace(lo, knee, points)
    if knee >= hi:
        return inner
    outer = np.linspace(knee, hi, max(3, points // 10))
    return np.concatenate([inner, outer[1:]])


@dataclass(frozen=True)
class TrcLinkConfig:
    params: ChannelParams
    m: int
    r: float = 1.0
    trials: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("cluster needs m >= 1 nodes")
        if not self.r > 0:
            raise ValueError("distance r must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class TrcLinkStats:
    """Monte Carlo summary of X against its predicted moments."""

    m: int
    trials: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    predicted_mean: float
    predicted_variance: float
    predicted_variance_moment: float
    k_mu_appendix: float
    k_sigma: float
    k_sigma_moment: float
    k0: float
    k0_refined_ok: bool
    concentration: float
    rate_mean: float
    rate_variance: float
    x_min: float

    def as_dict(self):
        return asdict(self)


def sample_x(config, threads=None, return_profile=False):
    """Draw ``config.trials`` clusters and return X for each.

    Trial ``t`` uses its own stream derived from ``(master_seed, t)``, so the
    output is independent of how trials are spread over workers.
    """
    params = config.params
    params.check_resolution()
    window, df, b = params.window_bins, params.df, params.bandwidth
    scale = config.r ** (-params.alpha)

    def one(t):
        z = draw_noise(channel_stream(config.master_seed, t), config.m, params)
        return kernels.cluster_x(z, window, df, b)

    workers = min(thread_count() if threads is None else threads, config.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.trials)))
    else:
        results = [one(t) for t in range(config.trials)]
    xs = np.array([x for x, _ in results]) * scale
    if not return_profile:
        return xs
    profile = np.mean([s for _, s in results], axis=0)
    return xs, profile


def ks_normal_distance(samples):
    """Kolmogorov-Smirnov distance of standardised samples from N(0, 1)."""
    z = (samples - samples.mean()) / samples.std(ddof=1)
    return float(stats.kstest(z, "norm").statistic)


def monte_carlo_x(config, threads=None):
    """Monte Carlo moments of X with the closed-form predictions alongside."""
    params = config.params
    xs, profile = sample_x(config, threads, return_profile=True)
    m, alpha, r = config.m, params.alpha, config.r
    k0 = k0_constant(params)
    k_sigma = k_sigma_closed_form(params)
    k_sigma_m = k_sigma_moment(params)
    # K_mu as the squared per-frequency mean of |H|^2 / sqrt(E), integrated
    k_mu_app = float(np.trapezoid(profile ** 2, dx=params.df) / params.bandwidth)
    normed = xs / (m * m)
    rates = trc_rate(xs, params, k0)
    n = xs.size
    return TrcLinkStats(
        m=m,
        trials=n,
        mean=float(xs.mean()),
        variance=float(xs.var(ddof=1)) if n > 1 else 0.0,
        skewness=float(stats.skew(xs)) if n > 2 else math.nan,
        excess_kurtosis=float(stats.kurtosis(xs)) if n > 3 else math.nan,
        ks_distance=ks_normal_distance(xs) if n > 2 else math.nan,
        predicted_mean=m * m * r ** (-alpha),
        predicted_variance=k_sigma * m ** 3 * r ** (-2 * alpha),
        predicted_variance_moment=k_sigma_m * m ** 3 * r ** (-2 * alpha),
        k_mu_appendix=k_mu_app,
        k_sigma=k_sigma,
        k_sigma_moment=k_sigma_m,
        k0=k0,
        k0_refined_ok=k0_refinement_ok(params),
        concentration=float(normed.var(ddof=1) / normed.mean() ** 2) if n > 1 else 0.0,
        rate_mean=float(np.mean(rates)),
        rate_variance=float(np.var(rates, ddof=1)) if n > 1 else 0.0,
        x_min=float(xs.min()),
    )


CSV_COLUMNS = ("m", "B", "delta", "alpha", "r", "trials", "sample_mean", "sample_var",
               "predicted_mean", "predicted_var", "ks_distance", "k0", "rate_mean")


def summary_row(config, st):
    """One CSV record in :data:`CSV_COLUMNS` order."""
    p = config.params
    return {
        "m": config.m, "B": p.bandwidth, "delta": p.coherence_delta, "alpha": p.alpha,
        "r": config.r, "trials": st.trials, "sample_mean": st.mean,
        "sample_var": st.variance, "predicted_mean": st.predicted_mean,
        "predicted_var": st.predicted_variance, "ks_distance": st.ks_distance,
        "k0": st.k0, "rate_mean": st.rate_mean,
    }

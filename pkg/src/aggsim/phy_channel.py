"""Short-range path loss and long-range WSSUS Rayleigh fading in frequency.

A fading response is synthesised by moving-average filtering unit circular
complex Gaussians with a rectangular window of width ``delta/2``. The
resulting autocorrelation over frequency is the triangle
``max(0, 1 - 2|f|/delta)``: unit at zero lag and exactly zero beyond the
coherence bandwidth.
"""

import math
from dataclasses import dataclass, field

import numpy as np

MIN_BINS_PER_COHERENCE = 8


class ResolutionError(ValueError):
    """Frequency grid too coarse to resolve the coherence bandwidth."""


class GridMismatchError(ValueError):
    """Channel samples do not live on the parameter grid."""


@dataclass(frozen=True)
class ChannelParams:
    """Physical-layer constants shared by every link.

    ``freq_bins`` defaults to eight bins per coherence interval ``delta/2``
    across the closed band ``[-B/2, B/2]``.
    """

    bandwidth: float = 64.0
    coherence_delta: float = 1.0
    alpha: float = 3.0
    noise_density: float = 1.0
    power_cap: float = 1.0
    freq_bins: int | None = None
    rho0: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.coherence_delta > 0:
            raise ValueError(f"coherence_delta must be positive, got {self.coherence_delta}")
        if not self.alpha > 2:
            raise ValueError(f"path-loss exponent must exceed 2, got {self.alpha}")
        if self.noise_density < 0 or self.power_cap < 0:
            raise ValueError("noise_density and power_cap must be nonnegative")
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if self.freq_bins is None:
            intervals = math.ceil(2.0 * self.bandwidth / self.coherence_delta - 1e-9)
            object.__setattr__(self, "freq_bins", intervals * MIN_BINS_PER_COHERENCE + 1)
        if int(self.freq_bins) != self.freq_bins or self.freq_bins < 2:
            raise ValueError(f"freq_bins must be an integer >= 2, got {self.freq_bins}")
        object.__setattr__(self, "freq_bins", int(self.freq_bins))

    @property
    def df(self):
        return self.bandwidth / (self.freq_bins - 1)

    @property
    def freqs(self):
        return np.linspace(-self.bandwidth / 2, self.bandwidth / 2, self.freq_bins)

    @property
    def bins_per_coherence(self):
        return 0.5 * self.coherence_delta / self.df

    @property
    def window_bins(self):
        """Moving-average length realising the ``delta/2`` correlation support."""
        return max(1, int(round(self.bins_per_coherence)))

    @property
    def symbol_rate(self):
        """``delta*B/(delta+B)``: ISI-free symbol rate on a fading link."""
        return self.coherence_delta * self.bandwidth / (self.coherence_delta + self.bandwidth)

    def check_resolution(self):
        if self.bins_per_coherence < MIN_BINS_PER_COHERENCE - 1e-9:
            raise ResolutionError(
                f"{self.bins_per_coherence:.3g} bins per coherence interval; "
                f"need at least {MIN_BINS_PER_COHERENCE}")

    def replace(self, **changes):
        from dataclasses import replace

        if "bandwidth" in changes or "coherence_delta" in changes:
            changes.setdefault("freq_bins", None)
        return replace(self, **changes)


@dataclass
class FadingChannel:
    """Sampled frequency response of one node-to-sink link."""

    response: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.response = np.asarray(self.response, dtype=np.complex128)
        if self.response.ndim != 1:
            raise ValueError("response must be one-dimensional")

    def __len__(self):
        return self.response.shape[0]


def autocorrelation_phi(lag_f, params):
    """Triangular frequency autocorrelation; zero outside ``|f| <= delta/2``."""
    lag = np.abs(np.asarray(lag_f, dtype=np.float64))
    out = np.maximum(0.0, 1.0 - 2.0 * lag / params.coherence_delta)
    return float(out) if out.ndim == 0 else out


def channel_stream(seed, index=None):
    """Generator for ``seed`` or for stream ``index`` under a master seed."""
    if index is None:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    seq = np.random.SeedSequence(seed, spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(seq))


def draw_noise(rng, count, params):
    """Raw unit circular complex Gaussians, shape ``(count, bins + window - 1)``."""
    length = params.freq_bins + params.window_bins - 1
    raw = rng.standard_normal((count, length, 2))
    return raw.view(np.complex128)[..., 0] * math.sqrt(0.5)


def moving_average(z, window):
    """Unit-power moving average of width ``window`` along the last axis."""
    z = np.atleast_2d(z)
    nbins = z.shape[-1] - window + 1
    c = np.zeros(z.shape[:-1] + (z.shape[-1] + 1,), dtype=np.complex128)
    np.cumsum(z, axis=-1, out=c[..., 1:])
    return (c[..., window:] - c[..., :nbins]) / math.sqrt(window)


def sample_channels(params, rng, count):
    """``count`` independent channel responses as a ``(count, bins)`` array."""
    params.check_resolution()
    return moving_average(draw_noise(rng, count, params), params.window_bins)


def sample_channel(params, rng_seed):
    """One fading realisation; identical for identical ``rng_seed``."""
    return FadingChannel(sample_channels(params, channel_stream(rng_seed), 1)[0])


def path_loss_gain(distance, params):
    """Deterministic power gain ``distance**-alpha``."""
    d = np.asarray(distance, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    g = d ** (-params.alpha)
    return float(g) if g.ndim == 0 else g


def _responses(ch, params):
    if isinstance(ch, FadingChannel):
        h = ch.response
    else:
        h = np.asarray(ch, dtype=np.complex128)
    if h.shape[-1] != params.freq_bins:
        raise GridMismatchError(
            f"response has {h.shape[-1]} bins, params grid has {params.freq_bins}")
    return h


def channel_energy(ch, params):
    """``E = (1/B) * int |H(f)|^2 df`` by the trapezoid rule.

    Accepts a :class:`FadingChannel` or an array whose last axis is the
    frequency grid; arrays give one energy per row.
    """
    h = _responses(ch, params)
    e = np.trapezoid(np.abs(h) ** 2, dx=params.df, axis=-1) / params.bandwidth
    if np.any(e <= 0):
        raise ValueError("channel has zero energy")
    return float(e) if np.ndim(e) == 0 else e


def time_domain_energy(ch, params):
    """Energy of the impulse response implied by the sampled spectrum.

    Taps are ``df * sum_k H_k exp(2 pi i k n / N)`` at spacing ``1/(N df)``;
    by Parseval this equals the rectangle-rule integral of ``|H|^2``.
    """
    h = _responses(ch, params)
    n = h.shape[-1]
    taps = np.fft.ifft(h, axis=-1) * n * params.df
    return np.sum(np.abs(taps) ** 2, axis=-1) / (n * params.df)

"""Discrete-time time-reversal precoding.

Signals and impulse responses are tap vectors at spacing ``1/B``; index 0 is
``t = 0`` at the transmitter. Energy is ``sum |s[n]|^2``. Spectra are taken on
an ``nfft``-point grid over one band of width ``B``, with the energy spectrum
``|S(f_k)|^2 = |DFT(s)_k|^2 / B`` so that ``sum_k |S(f_k)|^2 df`` is the signal
energy. Choosing ``nfft`` at least twice the longest support makes every
band integral below exact (the integrands are trigonometric polynomials).
"""

from dataclasses import dataclass

import numpy as np


def _taps(h):
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("impulse response must be a nonempty 1-D tap vector")
    return h


@dataclass
class AggregateTransmission:
    """Per-node transmit signals sharing one sample grid."""

    signals: list
    t0: int = 0

    def __post_init__(self):
        self.signals = [np.asarray(s, dtype=np.complex128) for s in self.signals]
        if not self.signals:
            raise ValueError("transmission needs at least one node signal")

    def scaled(self, factor):
        return AggregateTransmission([factor * s for s in self.signals], self.t0)


def time_reverse_conjugate(h):
    """``h~[n] = conj(h[L-1-n])``; an energy-preserving involution."""
    return np.conj(_taps(h)[::-1])


def tr_transmission(channels, energy=None):
    """Time-reversed waveforms for every node, peaks aligned at a shared t0.

    Node ``i`` transmits ``conj(h_i)`` reversed and delayed so its
    autocorrelation peak lands at ``t0 = max_i(L_i) - 1``. With ``energy``
    given, the aggregate is rescaled to that total energy.
    """
    hs = [_taps(h) for h in channels]
    t0 = max(h.size for h in hs) - 1
    signals = []
    for h in hs:
        delay = t0 - (h.size - 1)
        signals.append(np.concatenate([np.zeros(delay, dtype=np.complex128),
                                       time_reverse_conjugate(h)]))
    tx = AggregateTransmission(signals, t0)
    if energy is not None:
        tx = tx.scaled(np.sqrt(energy / transmission_energy(tx)))
    return tx


def receive(tx, channels):
    """Received samples ``r[n] = sum_i (s_i * h_i)[n]`` (linear convolution)."""
    if len(tx.signals) != len(channels):
        raise ValueError(
            f"{len(tx.signals)} signals but {len(channels)} channels")
    parts = [np.convolve(s, _taps(h)) for s, h in zip(tx.signals, channels)]
    out = np.zeros(max(p.size for p in parts), dtype=np.complex128)
    for p in parts:
        out[:p.size] += p
    return out


def autocorrelation(h):
    """Deterministic autocorrelation ``R_h[k]`` for lags ``-(L-1)..(L-1)``."""
    h = _taps(h)
    return np.convolve(h, time_reverse_conjugate(h))


def transmission_energy(tx):
    return float(sum(np.sum(np.abs(s) ** 2) for s in tx.signals))


def peak_power(tx, channels):
    """Instantaneous received power ``|r(t0)|^2``."""
    r = receive(tx, channels)
    if tx.t0 >= r.size:
        return 0.0
    return float(np.abs(r[tx.t0]) ** 2)


def peak_power_bound(channels, e_max):
    """Cauchy-Schwarz ceiling ``E_max * sum_i R_{h_i}(0)``."""
    return float(e_max * sum(np.sum(np.abs(_taps(h)) ** 2) for h in channels))


def default_nfft(tx, channels):
    support = max(s.size for s in tx.signals) + max(_taps(h).size for h in channels) - 1
    return 1 << int(np.ceil(np.log2(2 * support)))


def energy_spectra(signals, nfft, bandwidth=1.0):
    """``|S_i(f_k)|^2`` on the ``nfft`` grid, one row per node."""
    spec = np.fft.fft(np.stack([_pad(s, nfft) for s in signals]), axis=1)
    return np.abs(spec) ** 2 / bandwidth


def _pad(s, nfft):
    s = np.asarray(s, dtype=np.complex128)
    if s.size > nfft:
        raise ValueError(f"nfft={nfft} shorter than signal support {s.size}")
    out = np.zeros(nfft, dtype=np.complex128)
    out[:s.size] = s
    return out


def space_frequency_localization(tx, nfft=None, bandwidth=1.0, channels=None):
    """``L_s = int [sum_i |S_i(f)|^2]^2 df`` over one band."""
    if nfft is None:
        nfft = default_nfft(tx, channels) if channels is not None else \
            1 << int(np.ceil(np.log2(2 * max(s.size for s in tx.signals))))
    df = bandwidth / nfft
    total = energy_spectra(tx.signals, nfft, bandwidth).sum(axis=0)
    return float(np.sum(total ** 2) * df)


def received_energy(tx, channels, nfft=None, bandwidth=1.0):
    """``E_r = int |sum_i S_i(f) H_i(f)|^2 df``; equals the energy of ``r``."""
    if len(tx.signals) != len(channels):
        raise ValueError("signals and channels differ in count")
    if nfft is None:
        nfft = default_nfft(tx, channels)
    s = np.fft.fft(np.stack([_pad(x, nfft) for x in tx.signals]), axis=1)
    h = np.fft.fft(np.stack([_pad(c, nfft) for c in channels]), axis=1)
    df = bandwidth / nfft
    return float(np.sum(np.abs((s * h).sum(axis=0)) ** 2) / bandwidth * df)


def localization_bound(channels, l_max, nfft, bandwidth=1.0):
    """``sqrt(L_max * int [sum_i |H_i(f)|^2]^2 df)``, the ceiling on ``E_r``."""
    h = np.fft.fft(np.stack([_pad(c, nfft) for c in channels]), axis=1)
    df = bandwidth / nfft
    g = (np.abs(h) ** 2).sum(axis=0)
    return float(np.sqrt(l_max * np.sum(g * g) * df))


def scale_to_localization(tx, l_max, nfft, bandwidth=1.0):
    """Rescale so ``L_s == l_max``; ``L_s`` is quartic in amplitude."""
    current = space_frequency_localization(tx, nfft, bandwidth)
    return tx.scaled((l_max / current) ** 0.25)


def _random_signals(rng, lengths):
    return [rng.standard_normal(k) + 1j * rng.standard_normal(k) for k in lengths]


WAVEFORM_COLUMNS = ("trial", "nodes", "max_taps", "peak_tr", "peak_bound", "peak_competitor_max",
                    "er_tr", "er_bound", "er_competitor_max", "ls_ratio_min")


def optimality_trials(seed, trials=100, competitors=100, max_nodes=8, max_taps=32,
                      bandwidth=1.0, e_max=1.0, l_max=1.0):
    """Time reversal against random competitors under both signal constraints.

    Each trial draws ``1..max_nodes`` channels of ``1..max_taps`` complex
    Gaussian taps, then compares the TR waveform with ``competitors`` random
    waveforms on the same support: at equal energy ``e_max`` by the peak
    ``|r(t0)|^2``, and at equal localization ``l_max`` by received energy.
    ``ls_ratio_min`` is the smallest ``L_s B / E_s^2`` seen, TR included.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        m = int(rng.integers(1, max_nodes + 1))
        lengths = rng.integers(1, max_taps + 1, size=m)
        channels = _random_signals(rng, lengths)
        tr = tr_transmission(channels)
        support = [s.size for s in tr.signals]
        nfft = default_nfft(tr, channels)

        tr_e = tr.scaled(np.sqrt(e_max / transmission_energy(tr)))
        tr_l = scale_to_localization(tr, l_max, nfft, bandwidth)
        peak_best = er_best = 0.0
        ls_ratio = _ls_ratio(tr_l, nfft, bandwidth)
        for _ in range(competitors):
            cand = AggregateTransmission(_random_signals(rng, support), tr.t0)
            ce = cand.scaled(np.sqrt(e_max / transmission_energy(cand)))
            peak_best = max(peak_best, peak_power(ce, channels))
            cl = scale_to_localization(cand, l_max, nfft, bandwidth)
            er_best = max(er_best, received_energy(cl, channels, nfft, bandwidth))
            ls_ratio = min(ls_ratio, _ls_ratio(cand, nfft, bandwidth))
        rows.append({
            "trial": t, "nodes": m, "max_taps": int(lengths.max()),
            "peak_tr": peak_power(tr_e, channels),
            "peak_bound": peak_power_bound(channels, e_max),
            "peak_competitor_max": peak_best,
            "er_tr": received_energy(tr_l, channels, nfft, bandwidth),
            "er_bound": localization_bound(channels, l_max, nfft, bandwidth),
            "er_competitor_max": er_best,
            "ls_ratio_min": ls_ratio,
        })
    return rows


def _ls_ratio(tx, nfft, bandwidth):
    es = transmission_energy(tx)
    return space_frequency_localization(tx, nfft, bandwidth) * bandwidth / es ** 2

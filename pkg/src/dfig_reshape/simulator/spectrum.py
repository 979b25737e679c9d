"""Spectral post-processing of simulated waveforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ResolutionError
from ..params import F1

MAX_BIN_HZ = 2.5


@dataclass(frozen=True)
class Peak:
    freq_hz: float
    amplitude: float


def amplitude_spectrum(x: np.ndarray, dt: float):
    """Hann-windowed single-sided amplitude spectrum (a pure tone reads its amplitude)."""
    x = np.asarray(x, dtype=float)
    w = np.hanning(x.size)
    X = np.fft.rfft((x - x.mean()) * w)
    amp = 2.0 * np.abs(X) / w.sum()
    return np.fft.rfftfreq(x.size, dt), amp


def signal_peaks(
    x: np.ndarray,
    dt: float,
    rel_threshold: float = 0.01,
    f_ref: float = F1,
    max_bin_hz: float = MAX_BIN_HZ,
    isolation_bins: int = 3,
) -> list:
    """Spectral peaks above ``rel_threshold`` times the amplitude at ``f_ref``.

    Peaks must be the largest bin within ``isolation_bins`` on each side, which
    suppresses window sidelobes; locations are refined by a parabolic fit on
    the log-amplitude. Sorted by decreasing amplitude.
    """
    res = 1.0 / (len(x) * dt)
    if res > max_bin_hz + 1e-9:
        raise ResolutionError(f"window gives {res:.3g} Hz bins; need <= {max_bin_hz} Hz")
    f, a = amplitude_spectrum(x, dt)
    # reference amplitude: largest bin next to f_ref
    k_ref = int(np.argmin(np.abs(f - f_ref)))
    lo, hi = max(k_ref - 1, 0), min(k_ref + 2, a.size)
    ref = a[lo:hi].max()
    if ref <= 0:
        return []
    thr = rel_threshold * ref
    peaks = []
    for k in range(1, a.size - 1):
        if a[k] < thr:
            continue
        seg = a[max(k - isolation_bins, 0): k + isolation_bins + 1]
        if a[k] < seg.max():
            continue
        la, lb, lc = np.log(a[k - 1] + 1e-300), np.log(a[k]), np.log(a[k + 1] + 1e-300)
        den = la - 2 * lb + lc
        d = 0.5 * (la - lc) / den if den < 0 else 0.0
        peaks.append(Peak(float(f[k] + d * res), float(a[k])))
    peaks.sort(key=lambda p: -p.amplitude)
    return peaks


def fft_peaks(ts, channel: str, window, **kw) -> list:
    """Peaks of ``ts[channel]`` restricted to ``window = (t0, t1)`` seconds."""
    t0, t1 = window
    if t0 < ts.t[0] - 1e-12 or t1 > ts.t[-1] + ts.dt + 1e-12:
        raise ResolutionError(f"window {window} is outside the series")
    w = ts.window(t0, t1)
    return signal_peaks(w[channel], w.dt, **kw)


def window_envelope(x: np.ndarray, t: np.ndarray, width: float):
    """Peak-to-peak amplitude over consecutive windows of ``width`` seconds."""
    edges = np.arange(t[0], t[-1] - width + 1e-12, width)
    mids, amps = [], []
    for a in edges:
        sel = (t >= a) & (t < a + width)
        if sel.sum() < 2:
            continue
        mids.append(a + 0.5 * width)
        amps.append(float(np.ptp(x[sel])))
    return np.array(mids), np.array(amps)


def growth_rate(x: np.ndarray, t: np.ndarray, width: float = 0.05) -> float:
    """Exponential envelope rate (1/s) from a log-linear fit of window amplitudes.

    ``exp(rate)`` is the per-second amplitude factor; negative rates decay.
    """
    mids, amps = window_envelope(x, t, width)
    ok = amps > 0
    if ok.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(mids[ok], np.log(amps[ok]), 1)
    return float(slope)

"""Perturbation-injection frequency scans of the simulated device admittance.

A scan point at sequence frequency ``f_p`` uses two runs: one injects a
positive-sequence series voltage at ``f_p``, the other at the coupled
frequency ``2 f1 - f_p`` (phase sequence reversed when that is negative). In the
system d-q frame both are tones at ``+-(f_p - f1)``. The device response at
those two d-q frequencies, assembled into the modified-sequence pair, gives
two voltage/current vector pairs from which the 2x2 admittance follows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..errors import InvalidParameterError, ScanConditioningError
from ..params import F1
from .engine import run_scenario
from .scenario import SimScenario

MAX_AMP = 0.02
COND_LIMIT = 1e6


@dataclass(frozen=True)
class ScanMeasurement:
    f_p: float
    amp: float
    y: np.ndarray
    cond: float


class DevicePlant:
    """Wraps a scenario so that it answers injection requests."""

    def __init__(self, base: SimScenario):
        if base.events:
            raise InvalidParameterError("scan base scenario must not contain events")
        self.base = base

    @property
    def dt(self) -> float:
        return self.base.dt

    @property
    def f1(self) -> float:
        return self.base.machine.omega1 / (2 * math.pi)

    def respond(self, tones, t_end: float):
        ts = run_scenario(replace(self.base, t_end=t_end, record_every=1), tones=tones)
        if ts.diverged:
            raise ScanConditioningError(f"device run diverged at t = {ts.t_diverged:.3f} s")
        v = ts["v_sd"] + 1j * ts["v_sq"]
        i = ts["i_sd"] + 1j * ts["i_sq"]
        return ts.t, v, i


class RLPlant:
    """Series R-L load behind the same Thevenin grid (analytic reference)."""

    def __init__(self, R: float, L: float, R_g: float = 0.0, L_g: float = 0.0, V_g: float = 1.0,
                 omega1: float = 2 * math.pi * F1, dt: float = 20e-6):
        self.R, self.L, self.R_g, self.L_g, self.V_g = R, L, R_g, L_g, V_g
        self.omega1, self.dt = omega1, dt

    @property
    def f1(self) -> float:
        return self.omega1 / (2 * math.pi)

    def admittance_seq(self, f_p: float) -> np.ndarray:
        w = 2 * math.pi * f_p
        return np.diag([1 / (self.R + 1j * w * self.L), 1 / (self.R + 1j * (w - 2 * self.omega1) * self.L)])

    def respond(self, tones, t_end: float):
        R, L = self.R + self.R_g, self.L + self.L_g
        w1 = self.omega1
        amps = np.array([complex(a) for a, _ in tones])
        ws = np.array([2 * math.pi * f for _, f in tones])
        i0 = self.V_g / complex(R, w1 * L)

        def vsrc(t):
            return self.V_g + np.sum(amps * np.exp(1j * ws * t))

        def f(t, i):
            return (vsrc(t) - R * i - 1j * w1 * L * i) / L

        n = int(round(t_end / self.dt))
        t = np.arange(n + 1) * self.dt
        i = np.empty(n + 1, dtype=complex)
        i[0] = i0
        h = self.dt
        for k in range(n):
            tk, ik = t[k], i[k]
            k1 = f(tk, ik)
            k2 = f(tk + h / 2, ik + h / 2 * k1)
            k3 = f(tk + h / 2, ik + h / 2 * k2)
            k4 = f(tk + h, ik + h * k3)
            i[k + 1] = ik + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        di = np.array([f(tk, ik) for tk, ik in zip(t, i)])
        vs = self.R * i + self.L * di + 1j * w1 * self.L * i
        return t, vs, i


def _bin(x: np.ndarray, t: np.ndarray, w: float) -> complex:
    """Single-bin correlation with a periodic Hann taper.

    On an integer number of periods the taper leaves the target bin exact and
    nulls the mirror tone, while slowly decaying start-up transients leak far
    less than with a rectangular window.
    """
    h = np.hanning(x.size + 1)[:-1]
    return complex(np.sum(h * x * np.exp(-1j * w * t)) / np.sum(h))


def measurement_window(f_d: float, n_periods: int, min_len: float) -> float:
    """Length (s) of an integer number of d-q periods, at least ``min_len``."""
    per = 1.0 / abs(f_d)
    k = max(n_periods, math.ceil(min_len / per - 1e-9))
    return k * per


def scan_point(plant, f_p: float, amp: float = 0.01, settle: float = 1.5, n_periods: int = 10,
               min_window: float = 0.2) -> ScanMeasurement:
    """Inject the two modified-sequence tones and correlate after ``settle`` s.

    The default settle time covers a few time constants of the lightly damped
    stator-flux mode that the injection start excites.
    """
    f1 = plant.f1
    if not 0 < amp <= MAX_AMP:
        raise InvalidParameterError(f"injection amplitude must be in (0, {MAX_AMP}] p.u.")
    if abs(f_p - f1) < 5.0:
        raise InvalidParameterError("scan frequency must avoid the fundamental by at least 5 Hz")
    f_d = f_p - f1
    win = measurement_window(f_d, n_periods, min_window)
    dt = plant.dt
    n_win = int(round(win / dt))
    n_settle = int(math.ceil(settle / dt))
    t_end = (n_settle + n_win) * dt
    w = 2 * math.pi * f_d
    V = np.empty((2, 2), dtype=complex)
    I = np.empty((2, 2), dtype=complex)
    for col, tone in enumerate(((amp, f_d), (amp, -f_d))):
        t, v, i = plant.respond([tone], t_end)
        sel = slice(n_settle, n_settle + n_win)
        # remove the pre-injection equilibrium so dc cannot leak into the bins
        tt, vv, ii = t[sel], v[sel] - v[0], i[sel] - i[0]
        # modified-sequence pair: component at +f_d and conjugate of the one at -f_d
        V[:, col] = [_bin(vv, tt, w), np.conj(_bin(vv, tt, -w))]
        I[:, col] = [_bin(ii, tt, w), np.conj(_bin(ii, tt, -w))]
    cond = float(np.linalg.cond(V))
    if not cond < COND_LIMIT:
        raise ScanConditioningError(f"two-injection system ill-conditioned at {f_p} Hz (cond {cond:.3g})")
    y = I @ np.linalg.inv(V)
    return ScanMeasurement(float(f_p), float(amp), y, cond)


def frequency_scan(base, f_list, amp: float = 0.01, **kw) -> list:
    """Scan ``base`` (a :class:`SimScenario` or a plant) at each sequence frequency."""
    plant = DevicePlant(base) if isinstance(base, SimScenario) else base
    return [scan_point(plant, float(f), amp, **kw) for f in f_list]

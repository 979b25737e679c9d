"""Scenario description and time-series container."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import InvalidParameterError
from ..params import ControlParams, MachineParams
from ..reshape import ReshapeConfig

EVENT_KINDS = ("Kp_pll", "reshape", "scr", "power", "rotor_hz", "kick")


@dataclass(frozen=True)
class Event:
    """A scripted change at time ``t`` (s).

    ``kind`` / ``value``:

    * ``Kp_pll``   - new PLL proportional gain (p.u.)
    * ``reshape``  - new compensator mode ("Off", "Gz1", "Gz2")
    * ``scr``      - new short-circuit ratio (same X/R and source voltage)
    * ``power``    - new ``(P_ref, Q_ref)``; rotor current references follow
    * ``rotor_hz`` - new rotor electrical frequency (Hz)
    * ``kick``     - step the PLL angle by ``value`` rad to seed oscillations
    """

    t: float
    kind: str
    value: Any

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvalidParameterError(f"unknown event kind {self.kind!r}; expected one of {EVENT_KINDS}")


@dataclass(frozen=True)
class SimScenario:
    machine: MachineParams
    control: ControlParams
    reshape: ReshapeConfig = field(default_factory=ReshapeConfig)
    scr: float = 2.0
    x_over_r: float = math.inf
    V_g: float = 1.0
    P_ref: float = -1.0
    Q_ref: float = 0.0
    rotor_hz: float = 55.0
    events: tuple = ()
    t_end: float = 1.0
    dt: float = 20e-6
    record_every: int = 1
    divergence_limit: float = 1e3

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.t)))
        if not (0 < self.dt <= 100e-6):
            raise InvalidParameterError("dt must be in (0, 100 us]")
        if not self.t_end > 0:
            raise InvalidParameterError("t_end must be positive")
        times = [e.t for e in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParameterError("event times must be strictly increasing")
        if times and (times[0] <= 0 or times[-1] >= self.t_end):
            raise InvalidParameterError("event times must lie inside (0, t_end)")
        if self.record_every < 1:
            raise InvalidParameterError("record_every must be >= 1")


@dataclass
class TimeSeries:
    t: np.ndarray
    channels: dict
    diverged: bool = False
    t_diverged: float | None = None
    events: tuple = ()

    def __getitem__(self, name) -> np.ndarray:
        return self.channels[name]

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else float("nan")

    def window(self, t0: float, t1: float) -> "TimeSeries":
        sel = (self.t >= t0 - 1e-12) & (self.t < t1 - 1e-12)
        return TimeSeries(self.t[sel], {k: v[sel] for k, v in self.channels.items()}, self.diverged, self.t_diverged)

    def to_csv(self, path, channels=None):
        names = list(self.channels) if channels is None else list(channels)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + names)
            cols = [self.t] + [self.channels[n] for n in names]
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head = rows[0]
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, 0], {n: data[:, k + 1] for k, n in enumerate(head[1:])})

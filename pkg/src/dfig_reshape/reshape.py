"""Rotor-current-dynamic compensators inserted ahead of the current PI.

Both compensators are driven only by the control-frame q-axis stator voltage,
so their first column is structurally zero. Their second column is
``[-I_rqref, I_rdref] * g(s)`` with

* ``Gz1``: ``g(s) = HPF(s) * (Kp s + Ki) / s**2``  (second-order HPF in front of
  the ideal double-integrator compensation);
* ``Gz2``: ``g(s) = Kp / (s + omega_hpf)``  (first-order simplification valid
  when the proportional PLL gain dominates).

The compensator output is *added* to the measured control-frame rotor current
before the error is formed, which restores the system-frame current seen by
the PI in the linearised model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .params import ControlParams, OperatingPoint
from .tfalg import RationalTF, TFMatrix


class ReshapeMode(str, enum.Enum):
    OFF = "Off"
    GZ1 = "Gz1"
    GZ2 = "Gz2"

    @classmethod
    def parse(cls, value) -> "ReshapeMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for mode in cls:
            if mode.value.lower() == key:
                return mode
        raise InvalidParameterError(f"unknown reshape mode {value!r}")


@dataclass(frozen=True)
class ReshapeConfig:
    """Compensator selection and HPF settings.

    ``I_rdref``/``I_rqref`` left as ``None`` are filled from the rotor current
    references (equal to the solved steady state); see :meth:`resolved`.
    """

    mode: ReshapeMode = ReshapeMode.OFF
    I_rdref: float | None = None
    I_rqref: float | None = None
    A_inf: float = 1.0
    Q: float = 1.0
    omega_hpf: float = 2.0 * math.pi * 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", ReshapeMode.parse(self.mode))
        if not (self.omega_hpf > 0 and self.Q > 0 and self.A_inf > 0):
            raise InvalidParameterError("omega_hpf, Q and A_inf must be positive")

    @property
    def active(self) -> bool:
        return self.mode is not ReshapeMode.OFF

    def resolved(self, op: OperatingPoint) -> "ReshapeConfig":
        """Copy with unset reference gains taken from the operating point."""
        return ReshapeConfig(
            mode=self.mode,
            I_rdref=op.I_rd0 if self.I_rdref is None else self.I_rdref,
            I_rqref=op.I_rq0 if self.I_rqref is None else self.I_rqref,
            A_inf=self.A_inf,
            Q=self.Q,
            omega_hpf=self.omega_hpf,
        )

    def with_mode(self, mode) -> "ReshapeConfig":
        return ReshapeConfig(ReshapeMode.parse(mode), self.I_rdref, self.I_rqref, self.A_inf, self.Q, self.omega_hpf)


def hpf2(cfg: ReshapeConfig) -> RationalTF:
    """A_inf s^2 / (s^2 + (w/Q) s + w^2)."""
    w = cfg.omega_hpf
    return RationalTF([0.0, 0.0, cfg.A_inf], [w * w, w / cfg.Q, 1.0])


def ideal_compensation(op: OperatingPoint, c: ControlParams) -> TFMatrix:
    """Exact compensation matrix with steady-state rotor currents.

    Column two is ``[-I_rq0, I_rd0] * (Kp s + Ki) / s^2``; it has a double pole
    at the origin and cannot be evaluated at dc.
    """
    k = RationalTF([c.ki_pll_si, c.kp_pll_si], [0.0, 0.0, 1.0])
    return TFMatrix([[0.0, -op.I_rq0 * k], [0.0, op.I_rd0 * k]])


def _refs(cfg: ReshapeConfig):
    if cfg.I_rdref is None or cfg.I_rqref is None:
        raise InvalidParameterError("reference currents unresolved; call cfg.resolved(op) first")
    return cfg.I_rdref, cfg.I_rqref


def gz1_kernel(cfg: ReshapeConfig, c: ControlParams) -> RationalTF:
    """HPF(s) (Kp s + Ki)/s^2 with the s^2 factors cancelled analytically."""
    w = cfg.omega_hpf
    return RationalTF(
        [cfg.A_inf * c.ki_pll_si, cfg.A_inf * c.kp_pll_si],
        [w * w, w / cfg.Q, 1.0],
    )


def gz2_kernel(cfg: ReshapeConfig, c: ControlParams) -> RationalTF:
    return RationalTF([c.kp_pll_si], [cfg.omega_hpf, 1.0])


def _column2(kernel: RationalTF, ird: float, irq: float) -> TFMatrix:
    return TFMatrix([[0.0, -irq * kernel], [0.0, ird * kernel]])


def build_gz1(cfg: ReshapeConfig, c: ControlParams) -> TFMatrix:
    ird, irq = _refs(cfg)
    return _column2(gz1_kernel(cfg, c), ird, irq)


def build_gz2(cfg: ReshapeConfig, c: ControlParams) -> TFMatrix:
    ird, irq = _refs(cfg)
    return _column2(gz2_kernel(cfg, c), ird, irq)


def build_compensator(cfg: ReshapeConfig, c: ControlParams) -> TFMatrix:
    """Active compensator matrix; the zero matrix when the mode is Off."""
    if cfg.mode is ReshapeMode.GZ1:
        return build_gz1(cfg, c)
    if cfg.mode is ReshapeMode.GZ2:
        return build_gz2(cfg, c)
    return TFMatrix.zeros()


class CompensatorRealization:
    """Controllable-canonical state-space realization of the active branch.

    Both column-2 entries share the scalar kernel ``g(s)``, so one realization
    of ``g`` is integrated and its output scaled by ``[-I_rqref, I_rdref]``.
    Gz1 has two states, Gz2 one. The input is the control-frame q-axis stator
    voltage; the output is the 2-vector added to the measured rotor current.
    """

    def __init__(self, cfg: ReshapeConfig, c: ControlParams):
        if not cfg.active:
            raise InvalidParameterError("compensator realization needs an active mode")
        self.cfg = cfg
        self.gain = np.array([-cfg.I_rqref, cfg.I_rdref], dtype=float)
        kernel = gz1_kernel(cfg, c) if cfg.mode is ReshapeMode.GZ1 else gz2_kernel(cfg, c)
        self.A, self.B, self.C, self.D = _canonical(kernel)
        self.x = np.zeros(self.A.shape[0])

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def reset(self):
        self.x[:] = 0.0

    def derivative(self, x, u):
        return self.A @ x + self.B * u

    def output(self, x, u) -> np.ndarray:
        return (self.C @ x + self.D * u) * self.gain

    def run(self, u: np.ndarray, dt: float) -> np.ndarray:
        """Integrate over sampled input ``u`` with RK4 (input held linearly
        between samples); returns output rows of shape (len(u), 2)."""
        u = np.asarray(u, dtype=float)
        out = np.empty((u.size, 2))
        x = self.x
        for k in range(u.size):
            out[k] = self.output(x, u[k])
            if k + 1 == u.size:
                break
            u0, u1 = u[k], u[k + 1]
            um = 0.5 * (u0 + u1)
            k1 = self.derivative(x, u0)
            k2 = self.derivative(x + 0.5 * dt * k1, um)
            k3 = self.derivative(x + 0.5 * dt * k2, um)
            k4 = self.derivative(x + dt * k3, u1)
            x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        self.x = x
        return out


def _canonical(tf: RationalTF):
    """(A, B, C, D) in controllable canonical form for a proper ``tf``."""
    den = np.array(tf.den)
    num = np.zeros_like(den)
    num[: len(tf.num)] = tf.num
    n = den.size - 1
    d = num[n]
    b = num[:n] - d * den[:n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:n]
    B = np.zeros(n)
    B[-1] = 1.0
    return A, B, b.copy(), float(d)

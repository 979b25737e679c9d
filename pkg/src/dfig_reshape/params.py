"""Per-unit parameter records, grid construction from SCR, and the steady state.

Per-unit conventions used throughout the package:

* voltages and currents are amplitude-invariant d-q components, 1.0 at rated;
* resistances are in p.u.; inductances are stored in p.u.*s, i.e. the per-unit
  reactance at the fundamental divided by ``omega1``, so the machine equations
  hold literally with time in seconds (``v = R i + p psi + omega J psi``);
* currents are positive *into* the machine stator (motor convention), so
  generating operation has negative ``P_ref``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidOperatingPointError, InvalidParameterError, NoEquilibriumError

OMEGA1 = 100.0 * math.pi
F1 = 50.0


@dataclass(frozen=True)
class MachineParams:
    R_s: float
    R_r: float
    L_s: float
    L_r: float
    L_m: float
    omega1: float = OMEGA1
    S_base: float = 1.5e6
    V_base: float = 690.0

    def __post_init__(self):
        if not self.L_m > 0:
            raise InvalidParameterError("L_m must be positive")
        if self.L_s < self.L_m or self.L_r < self.L_m:
            raise InvalidParameterError("self inductances must not be below L_m")
        if self.R_s < 0 or self.R_r < 0:
            raise InvalidParameterError("resistances must be non-negative")
        if not self.omega1 > 0:
            raise InvalidParameterError("omega1 must be positive")
        if not 0.0 < self.sigma < 1.0:
            raise InvalidParameterError(f"leakage coefficient {self.sigma} outside (0, 1)")

    @classmethod
    def from_reactances(cls, R_s, R_r, X_ls, X_lr, X_m, omega1=OMEGA1, **kw) -> "MachineParams":
        """Build from per-unit leakage and magnetising reactances."""
        return cls(
            R_s=R_s,
            R_r=R_r,
            L_s=(X_m + X_ls) / omega1,
            L_r=(X_m + X_lr) / omega1,
            L_m=X_m / omega1,
            omega1=omega1,
            **kw,
        )

    @property
    def sigma(self) -> float:
        return 1.0 - self.L_m**2 / (self.L_s * self.L_r)

    def with_leakage_scale(self, factor: float) -> "MachineParams":
        """Scale both leakage inductances by ``factor`` holding L_m fixed."""
        return replace(
            self,
            L_s=self.L_m + factor * (self.L_s - self.L_m),
            L_r=self.L_m + factor * (self.L_r - self.L_m),
        )

    def without_stator_resistance(self) -> "MachineParams":
        return replace(self, R_s=0.0)


@dataclass(frozen=True)
class GridParams:
    """Thevenin grid: ideal source ``V_g`` behind ``R_g + j*omega1*L_g``.

    ``L_g`` is in p.u.*s. ``L_g == 0`` with ``R_g == 0`` is the infinite bus.
    """

    R_g: float
    L_g: float
    V_g: float = 1.0
    omega1: float = OMEGA1

    def __post_init__(self):
        if self.L_g < 0 or self.R_g < 0:
            raise InvalidParameterError("grid R_g and L_g must be non-negative")
        if not self.V_g > 0:
            raise InvalidParameterError("V_g must be positive")

    @property
    def z_fundamental(self) -> complex:
        return complex(self.R_g, self.omega1 * self.L_g)

    @property
    def scr(self) -> float:
        z = abs(self.z_fundamental)
        return math.inf if z == 0 else self.V_g**2 / z


def grid_from_scr(scr: float, x_over_r: float = math.inf, V_g: float = 1.0, omega1: float = OMEGA1) -> GridParams:
    """Thevenin grid whose short-circuit ratio is ``scr`` (``inf`` = stiff bus)."""
    if not scr > 0:
        raise InvalidParameterError(f"scr must be positive, got {scr}")
    if not x_over_r > 0:
        raise InvalidParameterError(f"x_over_r must be positive, got {x_over_r}")
    if math.isinf(scr):
        return GridParams(0.0, 0.0, V_g, omega1)
    z = V_g**2 / scr
    ang = math.atan(x_over_r)
    r = 0.0 if math.isinf(x_over_r) else z * math.cos(ang)
    return GridParams(R_g=r, L_g=z * math.sin(ang) / omega1, V_g=V_g, omega1=omega1)


@dataclass(frozen=True)
class ControlParams:
    """Rotor-current PI and SRF-PLL gains.

    PLL gains are given in p.u. of the declared bases: the PLL PI acts on the
    control-frame q voltage (p.u.) and outputs a frequency deviation in rad/s,
    so ``pll_base_p`` is in rad/s per p.u. and ``pll_base_i`` in rad/s^2 per p.u.
    The current PI maps rotor-current error (p.u.) to rotor voltage (p.u.).
    """

    Kp_pll: float
    Ki_pll: float
    Kp_i: float
    Ki_i: float
    pll_base_p: float
    pll_base_i: float
    decoupling: bool = True

    def __post_init__(self):
        for name in ("Kp_pll", "Ki_pll", "Ki_i", "pll_base_p", "pll_base_i"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")
        if not self.Kp_i > 0:
            raise InvalidParameterError("Kp_i must be positive (the current loop must exist)")

    @property
    def kp_pll_si(self) -> float:
        return self.Kp_pll * self.pll_base_p

    @property
    def ki_pll_si(self) -> float:
        return self.Ki_pll * self.pll_base_i


@dataclass(frozen=True)
class OperatingPoint:
    """Steady state in the PCC-voltage-aligned synchronous frame."""

    V_sd0: float
    V_sq0: float
    I_sd0: float
    I_sq0: float
    I_rd0: float
    I_rq0: float
    psi_sd0: float
    psi_sq0: float
    psi_rd0: float
    psi_rq0: float
    omega_r: float
    omega_sl: float
    P0: float
    Q0: float
    V_rd0: float = 0.0
    V_rq0: float = 0.0
    V_gd0: float = 0.0
    V_gq0: float = 0.0

    @property
    def v_s(self) -> complex:
        return complex(self.V_sd0, self.V_sq0)

    @property
    def i_s(self) -> complex:
        return complex(self.I_sd0, self.I_sq0)

    @property
    def i_r(self) -> complex:
        return complex(self.I_rd0, self.I_rq0)

    @property
    def v_r(self) -> complex:
        return complex(self.V_rd0, self.V_rq0)

    @property
    def v_g(self) -> complex:
        return complex(self.V_gd0, self.V_gq0)


P_BOUND = 1.2
_DISC_TOL = 1e-12


def solve_operating_point(
    m: MachineParams, g: GridParams, P_ref: float, Q_ref: float, omega_r: float
) -> OperatingPoint:
    """Steady state delivering stator power ``(P_ref, Q_ref)`` (motor convention).

    The network equation reduces to a quadratic in ``|V_s|^2``; the high-voltage
    root is taken. Given the PCC voltage, stator current, fluxes, rotor current
    and rotor voltage follow linearly from the static machine equations.
    """
    if abs(P_ref) > P_BOUND or abs(Q_ref) > P_BOUND:
        raise InvalidParameterError(f"|P_ref|, |Q_ref| must be <= {P_BOUND}")
    if not omega_r >= 0:
        raise InvalidParameterError("omega_r must be non-negative")
    w1 = m.omega1
    zg = complex(g.R_g, w1 * g.L_g)
    a = zg * complex(P_ref, -Q_ref)
    b = g.V_g**2 - 2.0 * a.real
    disc = b * b - 4.0 * abs(a) ** 2
    if disc < -_DISC_TOL or b <= 0:
        raise NoEquilibriumError(
            f"no equilibrium for P={P_ref}, Q={Q_ref} at SCR={g.scr:.4g}", residual=disc
        )
    u = 0.5 * (b + math.sqrt(max(disc, 0.0)))
    V = math.sqrt(u)

    i_s = complex(P_ref, -Q_ref) / V
    psi_s = (V - m.R_s * i_s) / (1j * w1)
    i_r = (psi_s - m.L_s * i_s) / m.L_m
    psi_r = m.L_m * i_s + m.L_r * i_r
    w_sl = w1 - omega_r
    v_r = m.R_r * i_r + 1j * w_sl * psi_r
    v_g = V + zg * i_s
    s_real = V * i_s.conjugate()

    op = OperatingPoint(
        V_sd0=V, V_sq0=0.0,
        I_sd0=i_s.real, I_sq0=i_s.imag,
        I_rd0=i_r.real, I_rq0=i_r.imag,
        psi_sd0=psi_s.real, psi_sq0=psi_s.imag,
        psi_rd0=psi_r.real, psi_rq0=psi_r.imag,
        omega_r=omega_r, omega_sl=w_sl,
        P0=s_real.real, Q0=s_real.imag,
        V_rd0=v_r.real, V_rq0=v_r.imag,
        V_gd0=v_g.real, V_gq0=v_g.imag,
    )
    res = steady_state_residual(m, g, op)
    if res > 1e-9:
        raise NoEquilibriumError(f"steady-state residual {res:.3e} too large", residual=res)
    return op


def steady_state_residual(m: MachineParams, g: GridParams, op: OperatingPoint) -> float:
    """Max-norm residual of the static voltage, flux and grid equations."""
    w1 = m.omega1
    i_s, i_r, v_s = op.i_s, op.i_r, op.v_s
    psi_s = complex(op.psi_sd0, op.psi_sq0)
    psi_r = complex(op.psi_rd0, op.psi_rq0)
    zg = complex(g.R_g, w1 * g.L_g)
    res = [
        v_s - (m.R_s * i_s + 1j * w1 * psi_s),
        op.v_r - (m.R_r * i_r + 1j * op.omega_sl * psi_r),
        psi_s - (m.L_s * i_s + m.L_m * i_r),
        psi_r - (m.L_m * i_s + m.L_r * i_r),
        v_s - (op.v_g - zg * i_s),
    ]
    mag = max(abs(r) for r in res)
    return max(mag, abs(abs(op.v_g) - g.V_g), abs(op.omega_sl - (w1 - op.omega_r)))


def operating_point_continuity(points: list, keys=("V_sd0", "I_rd0", "I_rq0")) -> float:
    """Largest jump between neighbours relative to 1.5x the local slope estimate.

    Values above 1 indicate a branch hop. Used to scan a sequence of SCRs.
    """
    worst = 0.0
    for key in keys:
        x = np.array([getattr(p, key) for p in points])
        d = np.abs(np.diff(x))
        for k in range(1, d.size - 1):
            slope = 0.5 * (d[k - 1] + d[k + 1]) + 1e-12
            worst = max(worst, d[k] / (1.5 * slope))
    return worst


def require_locked(op: OperatingPoint):
    if not op.V_sd0 > 0:
        raise InvalidOperatingPointError("V_sd0 must be positive for the PLL linearisation")


# Reference machine and controller used when a config leaves a section out.
# Reactances/resistances in p.u. on the machine base; PLL gains in p.u. of
# the listed bases (rad/s and rad/s^2 per p.u. of q-axis voltage).
# Fitted to the reported stability crossings of the reference converter;
# see README for how closely each one is reproduced.
DEFAULT_MACHINE_PU = dict(R_s=0.023, R_r=0.0157, X_ls=0.0899, X_lr=0.1126, X_m=2.268)
DEFAULT_CONTROL = dict(Kp_pll=1.0, Ki_pll=1.0, Kp_i=1.41, Ki_i=537.5, pll_base_p=187.4, pll_base_i=49109.0)
RATED = dict(P_ref=-1.0, Q_ref=0.0, rotor_hz=55.0, scr=2.0)


def default_machine() -> MachineParams:
    return MachineParams.from_reactances(**DEFAULT_MACHINE_PU)


def default_control(**overrides) -> ControlParams:
    return ControlParams(**{**DEFAULT_CONTROL, **overrides})

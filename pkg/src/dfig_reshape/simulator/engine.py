"""Scenario runner on top of the compiled kernel."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ..impedance import decoupling_gain
from ..params import ControlParams, GridParams, MachineParams, OperatingPoint, grid_from_scr, solve_operating_point
from ..reshape import ReshapeConfig, ReshapeMode
from . import kernel as K
from .scenario import Event, SimScenario, TimeSeries

_MODE_CODE = {ReshapeMode.OFF: 0.0, ReshapeMode.GZ1: 1.0, ReshapeMode.GZ2: 2.0}


def kernel_params(
    m: MachineParams,
    g: GridParams,
    c: ControlParams,
    op: OperatingPoint,
    reshape: ReshapeConfig,
    v_g: complex,
) -> np.ndarray:
    """Kernel parameter vector; ``v_g`` is the source voltage in the system frame."""
    r = reshape.resolved(op)
    p = np.zeros(K.N_PARAM)
    p[K.P_RS], p[K.P_RR] = m.R_s, m.R_r
    p[K.P_LS], p[K.P_LR], p[K.P_LM] = m.L_s, m.L_r, m.L_m
    p[K.P_W1], p[K.P_WSL] = m.omega1, op.omega_sl
    p[K.P_RG], p[K.P_LG] = g.R_g, g.L_g
    p[K.P_VGD], p[K.P_VGQ] = v_g.real, v_g.imag
    p[K.P_KP_PLL], p[K.P_KI_PLL] = c.kp_pll_si, c.ki_pll_si
    p[K.P_KP_I], p[K.P_KI_I] = c.Kp_i, c.Ki_i
    p[K.P_DEC] = decoupling_gain(m, c, op)
    p[K.P_IRD_REF], p[K.P_IRQ_REF] = op.I_rd0, op.I_rq0
    p[K.P_MODE] = _MODE_CODE[r.mode]
    p[K.P_A_INF], p[K.P_WH], p[K.P_QH] = r.A_inf, r.omega_hpf, r.Q
    p[K.P_CIRD], p[K.P_CIRQ] = r.I_rdref, r.I_rqref
    return p


def initial_state(m: MachineParams, g: GridParams, c: ControlParams, op: OperatingPoint) -> np.ndarray:
    """Equilibrium state with the system frame aligned to the PCC voltage."""
    x = np.zeros(K.N_STATE)
    x[0] = op.psi_sd0 + g.L_g * op.I_sd0
    x[1] = op.psi_sq0 + g.L_g * op.I_sq0
    x[2], x[3] = op.psi_rd0, op.psi_rq0
    dec = decoupling_gain(m, c, op)
    # integrators carry the steady rotor voltage minus the feedforward
    x[6] = op.V_rd0 + dec * op.I_rq0
    x[7] = op.V_rq0 - dec * op.I_rd0
    return x


def _tones_array(tones) -> np.ndarray:
    if tones is None or len(tones) == 0:
        return np.zeros((0, 3))
    return np.array([[complex(a).real, complex(a).imag, 2 * math.pi * f] for a, f in tones], dtype=float)


class _State:
    """Mutable bookkeeping of parameters that events may change."""

    def __init__(self, sc: SimScenario):
        self.m = sc.machine
        self.c = sc.control
        self.reshape = sc.reshape
        self.scr = sc.scr
        self.x_over_r = sc.x_over_r
        self.V_g = sc.V_g
        self.P_ref, self.Q_ref = sc.P_ref, sc.Q_ref
        self.rotor_hz = sc.rotor_hz
        self.grid = grid_from_scr(sc.scr, sc.x_over_r, sc.V_g, self.m.omega1)
        self.op = solve_operating_point(self.m, self.grid, self.P_ref, self.Q_ref, 2 * math.pi * self.rotor_hz)
        # source phasor expressed in the system frame, fixed for the whole run
        self.v_g = self.op.v_g

    def params(self) -> np.ndarray:
        return kernel_params(self.m, self.grid, self.c, self.op, self.reshape, self.v_g)

    def _refresh_references(self):
        # references track the steady state of the new set-point; the compensator
        # gains follow unless they were fixed explicitly
        self.op = solve_operating_point(
            self.m, self.grid, self.P_ref, self.Q_ref, 2 * math.pi * self.rotor_hz
        )

    def apply(self, ev: Event, x: np.ndarray):
        if ev.kind == "Kp_pll":
            self.c = replace(self.c, Kp_pll=float(ev.value))
        elif ev.kind == "reshape":
            self.reshape = self.reshape.with_mode(ev.value)
        elif ev.kind == "scr":
            new = grid_from_scr(float(ev.value), self.x_over_r, self.V_g, self.m.omega1)
            # fluxes are continuous: keep psi_s and i_s, re-form lambda with the new L_g
            la_old = self.m.L_s + self.grid.L_g
            det = la_old * self.m.L_r - self.m.L_m**2
            isd = (self.m.L_r * x[0] - self.m.L_m * x[2]) / det
            isq = (self.m.L_r * x[1] - self.m.L_m * x[3]) / det
            x[0] += (new.L_g - self.grid.L_g) * isd
            x[1] += (new.L_g - self.grid.L_g) * isq
            self.grid = new
            self.scr = float(ev.value)
            self._refresh_references()
        elif ev.kind == "power":
            self.P_ref, self.Q_ref = (float(v) for v in ev.value)
            self._refresh_references()
        elif ev.kind == "rotor_hz":
            self.rotor_hz = float(ev.value)
            self._refresh_references()
        elif ev.kind == "kick":
            x[4] += float(ev.value)


def run_scenario(sc: SimScenario, tones=None) -> TimeSeries:
    """Integrate ``sc`` from its equilibrium; events are snapped to step edges.

    ``tones`` is an optional list of ``(complex_amplitude, f_dq_hz)`` series
    voltage injections in the system frame.
    """
    st = _State(sc)
    x = initial_state(st.m, st.grid, st.c, st.op)
    tone_arr = _tones_array(tones)
    n_total = int(round(sc.t_end / sc.dt))
    # snap events to recorded step edges so the output grid stays uniform
    re = sc.record_every
    n_total = (n_total // re) * re
    edges = [int(round(ev.t / (sc.dt * re))) * re for ev in sc.events] + [n_total]
    ts, outs = [], []
    step0 = 0
    diverged = False
    t_div = None
    applied = []
    for k, edge in enumerate(edges):
        n = edge - step0
        if n > 0:
            t_rec, o_rec, x, _, div = K.integrate(
                x, st.params(), tone_arr, step0 * sc.dt, sc.dt, n, sc.record_every, sc.divergence_limit
            )
            # drop the duplicated first row of later segments
            first = 0 if not ts else 1
            ts.append(t_rec[first:])
            outs.append(o_rec[first:])
            if div:
                diverged = True
                t_div = float(t_rec[-1])
                break
        step0 = edge
        if k < len(sc.events):
            ev = sc.events[k]
            st.apply(ev, x)
            applied.append(Event(edge * sc.dt, ev.kind, ev.value))
    t = np.concatenate(ts)
    o = np.concatenate(outs)
    ch = {name: o[:, i].copy() for i, name in enumerate(K.OUT_NAMES)}
    _add_abc(ch, t, st.m.omega1)
    return TimeSeries(t, ch, diverged, t_div, tuple(applied))


def _add_abc(ch: dict, t: np.ndarray, w1: float):
    """Stationary-frame phase quantities (amplitude-invariant inverse Park)."""
    rot = np.exp(1j * w1 * t)
    for name in ("v_s", "i_s"):
        ab = (ch[name + "d"] + 1j * ch[name + "q"]) * rot
        ch[name + "a"] = ab.real
        ch[name + "b"] = (ab * np.exp(-2j * math.pi / 3)).real
        ch[name + "c"] = (ab * np.exp(2j * math.pi / 3)).real


def linearize(sc: SimScenario, h: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of the kernel at the scenario's equilibrium."""
    st = _State(sc)
    p = st.params()
    x0 = initial_state(st.m, st.grid, st.c, st.op)
    no_tones = np.zeros((0, 3))
    out = np.empty(K.N_OUT)

    def f(x):
        dx = np.empty(K.N_STATE)
        K._rhs(0.0, x, p, no_tones, dx, out)
        return dx

    A = np.empty((K.N_STATE, K.N_STATE))
    for i in range(K.N_STATE):
        e = np.zeros(K.N_STATE)
        e[i] = h
        A[:, i] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return A


def dominant_modes(sc: SimScenario, n: int = 4):
    """Closed-loop eigenvalues with the largest real part, ``(sigma, f_dq_hz)``."""
    ev = np.linalg.eigvals(linearize(sc))
    ev = ev[np.argsort(-ev.real)]
    return [(float(z.real), float(z.imag / (2 * math.pi))) for z in ev[:n]]

"""Small-signal MIMO admittance of the DFIG with rotor-side current control.

The model is linearised around an :class:`~dfig_reshape.params.OperatingPoint`
in the PCC-voltage-aligned synchronous frame. The PLL creates a second
(control) frame displaced by ``dtheta = H(s) dv_sq``, which perturbs

* the measured stator voltage:        ``dv^c = (I - Gv) dv``,
* the measured rotor current:         ``di_r^c = di_r - Gi dv``,
* the applied rotor voltage command:  ``dv_r = dv_r^c + Gm dv``.

Closing the rotor-current PI loop through the machine equations gives

    Y = Zeq^-1 (I - Zsr Zrr'^-1 M),     M = Mi + Mm,
    Mi = (K - D) Gi - K Gz (I - Gv),    Mm = Gm,

with ``Zeq = Zss - Zsr Zrr'^-1 Zrs`` and ``Zrr' = Zrr + K - D``. The three
parts ``Zeq^-1`` (PLL-free), ``-Zeq^-1 Zsr Zrr'^-1 Mi`` (rotor-current path)
and ``-Zeq^-1 Zsr Zrr'^-1 Mm`` (modulation path) sum to ``Y`` exactly.
Current is positive into the machine, so ``Y`` is the input admittance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import FrameMismatchError
from .params import ControlParams, GridParams, MachineParams, OperatingPoint, require_locked
from .reshape import ReshapeConfig, build_compensator, ideal_compensation
from .tfalg import FreqResponse, RationalTF, TFMatrix, mat2_inv

# complex-vector change of basis: [x_+(f); conj(x_-(f - 2 f1))] = T [x_d; x_q]
T_SEQ = np.array([[1.0, 1.0j], [1.0, -1.0j]])
T_SEQ_INV = np.linalg.inv(T_SEQ)


class Frame(str, enum.Enum):
    DQ = "dq"
    SEQUENCE = "modified-sequence"


def default_grid(n: int = 400, f_lo: float = 1.0, f_hi: float = 2000.0) -> np.ndarray:
    return np.logspace(np.log10(f_lo), np.log10(f_hi), n)


@dataclass(frozen=True)
class PLLModel:
    h_closed: RationalTF
    g_pll_v: TFMatrix
    g_pll_i: TFMatrix
    g_pll_m: TFMatrix


def build_pll_model(op: OperatingPoint, c: ControlParams) -> PLLModel:
    """SRF-PLL small-signal matrices at ``op``.

    ``h_closed = (Kp s + Ki) / (s^2 + V_sd0 (Kp s + Ki))`` maps ``dv_sq`` to the
    frame angle error; every matrix has a nonzero second column only.
    """
    require_locked(op)
    kp, ki = c.kp_pll_si, c.ki_pll_si
    pi = RationalTF([ki, kp])
    h = RationalTF([ki, kp], (RationalTF([0.0, 0.0, 1.0]) + op.V_sd0 * pi).num)

    def col2(xd, xq):
        return TFMatrix([[0.0, -xq * h], [0.0, xd * h]])

    return PLLModel(
        h_closed=h,
        g_pll_v=col2(op.V_sd0, op.V_sq0),
        g_pll_i=col2(op.I_rd0, op.I_rq0),
        g_pll_m=col2(op.V_rd0, op.V_rq0),
    )


def pll_identity_residual(pll: PLLModel, op: OperatingPoint, c: ControlParams, omega) -> float:
    """max |Gi (I - Gv)^-1 - ideal| over ``omega`` (rad/s, nonzero)."""
    s = 1j * np.asarray(omega, dtype=float)
    eye = np.eye(2)
    lhs = pll.g_pll_i(s) @ mat2_inv(eye - pll.g_pll_v(s))
    rhs = ideal_compensation(op, c)(s)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class AdmittanceModel:
    frame: Frame
    y_siso: FreqResponse
    y_i: FreqResponse
    y_m: FreqResponse
    y_total: FreqResponse

    @property
    def freqs_hz(self) -> np.ndarray:
        return self.y_total.freqs_hz

    def closure_error(self) -> float:
        parts = self.y_siso.values + self.y_i.values + self.y_m.values
        return float(np.max(np.abs(self.y_total.values - parts)))

    def component(self, name: str) -> FreqResponse:
        return {"siso": self.y_siso, "i": self.y_i, "m": self.y_m, "total": self.y_total}[name]


class AdmittanceBlocks:
    """Transfer-matrix blocks of the linearised DFIG; evaluates at any ``s``."""

    def __init__(self, m: MachineParams, c: ControlParams, op: OperatingPoint, reshape: ReshapeConfig):
        require_locked(op)
        self.m, self.c, self.op = m, c, op
        self.reshape = reshape.resolved(op)
        self.pll = build_pll_model(op, c)
        w1, wsl = m.omega1, op.omega_sl
        s = RationalTF.s()
        eye, J = TFMatrix.identity(), TFMatrix.rotation_generator()

        def rl(R, L, w):
            return eye * (R + s * L) + J * (w * L)

        self.z_ss = rl(m.R_s, m.L_s, w1)
        self.z_sr = rl(0.0, m.L_m, w1)
        self.z_rs = rl(0.0, m.L_m, wsl)
        self.z_rr = rl(m.R_r, m.L_r, wsl)
        self.k_pi = RationalTF([c.Ki_i, c.Kp_i], [0.0, 1.0])
        self.d_gain = decoupling_gain(m, c, op)
        self.k = eye * self.k_pi
        self.d = J * self.d_gain
        self.g_z = build_compensator(self.reshape, c)

    def parts(self, s):
        """(y_siso, y_i, y_m) evaluated at complex ``s`` (array)."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        eye = np.broadcast_to(np.eye(2, dtype=complex), s.shape + (2, 2))
        k = self.k(s)
        kd = k - self.d(s)
        zi = mat2_inv(self.z_rr(s) + kd)
        zsr = self.z_sr(s)
        y_eq = mat2_inv(self.z_ss(s) - zsr @ zi @ self.z_rs(s))
        gi, gv, gm = self.pll.g_pll_i(s), self.pll.g_pll_v(s), self.pll.g_pll_m(s)
        m_i = kd @ gi - k @ self.g_z(s) @ (eye - gv)
        a = y_eq @ zsr @ zi
        return y_eq, -(a @ m_i), -(a @ gm)

    def __call__(self, s):
        y0, yi, ym = self.parts(s)
        return y0 + yi + ym

    def poles(self) -> np.ndarray:
        """Open-loop poles of Y (device on a stiff bus).

        Zeros of the 4x4 stator/rotor polynomial impedance determinant (found
        as generalised eigenvalues of its companion linearisation) plus the
        PLL and compensator poles.
        """
        m, c, op = self.m, self.c, self.op
        I2 = np.eye(2)
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        w1, wsl, d = m.omega1, op.omega_sl, self.d_gain
        integ = c.Ki_i > 0
        P0 = np.zeros((4, 4))
        P1 = np.zeros((4, 4))
        P2 = np.zeros((4, 4))
        P0[:2, :2] = m.R_s * I2 + w1 * m.L_s * J
        P1[:2, :2] = m.L_s * I2
        P0[:2, 2:] = w1 * m.L_m * J
        P1[:2, 2:] = m.L_m * I2
        rr0 = (m.R_r + c.Kp_i) * I2 + (wsl * m.L_r - d) * J
        if integ:  # rotor rows multiplied by s to clear the PI integrator
            P1[2:, :2] = wsl * m.L_m * J
            P2[2:, :2] = m.L_m * I2
            P0[2:, 2:] = c.Ki_i * I2
            P1[2:, 2:] = rr0
            P2[2:, 2:] = m.L_r * I2
        else:
            P0[2:, :2] = wsl * m.L_m * J
            P1[2:, :2] = m.L_m * I2
            P0[2:, 2:] = rr0
            P1[2:, 2:] = m.L_r * I2
        n = 4
        Z, E = np.zeros((n, n)), np.eye(n)
        A = np.block([[Z, E], [-P0, -P1]])
        B = np.block([[E, Z], [Z, P2]])
        if not integ:
            A, B = -P0, P1
        ev = scipy.linalg.eig(A, B, right=False)
        ev = ev[np.isfinite(ev)]
        extra = [self.pll.h_closed.poles()]
        if self.reshape.active:
            extra.append(self.g_z[1, 1].poles() if not self.g_z[1, 1].is_zero else self.g_z[0, 1].poles())
        return np.concatenate([ev] + extra)

    def is_stable(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.real(self.poles()) < -tol))


def decoupling_gain(m: MachineParams, c: ControlParams, op: OperatingPoint) -> float:
    """Slip cross-coupling feedforward gain ``omega_sl * sigma * L_r`` (0 if disabled)."""
    return op.omega_sl * m.sigma * m.L_r if c.decoupling else 0.0


def admittance_blocks(m, c, op, reshape) -> AdmittanceBlocks:
    return AdmittanceBlocks(m, c, op, reshape)


def build_admittance_dq(
    m: MachineParams,
    c: ControlParams,
    op: OperatingPoint,
    reshape: ReshapeConfig,
    freqs_hz=None,
) -> AdmittanceModel:
    """d-q frame admittance and its three-part decomposition on ``freqs_hz``.

    Frequencies are d-q frame frequencies and may be negative; 0 Hz is a pole
    of the current PI and must be avoided.
    """
    f = default_grid() if freqs_hz is None else np.asarray(freqs_hz, dtype=float)
    blocks = AdmittanceBlocks(m, c, op, reshape)
    y0, yi, ym = blocks.parts(2j * np.pi * f)
    return AdmittanceModel(
        Frame.DQ,
        FreqResponse(f, y0),
        FreqResponse(f, yi),
        FreqResponse(f, ym),
        FreqResponse(f, y0 + yi + ym),
    )


def _similarity(fr: FreqResponse, shift: float, left, right) -> FreqResponse:
    return FreqResponse(fr.freqs_hz + shift, left @ fr.values @ right)


def dq_to_modified_sequence(y_dq: AdmittanceModel, omega1: float) -> AdmittanceModel:
    """Map a d-q model to the modified sequence frame.

    The sequence-frame value at ``f`` is ``T Y_dq(f - f1) T^-1``: entry (1,1)
    maps positive-sequence voltage at ``f`` to current at ``f``, the
    off-diagonals couple to the mirror component at ``f - 2 f1``.
    """
    if y_dq.frame is not Frame.DQ:
        raise FrameMismatchError(f"expected a dq model, got {y_dq.frame.value}")
    f1 = omega1 / (2 * np.pi)
    conv = [_similarity(p, f1, T_SEQ, T_SEQ_INV) for p in (y_dq.y_siso, y_dq.y_i, y_dq.y_m, y_dq.y_total)]
    return AdmittanceModel(Frame.SEQUENCE, *conv)


def modified_sequence_to_dq(y_seq: AdmittanceModel, omega1: float) -> AdmittanceModel:
    if y_seq.frame is not Frame.SEQUENCE:
        raise FrameMismatchError(f"expected a modified-sequence model, got {y_seq.frame.value}")
    f1 = omega1 / (2 * np.pi)
    conv = [_similarity(p, -f1, T_SEQ_INV, T_SEQ) for p in (y_seq.y_siso, y_seq.y_i, y_seq.y_m, y_seq.y_total)]
    return AdmittanceModel(Frame.DQ, *conv)


def build_admittance_sequence(m, c, op, reshape, freqs_hz) -> AdmittanceModel:
    """Sequence-frame model sampled directly at sequence frequencies ``freqs_hz``."""
    f1 = m.omega1 / (2 * np.pi)
    y_dq = build_admittance_dq(m, c, op, reshape, np.asarray(freqs_hz, dtype=float) - f1)
    return dq_to_modified_sequence(y_dq, m.omega1)


def grid_impedance_dq(g: GridParams) -> TFMatrix:
    s = RationalTF.s()
    diag = g.R_g + s * g.L_g
    x = g.omega1 * g.L_g
    return TFMatrix([[diag, -x], [x, diag]])


def grid_impedance_sequence(g: GridParams, freqs_hz) -> FreqResponse:
    """diag(Z(j w), Z(j (w - 2 w1))) in the modified sequence frame."""
    f = np.asarray(freqs_hz, dtype=float)
    w = 2 * np.pi * f
    vals = np.zeros(f.shape + (2, 2), dtype=complex)
    vals[:, 0, 0] = g.R_g + 1j * w * g.L_g
    vals[:, 1, 1] = g.R_g + 1j * (w - 2 * g.omega1) * g.L_g
    return FreqResponse(f, vals)

"""Generalised Nyquist and equivalent-SISO stability assessment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateReductionError,
    FrameMismatchError,
    MarginalCaseError,
    UnstableSubsystemError,
)
from .impedance import (
    AdmittanceBlocks,
    AdmittanceModel,
    Frame,
    T_SEQ,
    T_SEQ_INV,
    grid_impedance_dq,
)
from .params import F1, GridParams
from .tfalg import FreqResponse, TFMatrix, mat2_eig, mat2_inv, track_eigenvalues

CRITICAL = -1.0 + 0.0j
MARGINAL_DIST = 1e-6


def gnc_grid(f_max: float = 5000.0, n_log: int = 2500, n_lin: int = 4000) -> np.ndarray:
    """Symmetric d-q frequency grid (Hz), dense on 1-1000 Hz, excluding 0."""
    pos = np.union1d(np.logspace(-2, np.log10(f_max), n_log), np.linspace(1.0, 1000.0, n_lin))
    return np.concatenate([-pos[::-1], pos])


@dataclass(frozen=True)
class EigenLoci:
    """Continuity-paired eigenvalues of Y*Zg over a d-q frequency sweep.

    ``freqs_hz`` are d-q frame frequencies; ``seq_freqs_hz`` the matching
    positive-sequence frequencies (shifted by the fundamental).
    """

    freqs_hz: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    f1: float = F1

    @property
    def seq_freqs_hz(self) -> np.ndarray:
        return self.freqs_hz + self.f1

    @property
    def loci(self):
        return (self.lambda1, self.lambda2)


def gnc_loci(y, zg, freqs_hz=None) -> EigenLoci:
    """Eigen-loci of ``Y(jw) Zg(jw)``.

    ``y`` is either an :class:`AdmittanceBlocks` (evaluated on ``freqs_hz``,
    d-q frame) or an :class:`AdmittanceModel`. With a d-q model, ``zg`` is a
    :class:`TFMatrix`; with a modified-sequence model it is a
    :class:`FreqResponse` on the same grid (eigenvalues are frame invariant).
    """
    if isinstance(y, AdmittanceBlocks):
        f = gnc_grid() if freqs_hz is None else np.asarray(freqs_hz, dtype=float)
        yv = y(2j * np.pi * f)
        zv = _zg_values(zg, f)
        f_dq = f
    else:
        f_dq = y.freqs_hz
        yv = y.y_total.values
        if y.frame is Frame.DQ:
            zv = _zg_values(zg, f_dq)
        else:
            if not isinstance(zg, FreqResponse) or not np.array_equal(zg.freqs_hz, f_dq):
                raise FrameMismatchError("sequence-frame loci need a grid impedance sampled on the same grid")
            zv = zg.values
            f_dq = f_dq - F1
    lam = track_eigenvalues(mat2_eig(yv @ zv))
    return EigenLoci(np.asarray(f_dq), lam[:, 0], lam[:, 1])


def _zg_values(zg, f):
    if isinstance(zg, GridParams):
        zg = grid_impedance_dq(zg)
    if isinstance(zg, TFMatrix):
        return zg(2j * np.pi * np.asarray(f))
    return np.asarray(zg.values)


def eig_residual(y_values, zg_values, loci: EigenLoci) -> float:
    """Largest |det(lambda I - Y Zg)| over the sweep, normalised by |Y Zg|^2 + 1."""
    L = np.asarray(y_values) @ np.asarray(zg_values)
    worst = 0.0
    for lam in loci.loci:
        M = lam[:, None, None] * np.eye(2) - L
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        scale = 1.0 + np.max(np.abs(L), axis=(1, 2)) ** 2
        worst = max(worst, float(np.max(np.abs(det) / scale)))
    return worst


def winding_by_argument(z: np.ndarray, center: complex = CRITICAL) -> int:
    """Counter-clockwise winding of the closed polygon ``z`` about ``center``."""
    w = np.asarray(z) - center
    d = np.angle(w[1:] / w[:-1])
    close = np.angle(w[0] / w[-1])
    return int(round((np.sum(d) + close) / (2 * math.pi)))


def winding_by_crossings(z: np.ndarray, center: complex = CRITICAL) -> int:
    """Signed crossings of the ray from ``center`` towards +real (closed polygon)."""
    w = np.asarray(z) - center
    a, b = w, np.roll(w, -1)
    up = (a.imag <= 0) & (b.imag > 0)
    down = (a.imag > 0) & (b.imag <= 0)
    cross = a.real * b.imag - a.imag * b.real  # >0: center on the left of a->b
    return int(np.sum(up & (cross > 0)) - np.sum(down & (cross < 0)))


def count_encirclements(loci: EigenLoci, center: complex = CRITICAL) -> int:
    """Net counter-clockwise encirclements of ``center`` by all eigen-loci.

    Each locus is closed on itself across the sweep ends (the loop gain tends
    to a constant at high frequency). The accumulated-argument count is
    checked against an independent ray-crossing count.
    """
    total_arg = 0
    total_ray = 0
    for lam in loci.loci:
        if np.min(np.abs(lam - center)) < MARGINAL_DIST:
            raise MarginalCaseError("eigen-locus passes within 1e-6 of the critical point")
        total_arg += winding_by_argument(lam, center)
        total_ray += winding_by_crossings(lam, center)
    if total_arg != total_ray:
        # branches may be exchanged across the closing segment; the product is not
        det = (loci.lambda1 - center) * (loci.lambda2 - center)
        total_arg = winding_by_argument(det, 0.0)
        total_ray = winding_by_crossings(det, 0.0)
        if total_arg != total_ray:
            raise MarginalCaseError(f"winding counts disagree ({total_arg} vs {total_ray}); grid too coarse")
    return total_arg


def critical_crossings(loci: EigenLoci, center: complex = CRITICAL):
    """Sequence-frame frequencies where a locus crosses the real axis left of ``center``.

    Returns a list of ``(f_seq_hz, real_value)``; these mark the oscillation
    frequencies when the critical point is encircled.
    """
    out = []
    fs = loci.seq_freqs_hz
    for lam in loci.loci:
        im = lam.imag
        idx = np.nonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0)[0]
        for k in idx:
            t = im[k] / (im[k] - im[k + 1])
            re = lam.real[k] + t * (lam.real[k + 1] - lam.real[k])
            if re < center.real:
                out.append((float(fs[k] + t * (fs[k + 1] - fs[k])), float(re)))
    return sorted(out)


def closest_approach(loci: EigenLoci, center: complex = CRITICAL):
    """(distance, sequence frequency) of the nearest locus point to ``center``."""
    best = (math.inf, math.nan)
    for lam in loci.loci:
        k = int(np.argmin(np.abs(lam - center)))
        best = min(best, (float(abs(lam[k] - center)), float(loci.seq_freqs_hz[k])))
    return best


# -- equivalent SISO ----------------------------------------------------------


def equivalent_siso(z: FreqResponse, zg: FreqResponse, sequence: str = "positive"):
    """Scalar reduction of the 2x2 interconnection.

    Positive sequence: ``Z_peq = Z11 - Z21 Z12 / (Z22 + Zg22)``, ``Z_pgeq = Zg11``.
    The negative-sequence call mirrors the indices.
    """
    if not np.array_equal(z.freqs_hz, zg.freqs_hz):
        raise FrameMismatchError("impedance and grid impedance are on different grids")
    Z, G = z.values, zg.values
    a, b = (0, 1) if sequence == "positive" else (1, 0)
    den = Z[:, b, b] + G[:, b, b]
    if np.any(np.abs(den) < 1e-12):
        k = int(np.argmin(np.abs(den)))
        raise DegenerateReductionError(f"|Z22 + Zg22| < 1e-12 at {z.freqs_hz[k]} Hz")
    zp = Z[:, a, a] - Z[:, b, a] * Z[:, a, b] / den
    return FreqResponse(z.freqs_hz, zp), FreqResponse(z.freqs_hz, G[:, a, a])


@dataclass(frozen=True)
class Crossing:
    f_hz: float
    phase_diff_deg: float

    @property
    def unstable(self) -> Optional[bool]:
        if self.phase_diff_deg == 180.0:
            return None
        return self.phase_diff_deg > 180.0


def _phase_diff(zp: complex, zg: complex) -> float:
    d = abs(math.degrees(np.angle(zp)) - math.degrees(np.angle(zg)))
    return d % 360.0


def bode_margin(z_peq: FreqResponse, z_pgeq: FreqResponse, refine: Callable | None = None, tol_hz: float = 0.1):
    """All magnitude intersections of ``Z_peq`` and ``Z_pgeq``.

    Crossings are bracketed on the grid, seeded by log-magnitude linear
    interpolation and, when ``refine(f) -> (zp, zg)`` is given, bisected to
    ``tol_hz``. Returns a list of :class:`Crossing` (empty if none); the worst
    is the one with the largest phase difference.
    """
    f = z_peq.freqs_hz
    d = np.log(np.abs(z_peq.values)) - np.log(np.abs(z_pgeq.values))
    out = []
    for k in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        lo, hi = f[k], f[k + 1]
        t = d[k] / (d[k] - d[k + 1])
        fx = lo + t * (hi - lo)
        if refine is not None:
            d_lo = d[k]
            while hi - lo > tol_hz:
                zp, zg = refine(fx)
                dm = math.log(abs(zp)) - math.log(abs(zg))
                if np.sign(dm) == np.sign(d_lo):
                    lo, d_lo = fx, dm
                else:
                    hi = fx
                fx = 0.5 * (lo + hi)
            zp, zg = refine(fx)
        else:
            # interpolate the phase along the unwrapped segment
            zp = z_peq.values[k] * (z_peq.values[k + 1] / z_peq.values[k]) ** t
            zg = z_pgeq.values[k] * (z_pgeq.values[k + 1] / z_pgeq.values[k]) ** t
        out.append(Crossing(float(fx), _phase_diff(zp, zg)))
    return out


def worst_crossing(crossings) -> Optional[Crossing]:
    return max(crossings, key=lambda c: c.phase_diff_deg) if crossings else None


def negative_resistance_bands(z_peq: FreqResponse, band=(None, None), refine: Callable | None = None, tol_hz: float = 0.1):
    """Maximal sub-intervals of ``band`` where Re{Z_peq} < 0.

    ``refine(f) -> complex`` evaluates Z_peq anywhere and enables bisection of
    the endpoints to ``tol_hz``; otherwise endpoints are linearly interpolated.
    """
    f = z_peq.freqs_hz
    lo_b = f[0] if band[0] is None else band[0]
    hi_b = f[-1] if band[1] is None else band[1]
    sel = (f >= lo_b) & (f <= hi_b)
    f, r = f[sel], z_peq.values[sel].real
    if f.size == 0:
        return []

    def edge(k):
        a, b = f[k], f[k + 1]
        if refine is None:
            return float(a + r[k] / (r[k] - r[k + 1]) * (b - a))
        ra = r[k]
        while b - a > tol_hz:
            mid = 0.5 * (a + b)
            rm = refine(mid).real
            if np.sign(rm) == np.sign(ra):
                a, ra = mid, rm
            else:
                b = mid
        return float(0.5 * (a + b))

    neg = r < 0
    bands = []
    start = float(lo_b) if neg[0] else None
    for k in range(f.size - 1):
        if neg[k] != neg[k + 1]:
            x = edge(k)
            if neg[k + 1]:
                start = x
            else:
                bands.append((start, x))
                start = None
    if start is not None:
        bands.append((start, float(hi_b)))
    return bands


@dataclass
class StabilityReport:
    stable: Optional[bool]
    encirclements: Optional[int]
    f_int: Optional[float]
    phase_diff_deg: Optional[float]
    neg_resistance_bands: list
    margin_source: str
    crossings: list = field(default_factory=list)
    loci_features_hz: list = field(default_factory=list)
    marginal: bool = False

    def to_dict(self) -> dict:
        return {
            "stable": self.stable,
            "marginal": self.marginal,
            "margin_source": self.margin_source,
            "encirclements": self.encirclements,
            "f_int": self.f_int,
            "phase_diff_deg": self.phase_diff_deg,
            "crossings": [{"f_hz": c.f_hz, "phase_diff_deg": c.phase_diff_deg} for c in self.crossings],
            "neg_resistance_bands": [list(b) for b in self.neg_resistance_bands],
            "loci_features_hz": list(self.loci_features_hz),
        }


def siso_band_default(f1: float = F1):
    return (f1 + 5.0, 2000.0)


def sequence_impedance(blocks: AdmittanceBlocks, f_seq) -> np.ndarray:
    """Z = Y^-1 in the modified sequence frame at sequence frequencies (Hz)."""
    f_seq = np.atleast_1d(np.asarray(f_seq, dtype=float))
    f1 = blocks.m.omega1 / (2 * np.pi)
    y = blocks(2j * np.pi * (f_seq - f1))
    return mat2_inv(T_SEQ @ y @ T_SEQ_INV)


def _grid_seq(g: GridParams, f_seq):
    w = 2 * np.pi * np.atleast_1d(np.asarray(f_seq, dtype=float))
    z11 = g.R_g + 1j * w * g.L_g
    z22 = g.R_g + 1j * (w - 2 * g.omega1) * g.L_g
    return z11, z22


def siso_curves(blocks: AdmittanceBlocks, g: GridParams, f_seq, sequence="positive"):
    """(Z_peq, Z_pgeq, Z11) as scalar responses on sequence frequencies ``f_seq``."""
    f_seq = np.asarray(f_seq, dtype=float)
    Z = sequence_impedance(blocks, f_seq)
    z11, z22 = _grid_seq(g, f_seq)
    G = np.zeros_like(Z)
    G[:, 0, 0], G[:, 1, 1] = z11, z22
    zp, zpg = equivalent_siso(FreqResponse(f_seq, Z), FreqResponse(f_seq, G), sequence)
    return zp, zpg, FreqResponse(f_seq, Z[:, 0, 0])


def siso_report(blocks: AdmittanceBlocks, g: GridParams, band=None, n: int = 4000, nr_band=None) -> StabilityReport:
    """Equivalent positive-sequence SISO margins on ``band`` (Hz)."""
    lo, hi = siso_band_default(blocks.m.omega1 / (2 * np.pi)) if band is None else band
    f = np.linspace(lo, hi, n)
    zp, zpg, _ = siso_curves(blocks, g, f)

    def refine(fx):
        a, b, _ = siso_curves(blocks, g, [fx])
        return a.values[0], b.values[0]

    crossings = bode_margin(zp, zpg, refine=refine)
    worst = worst_crossing(crossings)
    bands = negative_resistance_bands(zp, nr_band or (lo, hi), refine=lambda fx: refine(fx)[0])
    if worst is None:
        stable, marginal = True, False
    else:
        verdicts = [c.unstable for c in crossings]
        marginal = any(v is None for v in verdicts)
        stable = None if marginal else not any(verdicts)
    return StabilityReport(
        stable=stable,
        encirclements=None,
        f_int=None if worst is None else worst.f_hz,
        phase_diff_deg=None if worst is None else worst.phase_diff_deg,
        neg_resistance_bands=bands,
        margin_source="SISO",
        crossings=crossings,
        marginal=marginal,
    )


def gnc_report(blocks: AdmittanceBlocks, g: GridParams, freqs_hz=None, check_subsystems: bool = True) -> StabilityReport:
    """Generalised Nyquist verdict for the device-grid interconnection."""
    if check_subsystems and not blocks.is_stable():
        raise UnstableSubsystemError("device admittance has right-half-plane poles on a stiff bus")
    loci = gnc_loci(blocks, grid_impedance_dq(g), freqs_hz)
    n = count_encirclements(loci)
    feats = [f for f, _ in critical_crossings(loci)]
    return StabilityReport(
        stable=(n == 0),
        encirclements=n,
        f_int=None,
        phase_diff_deg=None,
        neg_resistance_bands=[],
        margin_source="GNC",
        loci_features_hz=feats,
    )

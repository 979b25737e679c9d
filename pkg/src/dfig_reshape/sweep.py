"""Parameter sweeps over the frequency-domain stability assessments."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .config import RunConfig
from .errors import DFIGError
from .impedance import AdmittanceBlocks
from .params import grid_from_scr, solve_operating_point
from .reshape import ReshapeMode
from .stability import gnc_report, siso_report

COLUMNS = ("condition", "mode", "f_int", "phase_diff_deg", "stable", "gnc_stable", "encirclements", "error")

# conditions of the robustness study at Kp_pll = 2.57 p.u., SCR 2
_ROBUST_BASE = dict(Kp_pll=2.57, scr=2.0)
ROBUSTNESS_ROWS = tuple(
    dict(mode=mode, **_ROBUST_BASE, **cond)
    for cond in (
        dict(P_ref=0.0, Q_ref=-1.0),
        dict(P_ref=-0.95, Q_ref=-0.31),
        dict(P_ref=-0.95, Q_ref=0.31),
    )
    for mode in ("Gz1", "Gz2")
) + tuple(
    dict(mode=mode, **_ROBUST_BASE, **cond)
    for cond in (dict(rotor_hz=60.0), dict(rotor_hz=40.0), dict(leakage_scale=1.2), dict(leakage_scale=0.8))
    for mode in ("Gz1", "Gz2")
)


def expand(cfg: RunConfig) -> list:
    """Cross product of ``axes`` times ``rows`` as a list of override dicts."""
    sw = cfg.sweep
    names = list(sw.axes)
    combos = [dict(zip(names, vals)) for vals in itertools.product(*(sw.axes[n] for n in names))]
    rows = sw.rows or [{}]
    return [{**c, **r} for c in combos for r in rows]


def condition_label(over: dict) -> str:
    return ";".join(f"{k}={over[k]}" for k in sorted(over)) or "base"


def evaluate_point(cfg: RunConfig, over: dict, analysis: str = "siso") -> dict:
    """Stability figures for ``cfg`` with sweep overrides applied.

    Failures (no equilibrium, marginal loci, ...) are recorded in the row.
    """
    row = dict.fromkeys(COLUMNS)
    row["condition"] = condition_label(over)
    try:
        m = cfg.machine_params()
        if "leakage_scale" in over:
            m = m.with_leakage_scale(float(over["leakage_scale"]))
        c = cfg.control_params()
        for key in ("Kp_pll", "Ki_pll"):
            if key in over:
                c = replace(c, **{key: float(over[key])})
        s = cfg.scenario
        scr = float(over.get("scr", cfg.grid.effective_scr))
        xr = float(over.get("x_over_r", cfg.grid.effective_x_over_r))
        g = grid_from_scr(scr, xr, cfg.grid.V_g, m.omega1)
        P = float(over.get("P_ref", s.P_ref))
        Q = float(over.get("Q_ref", s.Q_ref))
        fr = float(over.get("rotor_hz", s.rotor_hz))
        op = solve_operating_point(m, g, P, Q, 2 * math.pi * fr)
        rc = cfg.reshape_config()
        if "mode" in over:
            rc = rc.with_mode(ReshapeMode.parse(over["mode"]))
        row["mode"] = rc.mode.value
        blocks = AdmittanceBlocks(m, c, op, rc.resolved(op))
        if analysis in ("siso", "both"):
            rep = siso_report(blocks, g, band=cfg.analysis.siso_band)
            row["f_int"] = rep.f_int
            row["phase_diff_deg"] = rep.phase_diff_deg
            row["stable"] = rep.stable
        if analysis in ("gnc", "both"):
            rep = gnc_report(blocks, g)
            row["gnc_stable"] = rep.stable
            row["encirclements"] = rep.encirclements
    except DFIGError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _eval_star(args):
    return evaluate_point(*args)


def run_sweep(cfg: RunConfig, jobs: int = 1) -> list:
    """Evaluate every sweep point; row order follows :func:`expand`."""
    points = expand(cfg)
    tasks = [(cfg, p, cfg.sweep.analysis) for p in points]
    if jobs <= 1 or len(tasks) < 2:
        return [_eval_star(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_eval_star, tasks))

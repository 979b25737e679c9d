"""Batch command-line front end.

Every subcommand takes ``--config`` (TOML, or JSON by extension), writes its
tables into ``--out`` and exits with 0 on success (unstable findings
included), 2 on configuration errors and 3 on numerical failures.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import RunConfig, SweepSection, load_config, parse_config
from .errors import ConfigError, DFIGError
from .impedance import AdmittanceBlocks, build_admittance_dq, build_admittance_sequence, grid_impedance_dq
from .simulator import TimeSeries, fft_peaks, frequency_scan, run_scenario
from .stability import gnc_loci, gnc_report, siso_curves, siso_report
from .sweep import COLUMNS, ROBUSTNESS_ROWS, run_sweep
from .tfalg import FreqResponse

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
ENTRIES = ("11", "12", "21", "22")
COMPONENTS = ("siso", "i", "m", "total")


# ---------------------------------------------------------------- table io
def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path: Path, columns, rows, fmt: str = "csv") -> Path:
    """Write ``rows`` (sequences aligned with ``columns``) as CSV or JSON records."""
    if fmt == "json":
        path = path.with_suffix(".json")
        recs = [dict(zip(columns, (_jsonable(v) for v in r))) for r in rows]
        path.write_text(json.dumps(recs, indent=1) + "\n")
        return path
    path = path.with_suffix(".csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n")
    return path


def impedance_columns(frames, components):
    cols = ["f_hz"]
    for fr in frames:
        for comp in components:
            for e in ENTRIES:
                cols += [f"{fr}_{comp}_{e}_re", f"{fr}_{comp}_{e}_im"]
    return cols


def read_impedance_csv(path) -> dict:
    """Reload an impedance table as ``{(frame, component): FreqResponse}``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, data = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
    f = data[:, 0]
    out = {}
    idx = {name: k for k, name in enumerate(head)}
    keys = sorted({tuple(h.split("_")[:2]) for h in head[1:]}, key=lambda k: head.index(f"{k[0]}_{k[1]}_11_re"))
    for fr, comp in keys:
        vals = np.empty((f.size, 2, 2), dtype=complex)
        for e in ENTRIES:
            re = data[:, idx[f"{fr}_{comp}_{e}_re"]]
            im = data[:, idx[f"{fr}_{comp}_{e}_im"]]
            vals[:, int(e[0]) - 1, int(e[1]) - 1] = re + 1j * im
        out[(fr, comp)] = FreqResponse(f, vals)
    return out


def _plot_script(path: Path, data_file: str, x: str, ys, logx: bool = True) -> Path:
    body = f'''import csv
import matplotlib.pyplot as plt

with open({data_file!r}) as fh:
    rows = list(csv.DictReader(fh))
x = [float(r[{x!r}]) for r in rows]
fig, ax = plt.subplots()
for name in {list(ys)!r}:
    ax.plot(x, [float(r[name]) if r[name] else float("nan") for r in rows], label=name)
{"ax.set_xscale('log')" if logx else ""}
ax.set_xlabel({x!r})
ax.legend()
ax.grid(True)
plt.show()
'''
    path.write_text(body)
    return path


# ---------------------------------------------------------------- plumbing
def _common(fn):
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="TOML or JSON run configuration (defaults when omitted).")
    @click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True,
                  help="Output directory.")
    @click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
    @click.option("--jobs", type=int, default=1, show_default=True, help="Parallel workers (sweeps).")
    @click.option("--seed", type=int, default=0, help="Reserved; every analysis is deterministic.")
    @click.option("--plot", is_flag=True, help="Also emit a matplotlib script next to the data.")
    @functools.wraps(fn)
    def wrapper(config_path, out_dir, fmt, jobs, seed, plot, **kw):
        try:
            cfg = load_config(config_path) if config_path else parse_config({})
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            fn(cfg=cfg, out=out, fmt=fmt, jobs=jobs, plot=plot, **kw)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except DFIGError as exc:
            click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


def _blocks(cfg: RunConfig):
    m, c = cfg.machine_params(), cfg.control_params()
    op = cfg.operating_point()
    return AdmittanceBlocks(m, c, op, cfg.reshape_config().resolved(op)), cfg.grid_params(), op


@click.group()
@click.version_option(__version__)
def main():
    """Impedance modelling, stability assessment and simulation of a DFIG
    with PLL-coupling impedance reshaping."""


@main.command()
@_common
@click.option("--frame", type=click.Choice(["dq", "sequence", "both"]), default="both", show_default=True)
def impedance(cfg, out, fmt, jobs, plot, frame):
    """Admittance components (PLL-free, current path, modulation path, total)."""
    a = cfg.analysis
    f = np.logspace(np.log10(a.f_min), np.log10(a.f_max), a.n_points)
    m, c, rc = cfg.machine_params(), cfg.control_params(), cfg.reshape_config()
    op = cfg.operating_point()
    rc = rc.resolved(op)
    frames = ["dq", "seq"] if frame == "both" else ["dq" if frame == "dq" else "seq"]
    models = {}
    if "dq" in frames:
        models["dq"] = build_admittance_dq(m, c, op, rc, f)
    if "seq" in frames:
        models["seq"] = build_admittance_sequence(m, c, op, rc, f)
    cols = impedance_columns(frames, COMPONENTS)
    rows = []
    for k, fk in enumerate(f):
        r = [fk]
        for fr in frames:
            for comp in COMPONENTS:
                v = models[fr].component(comp).values[k]
                for e in ENTRIES:
                    z = v[int(e[0]) - 1, int(e[1]) - 1]
                    r += [z.real, z.imag]
        rows.append(r)
    p = write_table(out / "impedance", cols, rows, fmt)
    if plot and fmt == "csv":
        _plot_script(out / "plot_impedance.py", p.name, "f_hz", [f"{frames[-1]}_total_{e}_re" for e in ENTRIES])
    click.echo(str(p))


@main.command()
@_common
def nyquist(cfg, out, fmt, jobs, plot):
    """Generalised Nyquist verdict and eigen-loci."""
    blocks, g, _ = _blocks(cfg)
    rep = gnc_report(blocks, g)
    loci = gnc_loci(blocks, grid_impedance_dq(g))
    cols = ["f_dq_hz", "f_seq_hz", "l1_re", "l1_im", "l2_re", "l2_im"]
    rows = [
        [fd, fs, l1.real, l1.imag, l2.real, l2.imag]
        for fd, fs, l1, l2 in zip(loci.freqs_hz, loci.seq_freqs_hz, loci.lambda1, loci.lambda2)
    ]
    p = write_table(out / "loci", cols, rows, fmt)
    write_json(out / "nyquist_report.json", rep.to_dict())
    if plot and fmt == "csv":
        _plot_script(out / "plot_loci.py", p.name, "l1_re", ["l1_im"], logx=False)
    click.echo(json.dumps(rep.to_dict(), default=_jsonable))


@main.command("siso-margin")
@_common
def siso_margin(cfg, out, fmt, jobs, plot):
    """Equivalent SISO Bode margins and negative-resistance bands."""
    blocks, g, _ = _blocks(cfg)
    rep = siso_report(blocks, g, band=cfg.analysis.siso_band)
    a = cfg.analysis
    f = np.logspace(np.log10(max(a.f_min, 1.0)), np.log10(a.f_max), a.n_points)
    f = f[np.abs(f - blocks.m.omega1 / (2 * np.pi)) > 1e-9]
    zp, zpg, z11 = siso_curves(blocks, g, f)
    cols = ["f_hz", "zpeq_mag_db", "zpeq_phase_deg", "zpgeq_mag_db", "zpgeq_phase_deg", "z11_mag_db",
            "z11_phase_deg", "zpeq_re"]
    rows = []
    for k, fk in enumerate(f):
        a1, a2, a3 = zp.values[k], zpg.values[k], z11.values[k]
        rows.append([fk, 20 * np.log10(abs(a1)), np.degrees(np.angle(a1)), 20 * np.log10(abs(a2)),
                     np.degrees(np.angle(a2)), 20 * np.log10(abs(a3)), np.degrees(np.angle(a3)), a1.real])
    p = write_table(out / "bode", cols, rows, fmt)
    write_json(out / "siso_report.json", rep.to_dict())
    if plot and fmt == "csv":
        _plot_script(out / "plot_bode.py", p.name, "f_hz", ["zpeq_mag_db", "zpgeq_mag_db"])
    click.echo(json.dumps(rep.to_dict(), default=_jsonable))


def _peaks_rows(peaks):
    return [[pk.freq_hz, pk.amplitude] for pk in peaks]


@main.command()
@_common
def simulate(cfg, out, fmt, jobs, plot):
    """Run the scripted scenario; divergence is reported, not an error."""
    sc = cfg.sim_scenario()
    ts = run_scenario(sc)
    p = out / "timeseries.csv"
    ts.to_csv(p)
    summary = {
        "diverged": ts.diverged,
        "t_diverged": ts.t_diverged,
        "t_end": float(ts.t[-1]),
        "events": [{"t": e.t, "kind": e.kind, "value": e.value} for e in ts.events],
    }
    a = cfg.analysis
    if a.fft_window is not None:
        peaks = fft_peaks(ts, a.fft_channel, a.fft_window, rel_threshold=a.rel_threshold)
        summary["fft_peaks"] = [{"f_hz": pk.freq_hz, "amplitude": pk.amplitude} for pk in peaks]
    write_json(out / "simulate_summary.json", summary)
    if plot:
        _plot_script(out / "plot_timeseries.py", p.name, "t", ["v_sa", "P", "Q"], logx=False)
    click.echo(json.dumps({k: summary[k] for k in ("diverged", "t_diverged")}))


@main.command()
@_common
def scan(cfg, out, fmt, jobs, plot):
    """Perturbation-injection admittance scan against the analytic model."""
    sc = cfg.sim_scenario()
    if sc.events:
        raise ConfigError("scan: scenario.events must be empty")
    a = cfg.analysis
    freqs = list(a.scan_freqs)
    meas = frequency_scan(sc, freqs, a.scan_amp)
    blocks, g, op = _blocks(cfg)
    ana = build_admittance_sequence(blocks.m, blocks.c, op, blocks.reshape, np.array(freqs)).y_total.values
    cols = ["f_hz"] + [f"{kind}_{e}_{part}" for kind in ("scan", "model") for e in ENTRIES for part in ("re", "im")]
    rows = []
    for k, mk in enumerate(meas):
        r = [mk.f_p]
        for mat in (mk.y, ana[k]):
            for e in ENTRIES:
                z = mat[int(e[0]) - 1, int(e[1]) - 1]
                r += [z.real, z.imag]
        rows.append(r)
    p = write_table(out / "scan", cols, rows, fmt)
    click.echo(str(p))


@main.command()
@_common
@click.option("--series", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Analyse an existing time-series CSV instead of simulating.")
def fft(cfg, out, fmt, jobs, plot, series):
    """Spectral peaks of one channel over ``analysis.fft_window``."""
    a = cfg.analysis
    if a.fft_window is None:
        raise ConfigError("fft: analysis.fft_window is required")
    ts = TimeSeries.from_csv(series) if series else run_scenario(cfg.sim_scenario())
    if a.fft_channel not in ts.channels:
        raise ConfigError(f"fft: unknown channel {a.fft_channel!r}")
    peaks = fft_peaks(ts, a.fft_channel, a.fft_window, rel_threshold=a.rel_threshold)
    p = write_table(out / "fft_peaks", ["f_hz", "amplitude"], _peaks_rows(peaks), fmt)
    click.echo(str(p))


@main.command()
@_common
@click.option("--preset", type=click.Choice(["robustness"]), default=None,
              help="Use a built-in sweep when the config has no [sweep] section.")
def sweep(cfg, out, fmt, jobs, plot, preset):
    """Robustness sweep; one row per condition, failures recorded in-row."""
    if cfg.sweep is None:
        if preset is None:
            raise ConfigError("sweep: config needs a [sweep] section or --preset")
        cfg = cfg.model_copy(update={"sweep": SweepSection(rows=[dict(r) for r in ROBUSTNESS_ROWS])})
    rows = run_sweep(cfg, jobs)
    p = write_table(out / "sweep", COLUMNS, [[r[c] for c in COLUMNS] for r in rows], fmt)
    click.echo(str(p))


if __name__ == "__main__":
    main()

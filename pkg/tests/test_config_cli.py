import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from dfig_reshape.cli import main, read_impedance_csv
from dfig_reshape.config import load_config, parse_config
from dfig_reshape.errors import ConfigError
from dfig_reshape.impedance import build_admittance_dq, build_admittance_sequence
from dfig_reshape.params import OMEGA1, default_machine
from dfig_reshape.sweep import expand, run_sweep


def test_defaults_build():
    cfg = parse_config({})
    m = cfg.machine_params()
    ref = default_machine()
    assert m.L_m == pytest.approx(ref.L_m) and m.L_s == pytest.approx(ref.L_s)
    assert cfg.grid_params().L_g == pytest.approx(0.5 / OMEGA1)
    assert cfg.operating_point().P0 == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "data,where",
    [
        ({"control": {"bogus": 1}}, "control.bogus"),
        ({"nonsense": {}}, "nonsense"),
        ({"grid": {"R_g": 0.1}}, "grid"),
        ({"grid": {"scr": 3.0, "R_g": 0.0, "L_g": 0.5}}, "grid"),
        ({"scenario": {"events": [{"t": 0.1, "kind": "fault", "value": 1}]}}, "scenario.events.0.kind"),
        ({"scenario": {"events": [{"t": 0.1, "kind": "power", "value": 1}]}}, "power"),
        ({"reshape": {"mode": "Gz3"}}, "reshape.mode"),
        ({"scenario": {"dt": 1e-3}}, "dt"),
        ({"scenario": {"t_end": 1.0, "events": [{"t": 2.0, "kind": "kick", "value": 0.1}]}}, "t_end"),
        ({"sweep": {"axes": {"Kp_pll": list(range(101)), "scr": list(range(100))}}}, "limit"),
        ({"sweep": {"axes": {"Kd_pll": [1]}}}, "Kd_pll"),
        ({"machine": {"L_m": 5.0}}, "L_m"),
    ],
)
def test_invalid_configs_name_the_problem(data, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(data)


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "a.toml").write_text(
        '[grid]\nscr = 3.0\n[control]\nKp_pll = 2.0\n[scenario]\nt_end = 2.0\n'
        'events = [{t = 1.0, kind = "power", value = [-0.5, 0.1]}]\n'
    )
    (tmp_path / "a.json").write_text(json.dumps(
        {"grid": {"scr": 3.0}, "control": {"Kp_pll": 2.0},
         "scenario": {"t_end": 2.0, "events": [{"t": 1.0, "kind": "power", "value": [-0.5, 0.1]}]}}
    ))
    a, b = load_config(tmp_path / "a.toml"), load_config(tmp_path / "a.json")
    assert a == b
    assert a.sim_scenario().events[0].value == (-0.5, 0.1)


def test_malformed_file_reports_location(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[grid\nscr = 2\n")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_config(p)


def test_sweep_expansion_order():
    cfg = parse_config({"sweep": {"axes": {"Kp_pll": [1.0, 2.0], "scr": [2.0, 5.0]}, "rows": [{"mode": "Off"}, {"mode": "Gz1"}]}})
    pts = expand(cfg)
    assert len(pts) == 8
    assert pts[0] == {"Kp_pll": 1.0, "scr": 2.0, "mode": "Off"}
    assert pts[-1] == {"Kp_pll": 2.0, "scr": 5.0, "mode": "Gz1"}


def test_sweep_records_failures_in_row():
    cfg = parse_config({"sweep": {"rows": [{"scr": 1.2}, {"scr": 3.0}]}})
    rows = run_sweep(cfg, jobs=1)
    assert rows[0]["error"] and rows[0]["f_int"] is None
    assert not rows[1]["error"]


def test_parallel_sweep_matches_serial():
    cfg = parse_config({"sweep": {"axes": {"Kp_pll": [1.0, 2.57]}, "rows": [{"mode": "Off"}, {"mode": "Gz2"}]}})
    assert run_sweep(cfg, jobs=2) == run_sweep(cfg, jobs=1)


# ---------------------------------------------------------------- cli

@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_unknown_key_exit_2(runner, tmp_path):
    cfg = _write(tmp_path, "[control]\nbogus = 1\n")
    r = runner.invoke(main, ["impedance", "--config", cfg, "--out", str(tmp_path)])
    assert r.exit_code == 2
    assert "control.bogus" in r.output


def test_cli_missing_config_exit_2(runner, tmp_path):
    r = runner.invoke(main, ["nyquist", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)])
    assert r.exit_code == 2


def test_cli_numerical_failure_exit_3(runner, tmp_path):
    cfg = _write(tmp_path, "[grid]\nscr = 1.2\n")
    r = runner.invoke(main, ["siso-margin", "--config", cfg, "--out", str(tmp_path)])
    assert r.exit_code == 3


def test_cli_impedance_round_trip(runner, tmp_path):
    cfg = _write(tmp_path, "[analysis]\nn_points = 40\n[reshape]\nmode = \"Gz1\"\n")
    r = runner.invoke(main, ["impedance", "--config", cfg, "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    tables = read_impedance_csv(tmp_path / "impedance.csv")
    c = load_config(cfg)
    op = c.operating_point()
    rc = c.reshape_config().resolved(op)
    f = tables[("dq", "total")].freqs_hz
    np.testing.assert_array_equal(f, np.logspace(0, np.log10(2000), 40))
    dq = build_admittance_dq(c.machine_params(), c.control_params(), op, rc, f)
    seq = build_admittance_sequence(c.machine_params(), c.control_params(), op, rc, f)
    for comp in ("siso", "i", "m", "total"):
        np.testing.assert_array_equal(tables[("dq", comp)].values, dq.component(comp).values)
        np.testing.assert_array_equal(tables[("seq", comp)].values, seq.component(comp).values)


def test_cli_zero_pll_gains(runner, tmp_path):
    cfg = _write(tmp_path, "[control]\nKp_pll = 0.0\nKi_pll = 0.0\n[analysis]\nn_points = 30\n")
    assert runner.invoke(main, ["impedance", "--config", cfg, "--out", str(tmp_path)]).exit_code == 0
    t = read_impedance_csv(tmp_path / "impedance.csv")
    for fr in ("dq", "seq"):
        assert np.max(np.abs(t[(fr, "i")].values)) < 1e-12
        assert np.max(np.abs(t[(fr, "m")].values)) < 1e-12


def test_cli_outputs_are_byte_identical(runner, tmp_path):
    cfg = _write(tmp_path, "[analysis]\nn_points = 50\n")
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert runner.invoke(main, ["siso-margin", "--config", cfg, "--out", str(d)]).exit_code == 0
        outs.append(((d / "bode.csv").read_bytes(), (d / "siso_report.json").read_bytes()))
    assert outs[0] == outs[1]


def test_cli_simulate_divergence_is_success(runner, tmp_path):
    cfg = _write(tmp_path, "[scenario]\nt_end = 3.0\nevents = [{t = 0.01, kind = \"Kp_pll\", value = 40.0}]\n")
    r = runner.invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path)])
    assert r.exit_code == 0, r.output
    summary = json.loads((tmp_path / "simulate_summary.json").read_text())
    assert summary["diverged"] is True
    assert summary["t_diverged"] <= 3.0


def test_cli_simulate_then_fft(runner, tmp_path):
    cfg = _write(tmp_path, "[grid]\nscr = 5.0\n[scenario]\nP_ref = -0.5\nt_end = 0.5\n"
                           "[analysis]\nfft_window = [0.05, 0.45]\n")
    assert runner.invoke(main, ["simulate", "--config", cfg, "--out", str(tmp_path), "--plot"]).exit_code == 0
    summary = json.loads((tmp_path / "simulate_summary.json").read_text())
    assert summary["fft_peaks"][0]["f_hz"] == pytest.approx(50.0, abs=2.5)
    assert (tmp_path / "plot_timeseries.py").exists()
    r = runner.invoke(main, ["fft", "--config", cfg, "--out", str(tmp_path), "--series",
                             str(tmp_path / "timeseries.csv"), "--format", "json"])
    assert r.exit_code == 0, r.output
    peaks = json.loads((tmp_path / "fft_peaks.json").read_text())
    assert peaks[0]["f_hz"] == pytest.approx(summary["fft_peaks"][0]["f_hz"])


def test_cli_nyquist_and_sweep_outputs(runner, tmp_path):
    assert runner.invoke(main, ["nyquist", "--out", str(tmp_path)]).exit_code == 0
    rep = json.loads((tmp_path / "nyquist_report.json").read_text())
    assert rep["margin_source"] == "GNC" and isinstance(rep["encirclements"], int)
    cfg = _write(tmp_path, "[sweep]\nrows = [{mode = \"Gz1\"}, {mode = \"Gz2\", rotor_hz = 40.0}]\n")
    assert runner.invoke(main, ["sweep", "--config", cfg, "--out", str(tmp_path)]).exit_code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("condition,mode,f_int")
    assert len(lines) == 3
    r = runner.invoke(main, ["sweep", "--out", str(tmp_path)])
    assert r.exit_code == 2


@pytest.mark.parametrize("path", sorted((__import__("pathlib").Path(__file__).parents[1] / "configs").glob("*.toml")))
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg.sim_scenario().t_end > 0

import math

import numpy as np
import pytest

from dfig_reshape.errors import InvalidParameterError
from dfig_reshape.params import default_control, default_machine
from dfig_reshape.simulator import DevicePlant, RLPlant, SimScenario, frequency_scan, scan_point

R, L = 0.05, 0.3 / (2 * math.pi * 50)


@pytest.fixture(scope="module")
def rl():
    return RLPlant(R, L, R_g=0.01, L_g=0.1 / (2 * math.pi * 50), dt=50e-6)


@pytest.mark.parametrize("f_p", [20.0, 114.0, 300.0])
def test_rl_plant_matches_analytic(rl, f_p):
    m = scan_point(rl, f_p, settle=0.3, min_window=0.1)
    y_ref = rl.admittance_seq(f_p)
    assert abs(m.y[0, 0] - y_ref[0, 0]) < 1e-3 * abs(y_ref[0, 0])
    assert abs(m.y[1, 1] - y_ref[1, 1]) < 1e-3 * abs(y_ref[1, 1])
    assert abs(m.y[0, 1]) < 1e-3 * abs(y_ref[0, 0])
    assert abs(m.y[0, 0] - 1 / (R + 2j * math.pi * f_p * L)) < 1e-3 * abs(y_ref[0, 0])


def test_rl_amplitude_halving(rl):
    a = scan_point(rl, 80.0, amp=0.01, settle=0.3, min_window=0.1).y
    b = scan_point(rl, 80.0, amp=0.005, settle=0.3, min_window=0.1).y
    assert np.max(np.abs(a - b)) < 5e-3 * np.max(np.abs(a))


def test_rejects_bad_requests(rl):
    with pytest.raises(InvalidParameterError):
        scan_point(rl, 52.0)
    with pytest.raises(InvalidParameterError):
        scan_point(rl, 100.0, amp=0.05)


@pytest.fixture(scope="module")
def stiff_device():
    return SimScenario(default_machine(), default_control(Kp_pll=1.0), scr=math.inf)


def test_device_amplitude_halving(stiff_device):
    a = frequency_scan(stiff_device, [150.0], amp=0.01)[0].y
    b = frequency_scan(stiff_device, [150.0], amp=0.005)[0].y
    assert np.max(np.abs(a - b)) < 5e-3 * np.max(np.abs(a))


def test_frozen_pll_has_no_coupling():
    sc = SimScenario(default_machine(), default_control(Kp_pll=0.0, Ki_pll=0.0), scr=math.inf)
    for m in frequency_scan(sc, [20.0, 114.0, 300.0]):
        assert abs(m.y[0, 1]) < 1e-3 and abs(m.y[1, 0]) < 1e-3
        assert abs(m.y[0, 0]) > 1e-2


def test_device_plant_rejects_events(stiff_device):
    from dataclasses import replace

    from dfig_reshape.simulator import Event

    with pytest.raises(InvalidParameterError):
        DevicePlant(replace(stiff_device, events=(Event(0.5, "kick", 0.0),)))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfig_reshape.errors import FrameMismatchError
from dfig_reshape.impedance import (
    T_SEQ,
    AdmittanceBlocks,
    AdmittanceModel,
    Frame,
    build_admittance_dq,
    build_admittance_sequence,
    build_pll_model,
    dq_to_modified_sequence,
    grid_impedance_dq,
    grid_impedance_sequence,
    modified_sequence_to_dq,
    pll_identity_residual,
)
from dfig_reshape.params import ControlParams, OperatingPoint, default_machine, grid_from_scr, solve_operating_point
from dfig_reshape.reshape import ReshapeConfig
from dfig_reshape.tfalg import FreqResponse, mat_eval

from conftest import W_RATED, resolved
from oracles import kernel_admittance

F_LOG = np.logspace(0, np.log10(2000), 200)


def test_pll_model_examples(rated_op, control):
    pll = build_pll_model(rated_op, control)
    assert pll.h_closed(0.0) == pytest.approx(1 / rated_op.V_sd0, rel=1e-12)
    for M in (pll.g_pll_v, pll.g_pll_i, pll.g_pll_m):
        v = mat_eval(M, 2 * math.pi * np.array([1.0, 50.0, 700.0]))
        assert np.all(v[:, :, 0] == 0)
    w = 2 * math.pi * np.array([10.0, 100.0, 1000.0])
    assert pll_identity_residual(pll, rated_op, control, w) < 1e-9


def test_zero_rotor_current_gives_zero_current_path(control):
    op = OperatingPoint(1.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0, 0, 0, 0, W_RATED, 2 * math.pi * -5, 0.1, 0.0)
    pll = build_pll_model(op, control)
    assert np.all(mat_eval(pll.g_pll_i, np.array([5.0, 500.0])) == 0)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.5, 1.2), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
    st.floats(0.05, 10.0), st.floats(0.0, 10.0),
)
def test_pll_identity_property(v, ird, irq, kp, ki):
    op = OperatingPoint(v, 0.0, 0.0, 0.0, ird, irq, 0, 0, 0, 0, W_RATED, 1.0, 0.0, 0.0)
    c = ControlParams(kp, ki, 1.0, 1.0, 100.0, 3000.0)
    w = 2 * math.pi * np.logspace(0, 3.3, 200)
    scale = 1 + max(abs(ird), abs(irq)) * (kp * 100 + ki * 3000)
    assert pll_identity_residual(build_pll_model(op, c), op, c, w) < 1e-9 * scale


@pytest.mark.parametrize("mode", ["Off", "Gz1", "Gz2"])
def test_decomposition_closure(machine, control, rated_op, mode):
    y = build_admittance_dq(machine, control, rated_op, resolved(mode, rated_op), F_LOG)
    assert y.closure_error() < 1e-9
    ys = build_admittance_sequence(machine, control, rated_op, resolved(mode, rated_op), F_LOG + 50.0 + 1e-3)
    assert ys.closure_error() < 1e-9


def test_pll_free_part_decoupled_in_sequence_frame(machine, control, rated_op):
    ys = build_admittance_sequence(machine, control, rated_op, resolved("Off", rated_op), F_LOG + 60.0)
    off = ys.y_siso.values[:, [0, 1], [1, 0]]
    assert np.max(np.abs(off)) < 1e-9


def test_isotropic_matrix_stays_diagonal():
    f = np.array([-10.0, 5.0, 70.0])
    y0 = 0.3 - 0.7j
    fr = FreqResponse(f, np.broadcast_to(y0 * np.eye(2), (3, 2, 2)).copy())
    model = AdmittanceModel(Frame.DQ, fr, fr, fr, fr)
    seq = dq_to_modified_sequence(model, 2 * math.pi * 50)
    np.testing.assert_allclose(seq.y_total.values, np.broadcast_to(y0 * np.eye(2), (3, 2, 2)), atol=1e-15)
    np.testing.assert_allclose(seq.freqs_hz, f + 50.0)


def test_frame_round_trip_and_mismatch(machine, control, rated_op):
    y = build_admittance_dq(machine, control, rated_op, resolved("Gz1", rated_op), F_LOG)
    back = modified_sequence_to_dq(dq_to_modified_sequence(y, machine.omega1), machine.omega1)
    np.testing.assert_allclose(back.y_total.values, y.y_total.values, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(back.freqs_hz, y.freqs_hz, rtol=1e-13)
    with pytest.raises(FrameMismatchError):
        modified_sequence_to_dq(y, machine.omega1)


def test_sequence_mirror_symmetry(machine, control, rated_op):
    # a real d-q model gives Y_seq[1,1](f) = conj(Y_seq[0,0](2 f1 - f)) and likewise off-diagonal
    f = np.array([70.0, 114.0, 300.0])
    a = build_admittance_sequence(machine, control, rated_op, resolved("Off", rated_op), f).y_total.values
    b = build_admittance_sequence(machine, control, rated_op, resolved("Off", rated_op), (100.0 - f)[::-1]).y_total.values[::-1]
    np.testing.assert_allclose(a[:, 1, 1], np.conj(b[:, 0, 0]), rtol=1e-10)
    np.testing.assert_allclose(a[:, 0, 1], np.conj(b[:, 1, 0]), rtol=1e-10)


@pytest.mark.parametrize("mode", ["Off", "Gz1", "Gz2"])
def test_matches_linearised_simulator_kernel(machine, control, mode):
    # stiff bus so the kernel's injection port equals the PCC
    op = solve_operating_point(machine, grid_from_scr(math.inf), -1.0, 0.0, W_RATED)
    rc = resolved(mode, op)
    f = np.array([-300.0, -64.0, -20.0, 3.0, 17.0, 64.0, 250.0, 900.0])
    ya = AdmittanceBlocks(machine, control, op, rc)(2j * np.pi * f)
    yk = kernel_admittance(machine, control, op, rc, 2j * np.pi * f)
    np.testing.assert_allclose(ya, yk, rtol=1e-5, atol=1e-6 * np.max(np.abs(ya)))


def test_zero_pll_gains_silence_pll_parts(machine, rated_op):
    c = ControlParams(0.0, 0.0, 1.5, 100.0, 100.0, 1000.0)
    y = build_admittance_dq(machine, c, rated_op, resolved("Gz1", rated_op), F_LOG)
    assert np.max(np.abs(y.y_i.values)) == 0.0
    assert np.max(np.abs(y.y_m.values)) == 0.0


def test_current_path_dominates_modulation_path(machine, control, rated_op):
    f = np.logspace(1, 3, 300)
    ys = build_admittance_sequence(machine, control, rated_op, resolved("Off", rated_op), f)
    off_i = np.abs(ys.y_i.values[:, [0, 1], [1, 0]]).max()
    off_m = np.abs(ys.y_m.values[:, [0, 1], [1, 0]]).max()
    assert 20 * np.log10(off_i / off_m) >= 10.0


def test_coupling_visible_near_oscillation(machine, control, rated_op):
    ys = build_admittance_sequence(machine, control, rated_op, resolved("Off", rated_op), np.array([114.0]))
    y = ys.y_total.values[0]
    assert abs(y[0, 1]) > 0.1 * abs(y[0, 0])


def test_grid_impedance_frames_agree(grid2):
    f_seq = np.array([20.0, 114.0, 400.0])
    zs = grid_impedance_sequence(grid2, f_seq).values
    zdq = mat_eval(grid_impedance_dq(grid2), 2 * np.pi * (f_seq - 50.0))
    np.testing.assert_allclose(T_SEQ @ zdq @ np.linalg.inv(T_SEQ), zs, atol=1e-14)


def test_subsystem_stable_on_stiff_bus(machine, control, rated_op):
    for mode in ("Off", "Gz1", "Gz2"):
        b = AdmittanceBlocks(machine, control, rated_op, resolved(mode, rated_op))
        assert b.is_stable()

"""Independent reference computations shared by several test modules."""

import numpy as np

from dfig_reshape.params import grid_from_scr
from dfig_reshape.simulator import kernel as K
from dfig_reshape.simulator.engine import initial_state, kernel_params


def kernel_admittance(m, c, op, reshape, s, h=1e-7):
    """d-q admittance of the nonlinear simulator kernel on a stiff bus.

    The kernel is linearised by central differences: A from the states,
    B from the source-voltage parameters, C from the stator-current output.
    """
    g = grid_from_scr(np.inf)
    p0 = kernel_params(m, g, c, op, reshape, op.v_g)
    x0 = initial_state(m, g, c, op)
    no_tones = np.zeros((0, 3))
    n = K.N_STATE

    def f(x, p):
        dx, out = np.empty(n), np.empty(K.N_OUT)
        K._rhs(0.0, x, p, no_tones, dx, out)
        return dx, out

    A = np.empty((n, n))
    C = np.empty((2, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        (fp, op_), (fm, om) = f(x0 + e, p0), f(x0 - e, p0)
        A[:, i] = (fp - fm) / (2 * h)
        C[:, i] = (op_[[K.O_ISD, K.O_ISQ]] - om[[K.O_ISD, K.O_ISQ]]) / (2 * h)
    B = np.empty((n, 2))
    for j, idx in enumerate((K.P_VGD, K.P_VGQ)):
        pp, pm = p0.copy(), p0.copy()
        pp[idx] += h
        pm[idx] -= h
        B[:, j] = (f(x0, pp)[0] - f(x0, pm)[0]) / (2 * h)
    eye = np.eye(n)
    return np.array([C @ np.linalg.solve(sk * eye - A, B) for sk in np.atleast_1d(s)])


def brute_force_siso(z, zg22):
    """First-channel impedance seen by the grid when the mirror channel is
    closed through the grid, obtained by solving the coupled equations."""
    out = np.empty(z.shape[0], dtype=complex)
    for k in range(z.shape[0]):
        # unknown (i1, i2, v1, v2): v = Z i, v2 = -zg22 i2, i1 = 1
        M = np.zeros((4, 4), dtype=complex)
        rhs = np.zeros(4, dtype=complex)
        M[0, :] = [z[k, 0, 0], z[k, 0, 1], -1, 0]
        M[1, :] = [z[k, 1, 0], z[k, 1, 1], 0, -1]
        M[2, :] = [0, zg22[k], 0, 1]
        M[3, :] = [1, 0, 0, 0]
        rhs[3] = 1.0
        sol = np.linalg.solve(M, rhs)
        out[k] = sol[2] / sol[0]
    return out

"""Compiled right-hand side and fixed-step RK4 loop of the average model.

Everything is expressed in the synchronous frame aligned with the initial PCC
voltage (system frame). State vector layout::

    0,1   lambda_d, lambda_q   stator flux + grid-inductor flux (psi_s + L_g i_s)
    2,3   psi_rd, psi_rq       rotor flux (rotor quantities referred to stator)
    4     theta                PLL angle relative to the system frame
    5     x_pll                PLL integrator (frequency deviation, rad/s)
    6,7   xi_d, xi_q           current-PI integrators (p.u. rotor voltage)
    8,9   z1a, z1b             Gz1 kernel states
    10    z2                   Gz2 kernel state
"""

import math

import numpy as np
from numba import njit

N_STATE = 11

# parameter vector layout
(P_RS, P_RR, P_LS, P_LR, P_LM, P_W1, P_WSL, P_RG, P_LG, P_VGD, P_VGQ,
 P_KP_PLL, P_KI_PLL, P_KP_I, P_KI_I, P_DEC, P_IRD_REF, P_IRQ_REF,
 P_MODE, P_A_INF, P_WH, P_QH, P_CIRD, P_CIRQ) = range(24)
N_PARAM = 24

# recorded output layout
(O_VSD, O_VSQ, O_ISD, O_ISQ, O_IRD, O_IRQ, O_THETA, O_WPLL, O_P, O_Q,
 O_VSQC, O_VRD, O_VRQ) = range(13)
N_OUT = 13
OUT_NAMES = ("v_sd", "v_sq", "i_sd", "i_sq", "i_rd", "i_rq", "theta_pll", "omega_pll",
             "P", "Q", "v_sq_ctrl", "v_rd", "v_rq")


@njit(cache=True)
def _rhs(t, x, p, tones, dx, out):
    rs, rr, ls, lr, lm = p[P_RS], p[P_RR], p[P_LS], p[P_LR], p[P_LM]
    w1, wsl, rg, lg = p[P_W1], p[P_WSL], p[P_RG], p[P_LG]

    # series injection (sum of complex tones in the system frame)
    vid = 0.0
    viq = 0.0
    for k in range(tones.shape[0]):
        ph = tones[k, 2] * t
        c, s = math.cos(ph), math.sin(ph)
        vid += tones[k, 0] * c - tones[k, 1] * s
        viq += tones[k, 0] * s + tones[k, 1] * c
    vgd = p[P_VGD] + vid
    vgq = p[P_VGQ] + viq

    # currents from fluxes
    la = ls + lg
    det = la * lr - lm * lm
    isd = (lr * x[0] - lm * x[2]) / det
    isq = (lr * x[1] - lm * x[3]) / det
    ird = (la * x[2] - lm * x[0]) / det
    irq = (la * x[3] - lm * x[1]) / det

    # control frame
    th = x[4]
    ct, st = math.cos(th), math.sin(th)
    ird_c = ct * ird + st * irq
    irq_c = -st * ird + ct * irq

    # compensator output (kernel g applied to v_sq_ctrl, column-2 gains)
    mode = p[P_MODE]
    g = 0.0
    if mode == 1.0:
        g = p[P_A_INF] * (p[P_KI_PLL] * x[8] + p[P_KP_PLL] * x[9])
    elif mode == 2.0:
        g = p[P_KP_PLL] * x[10]
    cd = -p[P_CIRQ] * g
    cq = p[P_CIRD] * g

    ed = p[P_IRD_REF] - (ird_c + cd)
    eq = p[P_IRQ_REF] - (irq_c + cq)
    dec = p[P_DEC]
    vrd_c = p[P_KP_I] * ed + x[6] - dec * irq_c
    vrq_c = p[P_KP_I] * eq + x[7] + dec * ird_c
    vrd = ct * vrd_c - st * vrq_c
    vrq = st * vrd_c + ct * vrq_c

    # machine + grid
    dx[0] = vgd - (rs + rg) * isd + w1 * x[1]
    dx[1] = vgq - (rs + rg) * isq - w1 * x[0]
    dx[2] = vrd - rr * ird + wsl * x[3]
    dx[3] = vrq - rr * irq - wsl * x[2]

    # PCC voltage from the stator equation
    disd = (lr * dx[0] - lm * dx[2]) / det
    disq = (lr * dx[1] - lm * dx[3]) / det
    dird = (la * dx[2] - lm * dx[0]) / det
    dirq = (la * dx[3] - lm * dx[1]) / det
    psd = ls * isd + lm * ird
    psq = ls * isq + lm * irq
    vsd = rs * isd + ls * disd + lm * dird - w1 * psq
    vsq = rs * isq + ls * disq + lm * dirq + w1 * psd
    vsq_c = -st * vsd + ct * vsq

    # PLL
    dx[4] = p[P_KP_PLL] * vsq_c + x[5]
    dx[5] = p[P_KI_PLL] * vsq_c
    # current PI integrators
    dx[6] = p[P_KI_I] * ed
    dx[7] = p[P_KI_I] * eq
    # compensator kernels (always integrated so switching is bumpless)
    wh = p[P_WH]
    dx[8] = x[9]
    dx[9] = -wh * wh * x[8] - (wh / p[P_QH]) * x[9] + vsq_c
    dx[10] = -wh * x[10] + vsq_c

    out[O_VSD] = vsd
    out[O_VSQ] = vsq
    out[O_ISD] = isd
    out[O_ISQ] = isq
    out[O_IRD] = ird
    out[O_IRQ] = irq
    out[O_THETA] = th
    out[O_WPLL] = w1 + dx[4]
    out[O_P] = vsd * isd + vsq * isq
    out[O_Q] = vsq * isd - vsd * isq
    out[O_VSQC] = vsq_c
    out[O_VRD] = vrd
    out[O_VRQ] = vrq


@njit(cache=True)
def integrate(x0, p, tones, t0, dt, n_steps, rec_every, limit):
    """Classical RK4 over ``n_steps``; records every ``rec_every`` steps.

    Returns (t_rec, out_rec, x_final, n_rec, diverged). Row 0 is the initial
    point; integration stops early when the state max-norm exceeds ``limit``.
    """
    n = x0.size
    n_rec_max = n_steps // rec_every + 1
    t_rec = np.empty(n_rec_max)
    out_rec = np.empty((n_rec_max, N_OUT))
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xt = np.empty(n)
    out = np.empty(N_OUT)
    scratch = np.empty(N_OUT)
    _rhs(t0, x, p, tones, k1, out)
    t_rec[0] = t0
    out_rec[0] = out
    n_rec = 1
    diverged = False
    for step in range(n_steps):
        t = t0 + step * dt
        # k1 holds f(t, x) from the previous iteration
        for i in range(n):
            xt[i] = x[i] + 0.5 * dt * k1[i]
        _rhs(t + 0.5 * dt, xt, p, tones, k2, scratch)
        for i in range(n):
            xt[i] = x[i] + 0.5 * dt * k2[i]
        _rhs(t + 0.5 * dt, xt, p, tones, k3, scratch)
        for i in range(n):
            xt[i] = x[i] + dt * k3[i]
        _rhs(t + dt, xt, p, tones, k4, scratch)
        big = 0.0
        for i in range(n):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if i != 4 and abs(x[i]) > big:
                big = abs(x[i])
        _rhs(t + dt, x, p, tones, k1, out)
        if (step + 1) % rec_every == 0:
            t_rec[n_rec] = t + dt
            out_rec[n_rec] = out
            n_rec += 1
        if not (big < limit):
            diverged = True
            break
    return t_rec[:n_rec], out_rec[:n_rec], x, n_rec, diverged

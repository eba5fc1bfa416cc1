"""Pure-Python stepping kernels.

These mirror the compiled versions in ``_kernels.pyx`` operation for
operation, so both backends produce bit-identical trajectories.  Inner
loops use scalar float arithmetic on Python lists; numpy only touches
the boundaries.

Both kernels advance a delayed linear system with fixed-step RK4 and
read the delayed state by linear interpolation from the already-computed
grid rows (method of steps).  Callers guarantee theta == 0 or
theta >= h, so delayed lookups never run ahead of the filled buffer.
"""

import numpy as np

_BLOWUP = 1e100


def dde3_rk4(A, BK, d, theta, h, n_steps, hist, f_start, f_mid, f_end):
    """Advance x' = A x + BK x(t - theta) + d * f(t) by n_steps RK4 steps.

    Parameters
    ----------
    A, BK : (3, 3) arrays
    d : (3,) array
        Input channel for the scalar forcing.
    hist : (m, 3) array
        State at grid times t0 - (m-1)h .. t0; last row is x(t0).
    f_start, f_mid, f_end : (n_steps,) arrays
        Forcing at the step start (right limit), midpoint, and step end
        (left limit).

    Returns
    -------
    (m + n_steps, 3) ndarray
        hist rows followed by the computed states.
    """
    a00, a01, a02 = float(A[0, 0]), float(A[0, 1]), float(A[0, 2])
    a10, a11, a12 = float(A[1, 0]), float(A[1, 1]), float(A[1, 2])
    a20, a21, a22 = float(A[2, 0]), float(A[2, 1]), float(A[2, 2])
    b00, b01, b02 = float(BK[0, 0]), float(BK[0, 1]), float(BK[0, 2])
    b10, b11, b12 = float(BK[1, 0]), float(BK[1, 1]), float(BK[1, 2])
    b20, b21, b22 = float(BK[2, 0]), float(BK[2, 1]), float(BK[2, 2])
    d0, d1, d2 = float(d[0]), float(d[1]), float(d[2])

    m = hist.shape[0]
    X0 = [float(v) for v in hist[:, 0]]
    X1 = [float(v) for v in hist[:, 1]]
    X2 = [float(v) for v in hist[:, 2]]
    fs = [float(v) for v in f_start]
    fm = [float(v) for v in f_mid]
    fe = [float(v) for v in f_end]

    delayed = theta != 0.0
    dlag = theta / h if delayed else 0.0

    for i in range(n_steps):
        base = m - 1 + i
        y0, y1, y2 = X0[base], X1[base], X2[base]

        # four stages; stage offset c in {0, 0.5, 0.5, 1}
        for stage in range(4):
            if stage == 0:
                c = 0.0
                z0, z1, z2 = y0, y1, y2
                f = fs[i]
            elif stage == 1:
                c = 0.5
                z0 = y0 + 0.5 * h * k10
                z1 = y1 + 0.5 * h * k11
                z2 = y2 + 0.5 * h * k12
                f = fm[i]
            elif stage == 2:
                c = 0.5
                z0 = y0 + 0.5 * h * k20
                z1 = y1 + 0.5 * h * k21
                z2 = y2 + 0.5 * h * k22
                f = fm[i]
            else:
                c = 1.0
                z0 = y0 + h * k30
                z1 = y1 + h * k31
                z2 = y2 + h * k32
                f = fe[i]

            if delayed:
                pos = base + c - dlag
                if pos <= 0.0:
                    w0, w1, w2 = X0[0], X1[0], X2[0]
                elif pos >= base:
                    w0, w1, w2 = X0[base], X1[base], X2[base]
                else:
                    j = int(pos)
                    fr = pos - j
                    w0 = X0[j] * (1.0 - fr) + X0[j + 1] * fr
                    w1 = X1[j] * (1.0 - fr) + X1[j + 1] * fr
                    w2 = X2[j] * (1.0 - fr) + X2[j + 1] * fr
            else:
                w0, w1, w2 = z0, z1, z2

            g0 = a00 * z0 + a01 * z1 + a02 * z2 + b00 * w0 + b01 * w1 + b02 * w2 + d0 * f
            g1 = a10 * z0 + a11 * z1 + a12 * z2 + b10 * w0 + b11 * w1 + b12 * w2 + d1 * f
            g2 = a20 * z0 + a21 * z1 + a22 * z2 + b20 * w0 + b21 * w1 + b22 * w2 + d2 * f

            if stage == 0:
                k10, k11, k12 = g0, g1, g2
            elif stage == 1:
                k20, k21, k22 = g0, g1, g2
            elif stage == 2:
                k30, k31, k32 = g0, g1, g2
            else:
                k40, k41, k42 = g0, g1, g2

        X0.append(y0 + h / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40))
        X1.append(y1 + h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41))
        X2.append(y2 + h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42))

    out = np.empty((m + n_steps, 3))
    out[:, 0] = X0
    out[:, 1] = X1
    out[:, 2] = X2
    return out


def cutin_rk4(tau, TL, ks, kv, ka, theta, h, n_steps, switch_idx, mode_wc,
              ufb, umax, clamp, y0, ac_s, ac_m, ac_e, al_s, al_m, al_e,
              vc, leq, lprime, early_exit, cutin_idx, safe_idx):
    """Advance the 5-state cut-in scenario: [ds_l, dv_l, ds_c, dv_c, a_f].

    Before step ``switch_idx`` the demand tracks the delayed
    original-leader state (ds_l, dv_l, a_f); from it on, either the
    delayed cut-in state (full feedback) or the constant braking demand
    ``ufb`` (mode_wc).  Feedback demand is clamped to [ufb, umax] when
    ``clamp`` is set.  Pre-history before the first row is frozen at
    row 0.

    Returns
    -------
    (Y, n_done, exit_code) : ((n_steps+1, 5) ndarray, int, int)
        exit_code: 0 full horizon, 1 safe early exit, 2 collision exit,
        3 state blow-up.  Rows past n_done are unset.
    """
    Y0 = [0.0] * (n_steps + 1)
    Y1 = [0.0] * (n_steps + 1)
    Y2 = [0.0] * (n_steps + 1)
    Y3 = [0.0] * (n_steps + 1)
    Y4 = [0.0] * (n_steps + 1)
    Y0[0], Y1[0], Y2[0], Y3[0], Y4[0] = (
        float(y0[0]), float(y0[1]), float(y0[2]), float(y0[3]), float(y0[4]))
    acs = [float(v) for v in ac_s]
    acm = [float(v) for v in ac_m]
    ace = [float(v) for v in ac_e]
    als = [float(v) for v in al_s]
    alm = [float(v) for v in al_m]
    ale = [float(v) for v in al_e]
    vcl = [float(v) for v in vc]

    delayed = theta != 0.0
    dlag = theta / h if delayed else 0.0
    inv_TL = 1.0 / TL
    n_done = n_steps
    exit_code = 0

    for i in range(n_steps):
        y0_, y1_, y2_, y3_, y4_ = Y0[i], Y1[i], Y2[i], Y3[i], Y4[i]
        phase2 = i >= switch_idx

        for stage in range(4):
            if stage == 0:
                c = 0.0
                z0, z1, z2, z3, z4 = y0_, y1_, y2_, y3_, y4_
                ac = acs[i]
                al = als[i]
            elif stage == 1:
                c = 0.5
                z0 = y0_ + 0.5 * h * k10
                z1 = y1_ + 0.5 * h * k11
                z2 = y2_ + 0.5 * h * k12
                z3 = y3_ + 0.5 * h * k13
                z4 = y4_ + 0.5 * h * k14
                ac = acm[i]
                al = alm[i]
            elif stage == 2:
                c = 0.5
                z0 = y0_ + 0.5 * h * k20
                z1 = y1_ + 0.5 * h * k21
                z2 = y2_ + 0.5 * h * k22
                z3 = y3_ + 0.5 * h * k23
                z4 = y4_ + 0.5 * h * k24
                ac = acm[i]
                al = alm[i]
            else:
                c = 1.0
                z0 = y0_ + h * k30
                z1 = y1_ + h * k31
                z2 = y2_ + h * k32
                z3 = y3_ + h * k33
                z4 = y4_ + h * k34
                ac = ace[i]
                al = ale[i]

            if phase2 and mode_wc:
                u = ufb
            else:
                if delayed:
                    pos = i + c - dlag
                    if pos <= 0.0:
                        w0, w1, w2, w3, w4 = Y0[0], Y1[0], Y2[0], Y3[0], Y4[0]
                    elif pos >= i:
                        w0, w1, w2, w3, w4 = Y0[i], Y1[i], Y2[i], Y3[i], Y4[i]
                    else:
                        j = int(pos)
                        fr = pos - j
                        w0 = Y0[j] * (1.0 - fr) + Y0[j + 1] * fr
                        w1 = Y1[j] * (1.0 - fr) + Y1[j + 1] * fr
                        w2 = Y2[j] * (1.0 - fr) + Y2[j + 1] * fr
                        w3 = Y3[j] * (1.0 - fr) + Y3[j + 1] * fr
                        w4 = Y4[j] * (1.0 - fr) + Y4[j + 1] * fr
                else:
                    w0, w1, w2, w3, w4 = z0, z1, z2, z3, z4
                if phase2:
                    u = ks * w2 + kv * w3 + ka * w4
                else:
                    u = ks * w0 + kv * w1 + ka * w4
                if clamp:
                    if u < ufb:
                        u = ufb
                    elif u > umax:
                        u = umax

            g0 = z1 - tau * z4
            g1 = al - z4
            g2 = z3 - tau * z4
            g3 = ac - z4
            g4 = (u - z4) * inv_TL

            if stage == 0:
                k10, k11, k12, k13, k14 = g0, g1, g2, g3, g4
            elif stage == 1:
                k20, k21, k22, k23, k24 = g0, g1, g2, g3, g4
            elif stage == 2:
                k30, k31, k32, k33, k34 = g0, g1, g2, g3, g4
            else:
                k40, k41, k42, k43, k44 = g0, g1, g2, g3, g4

        Y0[i + 1] = y0_ + h / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
        Y1[i + 1] = y1_ + h / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
        Y2[i + 1] = y2_ + h / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        Y3[i + 1] = y3_ + h / 6.0 * (k13 + 2.0 * k23 + 2.0 * k33 + k43)
        Y4[i + 1] = y4_ + h / 6.0 * (k14 + 2.0 * k24 + 2.0 * k34 + k44)

        v2 = Y2[i + 1]
        v3 = Y3[i + 1]
        if (abs(Y0[i + 1]) > _BLOWUP or abs(Y1[i + 1]) > _BLOWUP
                or abs(v2) > _BLOWUP or abs(v3) > _BLOWUP
                or abs(Y4[i + 1]) > _BLOWUP):
            n_done = i + 1
            exit_code = 3
            break
        if early_exit:
            gap = v2 + (vcl[i + 1] - v3) * tau + leq - lprime
            if i + 1 > cutin_idx and gap <= 0.0:
                n_done = i + 1
                exit_code = 2
                break
            if i + 1 >= safe_idx and v2 >= 0.0 and v3 >= 0.0:
                n_done = i + 1
                exit_code = 1
                break

    Y = np.empty((n_steps + 1, 5))
    Y[:, 0] = Y0
    Y[:, 1] = Y1
    Y[:, 2] = Y2
    Y[:, 3] = Y3
    Y[:, 4] = Y4
    return Y[: n_done + 1], n_done, exit_code

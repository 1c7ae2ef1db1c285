"""Compiled closed-loop sample loop used by :func:`movanc.engine.run_scenario`.

Mirrors :class:`movanc.controller.ControllerState` and
:class:`movanc.penalty.PenaltyEstimator` operation for operation; the test
suite checks the two against each other.
"""
import math

import numpy as np
from numba import njit

from .dsp import REFRESH_PERIOD

# per-stage accumulator columns
ACC_COLUMNS = (
    "steady_y2", "steady_e2", "steady_d2", "steady_dhat2", "steady_x2", "steady_xp2",
    "steady_alpha", "steady_gs", "steady_count",
    "alpha_zero", "count", "ma_max", "violations", "post_settle",
)
N_ACC = len(ACC_COLUMNS)
A_SY2, A_SE2, A_SD2, A_SDH2, A_SX2, A_SXP2, A_SAL, A_SGS, A_SCNT = range(9)
A_AZ, A_CNT, A_MAMAX, A_VIOL, A_POST = range(9, 14)

# trace columns written at every logged sample
T_N, T_X, T_D, T_Y, T_E, T_ALPHA, T_GS, T_MA = range(8)


@njit(cache=True)
def _ring_refresh(sq):
    s = 0.0
    for i in range(sq.size):
        s += sq[i]
    return s


@njit(cache=True, nogil=True)
def simulate(xs, ds, sec, sec_hat, w, mu, variant, alpha_fixed, y_max,
             K, eps1, eps2, rho2, pw_window, decim, snap_period,
             stage_start, stage_stop, steady_start, settle_stop, viol_level):
    n_total = xs.size
    I = w.size
    L = sec_hat.size
    Ls = sec.size
    n_stages = stage_start.size

    nx = max(I, L)
    xbuf = np.zeros(2 * nx)
    xpos = nx
    ny = max(L, Ls)
    ybuf = np.zeros(2 * ny)
    ypos = ny
    xpbuf = np.zeros(2 * I)
    xppos = I

    sq_x = np.zeros(K)
    sq_xp = np.zeros(K)
    sq_dh = np.zeros(K)
    sum_x = 0.0
    sum_xp = 0.0
    sum_dh = 0.0
    ridx = 0
    sq_y = np.zeros(pw_window)
    sum_y = 0.0
    pidx = 0

    n_log = (n_total + decim - 1) // decim
    trace = np.zeros((n_log, 8))
    n_snap = (n_total + snap_period - 1) // snap_period
    snaps = np.zeros((n_snap, I))
    stage_w = np.zeros((n_stages, I))
    acc = np.zeros((n_stages, N_ACC))
    dhat_err = 0.0
    diverged = -1

    stage = 0
    for n in range(n_total):
        while stage + 1 < n_stages and n >= stage_start[stage + 1]:
            stage_w[stage, :] = w
            stage += 1
        if n % snap_period == 0:
            snaps[n // snap_period, :] = w

        x = xs[n]
        xpos -= 1
        if xpos < 0:
            xpos = nx - 1
        xbuf[xpos] = x
        xbuf[xpos + nx] = x

        d = ds[n]

        y = 0.0
        for i in range(I):
            y += w[i] * xbuf[xpos + i]
        if variant == 4 and abs(y) > y_max:
            scale = y_max / abs(y)
            for i in range(I):
                w[i] *= scale
            y = math.copysign(y_max, y)

        ypos -= 1
        if ypos < 0:
            ypos = ny - 1
        ybuf[ypos] = y
        ybuf[ypos + ny] = y

        yp = 0.0
        for k in range(Ls):
            yp += sec[k] * ybuf[ypos + k]
        e = d - yp

        xp = 0.0
        for k in range(L):
            xp += sec_hat[k] * xbuf[xpos + k]
        xppos -= 1
        if xppos < 0:
            xppos = I - 1
        xpbuf[xppos] = xp
        xpbuf[xppos + I] = xp

        yhat = 0.0
        for k in range(L):
            yhat += sec_hat[k] * ybuf[ypos + k]
        dhat = e + yhat
        ym = 0.0
        for i in range(I):
            ym += w[i] * xpbuf[xppos + i]
        em = dhat - ym

        # windowed sums for the penalty estimator
        s = x * x
        sum_x += s - sq_x[ridx]
        sq_x[ridx] = s
        s = xp * xp
        sum_xp += s - sq_xp[ridx]
        sq_xp[ridx] = s
        s = dhat * dhat
        sum_dh += s - sq_dh[ridx]
        sq_dh[ridx] = s
        ridx += 1
        if ridx == K:
            ridx = 0
        if (n + 1) % REFRESH_PERIOD == 0:
            sum_x = _ring_refresh(sq_x)
            sum_xp = _ring_refresh(sq_xp)
            sum_dh = _ring_refresh(sq_dh)
        if sum_x < 0.0:
            sum_x = 0.0
        if sum_xp < 0.0:
            sum_xp = 0.0
        if sum_dh < 0.0:
            sum_dh = 0.0
        gs = max(sum_xp, eps1) / max(sum_x, eps2)

        if variant == 3:
            alpha = max(gs * (math.sqrt((sum_dh / K) / (rho2 * gs)) - 1.0), 0.0)
        elif variant == 2:
            alpha = alpha_fixed
        else:
            alpha = 0.0

        if variant == 0 or variant == 4:
            err = e
        else:
            err = em
        bad = False
        for i in range(I):
            w[i] += mu * (xpbuf[xppos + i] * err - alpha * xbuf[xpos + i] * y)
            if not math.isfinite(w[i]):
                bad = True
        if bad:
            diverged = n
            break

        s = y * y
        sum_y += s - sq_y[pidx]
        sq_y[pidx] = s
        pidx += 1
        if pidx == pw_window:
            pidx = 0
        if (n + 1) % REFRESH_PERIOD == 0:
            sum_y = _ring_refresh(sq_y)
        if sum_y < 0.0:
            sum_y = 0.0
        ma = sum_y / pw_window

        err_d = abs(dhat - d)
        if err_d > dhat_err:
            dhat_err = err_d

        a = acc[stage]
        a[A_CNT] += 1.0
        if alpha == 0.0:
            a[A_AZ] += 1.0
        if ma > a[A_MAMAX]:
            a[A_MAMAX] = ma
        if n >= settle_stop[stage]:
            a[A_POST] += 1.0
            if ma > viol_level:
                a[A_VIOL] += 1.0
        if n >= steady_start[stage]:
            a[A_SY2] += y * y
            a[A_SE2] += e * e
            a[A_SD2] += d * d
            a[A_SDH2] += dhat * dhat
            a[A_SX2] += x * x
            a[A_SXP2] += xp * xp
            a[A_SAL] += alpha
            a[A_SGS] += gs
            a[A_SCNT] += 1.0

        if n % decim == 0:
            row = trace[n // decim]
            row[T_N] = n
            row[T_X] = x
            row[T_D] = d
            row[T_Y] = y
            row[T_E] = e
            row[T_ALPHA] = alpha
            row[T_GS] = gs
            row[T_MA] = ma

    if diverged < 0:
        stage_w[stage, :] = w
    return trace, snaps, stage_w, acc, dhat_err, diverged

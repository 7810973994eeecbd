"""Compiled inner loop of the network integrator.

Fixed-step RK4 on ``dv/dt = Minv (g * (vout - v) + i_inj(t))`` with event
bisection. All buffers are preallocated by the caller; the kernel returns
status codes rather than raising.
"""
import math

import numpy as np
from numba import njit

OK = 0
EVENT_OVERFLOW = 1
UNSTABLE = 2

FLIP = 0
KNEE = 1


@njit(cache=True)
def _rhs(t, v, g, gv, Minv, inj_amp, omega, cur, out):
    n = v.shape[0]
    drive = inj_amp * math.sin(omega * t) if inj_amp != 0.0 else 0.0
    for i in range(n):
        cur[i] = gv[i] - g[i] * v[i] + drive
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Minv[i, j] * cur[j]
        out[i] = acc


@njit(cache=True)
def _rk4(t, v, h, g, gv, Minv, inj_amp, omega, work, out):
    k1, k2, k3, k4, tmp, cur = work[0], work[1], work[2], work[3], work[4], work[5]
    n = v.shape[0]
    _rhs(t, v, g, gv, Minv, inj_amp, omega, cur, k1)
    for i in range(n):
        tmp[i] = v[i] + 0.5 * h * k1[i]
    _rhs(t + 0.5 * h, tmp, g, gv, Minv, inj_amp, omega, cur, k2)
    for i in range(n):
        tmp[i] = v[i] + 0.5 * h * k2[i]
    _rhs(t + 0.5 * h, tmp, g, gv, Minv, inj_amp, omega, cur, k3)
    for i in range(n):
        tmp[i] = v[i] + h * k3[i]
    _rhs(t + h, tmp, g, gv, Minv, inj_amp, omega, cur, k4)
    for i in range(n):
        out[i] = v[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _crossed(i, v, s, k, th, eao, u_off, u_on, V_sat):
    if s[i] == 1:
        return v[i] >= th
    if v[i] <= -th:
        return True
    if eao:
        u = v[i] + V_sat
        if k[i]:
            return u <= u_off
        return u > u_on
    return False


@njit(cache=True)
def _any_crossed(v, s, k, th, eao, u_off, u_on, V_sat):
    for i in range(v.shape[0]):
        if _crossed(i, v, s, k, th, eao, u_off, u_on, V_sat):
            return True
    return False


@njit(cache=True)
def _coefficients(s, k, G_high, G_fast, G_slow, V_sat, g, gv):
    for i in range(s.shape[0]):
        if s[i] == 1:
            g[i] = G_high
            gv[i] = G_high * V_sat
        elif k[i]:
            g[i] = G_fast
            gv[i] = -G_fast * V_sat
        else:
            g[i] = G_slow
            gv[i] = -G_slow * V_sat


@njit(cache=True, nogil=True)
def integrate(v, s, k, t0, dt, n_steps, tol, every, Minv,
              G_high, G_fast, G_slow, V_sat, th, eao, u_off, u_on,
              inj_amp, omega, limit,
              ts, vs, ss, ev_osc, ev_t, ev_type, ev_dir):
    """Advance ``(v, s, k)`` in place; returns ``(rows, n_events, status)``."""
    n = v.shape[0]
    work = np.empty((6, n))
    v_new = np.empty(n)
    v_try = np.empty(n)
    g = np.empty(n)
    gv = np.empty(n)
    _coefficients(s, k, G_high, G_fast, G_slow, V_sat, g, gv)
    cap = ev_t.shape[0]
    n_ev = 0
    t = t0
    row = 1
    for step_no in range(1, n_steps + 1):
        target = t0 + step_no * dt
        while True:
            h = target - t
            _rk4(t, v, h, g, gv, Minv, inj_amp, omega, work, v_new)
            if not _any_crossed(v_new, s, k, th, eao, u_off, u_on, V_sat):
                v[:] = v_new
                t = target
                break
            lo = 0.0
            hi = h
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                _rk4(t, v, mid, g, gv, Minv, inj_amp, omega, work, v_try)
                if _any_crossed(v_try, s, k, th, eao, u_off, u_on, V_sat):
                    hi = mid
                else:
                    lo = mid
            _rk4(t, v, hi, g, gv, Minv, inj_amp, omega, work, v_new)
            v[:] = v_new
            t = t + hi
            # transitions at one refined instant go in index order
            for i in range(n):
                if not _crossed(i, v, s, k, th, eao, u_off, u_on, V_sat):
                    continue
                if n_ev + 2 > cap:
                    return row, n_ev, EVENT_OVERFLOW
                if s[i] == 1:
                    s[i] = 0
                    ev_osc[n_ev] = i
                    ev_t[n_ev] = t
                    ev_type[n_ev] = FLIP
                    ev_dir[n_ev] = -1
                    n_ev += 1
                    if eao and v[i] + V_sat > u_off:
                        k[i] = True
                        ev_osc[n_ev] = i
                        ev_t[n_ev] = t
                        ev_type[n_ev] = KNEE
                        ev_dir[n_ev] = 1
                        n_ev += 1
                elif v[i] <= -th:
                    s[i] = 1
                    ev_osc[n_ev] = i
                    ev_t[n_ev] = t
                    ev_type[n_ev] = FLIP
                    ev_dir[n_ev] = 1
                    n_ev += 1
                    if k[i]:
                        k[i] = False
                        ev_osc[n_ev] = i
                        ev_t[n_ev] = t
                        ev_type[n_ev] = KNEE
                        ev_dir[n_ev] = -1
                        n_ev += 1
                else:
                    k[i] = not k[i]
                    ev_osc[n_ev] = i
                    ev_t[n_ev] = t
                    ev_type[n_ev] = KNEE
                    ev_dir[n_ev] = 1 if k[i] else -1
                    n_ev += 1
            _coefficients(s, k, G_high, G_fast, G_slow, V_sat, g, gv)
            if target - t <= 0.0:
                break
        for i in range(n):
            if not (abs(v[i]) < limit):
                return row, n_ev, UNSTABLE
        if step_no % every == 0:
            ts[row] = t
            vs[row, :] = v
            ss[row, :] = s
            row += 1
    return row, n_ev, OK

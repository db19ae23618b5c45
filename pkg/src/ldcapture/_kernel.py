"""Compiled propagation core.

Everything here works on plain floats and arrays so that numba can compile it;
the typed Python surface lives in :mod:`ldcapture.propagate`.

The extended state is ``(x, y, x', y', M)`` where ``M`` accumulates the
descriptor integrand ``(x'^2 + y'^2)^(gamma/2)`` against ``|df|``.
"""

import math
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # Older system TBB builds trigger a warning on every import.
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# Prince & Dormand RK8(7)13M.
_C = np.array([0.0, 1 / 18, 1 / 12, 1 / 8, 5 / 16, 3 / 8, 59 / 400, 93 / 200,
               5490023248 / 9719169821, 13 / 20, 1201146811 / 1299019798, 1.0, 1.0])

_A = np.zeros((13, 13))
_A[1, 0] = 1 / 18
_A[2, :2] = [1 / 48, 1 / 16]
_A[3, :3] = [1 / 32, 0, 3 / 32]
_A[4, :4] = [5 / 16, 0, -75 / 64, 75 / 64]
_A[5, :5] = [3 / 80, 0, 0, 3 / 16, 3 / 20]
_A[6, :6] = [29443841 / 614563906, 0, 0, 77736538 / 692538347,
             -28693883 / 1125000000, 23124283 / 1800000000]
_A[7, :7] = [16016141 / 946692911, 0, 0, 61564180 / 158732637,
             22789713 / 633445777, 545815736 / 2771057229, -180193667 / 1043307555]
_A[8, :8] = [39632708 / 573591083, 0, 0, -433636366 / 683701615,
             -421739975 / 2616292301, 100302831 / 723423059, 790204164 / 839813087,
             800635310 / 3783071287]
_A[9, :9] = [246121993 / 1340847787, 0, 0, -37695042795 / 15268766246,
             -309121744 / 1061227803, -12992083 / 490766935, 6005943493 / 2108947869,
             393006217 / 1396673457, 123872331 / 1001029789]
_A[10, :10] = [-1028468189 / 846180014, 0, 0, 8478235783 / 508512852,
               1311729495 / 1432422823, -10304129995 / 1701304382,
               -48777925059 / 3047939560, 15336726248 / 1032824649,
               -45442868181 / 3398467696, 3065993473 / 597172653]
_A[11, :11] = [185892177 / 718116043, 0, 0, -3185094517 / 667107341,
               -477755414 / 1098053517, -703635378 / 230739211, 5731566787 / 1027545527,
               5232866602 / 850066563, -4093664535 / 808688257, 3962137247 / 1805957418,
               65686358 / 487910083]
_A[12, :12] = [403863854 / 491063109, 0, 0, -5068492393 / 434740067,
               -411421997 / 543043805, 652783627 / 914296604, 11173962825 / 925320556,
               -13158990841 / 6184727034, 3936647629 / 1978049680, -160528059 / 685178525,
               248638103 / 1413531060, 0]

# 8th-order weights and 7th-order embedded weights.
_B8 = np.array([14005451 / 335480064, 0, 0, 0, 0, -59238493 / 1068277825,
                181606767 / 758867731, 561292985 / 797845732, -1041891430 / 1371343529,
                760417239 / 1151165299, 118820643 / 751138087, -528747749 / 2220607170, 1 / 4])
_B7 = np.array([13451932 / 455176623, 0, 0, 0, 0, -808719846 / 976000145,
                1757004468 / 5645159321, 656045339 / 265891186, -3867574721 / 1518517206,
                465885868 / 322736535, 53011238 / 667516719, 2 / 45, 0])
_E = _B8 - _B7

NSTAGE = 13
NDIM = 5

# Termination codes.
REACHED_END = 0
IMPACT = 1
ESCAPE = 2
ERR_MAX_STEPS = -1
ERR_STEP_UNDERFLOW = -2
ERR_NONFINITE = -3

# Controller constants.
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
PI_ALPHA = 0.7 / 8.0
PI_BETA = 0.4 / 8.0


@njit(cache=True)
def rhs(f, y, out, mu, ep, gamma, ld_sign):
    x = y[0]
    yy = y[1]
    u = y[2]
    v = y[3]
    dx1 = x + mu
    dx2 = x + mu - 1.0
    r1sq = dx1 * dx1 + yy * yy
    r2sq = dx2 * dx2 + yy * yy
    r13 = r1sq * math.sqrt(r1sq)
    r23 = r2sq * math.sqrt(r2sq)
    inv = 1.0 / (1.0 + ep * math.cos(f))
    wx = (x - (1.0 - mu) * dx1 / r13 - mu * dx2 / r23) * inv
    wy = (yy - (1.0 - mu) * yy / r13 - mu * yy / r23) * inv
    out[0] = u
    out[1] = v
    out[2] = wx + 2.0 * v
    out[3] = wy - 2.0 * u
    if ld_sign != 0.0:
        out[4] = ld_sign * (u * u + v * v) ** (0.5 * gamma)
    else:
        out[4] = 0.0


@njit(cache=True)
def rk_step(f, y, h, mu, ep, gamma, ld_sign, k, ynew, err):
    """One RK8(7) step. Returns False if any stage is non-finite."""
    tmp = np.empty(NDIM)
    for s in range(NSTAGE):
        for d in range(NDIM):
            acc = y[d]
            for m in range(s):
                a = _A[s, m]
                if a != 0.0:
                    acc += h * a * k[m, d]
            tmp[d] = acc
        rhs(f + _C[s] * h, tmp, k[s], mu, ep, gamma, ld_sign)
        for d in range(NDIM):
            if not math.isfinite(k[s, d]):
                return False
    for d in range(NDIM):
        acc = y[d]
        e = 0.0
        for s in range(NSTAGE):
            acc += h * _B8[s] * k[s, d]
            e += h * _E[s] * k[s, d]
        ynew[d] = acc
        err[d] = e
    return True


@njit(cache=True)
def error_norm(y, ynew, err, rtol, atol):
    # The accumulator is left out so the trajectory does not depend on it.
    worst = 0.0
    for d in range(4):
        sc = atol + rtol * max(abs(y[d]), abs(ynew[d]))
        q = abs(err[d]) / sc
        if q > worst:
            worst = q
    return worst


@njit(cache=True)
def physical_distance(f, y, mu, ep):
    k = (1.0 - ep * ep) / (1.0 + ep * math.cos(f))
    return k * math.hypot(y[0] - (1.0 - mu), y[1])


@njit(cache=True)
def radial_rate(f, y, mu, ep):
    """d/df of the physical distance from the target body."""
    c = 1.0 + ep * math.cos(f)
    k = (1.0 - ep * ep) / c
    dx = y[0] - (1.0 - mu)
    dy = y[1]
    r = math.hypot(dx, dy)
    return k * (ep * math.sin(f) / c * r + (dx * y[2] + dy * y[3]) / r)


@njit(cache=True)
def kepler_energy(f, y, mu, ep):
    c = 1.0 + ep * math.cos(f)
    k = (1.0 - ep * ep) / c
    nu = c * c / (1.0 - ep * ep) ** 1.5
    radial = ep * math.sin(f) / c
    dx = y[0] - (1.0 - mu)
    dy = y[1]
    wx = radial * dx - dy + y[2]
    wy = radial * dy + dx + y[3]
    speed2 = (nu * k) ** 2 * (wx * wx + wy * wy)
    return 0.5 * speed2 - mu / (k * math.hypot(dx, dy))


@njit(cache=True)
def escaped(f, y, mu, ep, rsoi):
    return physical_distance(f, y, mu, ep) > rsoi and kepler_energy(f, y, mu, ep) > 0.0


@njit(cache=True)
def _substep(f, y, h, mu, ep, gamma, ld_sign, k, out, err):
    if h == 0.0:
        for d in range(NDIM):
            out[d] = y[d]
        return True
    return rk_step(f, y, h, mu, ep, gamma, ld_sign, k, out, err)


@njit(cache=True)
def _bisect_impact(f, y, lo, hi, mu, ep, gamma, ld_sign, rbody, event_tol, k, out, err):
    """Shrink ``[lo, hi]`` (offsets from f) so that the body surface is crossed inside."""
    while abs(hi - lo) > event_tol:
        mid = 0.5 * (lo + hi)
        if not _substep(f, y, mid, mu, ep, gamma, ld_sign, k, out, err):
            return hi, False
        if physical_distance(f + mid, out, mu, ep) < rbody:
            hi = mid
        else:
            lo = mid
    return hi, True


@njit(cache=True)
def _bisect_periapsis(f, y, lo, hi, mu, ep, gamma, ld_sign, event_tol, k, out, err):
    while abs(hi - lo) > event_tol:
        mid = 0.5 * (lo + hi)
        if not _substep(f, y, mid, mu, ep, gamma, ld_sign, k, out, err):
            return mid, False
        if radial_rate(f + mid, out, mu, ep) * (1.0 if hi > lo else -1.0) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), True


@njit(cache=True)
def _bisect_escape(f, y, lo, hi, mu, ep, gamma, ld_sign, rsoi, event_tol, k, out, err):
    while abs(hi - lo) > event_tol:
        mid = 0.5 * (lo + hi)
        if not _substep(f, y, mid, mu, ep, gamma, ld_sign, k, out, err):
            return hi, False
        if escaped(f + mid, out, mu, ep, rsoi):
            hi = mid
        else:
            lo = mid
    return hi, True


@njit(cache=True)
def propagate_core(y0, f0, f1, mu, ep, rbody, rsoi, rtol, atol, h_init, h_min, h_max,
                   max_steps, event_tol, gamma, with_ld, stop_on_escape, out_f, out_y):
    """Integrate from ``f0`` to ``f1``.

    Returns ``(status, f_end, y_end, has_escape, f_escape, y_escape, nsteps, nout)``.
    ``out_f`` lists anomalies (ordered along the direction of integration)
    at which the extended state is written into ``out_y``.
    """
    y = np.empty(NDIM)
    for d in range(NDIM):
        y[d] = y0[d]
    ynew = np.empty(NDIM)
    err = np.empty(NDIM)
    scratch = np.empty(NDIM)
    yev = np.empty(NDIM)
    k = np.empty((NSTAGE, NDIM))
    y_escape = np.full(NDIM, np.nan)
    has_escape = False
    f_escape = np.nan
    nout = 0
    nsteps = 0

    f = f0
    span = f1 - f0
    if span == 0.0:
        while nout < out_f.shape[0] and out_f[nout] == f0:
            out_y[nout, :] = y
            nout += 1
        return REACHED_END, f, y, has_escape, f_escape, y_escape, nsteps, nout
    direction = 1.0 if span > 0.0 else -1.0
    ld_sign = direction if with_ld else 0.0

    if physical_distance(f, y, mu, ep) < rbody:
        return IMPACT, f, y, has_escape, f_escape, y_escape, nsteps, nout
    if escaped(f, y, mu, ep, rsoi):
        has_escape = True
        f_escape = f
        y_escape[:] = y
        if stop_on_escape:
            return ESCAPE, f, y, has_escape, f_escape, y_escape, nsteps, nout

    while nout < out_f.shape[0] and (out_f[nout] - f) * direction <= 0.0:
        out_y[nout, :] = y
        nout += 1

    h = min(abs(h_init), abs(span), h_max)
    err_prev = 1e-4
    while True:
        remaining = (f1 - f) * direction
        if remaining <= 0.0:
            return REACHED_END, f, y, has_escape, f_escape, y_escape, nsteps, nout
        if nsteps >= max_steps:
            return ERR_MAX_STEPS, f, y, has_escape, f_escape, y_escape, nsteps, nout
        target = f1
        if nout < out_f.shape[0] and (out_f[nout] - f1) * direction < 0.0:
            target = out_f[nout]
        clipped = False
        h_prop = h
        if h >= (target - f) * direction:
            h = (target - f) * direction
            clipped = True
        hs = h * direction
        if not rk_step(f, y, hs, mu, ep, gamma, ld_sign, k, ynew, err):
            # Treat as a rejected step; non-finite values come from overshooting.
            h *= FAC_MIN
            if h < h_min:
                return ERR_NONFINITE, f, y, has_escape, f_escape, y_escape, nsteps, nout
            continue
        en = error_norm(y, ynew, err, rtol, atol)
        if en > 1.0:
            h *= max(FAC_MIN, SAFETY * en ** (-1.0 / 8.0))
            if h < h_min:
                return ERR_STEP_UNDERFLOW, f, y, has_escape, f_escape, y_escape, nsteps, nout
            continue
        nsteps += 1
        fnew = target if clipped else f + hs

        # Impact, including a periapsis dip below the surface between endpoints.
        hit = physical_distance(fnew, ynew, mu, ep) < rbody
        hi = hs
        if not hit and radial_rate(f, y, mu, ep) * direction < 0.0 \
                and radial_rate(fnew, ynew, mu, ep) * direction > 0.0:
            hmin_off, ok = _bisect_periapsis(f, y, 0.0, hs, mu, ep, gamma, ld_sign,
                                             event_tol, k, yev, scratch)
            if ok:
                ok = _substep(f, y, hmin_off, mu, ep, gamma, ld_sign, k, yev, scratch)
            if ok and physical_distance(f + hmin_off, yev, mu, ep) < rbody:
                hit = True
                hi = hmin_off
        if hit:
            hi, ok = _bisect_impact(f, y, 0.0, hi, mu, ep, gamma, ld_sign, rbody,
                                    event_tol, k, yev, scratch)
            if not ok:
                return ERR_NONFINITE, f, y, has_escape, f_escape, y_escape, nsteps, nout
            _substep(f, y, hi, mu, ep, gamma, ld_sign, k, yev, scratch)
            return IMPACT, f + hi, yev, has_escape, f_escape, y_escape, nsteps, nout

        if not has_escape and escaped(fnew, ynew, mu, ep, rsoi):
            off, ok = _bisect_escape(f, y, 0.0, hs, mu, ep, gamma, ld_sign, rsoi,
                                     event_tol, k, yev, scratch)
            if not ok:
                return ERR_NONFINITE, f, y, has_escape, f_escape, y_escape, nsteps, nout
            _substep(f, y, off, mu, ep, gamma, ld_sign, k, yev, scratch)
            has_escape = True
            f_escape = f + off
            y_escape[:] = yev
            if stop_on_escape:
                return ESCAPE, f_escape, yev, has_escape, f_escape, y_escape, nsteps, nout

        for d in range(NDIM):
            y[d] = ynew[d]
        f = fnew
        while nout < out_f.shape[0] and (out_f[nout] - f) * direction <= 0.0:
            out_y[nout, :] = y
            nout += 1

        # PI step-size controller.
        en = max(en, 1e-10)
        fac = SAFETY * en ** (-PI_ALPHA) * err_prev ** PI_BETA
        fac = min(FAC_MAX, max(FAC_MIN, fac))
        err_prev = en
        hn = h * fac
        if clipped:
            # A step shortened to hit an output point says nothing about the next one.
            hn = max(hn, h_prop)
        h = min(hn, h_max)
        if h < h_min:
            return ERR_STEP_UNDERFLOW, f, y, has_escape, f_escape, y_escape, nsteps, nout


@njit(cache=True, parallel=True)
def sweep(states, f0, f1, mu, ep, rbody, rsoi, rtol, atol, h_init, h_min, h_max,
          max_steps, event_tol, gamma, with_ld, stop_on_escape):
    """Propagate many initial states independently.

    Returns per-point ``status``, ``f_end``, accumulated descriptor,
    escape flag and escape anomaly.
    """
    n = states.shape[0]
    status = np.empty(n, np.int64)
    f_end = np.empty(n)
    ld = np.empty(n)
    esc = np.zeros(n, np.bool_)
    f_esc = np.full(n, np.nan)
    no_out = np.empty(0)
    no_y = np.empty((0, NDIM))
    for p in prange(n):
        y0 = np.zeros(NDIM)
        for d in range(4):
            y0[d] = states[p, d]
        st, fe, ye, he, fesc, _, _, _ = propagate_core(
            y0, f0, f1, mu, ep, rbody, rsoi, rtol, atol, h_init, h_min, h_max,
            max_steps, event_tol, gamma, with_ld, stop_on_escape, no_out, no_y)
        status[p] = st
        f_end[p] = fe
        ld[p] = ye[4]
        esc[p] = he
        f_esc[p] = fesc
    return status, f_end, ld, esc, f_esc

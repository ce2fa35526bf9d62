"""Compiled numerical kernels.

Everything in this module is ``numba``-compiled with ``nogil=True`` so the ensemble
thread pool runs propagations in parallel. Systems are dispatched on an integer kind
code and a length-3 float64 parameter vector (see ``SystemSpec.param_vector``):

* double pendulum: ``(alpha, sigma, 0)``
* four-well: ``(alpha, beta, delta)``
* Henon-Heiles: unused
* standard map: ``(K, 0, 0)``

Continuous states are ``(q1, q2, p1, p2)``.
"""
import math

import numpy as np
from numba import njit

DOUBLE_PENDULUM = 0
FOUR_WELL = 1
HENON_HEILES = 2
STANDARD_MAP = 3

# integration modes
MODE_STATE = 0
MODE_LD = 1
MODE_SALI = 2

# status codes returned by the drivers
STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

TWO_PI = 2.0 * math.pi
LOG10_ZERO = -16.0

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    ]
)
_B = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0])
_E = np.array(
    [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ]
)
# continuous extension (Shampine), y(t + th) = y + h * sum_j k_j * sum_m P[j, m] th^(m+1)
_P = np.array(
    [
        [
            1.0,
            -8048581381.0 / 2820520608.0,
            8663915743.0 / 2820520608.0,
            -12715105075.0 / 11282082432.0,
        ],
        [0.0, 0.0, 0.0, 0.0],
        [
            0.0,
            131558114200.0 / 32700410799.0,
            -68118460800.0 / 10900136933.0,
            87487479700.0 / 32700410799.0,
        ],
        [
            0.0,
            -1754552775.0 / 470086768.0,
            14199869525.0 / 1410260304.0,
            -10690763975.0 / 1880347072.0,
        ],
        [
            0.0,
            127303824393.0 / 49829197408.0,
            -318862633887.0 / 49829197408.0,
            701980252875.0 / 199316789632.0,
        ],
        [
            0.0,
            -282668133.0 / 205662961.0,
            2019193451.0 / 616988883.0,
            -1453857185.0 / 822651844.0,
        ],
        [
            0.0,
            40617522.0 / 29380423.0,
            -110615467.0 / 29380423.0,
            69997945.0 / 29380423.0,
        ],
    ]
)

# PI step-size control
_SAFETY = 0.9
_ALPHA = 0.17
_BETA = 0.04
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@njit(cache=True, nogil=True)
def rhs(kind, par, y, out):
    """Hamilton's equations; reads y[0:4], writes out[0:4]."""
    if kind == HENON_HEILES:
        x = y[0]
        q = y[1]
        out[0] = y[2]
        out[1] = y[3]
        out[2] = -x - 2.0 * x * q
        out[3] = -q - x * x + q * q
    elif kind == FOUR_WELL:
        a = par[0]
        b = par[1]
        d = par[2]
        x = y[0]
        q = y[1]
        out[0] = y[2]
        out[1] = y[3]
        out[2] = -4.0 * x * x * x + 2.0 * a * x + d - 2.0 * b * x * q * q
        out[3] = -4.0 * q * q * q + 2.0 * q - 2.0 * b * x * x * q
    else:
        alpha = par[0]
        u = 1.0 + par[1]
        t1 = y[0]
        p1 = y[2]
        p2 = y[3]
        delta = y[1] - t1
        c = math.cos(delta)
        s = math.sin(delta)
        det = u - c * c
        a11 = 1.0 / (alpha * alpha * det)
        a12 = -c / (alpha * det)
        a22 = u / det
        out[0] = a11 * p1 + a12 * p2
        out[1] = a12 * p1 + a22 * p2
        quad = p1 * p1 / (alpha * alpha) - 2.0 * c * p1 * p2 / alpha + u * p2 * p2
        g = -p1 * p2 / (alpha * det) + c * quad / (det * det)
        out[2] = -g * s - alpha * u * math.sin(t1)
        out[3] = g * s - math.sin(y[1])


@njit(cache=True, nogil=True)
def jac(kind, par, y, out):
    """Analytic Jacobian of ``rhs`` at y[0:4] into the 4x4 array ``out``."""
    for i in range(4):
        for j in range(4):
            out[i, j] = 0.0
    if kind == HENON_HEILES:
        x = y[0]
        q = y[1]
        out[0, 2] = 1.0
        out[1, 3] = 1.0
        out[2, 0] = -1.0 - 2.0 * q
        out[2, 1] = -2.0 * x
        out[3, 0] = -2.0 * x
        out[3, 1] = -1.0 + 2.0 * q
    elif kind == FOUR_WELL:
        a = par[0]
        b = par[1]
        x = y[0]
        q = y[1]
        out[0, 2] = 1.0
        out[1, 3] = 1.0
        out[2, 0] = -12.0 * x * x + 2.0 * a - 2.0 * b * q * q
        out[2, 1] = -4.0 * b * x * q
        out[3, 0] = -4.0 * b * x * q
        out[3, 1] = -12.0 * q * q + 2.0 - 2.0 * b * x * x
    else:
        alpha = par[0]
        u = 1.0 + par[1]
        t1 = y[0]
        p1 = y[2]
        p2 = y[3]
        delta = y[1] - t1
        c = math.cos(delta)
        s = math.sin(delta)
        det = u - c * c
        a11 = 1.0 / (alpha * alpha * det)
        a12 = -c / (alpha * det)
        a22 = u / det
        # derivatives of the inverse mass matrix with respect to c = cos(delta)
        da11 = 2.0 * c / (alpha * alpha * det * det)
        da12 = -1.0 / (alpha * det) - 2.0 * c * c / (alpha * det * det)
        da22 = 2.0 * c * u / (det * det)
        ap1 = da11 * p1 + da12 * p2
        ap2 = da12 * p1 + da22 * p2
        quad = p1 * p1 / (alpha * alpha) - 2.0 * c * p1 * p2 / alpha + u * p2 * p2
        g = -p1 * p2 / (alpha * det) + c * quad / (det * det)
        g_c = (
            -4.0 * c * p1 * p2 / (alpha * det * det)
            + quad / (det * det)
            + 4.0 * c * c * quad / (det * det * det)
        )
        out[0, 0] = ap1 * s
        out[0, 1] = -ap1 * s
        out[1, 0] = ap2 * s
        out[1, 1] = -ap2 * s
        out[0, 2] = a11
        out[0, 3] = a12
        out[1, 2] = a12
        out[1, 3] = a22
        cross = g_c * s * s - g * c
        out[2, 0] = -cross - alpha * u * math.cos(t1)
        out[2, 1] = cross
        out[3, 0] = cross
        out[3, 1] = -cross - math.cos(y[1])
        out[2, 2] = -s * ap1
        out[2, 3] = -s * ap2
        out[3, 2] = s * ap1
        out[3, 3] = s * ap2


@njit(cache=True, nogil=True)
def _deriv(mode, kind, par, sign, y, out, jbuf):
    rhs(kind, par, y, out)
    if mode == MODE_LD:
        acc = 0.0
        for i in range(4):
            acc += math.sqrt(abs(out[i]))
            out[i] *= sign
        out[4] = acc
    elif mode == MODE_SALI:
        jac(kind, par, y, jbuf)
        for i in range(4):
            s1 = 0.0
            s2 = 0.0
            for j in range(4):
                s1 += jbuf[i, j] * y[4 + j]
                s2 += jbuf[i, j] * y[8 + j]
            out[4 + i] = s1
            out[8 + i] = s2
    else:
        for i in range(4):
            out[i] *= sign


@njit(cache=True, nogil=True)
def _dopri_step(mode, kind, par, sign, y, h, k, ytmp, jbuf, y_new, atol, rtol):
    """One Dormand-Prince step; k[0] must hold f(y). Returns the scaled error norm."""
    n = y.shape[0]
    for s in range(1, 6):
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * k[j, i]
            ytmp[i] = y[i] + h * acc
        _deriv(mode, kind, par, sign, ytmp, k[s], jbuf)
    for i in range(n):
        acc = 0.0
        for j in range(6):
            acc += _B[j] * k[j, i]
        y_new[i] = y[i] + h * acc
    _deriv(mode, kind, par, sign, y_new, k[6], jbuf)
    err = 0.0
    for i in range(n):
        e = 0.0
        for j in range(7):
            e += _E[j] * k[j, i]
        e *= h
        scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        err += (e / scale) ** 2
    return math.sqrt(err / n)


@njit(cache=True, nogil=True)
def _next_step(h, err, err_old, rejected):
    """PI controller; returns (h_next, err_old)."""
    if err <= 1.0:
        if err == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err ** (-_ALPHA) * err_old**_BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if rejected:
            factor = min(factor, 1.0)
        return h * factor, max(err, 1.0e-4)
    factor = max(_MIN_FACTOR, _SAFETY * err ** (-0.2))
    return h * factor, err_old


@njit(cache=True, nogil=True)
def _too_small(h, t):
    return h < 1.0e-14 * max(1.0, abs(t))


@njit(cache=True, nogil=True)
def integrate_to(mode, kind, par, sign, y0, t_end, atol, rtol, max_step, h0):
    """Integrate an augmented state (MODE_STATE or MODE_LD) over [0, t_end].

    Returns ``(status, t_reached, y)``.
    """
    n = y0.shape[0]
    y = y0.copy()
    y_new = np.empty(n)
    ytmp = np.empty(n)
    k = np.empty((7, n))
    jbuf = np.empty((4, 4))
    _deriv(mode, kind, par, sign, y, k[0], jbuf)
    t = 0.0
    h = min(h0, max_step, t_end)
    err_old = 1.0e-4
    rejected = False
    while t < t_end:
        if _too_small(h, t):
            return STATUS_STEP_UNDERFLOW, t, y
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        err = _dopri_step(mode, kind, par, sign, y, h, k, ytmp, jbuf, y_new, atol, rtol)
        h_next, err_old = _next_step(h, err, err_old, rejected)
        if err <= 1.0:
            t = t_end if last else t + h
            for i in range(n):
                y[i] = y_new[i]
                k[0, i] = k[6, i]
            rejected = False
        else:
            rejected = True
        h = min(h_next, max_step)
    return STATUS_OK, t, y


@njit(cache=True, nogil=True)
def _sali_of(y):
    dp = 0.0
    dm = 0.0
    for i in range(4):
        a = y[4 + i]
        b = y[8 + i]
        dp += (a - b) * (a - b)
        dm += (a + b) * (a + b)
    return min(math.sqrt(dp), math.sqrt(dm))


@njit(cache=True, nogil=True)
def _normalize_deviations(y, k0):
    """Renormalize w1, w2 in place; the variational field is linear so k0 scales too."""
    for offset in range(4, 12, 4):
        norm = 0.0
        for i in range(4):
            norm += y[offset + i] * y[offset + i]
        norm = math.sqrt(norm)
        if norm > 0.0:
            for i in range(4):
                y[offset + i] /= norm
                k0[offset + i] /= norm


@njit(cache=True, nogil=True)
def _log10_sali(value):
    if value <= 0.0:
        return LOG10_ZERO
    return math.log10(value)


@njit(cache=True, nogil=True)
def integrate_sali(
    kind, par, y0, t_end, atol, rtol, max_step, h0, floor, ratio, t_first, times, values
):
    """Integrate state plus two deviation vectors, sampling SALI geometrically.

    ``y0`` has length 12 (state, w1, w2). Samples are written into ``times`` and
    ``values`` (log10 SALI). Returns ``(status, t_reached, count, floor_hit, y)``.
    """
    n = 12
    cap = times.shape[0]
    y = y0.copy()
    y_new = np.empty(n)
    ytmp = np.empty(n)
    k = np.empty((7, n))
    jbuf = np.empty((4, 4))
    _deriv(MODE_SALI, kind, par, 1.0, y, k[0], jbuf)
    _normalize_deviations(y, k[0])
    sali = _sali_of(y)
    times[0] = 0.0
    values[0] = _log10_sali(sali)
    count = 1
    if sali < floor:
        return STATUS_OK, 0.0, count, True, y
    t = 0.0
    target = t_first
    h = min(h0, max_step, t_end)
    err_old = 1.0e-4
    rejected = False
    while t < t_end:
        if _too_small(h, t):
            return STATUS_STEP_UNDERFLOW, t, count, False, y
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        err = _dopri_step(MODE_SALI, kind, par, 1.0, y, h, k, ytmp, jbuf, y_new, atol, rtol)
        h_next, err_old = _next_step(h, err, err_old, rejected)
        if err <= 1.0:
            t = t_end if last else t + h
            for i in range(n):
                y[i] = y_new[i]
                k[0, i] = k[6, i]
            _normalize_deviations(y, k[0])
            rejected = False
            sali = _sali_of(y)
            hit = sali < floor
            if (t >= target or hit or last) and count < cap:
                times[count] = t
                values[count] = _log10_sali(sali)
                count += 1
                while target <= t:
                    target *= ratio
            if hit:
                return STATUS_OK, t, count, True, y
        else:
            rejected = True
        h = min(h_next, max_step)
    return STATUS_OK, t, count, False, y


@njit(cache=True, nogil=True)
def _section_value(y, fixed_index, fixed_value, period, direction):
    g = y[fixed_index] - fixed_value
    if period > 0.0:
        g = g - period * math.floor(g / period + 0.5)
    return direction * g


@njit(cache=True, nogil=True)
def _dense(y, h, k, theta, out):
    n = y.shape[0]
    t1 = theta
    t2 = theta * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(n):
        acc = 0.0
        for j in range(7):
            acc += k[j, i] * (_P[j, 0] * t1 + _P[j, 1] * t2 + _P[j, 2] * t3 + _P[j, 3] * t4)
        out[i] = y[i] + h * acc


@njit(cache=True, nogil=True)
def integrate_section(
    kind,
    par,
    y0,
    fixed_index,
    fixed_value,
    period,
    direction,
    t_end,
    atol,
    rtol,
    max_step,
    h0,
    points,
    crossing_times,
):
    """Record directed crossings of ``q[fixed_index] = fixed_value``.

    A crossing counts when ``direction * (q - fixed_value)`` goes from negative to
    nonnegative; each one is located by bisection on the continuous extension to
    |q - fixed_value| < 1e-10. Returns ``(status, t_reached, count)``.
    """
    n = 4
    cap = points.shape[0]
    count = 0
    y = y0.copy()
    y_new = np.empty(n)
    ytmp = np.empty(n)
    yint = np.empty(n)
    k = np.empty((7, n))
    jbuf = np.empty((4, 4))
    _deriv(MODE_STATE, kind, par, 1.0, y, k[0], jbuf)
    g_old = _section_value(y, fixed_index, fixed_value, period, direction)
    if abs(g_old) <= 1.0e-10 and direction * k[0, fixed_index] >= 0.0 and cap > 0:
        for i in range(n):
            points[0, i] = y[i]
        crossing_times[0] = 0.0
        count = 1
    t = 0.0
    h = min(h0, max_step, t_end)
    err_old = 1.0e-4
    rejected = False
    while t < t_end and count < cap:
        if _too_small(h, t):
            return STATUS_STEP_UNDERFLOW, t, count
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        err = _dopri_step(MODE_STATE, kind, par, 1.0, y, h, k, ytmp, jbuf, y_new, atol, rtol)
        h_next, err_old = _next_step(h, err, err_old, rejected)
        if err <= 1.0:
            g_new = _section_value(y_new, fixed_index, fixed_value, period, direction)
            jump = period > 0.0 and abs(g_new - g_old) > 0.5 * period
            if g_old < 0.0 and g_new >= 0.0 and not jump:
                lo = 0.0
                hi = 1.0
                theta = 1.0
                for _ in range(200):
                    theta = 0.5 * (lo + hi)
                    _dense(y, h, k, theta, yint)
                    gm = _section_value(yint, fixed_index, fixed_value, period, direction)
                    if abs(gm) < 1.0e-10 or hi - lo < 1.0e-16:
                        break
                    if gm < 0.0:
                        lo = theta
                    else:
                        hi = theta
                for i in range(n):
                    points[count, i] = yint[i]
                crossing_times[count] = t + theta * h
                count += 1
            t = t_end if last else t + h
            for i in range(n):
                y[i] = y_new[i]
                k[0, i] = k[6, i]
            g_old = g_new
            rejected = False
        else:
            rejected = True
        h = min(h_next, max_step)
    return STATUS_OK, t, count


# ---------------------------------------------------------------------------
# standard map


@njit(cache=True, nogil=True)
def wrap_unit(v):
    """Reduce to [0, 1), wrapping negative remainders."""
    r = v - math.floor(v)
    if r >= 1.0:
        r = 0.0
    return r


@njit(cache=True, nogil=True)
def map_forward(kappa, x, y):
    y_next = wrap_unit(y + kappa / TWO_PI * math.sin(TWO_PI * x))
    x_next = wrap_unit(x + y_next)
    return x_next, y_next


@njit(cache=True, nogil=True)
def map_backward(kappa, x, y):
    x_prev = wrap_unit(x - y)
    y_prev = wrap_unit(y - kappa / TWO_PI * math.sin(TWO_PI * x_prev))
    return x_prev, y_prev


@njit(cache=True, nogil=True)
def torus_distance(a, b):
    d = abs(a - b)
    return min(d, 1.0 - d)


@njit(cache=True, nogil=True)
def iterate_ld(kappa, x, y, n_iter, backward):
    """Discrete descriptor with p = 1/2 and minimal-image displacements."""
    ld = 0.0
    for _ in range(n_iter):
        if backward:
            xn, yn = map_backward(kappa, x, y)
        else:
            xn, yn = map_forward(kappa, x, y)
        ld += math.sqrt(torus_distance(xn, x)) + math.sqrt(torus_distance(yn, y))
        x = xn
        y = yn
    return x, y, ld


@njit(cache=True, nogil=True)
def iterate_sali(kappa, x, y, w, n_iter, floor, ratio, times, values):
    """Tangent-map SALI; ``w`` is a 2x2 array holding w1 and w2 as rows.

    Returns ``(count, floor_hit, x, y)``.
    """
    cap = times.shape[0]
    for r in range(2):
        norm = math.sqrt(w[r, 0] ** 2 + w[r, 1] ** 2)
        w[r, 0] /= norm
        w[r, 1] /= norm
    sali = min(
        math.sqrt((w[0, 0] - w[1, 0]) ** 2 + (w[0, 1] - w[1, 1]) ** 2),
        math.sqrt((w[0, 0] + w[1, 0]) ** 2 + (w[0, 1] + w[1, 1]) ** 2),
    )
    times[0] = 0.0
    values[0] = _log10_sali(sali)
    count = 1
    if sali < floor:
        return count, True, x, y
    target = 1.0
    for it in range(1, n_iter + 1):
        kc = kappa * math.cos(TWO_PI * x)
        for r in range(2):
            a = w[r, 0]
            b = w[r, 1]
            na = (1.0 + kc) * a + b
            nb = kc * a + b
            norm = math.sqrt(na * na + nb * nb)
            w[r, 0] = na / norm
            w[r, 1] = nb / norm
        x, y = map_forward(kappa, x, y)
        sali = min(
            math.sqrt((w[0, 0] - w[1, 0]) ** 2 + (w[0, 1] - w[1, 1]) ** 2),
            math.sqrt((w[0, 0] + w[1, 0]) ** 2 + (w[0, 1] + w[1, 1]) ** 2),
        )
        hit = sali < floor
        if (it >= target or hit or it == n_iter) and count < cap:
            times[count] = float(it)
            values[count] = _log10_sali(sali)
            count += 1
            while target <= it:
                target *= ratio
        if hit:
            return count, True, x, y
    return count, False, x, y


@njit(cache=True, nogil=True)
def map_orbit(kappa, x, y, n_iter, out):
    """Fill ``out`` (n_iter x 2) with successive iterates, starting from the IC."""
    for it in range(n_iter):
        out[it, 0] = x
        out[it, 1] = y
        x, y = map_forward(kappa, x, y)

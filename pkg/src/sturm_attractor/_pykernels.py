"""Pure-Python implementations of the hot kernels.

Signatures and return conventions mirror ``_kernels.pyx`` exactly; the
backend selected at import time (see ``_backend``) is one or the other.
The generic entry points (``dopri_shoot``, ``mol_advance``) also serve
problem specs whose nonlinearity is an arbitrary Python callable.
"""
from __future__ import annotations

import math

import numpy as np

# Status codes shared with the compiled core.
OK = 0
ESCAPE = 1
UNDERFLOW = 2
DOMAIN = 3
NONFINITE = 4

# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# b - b_hat
_E1 = 71.0 / 57600.0
_E3 = -71.0 / 16695.0
_E4 = 71.0 / 1920.0
_E5 = -17253.0 / 339200.0
_E6 = 22.0 / 525.0
_E7 = -1.0 / 40.0

X_END = math.pi


def poly_eval(coeffs, u):
    """Horner evaluation of sum(coeffs[k] * u**k) and its u-derivative."""
    n = len(coeffs)
    f = coeffs[n - 1]
    df = 0.0
    for k in range(n - 2, -1, -1):
        df = df * u + f
        f = f * u + coeffs[k]
    return f, df


def dopri_shoot(deriv, a, rtol, atol, escape, h_max):
    """Integrate (u, p, ua, pa) from x=0 to x=pi with data (a, 0, 1, 0).

    ``deriv(x, u, p, ua, pa)`` returns the four derivatives. Returns
    ``(xs, ys, theta, status, x_stop)`` where ``ys`` has shape (n, 4) and
    ``theta`` is the clockwise winding of (ua, pa), unwound from 0.
    """
    x = 0.0
    y = [a, 0.0, 1.0, 0.0]
    th = 0.0
    xs = [x]
    ys = [tuple(y)]
    thetas = [th]
    h = min(1e-3, h_max)
    k1 = deriv(x, *y)
    status = OK
    while x < X_END:
        if X_END - x < h:
            h = X_END - x
        if h < 1e-14 * max(1.0, abs(x)):
            status = UNDERFLOW
            break
        y2 = [y[i] + h * _A21 * k1[i] for i in range(4)]
        k2 = deriv(x + _C2 * h, *y2)
        y3 = [y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(4)]
        k3 = deriv(x + _C3 * h, *y3)
        y4 = [y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(4)]
        k4 = deriv(x + _C4 * h, *y4)
        y5 = [
            y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            for i in range(4)
        ]
        k5 = deriv(x + _C5 * h, *y5)
        y6 = [
            y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
            for i in range(4)
        ]
        k6 = deriv(x + h, *y6)
        yn = [
            y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
            for i in range(4)
        ]
        k7 = deriv(x + h, *yn)
        err = 0.0
        finite = True
        for i in range(4):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            err += (e / sc) ** 2
            if not math.isfinite(yn[i]):
                finite = False
        err = math.sqrt(err / 4.0) if finite else math.inf

        if err <= 1.0:
            cross = y[2] * yn[3] - y[3] * yn[2]
            dot = y[2] * yn[2] + y[3] * yn[3]
            dth = -math.atan2(cross, dot)
            if abs(dth) >= 0.5 * math.pi:
                # tangent turned too far to unwind unambiguously
                h *= 0.5
                continue
            x = x + h if X_END - x - h > 1e-15 else X_END
            y = yn
            k1 = k7
            th += dth
            xs.append(x)
            ys.append(tuple(y))
            thetas.append(th)
            if abs(y[0]) + abs(y[1]) > escape:
                status = ESCAPE
                break
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
        h = min(h * fac, h_max)
    return (
        np.asarray(xs, dtype=np.float64),
        np.asarray(ys, dtype=np.float64).reshape(-1, 4),
        np.asarray(thetas, dtype=np.float64),
        status,
        x,
    )


def shoot_poly(coeffs, damp, a, rtol, atol, escape, h_max):
    """Shooting flow for F0(x, u, p) = poly(u) + damp * p."""
    c = [float(v) for v in coeffs]
    d = float(damp)

    def deriv(x, u, p, ua, pa):
        f, fu = poly_eval(c, u)
        return (p, f + d * p, pa, fu * ua + d * pa)

    return dopri_shoot(deriv, float(a), rtol, atol, escape, h_max)


def mol_advance(u, t0, t1, c_cfl_dx2, rhs, dt_max):
    """Classical RK4 in time from t0 to t1 for u_t = rhs(u).

    ``rhs(u)`` returns ``(ut, fq_max, bad)`` where ``bad`` is -1 or the
    index of a grid point whose state left the validity domain. The step
    is capped by ``c_cfl_dx2 / fq_max`` evaluated at the start of each step.
    Returns ``(u, t, nsteps, status, bad_index, dt_last)``.
    """
    u = np.array(u, dtype=np.float64, copy=True)
    t = t0
    nsteps = 0
    dt = 0.0
    while t < t1:
        k1, fq, bad = rhs(u)
        if bad >= 0:
            return u, t, nsteps, DOMAIN, bad, dt
        dt = min(c_cfl_dx2 / fq, dt_max, t1 - t)
        k2, _, bad = rhs(u + 0.5 * dt * k1)
        if bad >= 0:
            return u, t, nsteps, DOMAIN, bad, dt
        k3, _, bad = rhs(u + 0.5 * dt * k2)
        if bad >= 0:
            return u, t, nsteps, DOMAIN, bad, dt
        k4, _, bad = rhs(u + dt * k3)
        if bad >= 0:
            return u, t, nsteps, DOMAIN, bad, dt
        un = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(un)):
            return u, t, nsteps, NONFINITE, int(np.argmin(np.isfinite(un))), dt
        u = un
        t = t1 if t1 - t - dt < 1e-14 * max(1.0, t1) else t + dt
        nsteps += 1
    return u, t, nsteps, OK, -1, dt


def poly_mol_rhs(coeffs, damp, form, dx):
    """Vectorized right-hand side of the method-of-lines system.

    form 0: u_t = q - F0;  form 1: u_t = log(1 + q - F0).
    """
    c = np.asarray(coeffs, dtype=np.float64)[::-1]
    inv_dx2 = 1.0 / (dx * dx)
    inv_2dx = 0.5 / dx

    def rhs(u):
        ext = np.empty(u.size + 2)
        ext[1:-1] = u
        ext[0] = u[1]
        ext[-1] = u[-2]
        q = (ext[:-2] - 2.0 * u + ext[2:]) * inv_dx2
        p = (ext[2:] - ext[:-2]) * inv_2dx
        f0 = np.polyval(c, u) + damp * p
        if form == 0:
            return q - f0, 1.0, -1
        arg = 1.0 + q - f0
        if not np.all(arg > 0.0):
            return None, 0.0, int(np.argmin(arg > 0.0))
        return np.log(arg), float(np.max(1.0 / arg)), -1

    return rhs


def mol_advance_poly(u, t0, t1, dx, coeffs, damp, form, c_cfl, dt_max):
    rhs = poly_mol_rhs(coeffs, damp, int(form), dx)
    return mol_advance(u, t0, t1, c_cfl * dx * dx, rhs, dt_max)

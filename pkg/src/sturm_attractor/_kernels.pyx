# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: shooting flow (Dormand-Prince 5(4)) and the
method-of-lines RK4 stepper, both for polynomial nonlinearities.

Mirrors ``_pykernels`` call for call.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, fabs, sqrt, pow, log, M_PI, isfinite
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

DEF OK = 0
DEF ESCAPE = 1
DEF UNDERFLOW = 2
DEF DOMAIN = 3
DEF NONFINITE = 4

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline void _poly(const double* c, int n, double u, double* f, double* df) noexcept nogil:
    cdef double ff = c[n - 1]
    cdef double dd = 0.0
    cdef int k
    for k in range(n - 2, -1, -1):
        dd = dd * u + ff
        ff = ff * u + c[k]
    f[0] = ff
    df[0] = dd


cdef inline void _deriv(const double* c, int n, double d, const double* y, double* k) noexcept nogil:
    cdef double f, fu
    _poly(c, n, y[0], &f, &fu)
    k[0] = y[1]
    k[1] = f + d * y[1]
    k[2] = y[3]
    k[3] = fu * y[2] + d * y[3]


def shoot_poly(coeffs, double damp, double a, double rtol, double atol,
               double escape, double h_max):
    """Shooting flow for F0(x, u, p) = poly(u) + damp * p.

    Returns ``(xs, ys, theta, status, x_stop)``; see ``_pykernels.dopri_shoot``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] carr = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef int n = carr.shape[0]
    cdef const double* c = <const double*> carr.data
    cdef double x = 0.0, h, th = 0.0, err, e, sc, cross, dot, dth, fac
    cdef double y[4]
    cdef double yt[4]
    cdef double yn[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double k7[4]
    cdef int i, status = OK, finite
    cdef Py_ssize_t cap = 256, cnt = 0
    cdef double* bx = <double*> malloc(cap * sizeof(double))
    cdef double* by = <double*> malloc(cap * 4 * sizeof(double))
    cdef double* bt = <double*> malloc(cap * sizeof(double))
    if bx == NULL or by == NULL or bt == NULL:
        raise MemoryError()

    y[0] = a; y[1] = 0.0; y[2] = 1.0; y[3] = 0.0
    bx[0] = x; bt[0] = th
    for i in range(4):
        by[i] = y[i]
    cnt = 1
    h = 1e-3 if h_max > 1e-3 else h_max
    _deriv(c, n, damp, y, k1)
    with nogil:
        while x < M_PI:
            if M_PI - x < h:
                h = M_PI - x
            if h < 1e-14 * (fabs(x) if fabs(x) > 1.0 else 1.0):
                status = UNDERFLOW
                break
            for i in range(4):
                yt[i] = y[i] + h * A21 * k1[i]
            _deriv(c, n, damp, yt, k2)
            for i in range(4):
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _deriv(c, n, damp, yt, k3)
            for i in range(4):
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _deriv(c, n, damp, yt, k4)
            for i in range(4):
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _deriv(c, n, damp, yt, k5)
            for i in range(4):
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            _deriv(c, n, damp, yt, k6)
            for i in range(4):
                yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            _deriv(c, n, damp, yn, k7)
            err = 0.0
            finite = 1
            for i in range(4):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(yn[i]) else fabs(yn[i]))
                err += (e / sc) * (e / sc)
                if not isfinite(yn[i]):
                    finite = 0
            if finite:
                err = sqrt(err / 4.0)
            if finite and err <= 1.0:
                cross = y[2] * yn[3] - y[3] * yn[2]
                dot = y[2] * yn[2] + y[3] * yn[3]
                dth = -atan2(cross, dot)
                if fabs(dth) >= 0.5 * M_PI:
                    h *= 0.5
                    continue
                if M_PI - x - h > 1e-15:
                    x = x + h
                else:
                    x = M_PI
                for i in range(4):
                    y[i] = yn[i]
                    k1[i] = k7[i]
                th += dth
                if cnt == cap:
                    cap *= 2
                    bx = <double*> realloc(bx, cap * sizeof(double))
                    by = <double*> realloc(by, cap * 4 * sizeof(double))
                    bt = <double*> realloc(bt, cap * sizeof(double))
                bx[cnt] = x
                bt[cnt] = th
                for i in range(4):
                    by[4 * cnt + i] = y[i]
                cnt += 1
                if fabs(y[0]) + fabs(y[1]) > escape:
                    status = ESCAPE
                    break
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(err, -0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
            elif not finite:
                fac = 0.2
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
            h = h * fac
            if h > h_max:
                h = h_max

    xs = np.empty(cnt, dtype=np.float64)
    ys = np.empty((cnt, 4), dtype=np.float64)
    ts = np.empty(cnt, dtype=np.float64)
    cdef double[::1] vx = xs
    cdef double[:, ::1] vy = ys
    cdef double[::1] vt = ts
    cdef Py_ssize_t j
    for j in range(cnt):
        vx[j] = bx[j]
        vt[j] = bt[j]
        for i in range(4):
            vy[j, i] = by[4 * j + i]
    free(bx)
    free(by)
    free(bt)
    return xs, ys, ts, status, x


cdef int _mol_rhs(const double* u, double* out, Py_ssize_t m, double inv_dx2, double inv_2dx,
                  const double* c, int nc, double damp, int form, double* fq_max) noexcept nogil:
    """Returns -1 or the first grid index outside the validity domain."""
    cdef Py_ssize_t i
    cdef double ul, ur, q, p, f, df, arg, fq
    fq_max[0] = 1.0 if form == 0 else 0.0
    for i in range(m):
        ul = u[i - 1] if i > 0 else u[1]
        ur = u[i + 1] if i < m - 1 else u[m - 2]
        q = (ul - 2.0 * u[i] + ur) * inv_dx2
        p = (ur - ul) * inv_2dx
        _poly(c, nc, u[i], &f, &df)
        f = f + damp * p
        if form == 0:
            out[i] = q - f
        else:
            arg = 1.0 + q - f
            if not (arg > 0.0):
                return <int> i
            out[i] = log(arg)
            fq = 1.0 / arg
            if fq > fq_max[0]:
                fq_max[0] = fq
    return -1


def mol_advance_poly(u0, double t0, double t1, double dx, coeffs, double damp,
                     int form, double c_cfl, double dt_max):
    """RK4 method-of-lines stepping; see ``_pykernels.mol_advance``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] carr = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef int nc = carr.shape[0]
    cdef const double* c = <const double*> carr.data
    u_arr = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] u = u_arr
    cdef Py_ssize_t m = u.shape[0], i
    cdef double* k1 = <double*> malloc(m * sizeof(double))
    cdef double* k2 = <double*> malloc(m * sizeof(double))
    cdef double* k3 = <double*> malloc(m * sizeof(double))
    cdef double* k4 = <double*> malloc(m * sizeof(double))
    cdef double* tmp = <double*> malloc(m * sizeof(double))
    cdef double t = t0, dt = 0.0, fq, dummy, v
    cdef double cdx2 = c_cfl * dx * dx
    cdef double inv_dx2 = 1.0 / (dx * dx), inv_2dx = 0.5 / dx
    cdef long nsteps = 0
    cdef int status = OK, bad = -1
    cdef double* up = &u[0]
    if k1 == NULL or k2 == NULL or k3 == NULL or k4 == NULL or tmp == NULL:
        raise MemoryError()
    with nogil:
        while t < t1:
            bad = _mol_rhs(up, k1, m, inv_dx2, inv_2dx, c, nc, damp, form, &fq)
            if bad >= 0:
                status = DOMAIN
                break
            dt = cdx2 / fq
            if dt > dt_max:
                dt = dt_max
            if dt > t1 - t:
                dt = t1 - t
            for i in range(m):
                tmp[i] = up[i] + 0.5 * dt * k1[i]
            bad = _mol_rhs(tmp, k2, m, inv_dx2, inv_2dx, c, nc, damp, form, &dummy)
            if bad >= 0:
                status = DOMAIN
                break
            for i in range(m):
                tmp[i] = up[i] + 0.5 * dt * k2[i]
            bad = _mol_rhs(tmp, k3, m, inv_dx2, inv_2dx, c, nc, damp, form, &dummy)
            if bad >= 0:
                status = DOMAIN
                break
            for i in range(m):
                tmp[i] = up[i] + dt * k3[i]
            bad = _mol_rhs(tmp, k4, m, inv_dx2, inv_2dx, c, nc, damp, form, &dummy)
            if bad >= 0:
                status = DOMAIN
                break
            for i in range(m):
                v = up[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not isfinite(v):
                    status = NONFINITE
                    bad = <int> i
                    break
                tmp[i] = v
            if status != OK:
                break
            for i in range(m):
                up[i] = tmp[i]
            if t1 - t - dt < 1e-14 * (t1 if t1 > 1.0 else 1.0):
                t = t1
            else:
                t = t + dt
            nsteps += 1
    free(k1)
    free(k2)
    free(k3)
    free(k4)
    free(tmp)
    return u_arr, t, nsteps, status, bad, dt

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Heun stepper for the two-patch problem."""
import numpy as np

cdef inline double horner(const double* c, Py_ssize_t deg, double s) noexcept nogil:
    cdef Py_ssize_t k = deg
    cdef double out = c[k]
    while k > 0:
        k -= 1
        out = out * s + c[k]
    return out


cdef inline void fix_nodes(double* v, Py_ssize_t n, Py_ssize_t iz, double sigma,
                           int left_kind, double left_val,
                           int right_kind, double right_val) noexcept nogil:
    if left_kind == 0:
        v[0] = left_val
    else:
        v[0] = (4.0 * v[1] - v[2]) / 3.0
    if right_kind == 0:
        v[n - 1] = right_val
    else:
        v[n - 1] = (4.0 * v[n - 2] - v[n - 3]) / 3.0
    v[iz] = (4.0 * v[iz - 1] - v[iz - 2] + sigma * (4.0 * v[iz + 1] - v[iz + 2])) / (3.0 * (1.0 + sigma))


cdef void stage(const double* v, double* out, Py_ssize_t lo, Py_ssize_t hi, double r,
                const double* c, Py_ssize_t deg) noexcept nogil:
    cdef Py_ssize_t j
    cdef double a0, a1, a2, s
    if deg == 2:
        a0 = c[0]
        a1 = c[1]
        a2 = c[2]
        for j in range(lo, hi):
            s = v[j]
            out[j] = r * (v[j - 1] - 2.0 * s + v[j + 1]) + ((a2 * s + a1) * s + a0)
    else:
        for j in range(lo, hi):
            out[j] = r * (v[j - 1] - 2.0 * v[j] + v[j + 1]) + horner(c, deg, v[j])


def advance(double[::1] u, long nsteps, double dt, double h, double d1, double d2,
            double sigma, long iz, const double[::1] coef_left, const double[::1] coef_right,
            int left_kind, double left_val, int right_kind, double right_val):
    """Advance ``u`` in place by ``nsteps`` Heun steps of size ``dt``."""
    cdef Py_ssize_t n = u.shape[0]
    cdef double[::1] u1_buf = np.zeros(n)
    cdef double[::1] k1_buf = np.zeros(n)
    cdef double[::1] k2_buf = np.zeros(n)
    cdef double* v = &u[0]
    cdef double* u1 = &u1_buf[0]
    cdef double* k1 = &k1_buf[0]
    cdef double* k2 = &k2_buf[0]
    cdef const double* cl = &coef_left[0]
    cdef const double* cr = &coef_right[0]
    cdef Py_ssize_t dl = coef_left.shape[0] - 1
    cdef Py_ssize_t dr = coef_right.shape[0] - 1
    cdef Py_ssize_t j
    cdef long step
    cdef double r1 = d1 / (h * h)
    cdef double r2 = d2 / (h * h)
    cdef double half = 0.5 * dt
    with nogil:
        for step in range(nsteps):
            stage(v, k1, 1, iz, r1, cl, dl)
            stage(v, k1, iz + 1, n - 1, r2, cr, dr)
            for j in range(1, n - 1):
                u1[j] = v[j] + dt * k1[j]
            fix_nodes(u1, n, iz, sigma, left_kind, left_val, right_kind, right_val)
            stage(u1, k2, 1, iz, r1, cl, dl)
            stage(u1, k2, iz + 1, n - 1, r2, cr, dr)
            for j in range(1, n - 1):
                v[j] = v[j] + half * (k1[j] + k2[j])
            fix_nodes(v, n, iz, sigma, left_kind, left_val, right_kind, right_val)


cdef inline double wave_rhs(double phi, double psi, double c, double d,
                            const double* coef, Py_ssize_t deg) noexcept nogil:
    return -(c * psi + horner(coef, deg, phi)) / d


def rk4_wave(double phi, double psi, double hs, long nsteps, long every,
             double c, double d, const double[::1] coef):
    """Fixed-step RK4 for ``d*phi'' + c*phi' + f(phi) = 0``.

    Returns ``phi`` after every ``every`` steps, starting with the initial value.
    """
    cdef long nout = nsteps // every + 1
    out_buf = np.empty(nout)
    cdef double[::1] out = out_buf
    cdef const double* cf = &coef[0]
    cdef Py_ssize_t deg = coef.shape[0] - 1
    cdef long k, i = 1
    cdef double p1, q1, p2, q2, p3, q3, p4, q4
    out[0] = phi
    with nogil:
        for k in range(1, nsteps + 1):
            p1 = psi
            q1 = wave_rhs(phi, psi, c, d, cf, deg)
            p2 = psi + 0.5 * hs * q1
            q2 = wave_rhs(phi + 0.5 * hs * p1, p2, c, d, cf, deg)
            p3 = psi + 0.5 * hs * q2
            q3 = wave_rhs(phi + 0.5 * hs * p2, p3, c, d, cf, deg)
            p4 = psi + hs * q3
            q4 = wave_rhs(phi + hs * p3, p4, c, d, cf, deg)
            phi = phi + hs / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
            psi = psi + hs / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
            if k % every == 0:
                out[i] = phi
                i += 1
    return out_buf, psi

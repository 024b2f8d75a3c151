"""Pure numpy twin of the compiled stepper, used when the extension is absent."""
import numpy as np

DIRICHLET = 0
NEUMANN = 1


def _horner(coefs, s):
    out = np.full_like(s, coefs[-1])
    for a in coefs[-2::-1]:
        out *= s
        out += a
    return out


def _fix_nodes(v, iz, sigma, left_kind, left_val, right_kind, right_val):
    v[0] = left_val if left_kind == DIRICHLET else (4.0 * v[1] - v[2]) / 3.0
    v[-1] = right_val if right_kind == DIRICHLET else (4.0 * v[-2] - v[-3]) / 3.0
    v[iz] = (4.0 * v[iz - 1] - v[iz - 2] + sigma * (4.0 * v[iz + 1] - v[iz + 2])) / (3.0 * (1.0 + sigma))


def _rhs(v, out, iz, r1, r2, coef_left, coef_right):
    out[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    out[1:iz] = r1 * out[1:iz] + _horner(coef_left, v[1:iz])
    out[iz + 1:-1] = r2 * out[iz + 1:-1] + _horner(coef_right, v[iz + 1:-1])
    out[iz] = 0.0
    return out


def advance(u, nsteps, dt, h, d1, d2, sigma, iz, coef_left, coef_right,
            left_kind, left_val, right_kind, right_val):
    n = u.shape[0]
    u1 = np.empty(n)
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    r1, r2 = d1 / (h * h), d2 / (h * h)
    coef_left = [float(a) for a in coef_left]
    coef_right = [float(a) for a in coef_right]
    inner = slice(1, n - 1)
    for _ in range(nsteps):
        _rhs(u, k1, iz, r1, r2, coef_left, coef_right)
        np.multiply(k1, dt, out=u1)
        u1 += u
        _fix_nodes(u1, iz, sigma, left_kind, left_val, right_kind, right_val)
        _rhs(u1, k2, iz, r1, r2, coef_left, coef_right)
        k2 += k1
        k2 *= 0.5 * dt
        u[inner] += k2[inner]
        _fix_nodes(u, iz, sigma, left_kind, left_val, right_kind, right_val)


def rk4_wave(phi, psi, hs, nsteps, every, c, d, coef):
    coef = [float(a) for a in coef]

    def rhs(p, q):
        f = 0.0
        for a in reversed(coef):
            f = f * p + a
        return -(c * q + f) / d

    out = np.empty(nsteps // every + 1)
    out[0] = phi
    i = 1
    for k in range(1, nsteps + 1):
        p1 = psi
        q1 = rhs(phi, psi)
        p2 = psi + 0.5 * hs * q1
        q2 = rhs(phi + 0.5 * hs * p1, p2)
        p3 = psi + 0.5 * hs * q2
        q3 = rhs(phi + 0.5 * hs * p2, p3)
        p4 = psi + hs * q3
        q4 = rhs(phi + hs * p3, p4)
        phi = phi + hs / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        psi = psi + hs / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)
        if k % every == 0:
            out[i] = phi
            i += 1
    return out, psi

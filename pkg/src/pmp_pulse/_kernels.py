"""Compiled inner loops: RK4 shooting for the detuning ODE and 2x2 step propagation."""

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def _accel(x, c4, c3, c2, c1):
    return -(4.0 * c4 * x * x * x + 3.0 * c3 * x * x + 2.0 * c2 * x + c1)


@nb.njit(cache=True, nogil=True)
def _rk4_step(x, v, h, c4, c3, c2, c1):
    k1x = v
    k1v = _accel(x, c4, c3, c2, c1)
    k2x = v + 0.5 * h * k1v
    k2v = _accel(x + 0.5 * h * k1x, c4, c3, c2, c1)
    k3x = v + 0.5 * h * k2v
    k3v = _accel(x + 0.5 * h * k2x, c4, c3, c2, c1)
    k4x = v + h * k3v
    k4v = _accel(x + h * k3x, c4, c3, c2, c1)
    xn = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return xn, vn


@nb.njit(cache=True, nogil=True)
def shoot_crossing(c4, c3, c2, c1, v0, dt, crossings, t_max, x_tol):
    """Time of the `crossings`-th zero of x(t) for x'' = -V'(x), x(0)=0, x'(0)=v0.

    Returns -1.0 when no such zero occurs before t_max.
    """
    x = 0.0
    v = v0
    t = 0.0
    count = 0
    while t < t_max:
        xn, vn = _rk4_step(x, v, dt, c4, c3, c2, c1)
        if (x > 0.0 and xn <= 0.0) or (x < 0.0 and xn >= 0.0):
            count += 1
            if count == crossings:
                lo = 0.0
                hi = dt
                for _ in range(200):
                    h = 0.5 * (lo + hi)
                    xh, _vh = _rk4_step(x, v, h, c4, c3, c2, c1)
                    if abs(xh) <= x_tol:
                        return t + h
                    if (xh > 0.0) == (x > 0.0):
                        lo = h
                    else:
                        hi = h
                    if hi - lo <= 1e-16:
                        break
                return t + 0.5 * (lo + hi)
        x = xn
        v = vn
        t += dt
    return -1.0


@nb.njit(cache=True, nogil=True)
def rk4_uniform(c4, c3, c2, c1, v0, h, n):
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    x = 0.0
    v = v0
    xs[0] = x
    vs[0] = v
    for i in range(n):
        x, v = _rk4_step(x, v, h, c4, c3, c2, c1)
        xs[i + 1] = x
        vs[i + 1] = v
    return xs, vs


@nb.njit(cache=True, nogil=True)
def tls_final(phi, dt, sqrtk, a0, a1):
    c = np.cos(0.5 * sqrtk * dt)
    s = np.sin(0.5 * sqrtk * dt)
    for j in range(phi.shape[0]):
        e = np.exp(1j * phi[j])
        b0 = c * a0 - 1j * s * e * a1
        b1 = -1j * s * np.conj(e) * a0 + c * a1
        a0 = b0
        a1 = b1
    return a0, a1


@nb.njit(cache=True, nogil=True)
def tls_trajectory(phi, dt, sqrtk, a0, a1):
    n = phi.shape[0]
    out = np.empty((n + 1, 2), dtype=np.complex128)
    out[0, 0] = a0
    out[0, 1] = a1
    c = np.cos(0.5 * sqrtk * dt)
    s = np.sin(0.5 * sqrtk * dt)
    for j in range(n):
        e = np.exp(1j * phi[j])
        b0 = c * a0 - 1j * s * e * a1
        b1 = -1j * s * np.conj(e) * a0 + c * a1
        a0 = b0
        a1 = b1
        out[j + 1, 0] = a0
        out[j + 1, 1] = a1
    return out

"""numba-compiled propagation kernels.

All kernels work on a packed float64 parameter row (see ``kernels.pack``)
and use a fourth-order Magnus step whose exponent lives in su(2), so every
step is an exact SU(2) rotation and the norm is preserved to rounding.
"""

import math

import numpy as np
from numba import njit, prange

# packed parameter row layout
OMEGA0, TAU, ALPHA, DELTA, PHI, SCALE, T0, DT = range(8)

_G1 = 0.5 - math.sqrt(3.0) / 6.0
_G2 = 0.5 + math.sqrt(3.0) / 6.0
_C4 = math.sqrt(3.0) / 24.0


@njit(cache=True)
def field_vector(t, p, frame):
    """Pauli components (hx, hy, hz) of 2H at time t, and the coupling-only
    components of dH/d(scale)."""
    tau = p[TAU]
    omega = p[OMEGA0] * math.exp(-(t * t) / (tau * tau))
    if frame == 0:
        detuning = p[DELTA] - 2.0 * p[ALPHA] * t
        ang = p[PHI]
        hz = -detuning
    else:
        ang = p[PHI] - (p[DELTA] * t - p[ALPHA] * t * t)
        hz = 0.0
    cx = omega * math.cos(ang)
    cy = -omega * math.sin(ang)
    s = p[SCALE]
    return s * cx, s * cy, hz, cx, cy


@njit(cache=True)
def step_exponent(tn, p, frame):
    dt = p[DT]
    ax, ay, az, _, _ = field_vector(tn + _G1 * dt, p, frame)
    bx, by, bz, _, _ = field_vector(tn + _G2 * dt, p, frame)
    k = _C4 * dt * dt
    # u = dt/4 (h1 + h2) + sqrt(3) dt^2 / 24 (h2 x h1)
    ux = 0.25 * dt * (ax + bx) + k * (by * az - bz * ay)
    uy = 0.25 * dt * (ay + by) + k * (bz * ax - bx * az)
    uz = 0.25 * dt * (az + bz) + k * (bx * ay - by * ax)
    return ux, uy, uz


@njit(cache=True)
def su2(ux, uy, uz):
    """exp(-i u.sigma) as four complex entries."""
    n = math.sqrt(ux * ux + uy * uy + uz * uz)
    c = math.cos(n)
    if n > 0.0:
        s = math.sin(n) / n
    else:
        s = 1.0
    a = complex(c, -s * uz)
    b = complex(-s * uy, -s * ux)
    d = complex(s * uy, -s * ux)
    e = complex(c, s * uz)
    return a, b, d, e


@njit(cache=True)
def propagate_final(p, nsteps, frame):
    c0 = 1.0 + 0.0j
    c1 = 0.0 + 0.0j
    t0 = p[T0]
    dt = p[DT]
    for n in range(nsteps):
        ux, uy, uz = step_exponent(t0 + n * dt, p, frame)
        a, b, d, e = su2(ux, uy, uz)
        c0, c1 = a * c0 + b * c1, d * c0 + e * c1
    return c0, c1


@njit(cache=True)
def _half_step(tn, h, p, frame, u00, u01, u10, u11):
    # midpoint exponential from tn over h applied to U
    hx, hy, hz, _, _ = field_vector(tn + 0.5 * h, p, frame)
    a, b, d, e = su2(0.5 * h * hx, 0.5 * h * hy, 0.5 * h * hz)
    return (a * u00 + b * u10, a * u01 + b * u11,
            d * u00 + e * u10, d * u01 + e * u11)


@njit(cache=True)
def _sandwich(u00, u01, u10, u11, cx, cy):
    """Column 0 of U^dag Hc U with Hc = (cx sx + cy sy)/2."""
    h01 = 0.5 * complex(cx, -cy)
    h10 = 0.5 * complex(cx, cy)
    # Hc U column 0
    w0 = h01 * u10
    w1 = h10 * u00
    v00 = u00.conjugate() * w0 + u10.conjugate() * w1
    v10 = u01.conjugate() * w0 + u11.conjugate() * w1
    return v00, v10


@njit(cache=True)
def perturbative(p, nsteps, frame):
    """Final state plus column 0 of the integral of U^dag (dH/dscale) U."""
    t0 = p[T0]
    dt = p[DT]
    u00 = 1.0 + 0.0j
    u01 = 0.0 + 0.0j
    u10 = 0.0 + 0.0j
    u11 = 1.0 + 0.0j
    m0 = 0.0 + 0.0j
    m1 = 0.0 + 0.0j
    for n in range(nsteps):
        tn = t0 + n * dt
        for g in (_G1, _G2):
            h = g * dt
            w00, w01, w10, w11 = _half_step(tn, h, p, frame, u00, u01, u10, u11)
            _, _, _, cx, cy = field_vector(tn + h, p, frame)
            v0, v1 = _sandwich(w00, w01, w10, w11, cx, cy)
            m0 += 0.5 * dt * v0
            m1 += 0.5 * dt * v1
        ux, uy, uz = step_exponent(tn, p, frame)
        a, b, d, e = su2(ux, uy, uz)
        u00, u01, u10, u11 = (a * u00 + b * u10, a * u01 + b * u11,
                              d * u00 + e * u10, d * u01 + e * u11)
    return u00, u10, m0, m1


@njit(cache=True)
def propagate_record(p, nsteps, frame):
    """Propagator after every step; row 0 is the identity."""
    out = np.empty((nsteps + 1, 2, 2), dtype=np.complex128)
    out[0, 0, 0] = 1.0
    out[0, 0, 1] = 0.0
    out[0, 1, 0] = 0.0
    out[0, 1, 1] = 1.0
    t0 = p[T0]
    dt = p[DT]
    for n in range(nsteps):
        ux, uy, uz = step_exponent(t0 + n * dt, p, frame)
        a, b, d, e = su2(ux, uy, uz)
        for j in range(2):
            x0 = out[n, 0, j]
            x1 = out[n, 1, j]
            out[n + 1, 0, j] = a * x0 + b * x1
            out[n + 1, 1, j] = d * x0 + e * x1
    return out


@njit(cache=True, parallel=True)
def batch_final(params, nsteps, frame):
    k = params.shape[0]
    out = np.empty((k, 2), dtype=np.complex128)
    for i in prange(k):
        c0, c1 = propagate_final(params[i], nsteps[i], frame)
        out[i, 0] = c0
        out[i, 1] = c1
    return out


@njit(cache=True, parallel=True)
def batch_perturbative(params, nsteps, frame):
    k = params.shape[0]
    out = np.empty((k, 4), dtype=np.complex128)
    for i in prange(k):
        c0, c1, m0, m1 = perturbative(params[i], nsteps[i], frame)
        out[i, 0] = c0
        out[i, 1] = c1
        out[i, 2] = m0
        out[i, 3] = m1
    return out

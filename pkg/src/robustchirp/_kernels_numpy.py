"""Vectorized pure-numpy propagation kernels.

Same numerics as ``_kernels_numba``: all step exponents are built at once,
then composed by a pairwise tree (final state) or a log-depth prefix scan
(propagator history).
"""

import math

import numpy as np

OMEGA0, TAU, ALPHA, DELTA, PHI, SCALE, T0, DT = range(8)

_G1 = 0.5 - math.sqrt(3.0) / 6.0
_G2 = 0.5 + math.sqrt(3.0) / 6.0
_C4 = math.sqrt(3.0) / 24.0


def field_vector(t, p, frame):
    tau = p[TAU]
    omega = p[OMEGA0] * np.exp(-(t * t) / (tau * tau))
    if frame == 0:
        ang = np.full_like(t, p[PHI])
        hz = -(p[DELTA] - 2.0 * p[ALPHA] * t)
    else:
        ang = p[PHI] - (p[DELTA] * t - p[ALPHA] * t * t)
        hz = np.zeros_like(t)
    cx = omega * np.cos(ang)
    cy = -omega * np.sin(ang)
    s = p[SCALE]
    return s * cx, s * cy, hz, cx, cy


def su2(ux, uy, uz):
    n = np.sqrt(ux * ux + uy * uy + uz * uz)
    c = np.cos(n)
    safe = np.where(n > 0.0, n, 1.0)
    s = np.where(n > 0.0, np.sin(n) / safe, 1.0)
    out = np.empty(n.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c - 1j * s * uz
    out[..., 0, 1] = -s * uy - 1j * s * ux
    out[..., 1, 0] = s * uy - 1j * s * ux
    out[..., 1, 1] = c + 1j * s * uz
    return out


def step_unitaries(p, nsteps, frame):
    dt = p[DT]
    tn = p[T0] + dt * np.arange(nsteps)
    ax, ay, az, _, _ = field_vector(tn + _G1 * dt, p, frame)
    bx, by, bz, _, _ = field_vector(tn + _G2 * dt, p, frame)
    k = _C4 * dt * dt
    ux = 0.25 * dt * (ax + bx) + k * (by * az - bz * ay)
    uy = 0.25 * dt * (ay + by) + k * (bz * ax - bx * az)
    uz = 0.25 * dt * (az + bz) + k * (bx * ay - by * ax)
    return su2(ux, uy, uz)


def _tree_product(mats):
    # returns mats[-1] @ ... @ mats[0]
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=mats.dtype)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _prefix_scan(mats):
    out = mats.copy()
    off = 1
    while off < out.shape[0]:
        out[off:] = out[off:] @ out[:-off]
        off *= 2
    return out


def propagate_final(p, nsteps, frame):
    u = _tree_product(step_unitaries(p, nsteps, frame))
    return u[0, 0], u[1, 0]


def propagate_record(p, nsteps, frame):
    out = np.empty((nsteps + 1, 2, 2), dtype=np.complex128)
    out[0] = np.eye(2)
    out[1:] = _prefix_scan(step_unitaries(p, nsteps, frame))
    return out


def perturbative(p, nsteps, frame):
    hist = propagate_record(p, nsteps, frame)
    start = hist[:-1]
    dt = p[DT]
    tn = p[T0] + dt * np.arange(nsteps)
    m = np.zeros(2, dtype=np.complex128)
    for g in (_G1, _G2):
        h = g * dt
        hx, hy, hz, _, _ = field_vector(tn + 0.5 * h, p, frame)
        w = su2(0.5 * h * hx, 0.5 * h * hy, 0.5 * h * hz) @ start
        _, _, _, cx, cy = field_vector(tn + h, p, frame)
        hc = np.zeros((nsteps, 2, 2), dtype=np.complex128)
        hc[:, 0, 1] = 0.5 * (cx - 1j * cy)
        hc[:, 1, 0] = 0.5 * (cx + 1j * cy)
        v = np.conj(np.swapaxes(w, 1, 2)) @ hc @ w[:, :, :1]
        m += 0.5 * dt * v[:, :, 0].sum(axis=0)
    u = hist[-1]
    return u[0, 0], u[1, 0], m[0], m[1]


def batch_final(params, nsteps, frame):
    out = np.empty((params.shape[0], 2), dtype=np.complex128)
    for i in range(params.shape[0]):
        out[i] = propagate_final(params[i], int(nsteps[i]), frame)
    return out


def batch_perturbative(params, nsteps, frame):
    out = np.empty((params.shape[0], 4), dtype=np.complex128)
    for i in range(params.shape[0]):
        out[i] = perturbative(params[i], int(nsteps[i]), frame)
    return out

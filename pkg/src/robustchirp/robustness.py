"""Robustness of the final state against Rabi-frequency fluctuations.

A fluctuation ``gamma`` rescales the Rabi frequency to ``(1 + gamma) W(t)``.
The fidelity ``F(gamma) = |<psi(0)|psi(gamma)>|`` peaks at 1 for
``gamma = 0``; its negative curvature ``g = -F''(0)`` is computed two ways:

* ``curvature_fd``: central second difference, Richardson-extrapolated;
* ``curvature_perturbative``: ``g = |<1| int U0^dag (dH/dgamma) U0 dt |0>|^2``,
  the second-order expansion of the overlap, accumulated alongside the
  propagation on the same step grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .dynamics import (DEFAULT_SETTINGS, PropagationSettings, final_states, pack,
                       plan_steps)
from .pulse import PulseSpec, to_time_domain

DEFAULT_H = 0.02
DEFAULT_THRESHOLD = 0.99


class CurvatureWarning(UserWarning):
    """Richardson pair disagreed by more than the flag level."""


class WidthExceedsGridError(ValueError):
    """Fidelity never drops below the threshold inside the sampled range."""


@dataclass(frozen=True, eq=False)
class FidelityCurve:
    gammas: np.ndarray
    fidelities: np.ndarray
    spec: PulseSpec

    def to_text(self, path) -> None:
        np.savetxt(path, np.column_stack([self.gammas, self.fidelities]),
                   delimiter="\t", fmt="%.12e", header="gamma\tF", comments="")


@dataclass(frozen=True)
class RobustnessReport:
    g_fd: float
    g_pert: float
    robust_width: float | None
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def _overlaps(spec: PulseSpec, gammas, settings: PropagationSettings) -> np.ndarray:
    gammas = np.asarray(gammas, dtype=float)
    if np.any(gammas <= -1.0):
        raise ValueError("gamma must be > -1")
    amps = final_states([spec] * (gammas.size + 1), settings,
                        np.concatenate([[0.0], gammas]))
    ref = np.conj(amps[0])
    return np.minimum(np.abs(amps[1:] @ ref), 1.0)


def fidelity(spec: PulseSpec, gamma: float,
             settings: PropagationSettings = DEFAULT_SETTINGS) -> float:
    if gamma == 0.0:
        return 1.0
    return float(_overlaps(spec, [gamma], settings)[0])


def fidelity_curve(spec: PulseSpec, gammas,
                   settings: PropagationSettings = DEFAULT_SETTINGS) -> FidelityCurve:
    gammas = np.asarray(gammas, dtype=float)
    fids = _overlaps(spec, gammas, settings)
    fids[gammas == 0.0] = 1.0
    return FidelityCurve(gammas=gammas, fidelities=fids, spec=spec)


def curvature_fd_pair(spec: PulseSpec, h: float = DEFAULT_H,
                      settings: PropagationSettings = DEFAULT_SETTINGS) -> tuple[float, float]:
    """Second differences at steps ``h`` and ``h/2``."""
    if not 1e-3 <= h <= 0.1:
        raise ValueError(f"h must lie in [1e-3, 0.1], got {h!r}")
    f = _overlaps(spec, [h, -h, 0.5 * h, -0.5 * h], settings)
    g_h = (2.0 - f[0] - f[1]) / h**2
    g_half = (2.0 - f[2] - f[3]) / (0.25 * h * h)
    return g_h, g_half


def curvature_fd(spec: PulseSpec, h: float = DEFAULT_H,
                 settings: PropagationSettings = DEFAULT_SETTINGS,
                 flag_level: float = 1e-3) -> float:
    """Finite-difference curvature ``-F''(0)`` with Richardson extrapolation.

    Warns with :class:`CurvatureWarning` when the ``h`` and ``h/2``
    estimates differ by more than ``flag_level``.
    """
    g_h, g_half = curvature_fd_pair(spec, h, settings)
    if abs(g_h - g_half) > flag_level:
        warnings.warn(f"finite-difference curvature noisy: g(h)={g_h:.6g}, "
                      f"g(h/2)={g_half:.6g}", CurvatureWarning, stacklevel=2)
    return (4.0 * g_half - g_h) / 3.0


def perturbative_amplitude(spec: PulseSpec,
                           settings: PropagationSettings = DEFAULT_SETTINGS) -> complex:
    """``<1| int U0^dag (dH/dgamma) U0 dt |0>`` (rad)."""
    pulse = to_time_domain(spec)
    plan = plan_steps(spec, settings, pulse)
    _, _, _, m1 = kernels.perturbative(pack(spec, plan, 0.0, pulse), plan.nsteps,
                                       settings.frame.code)
    return complex(m1)


def curvature_perturbative(spec: PulseSpec,
                           settings: PropagationSettings = DEFAULT_SETTINGS) -> float:
    return abs(perturbative_amplitude(spec, settings)) ** 2


def curvature_perturbative_many(specs, settings: PropagationSettings = DEFAULT_SETTINGS):
    """Perturbative curvature and ``P_e`` for many pulses at once."""
    specs = list(specs)
    if not specs:
        return np.empty(0), np.empty(0)
    params = np.empty((len(specs), kernels.N_PARAMS))
    steps = np.empty(len(specs), dtype=np.int64)
    for i, spec in enumerate(specs):
        pulse = to_time_domain(spec)
        plan = plan_steps(spec, settings, pulse)
        params[i] = pack(spec, plan, 0.0, pulse)
        steps[i] = plan.nsteps
    out = np.asarray(kernels.batch_perturbative(params, steps, settings.frame.code))
    return np.abs(out[:, 3]) ** 2, np.abs(out[:, 1]) ** 2


def rabi_reference(target_pe: float) -> tuple[float, float]:
    """Resonant unchirped pulse reaching ``target_pe``: ``(area, curvature)``."""
    if not 0.0 < target_pe <= 1.0:
        raise ValueError(f"target_pe must lie in (0, 1], got {target_pe!r}")
    theta = 2.0 * math.asin(math.sqrt(target_pe))
    return theta, (0.5 * theta) ** 2


def _crossing(g0, f0, g1, f1, threshold):
    return g0 + (threshold - f0) * (g1 - g0) / (f1 - f0)


def robust_width(curve: FidelityCurve, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Width of the contiguous ``gamma`` interval around 0 with ``F >= threshold``.

    Each side is located independently and interpolated linearly.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    g = np.asarray(curve.gammas, dtype=float)
    f = np.asarray(curve.fidelities, dtype=float)
    order = np.argsort(g)
    g, f = g[order], f[order]
    i0 = int(np.argmin(np.abs(g)))
    if g[i0] != 0.0 and not (g[0] < 0.0 < g[-1]):
        raise ValueError("gamma grid must straddle 0")

    hi = None
    for i in range(i0, g.size - 1):
        if f[i + 1] < threshold <= f[i]:
            hi = _crossing(g[i], f[i], g[i + 1], f[i + 1], threshold)
            break
    lo = None
    for i in range(i0, 0, -1):
        if f[i - 1] < threshold <= f[i]:
            lo = _crossing(g[i], f[i], g[i - 1], f[i - 1], threshold)
            break
    if hi is None or lo is None:
        raise WidthExceedsGridError(
            f"width exceeds grid: F >= {threshold} across "
            f"[{g[0]:.3g}, {g[-1]:.3g}] on the {'upper' if hi is None else 'lower'} side")
    return hi - lo


def robustness_report(spec: PulseSpec, gammas=None, threshold: float = DEFAULT_THRESHOLD,
                      h: float = DEFAULT_H,
                      settings: PropagationSettings = DEFAULT_SETTINGS) -> RobustnessReport:
    if gammas is None:
        gammas = np.linspace(-0.5, 0.5, 201)
    try:
        width = robust_width(fidelity_curve(spec, gammas, settings), threshold)
    except WidthExceedsGridError:
        width = None
    return RobustnessReport(g_fd=curvature_fd(spec, h, settings),
                            g_pert=curvature_perturbative(spec, settings),
                            robust_width=width, threshold=threshold)

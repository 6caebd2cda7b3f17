"""Bloch-sphere endpoint curves parameterized by pulse area.

For fixed chirp and detuning, sweeping the pulse area traces the final
Bloch vector along a curve.  Below the robust chirp the curve carries a
loop, above it the loop is gone, and in between it degenerates into a
cusp where the endpoint speed vanishes.  Since the area enters only as a
Rabi-frequency scale, that speed equals ``2 sqrt(g) / theta`` per radian,
so a cusp and a zero of the robustness curvature coincide.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import (DEFAULT_SETTINGS, PropagationSettings, bloch_array,
                       final_states)
from .pulse import PulseSpec

CUSP_SPEED_TOL = 1e-2
REFINE_LEVELS = 3
REFINE_FACTOR = 4


class Topology(str, enum.Enum):
    LOOPED = "looped"
    CUSP = "cusp"
    UNLOOPED = "unlooped"


@dataclass(frozen=True, eq=False)
class ThetaTrajectory:
    """Final Bloch vectors for increasing pulse areas at fixed shape."""

    thetas: np.ndarray
    points: np.ndarray
    c2p: float
    deltap: float
    cep: float = 0.0
    settings: PropagationSettings = field(default=DEFAULT_SETTINGS, repr=False)

    def __post_init__(self) -> None:
        if self.thetas.ndim != 1 or self.points.shape != (self.thetas.size, 3):
            raise ValueError("thetas must be 1-D and points (n, 3)")
        if np.any(np.diff(self.thetas) <= 0.0):
            raise ValueError("thetas must be strictly increasing")
        self.thetas.setflags(write=False)
        self.points.setflags(write=False)

    def to_text(self, path) -> None:
        speed = endpoint_speed(self)
        table = np.column_stack([self.thetas / math.pi, self.points, speed])
        np.savetxt(path, table, delimiter="\t", fmt="%.12e",
                   header="theta_over_pi\tx\ty\tz\tspeed", comments="")


@dataclass(frozen=True)
class CuspReport:
    theta_star: float
    min_speed: float
    classification: Topology
    looped: bool
    ambiguous: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification"] = self.classification.value
        d["theta_star_over_pi"] = self.theta_star / math.pi
        return d


def bloch_points(thetas, c2p: float, deltap: float, cep: float = 0.0,
                 settings: PropagationSettings = DEFAULT_SETTINGS) -> np.ndarray:
    specs = [PulseSpec.from_dimensionless(float(t), c2p, deltap, cep=cep) for t in thetas]
    return bloch_array(final_states(specs, settings))


def theta_trajectory(c2p: float, deltap: float, theta_range=(0.0, 3.0 * math.pi),
                     n: int = 257, cep: float = 0.0,
                     settings: PropagationSettings = DEFAULT_SETTINGS) -> ThetaTrajectory:
    lo, hi = theta_range
    if n < 64:
        raise ValueError(f"n must be >= 64, got {n}")
    if not 0.0 <= lo < hi <= 6.0 * math.pi + 1e-12:
        raise ValueError("theta_range must lie within [0, 6 pi] and be increasing")
    thetas = np.linspace(lo, hi, n)
    try:
        points = bloch_points(thetas, c2p, deltap, cep, settings)
    except Exception as exc:  # pragma: no cover - kernels do not raise on valid specs
        raise RuntimeError(f"propagation failed on theta grid [{lo}, {hi}]") from exc
    bad = ~np.isfinite(points).all(axis=1)
    if bad.any():
        raise RuntimeError(f"non-finite final state at theta/pi = {thetas[bad][0] / math.pi!r}")
    return ThetaTrajectory(thetas, points, c2p, deltap, cep, settings)


def _speed(thetas, points):
    return np.linalg.norm(np.gradient(points, thetas / math.pi, axis=0), axis=1)


def endpoint_speed(traj: ThetaTrajectory, unit: str = "pi") -> np.ndarray:
    """``|dr/dx|`` by central differences (one-sided at the ends).

    ``x`` is ``theta / pi`` for ``unit="pi"`` and ``theta`` for ``unit="rad"``.
    """
    speed = _speed(traj.thetas, traj.points)
    if unit == "rad":
        return speed / math.pi
    if unit != "pi":
        raise ValueError("unit must be 'pi' or 'rad'")
    return speed


def refine_minimum(traj: ThetaTrajectory, levels: int = REFINE_LEVELS,
                   factor: int = REFINE_FACTOR, search=None) -> tuple[float, float]:
    """Locate the speed minimum, resampling ``factor`` times denser per level.

    Returns ``(theta_star, min_speed)`` with speed per unit ``theta / pi``.
    """
    thetas, speed = traj.thetas, endpoint_speed(traj)
    mask = np.ones(thetas.size, dtype=bool)
    mask[[0, -1]] = False
    if search is not None:
        mask &= (thetas >= search[0]) & (thetas <= search[1])
    if not mask.any():
        raise ValueError("search window contains no interior samples")
    i = int(np.flatnonzero(mask)[np.argmin(speed[mask])])
    step = thetas[1] - thetas[0]
    center, best = thetas[i], speed[i]
    for _ in range(levels):
        lo = max(center - 2.0 * step, traj.thetas[0])
        hi = min(center + 2.0 * step, traj.thetas[-1])
        step /= factor
        fine = np.arange(lo, hi + 0.5 * step, step)
        pts = bloch_points(fine, traj.c2p, traj.deltap, traj.cep, traj.settings)
        sp = _speed(fine, pts)
        j = int(np.argmin(sp[1:-1])) + 1
        center, best = fine[j], sp[j]
    return float(center), float(best)


def _segments_cross(p) -> bool:
    """True if the 2-D polyline ``p`` intersects itself (non-adjacent segments)."""
    a = p[:-1]
    d = p[1:] - a
    n = a.shape[0]
    for i in range(n - 2):
        w = a[i + 2:] - a[i]
        dj = d[i + 2:]
        den = d[i, 0] * dj[:, 1] - d[i, 1] * dj[:, 0]
        ok = np.abs(den) > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * dj[:, 1] - w[:, 1] * dj[:, 0]) / den
            t = (w[:, 0] * d[i, 1] - w[:, 1] * d[i, 0]) / den
        if np.any(ok & (s >= 0.0) & (s <= 1.0) & (t >= 0.0) & (t <= 1.0)):
            return True
    return False


def _tangent_projection(points, anchor):
    """Gnomonic projection onto the plane tangent at ``anchor``."""
    anchor = anchor / np.linalg.norm(anchor)
    helper = np.array([1.0, 0.0, 0.0]) if abs(anchor[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(anchor, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(anchor, e1)
    scale = points @ anchor
    return np.column_stack([points @ e1, points @ e2]) / scale[:, None]


def has_loop(c2p: float, deltap: float, theta_star: float, cep: float = 0.0,
             settings: PropagationSettings = DEFAULT_SETTINGS,
             half_width: float = math.pi, n: int = 801) -> bool:
    """Self-intersection test of the endpoint curve around ``theta_star``.

    The curve is followed on both sides while it stays within 80 degrees of
    the endpoint at ``theta_star`` (at most ``half_width`` in area), then
    projected onto the tangent plane there.
    """
    lo = max(theta_star - half_width, 1e-9)
    thetas = np.linspace(lo, theta_star + half_width, n)
    pts = bloch_points(thetas, c2p, deltap, cep, settings)
    anchor = bloch_points([theta_star], c2p, deltap, cep, settings)[0]
    inside = pts @ anchor > math.cos(math.radians(80.0))
    k = int(np.argmin(np.abs(thetas - theta_star)))
    a = k
    while a > 0 and inside[a - 1]:
        a -= 1
    b = k
    while b < n - 1 and inside[b + 1]:
        b += 1
    if b - a < 3:
        return False
    return _segments_cross(_tangent_projection(pts[a:b + 1], anchor))


def classify_topology(traj: ThetaTrajectory, tol: float = CUSP_SPEED_TOL,
                      search=None, ambiguity_band: float = 0.1) -> CuspReport:
    """Loop / cusp / no-loop classification at the endpoint-speed minimum.

    A cusp is declared when the refined minimum speed is below ``tol``.
    Otherwise the curve is looped if it self-intersects near the minimum.
    The result is flagged ``ambiguous`` when the speed lies within
    ``ambiguity_band`` (relative) of ``tol``, or when a sub-tolerance
    minimum still carries a loop that the refinement cannot resolve.
    """
    theta_star, vmin = refine_minimum(traj, search=search)
    looped = has_loop(traj.c2p, traj.deltap, theta_star, traj.cep, traj.settings)
    notes = []
    ambiguous = abs(vmin - tol) <= ambiguity_band * tol
    if ambiguous:
        notes.append(f"min speed {vmin:.4g} straddles tolerance {tol:g}")
    if vmin < tol:
        label = Topology.CUSP
        if looped and vmin > 0.5 * tol:
            ambiguous = True
            notes.append("sub-tolerance speed with a resolved loop")
    elif looped:
        label = Topology.LOOPED
    else:
        label = Topology.UNLOOPED
    return CuspReport(theta_star=theta_star, min_speed=vmin, classification=label,
                      looped=looped, ambiguous=ambiguous, note="; ".join(notes))

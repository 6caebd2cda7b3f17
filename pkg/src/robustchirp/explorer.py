"""Parameter-space sweeps, robust-point search and robust-line tracing."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .dynamics import DEFAULT_SETTINGS, PropagationSettings, final_states
from .fitting import FitVariable, LogisticFit, fit_logistic, logistic
from .pulse import PulseSpec
from .robustness import curvature_perturbative, curvature_perturbative_many

log = logging.getLogger(__name__)

G_TOL = 1e-2
ANCHOR_DELTAP = 0.637
DEFAULT_THETA_BOX = (math.pi, 3.0 * math.pi)
DEFAULT_C2P_BOX = (1.0, 4.0)

# logistic coefficients (A, B, C, D) of the reference robust-line fits
REFERENCE_FITS = {
    FitVariable.DELTAP: (-0.055, 1.19, 0.079, -4.20),
    FitVariable.C2P: (-0.097, 1.076, 22.5, 1.32),
    FitVariable.THETA_OVER_PI: (-0.0033, 1.019, 264.0, 3.14),
}


class EnsembleWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class GridMap2D:
    """Values on a 2-D grid, ``values[i, j]`` at ``(axis1[i], axis2[j])``.

    Nodes whose computation failed are ``nan`` and ``False`` in ``valid``.
    """

    axis1_name: str
    axis1: np.ndarray
    axis2_name: str
    axis2: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (self.axis1.size, self.axis2.size):
            raise ValueError("values shape does not match the axes")

    def argmin(self) -> tuple[int, int]:
        v = np.where(self.valid, self.values, np.inf)
        i, j = np.unravel_index(int(np.argmin(v)), v.shape)
        return int(i), int(j)

    def to_text(self, path) -> None:
        lines = [f"# {self.axis1_name} (rows) x {self.axis2_name} (columns)"]
        lines += [f"# {k} = {v}" for k, v in sorted(self.metadata.items())]
        lines.append("\t".join([f"{self.axis1_name}\\{self.axis2_name}"]
                               + [f"{x:.12e}" for x in self.axis2]))
        for x, row in zip(self.axis1, self.values):
            lines.append("\t".join([f"{x:.12e}"] + [f"{v:.12e}" for v in row]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_dict(self) -> dict:
        return {
            "axis1": {"name": self.axis1_name, "values": self.axis1.tolist()},
            "axis2": {"name": self.axis2_name, "values": self.axis2.tolist()},
            "values": [[None if not ok else float(v) for v, ok in zip(r, m)]
                       for r, m in zip(self.values, self.valid)],
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class RobustPoint:
    deltap: float
    c2p: float
    theta: float
    g: float
    pe: float
    robust: bool = True

    @property
    def theta_over_pi(self) -> float:
        return self.theta / math.pi

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theta_over_pi"] = self.theta_over_pi
        return d


@dataclass(frozen=True)
class RobustLine:
    points: tuple[RobustPoint, ...]
    complete: bool = True
    breaks: tuple[float, ...] = ()

    def column(self, name: str) -> np.ndarray:
        if name == FitVariable.THETA_OVER_PI.value:
            return np.array([p.theta_over_pi for p in self.points])
        return np.array([getattr(p, name) for p in self.points])

    def to_dict(self) -> dict:
        return {"points": [p.to_dict() for p in self.points],
                "complete": self.complete, "breaks": list(self.breaks)}


@dataclass(frozen=True)
class EnsembleModel:
    """Gaussian atom cloud inside a Gaussian beam.

    ``ratio`` is the cloud's 1/e density radius over the beam's 1/e radius
    of the reference ``profile`` (``"field"`` amplitude or ``"intensity"``).
    """

    ratio: float = 0.47
    profile: str = "field"
    radial_samples: int = 64

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio <= 2.0:
            raise ValueError(f"ratio must lie in (0, 2], got {self.ratio!r}")
        if self.radial_samples < 32:
            raise ValueError(f"radial_samples must be >= 32, got {self.radial_samples!r}")
        if self.profile not in ("field", "intensity"):
            raise ValueError("profile must be 'field' or 'intensity'")

    @property
    def field_ratio(self) -> float:
        # intensity 1/e radius is the field radius / sqrt(2)
        return self.ratio if self.profile == "field" else self.ratio / math.sqrt(2.0)

    def nodes(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Rabi-frequency scale factors and weights of the radial quadrature.

        With ``u = r^2 / w_cloud^2`` the average becomes
        ``int_0^inf e^-u P(exp(-u ratio^2)) du``, done by Gauss-Laguerre.
        """
        x, w = np.polynomial.laguerre.laggauss(n or self.radial_samples)
        return np.exp(-x * self.field_ratio**2), w


def ensemble_average(pe_of_scale, model: EnsembleModel, check: bool = True,
                     tol: float = 1e-4) -> float:
    """Spatially averaged excitation.

    ``pe_of_scale`` maps an array of peak-Rabi scale factors (1 at the beam
    centre) to excitation probabilities.  With ``check`` the quadrature is
    repeated at twice the order and an :class:`EnsembleWarning` is raised
    when the two differ by more than ``tol``.
    """
    scales, weights = model.nodes()
    value = float(np.dot(weights, pe_of_scale(scales)))
    if check:
        s2, w2 = model.nodes(2 * model.radial_samples)
        fine = float(np.dot(w2, pe_of_scale(s2)))
        if abs(fine - value) > tol:
            warnings.warn(f"ensemble quadrature not converged: {value:.6g} vs {fine:.6g}",
                          EnsembleWarning, stacklevel=2)
    return value


def _as_grid(values, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(values, dtype=float))
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D grid")
    if a.size > 1 and not (np.all(np.diff(a) > 0) or np.all(np.diff(a) < 0)):
        raise ValueError(f"{name} must be monotone")
    return a


def map_curvature(theta_grid, c2p_grid, deltap: float,
                  settings: PropagationSettings = DEFAULT_SETTINGS) -> GridMap2D:
    """Perturbative curvature on a ``(theta, c2')`` grid at fixed ``delta'``."""
    thetas = _as_grid(theta_grid, "theta_grid")
    c2ps = _as_grid(c2p_grid, "c2p_grid")
    specs = [PulseSpec.from_dimensionless(t, c, deltap) for t in thetas for c in c2ps]
    g, _ = curvature_perturbative_many(specs, settings)
    values = g.reshape(thetas.size, c2ps.size)
    valid = np.isfinite(values)
    values = np.where(valid, values, np.nan)
    return GridMap2D("theta", thetas, "c2p", c2ps, values, valid,
                     {"deltap": deltap, "quantity": "g", "method": "perturbative"})


def map_pe(theta_grid, c2_grid, delta: float, bandwidth: float,
           ensemble: EnsembleModel | None = None,
           settings: PropagationSettings = DEFAULT_SETTINGS) -> GridMap2D:
    """Excited population on a ``(theta, c2)`` grid in physical units.

    With ``ensemble`` every node is averaged over the atom-cloud profile,
    ``theta`` being the area at the beam centre.
    """
    thetas = _as_grid(theta_grid, "theta_grid")
    c2s = _as_grid(c2_grid, "c2_grid")
    if ensemble is None:
        scales, weights = np.ones(1), np.ones(1)
    else:
        scales, weights = ensemble.nodes()
    specs = [PulseSpec(theta=t * s, c2=c, delta=delta, bandwidth=bandwidth)
             for t in thetas for c in c2s for s in scales]
    amps = final_states(specs, settings)
    pe = (np.abs(amps[:, 1]) ** 2).reshape(thetas.size, c2s.size, scales.size)
    values = pe @ weights
    valid = np.isfinite(values)
    meta = {"delta_rad_s": delta, "bandwidth_rad_s": bandwidth,
            "deltap": delta / bandwidth, "quantity": "pe"}
    if ensemble is not None:
        meta.update(ensemble_ratio=ensemble.ratio, ensemble_profile=ensemble.profile,
                    radial_samples=ensemble.radial_samples)
    return GridMap2D("theta", thetas, "c2_s2", c2s, np.where(valid, values, np.nan),
                     valid, meta)


def _local_minima(values: np.ndarray) -> list[tuple[int, int]]:
    v = np.where(np.isfinite(values), values, np.inf)
    padded = np.pad(v, 1, constant_values=np.inf)
    out = []
    for i in range(v.shape[0]):
        for j in range(v.shape[1]):
            block = padded[i:i + 3, j:j + 3]
            if np.isfinite(v[i, j]) and v[i, j] <= block.min():
                out.append((i, j))
    out.sort(key=lambda ij: v[ij])
    return out


def _refine(deltap, x0, theta_box, c2p_box, settings, scale=(0.05, 0.1)):
    """Nelder-Mead on ``g`` over ``(theta/pi, c2')`` inside the box."""
    bounds = [(theta_box[0] / math.pi, theta_box[1] / math.pi), tuple(c2p_box)]

    def g(v):
        return curvature_perturbative(
            PulseSpec.from_dimensionless(v[0] * math.pi, v[1], deltap), settings)

    x0 = np.clip(np.asarray(x0, float), [b[0] for b in bounds], [b[1] for b in bounds])
    simplex = np.array([x0, x0 + [scale[0], 0.0], x0 + [0.0, scale[1]]])
    res = minimize(g, x0, method="Nelder-Mead", bounds=bounds,
                   options={"xatol": 1e-8, "fatol": 1e-15, "maxiter": 4000,
                            "initial_simplex": simplex})
    return res.x, float(res.fun)


def _point(deltap, x, settings, g_tol) -> RobustPoint:
    g, pe = curvature_perturbative_many(
        [PulseSpec.from_dimensionless(x[0] * math.pi, x[1], deltap)], settings)
    return RobustPoint(deltap=float(deltap), c2p=float(x[1]), theta=float(x[0] * math.pi),
                       g=float(g[0]), pe=float(pe[0]), robust=bool(g[0] < g_tol))


def find_robust_point(deltap: float, theta_box=DEFAULT_THETA_BOX, c2p_box=DEFAULT_C2P_BOX,
                      seed=None, n_grid: int = 21, g_tol: float = G_TOL,
                      max_candidates: int = 6,
                      settings: PropagationSettings = DEFAULT_SETTINGS) -> RobustPoint:
    """Most robust ``(theta, c2')`` at fixed ``delta'`` inside a search box.

    A coarse ``n_grid x n_grid`` curvature scan seeds Nelder-Mead refinements
    from its best local minima (and from ``seed = (theta, c2')`` if given).
    Among refined minima with ``g < g_tol`` the one with the smallest area
    is returned; if none qualifies the lowest-``g`` candidate comes back
    with ``robust=False``.
    """
    if theta_box[1] <= theta_box[0] or c2p_box[1] <= c2p_box[0]:
        raise ValueError("search box must have positive extent")
    if n_grid < 21:
        raise ValueError("coarse scan needs n_grid >= 21")
    thetas = np.linspace(*theta_box, n_grid)
    c2ps = np.linspace(*c2p_box, n_grid)
    gmap = map_curvature(thetas, c2ps, deltap, settings)
    starts = [(thetas[i] / math.pi, c2ps[j])
              for i, j in _local_minima(gmap.values)[:max_candidates]]
    if seed is not None:
        starts.insert(0, (seed[0] / math.pi, seed[1]))
    found = []
    for x0 in starts:
        x, _ = _refine(deltap, x0, theta_box, c2p_box, settings)
        found.append(_point(deltap, x, settings, g_tol))
    robust = [p for p in found if p.robust]
    if robust:
        return min(robust, key=lambda p: (round(p.theta, 6), p.g))
    best = min(found, key=lambda p: p.g)
    log.warning("no robust point below g=%g at deltap=%g; best g=%g", g_tol, deltap, best.g)
    return best


def _continue(prev: list[RobustPoint], deltap: float, g_tol: float,
              settings: PropagationSettings) -> RobustPoint:
    last = prev[-1]
    x0 = np.array([last.theta_over_pi, last.c2p])
    if len(prev) > 1:
        before = prev[-2]
        slope = (x0 - [before.theta_over_pi, before.c2p]) / (last.deltap - before.deltap)
        x0 = x0 + slope * (deltap - last.deltap)
    box_t = (max(0.05, x0[0] - 0.5) * math.pi, (x0[0] + 0.5) * math.pi)
    box_c = (x0[1] - 1.0, x0[1] + 1.0)
    x, _ = _refine(deltap, x0, box_t, box_c, settings, scale=(0.02, 0.05))
    return _point(deltap, x, settings, g_tol)


def trace_robust_line(deltap_range=(0.15, 1.1), steps: int = 20,
                      anchor: RobustPoint | None = None, g_tol: float = G_TOL,
                      settings: PropagationSettings = DEFAULT_SETTINGS) -> RobustLine:
    """Follow the first robust branch across ``deltap_range``.

    The branch is anchored at ``delta' = 0.637`` (or ``anchor``) and continued
    outwards in both directions, each step seeded by linear extrapolation
    of the previous two points.  A failed step ends that direction; the
    partial line is returned with ``complete=False``.
    """
    lo, hi = deltap_range
    if not 0.05 <= lo < hi <= 1.5:
        raise ValueError("deltap_range must lie within [0.05, 1.5]")
    if steps < 8:
        raise ValueError("steps must be >= 8")
    grid = np.linspace(lo, hi, steps)
    if anchor is None:
        a = float(np.clip(ANCHOR_DELTAP, lo, hi))
        anchor = find_robust_point(a, g_tol=g_tol, settings=settings)
        if not anchor.robust:
            return RobustLine(points=(anchor,), complete=False, breaks=(a,))
    up = [anchor]
    down = [anchor]
    breaks = []
    for d in grid[grid > anchor.deltap + 1e-12]:
        p = _continue(up, d, g_tol, settings)
        if not p.robust:
            breaks.append(float(d))
            break
        up.append(p)
    for d in grid[grid < anchor.deltap - 1e-12][::-1]:
        p = _continue(down, d, g_tol, settings)
        if not p.robust:
            breaks.append(float(d))
            break
        down.append(p)
    pts = down[::-1] + up[1:]
    return RobustLine(points=tuple(pts), complete=not breaks, breaks=tuple(breaks))


def fit_robust_line(line: RobustLine, pe_range=(0.08, 0.98)) -> dict[FitVariable, LogisticFit]:
    """Logistic fits of ``P_e`` against each control variable along the line."""
    pe = line.column("pe")
    m = (pe >= pe_range[0]) & (pe <= pe_range[1])
    return {var: fit_logistic(line.column(var.value)[m], pe[m], var)
            for var in FitVariable}


def compare_reference_fits(line: RobustLine, pe_window=(0.1, 0.95),
                           n_eval: int = 200) -> dict:
    """RMS gap between refitted and reference logistic curves.

    For each variable both curves are evaluated on ``n_eval`` points over
    the x-range where the line's ``P_e`` lies in ``pe_window``.
    """
    fits = fit_robust_line(line)
    pe = line.column("pe")
    m = (pe >= pe_window[0]) & (pe <= pe_window[1])
    out = {}
    for var, fit in fits.items():
        xs = line.column(var.value)[m]
        x = np.linspace(xs.min(), xs.max(), n_eval)
        gap = fit(x) - logistic(x, *REFERENCE_FITS[var])
        out[var.value] = {"fit": fit.to_dict(),
                          "reference": dict(zip("ABCD", REFERENCE_FITS[var])),
                          "rms": float(np.sqrt(np.mean(gap**2))),
                          "x_range": [float(x[0]), float(x[-1])]}
    return out


def equal_population_area(c2p: float, deltap: float, target_pe: float, near_theta: float,
                          half_width: float = 0.6 * math.pi, n: int = 61,
                          settings: PropagationSettings = DEFAULT_SETTINGS) -> float | None:
    """Area closest to ``near_theta`` at which ``P_e`` crosses ``target_pe``."""
    from scipy.optimize import brentq

    def pe(t):
        amps = final_states([PulseSpec.from_dimensionless(t, c2p, deltap)], settings)
        return float(abs(amps[0, 1]) ** 2) - target_pe

    thetas = np.linspace(max(near_theta - half_width, 1e-6), near_theta + half_width, n)
    specs = [PulseSpec.from_dimensionless(t, c2p, deltap) for t in thetas]
    vals = np.abs(final_states(specs, settings)[:, 1]) ** 2 - target_pe
    roots = [brentq(pe, thetas[i], thetas[i + 1], xtol=1e-12)
             for i in range(n - 1) if vals[i] * vals[i + 1] < 0.0]
    if not roots:
        return None
    return min(roots, key=lambda r: abs(r - near_theta))


def reference_anchor(center: RobustPoint, g_target: float, side: str,
                     span: float = 1.0, step: float = 0.01,
                     settings: PropagationSettings = DEFAULT_SETTINGS) -> RobustPoint:
    """Less robust companion of ``center`` at equal ``P_e``.

    Walks ``c2'`` below (``side="lower"``) or above (``side="upper"``) the
    robust point, keeping ``P_e`` equal to the robust point's value, and
    returns the node whose curvature is closest to ``g_target``.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    sign = -1.0 if side == "lower" else 1.0
    c2ps = center.c2p + sign * np.arange(1, int(round(span / step)) + 1) * step
    best = None
    for c in c2ps:
        theta = equal_population_area(c, center.deltap, center.pe, center.theta,
                                      settings=settings)
        if theta is None:
            continue
        g, pe = curvature_perturbative_many(
            [PulseSpec.from_dimensionless(theta, c, center.deltap)], settings)
        cand = RobustPoint(center.deltap, float(c), float(theta), float(g[0]), float(pe[0]),
                           robust=bool(g[0] < G_TOL))
        if best is None or abs(cand.g - g_target) < abs(best.g - g_target):
            best = cand
    if best is None:
        raise ValueError(f"no equal-population point found on the {side} side")
    return best

"""Data pipelines behind the CLI commands.

Every pipeline takes a :class:`RunConfig`, writes its files into the
output directory and returns ``(files, summary)``.  File writing is
deterministic: fixed float formatting, sorted JSON keys, no timestamps.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .dynamics import propagate, write_trajectory
from .explorer import (EnsembleModel, GridMap2D, RobustLine, RobustPoint,
                       compare_reference_fits, find_robust_point, map_curvature,
                       map_pe, reference_anchor, trace_robust_line)
from .fitting import FitVariable, fit_logistic
from .geometry import classify_topology, theta_trajectory
from .pulse import FS2, PulseSpec, bandwidth_to_fwhm
from .robustness import fidelity_curve, rabi_reference, robustness_report


class PartialFailure(RuntimeError):
    """Some outputs could not be produced; the rest were written."""

    def __init__(self, failures: list[str], files: list[str], summary: dict):
        super().__init__("; ".join(failures))
        self.failures = failures
        self.files = files
        self.summary = summary


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def provenance(spec: PulseSpec) -> dict:
    return {
        "theta": spec.theta, "theta_pi": spec.theta / math.pi,
        "c2_prime": spec.c2p, "delta_prime": spec.deltap, "cep": spec.cep,
        "c2_s2": spec.c2, "c2_fs2": spec.c2 / FS2, "delta_rad_s": spec.delta,
        "bandwidth_rad_s": spec.bandwidth,
        "bandwidth_fwhm_rad_s": bandwidth_to_fwhm(spec.bandwidth),
    }


def grid(sweep: dict, key: str, default) -> np.ndarray:
    """``sweep[key]`` as ``[values...]`` or ``{start, stop, num}``."""
    value = sweep.get(key, default)
    if isinstance(value, dict):
        try:
            out = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"sweep.{key} needs numeric start, stop, num") from None
    elif isinstance(value, (list, tuple)):
        try:
            out = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"sweep.{key} must hold numbers") from None
    else:
        out = np.atleast_1d(np.asarray(value, dtype=float))
    if out.size == 0:
        raise ConfigError(f"sweep.{key} must not be empty")
    return out


def pair(sweep: dict, key: str, default) -> tuple[float, float]:
    value = sweep.get(key, default)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"sweep.{key} must be a [low, high] pair")
    lo, hi = float(value[0]), float(value[1])
    if not hi > lo:
        raise ConfigError(f"sweep.{key} must satisfy low < high")
    return lo, hi


def ensemble_from(sweep: dict, default=None) -> EnsembleModel | None:
    block = sweep.get("ensemble", default)
    if block is None:
        return None
    try:
        return EnsembleModel(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep.ensemble: {exc}") from None


def _save_map(out: Path, name: str, gmap: GridMap2D, files: list[str]) -> None:
    gmap.to_text(out / f"{name}.tsv")
    write_json(out / f"{name}.json", gmap.to_dict())
    files += [f"{name}.tsv", f"{name}.json"]


def _save_line(out: Path, name: str, line: RobustLine, files: list[str]) -> None:
    rows = [[p.deltap, p.c2p, p.theta_over_pi, p.pe, p.g] for p in line.points]
    np.savetxt(out / f"{name}.tsv", np.array(rows).reshape(-1, 5), delimiter="\t",
               fmt="%.12e", header="delta_prime\tc2_prime\ttheta_over_pi\tpe\tg",
               comments="")
    write_json(out / f"{name}.json", line.to_dict())
    files += [f"{name}.tsv", f"{name}.json"]


def run_propagate(cfg: RunConfig, out: Path, verify: bool = False,
                  trajectory: str | None = None):
    spec = cfg.pulse_spec
    files: list[str] = []
    if trajectory:
        state, record = propagate(spec, cfg.propagation, record_history=True, verify=verify)
        write_trajectory(out / trajectory, record)
        files.append(trajectory)
    else:
        state = propagate(spec, cfg.propagation, verify=verify)
    x, y, z = state.bloch
    summary = {"pe": state.pe, "bloch": [x, y, z],
               "c0": [state.c0.real, state.c0.imag], "c1": [state.c1.real, state.c1.imag],
               "pulse": provenance(spec)}
    write_json(out / "state.json", summary)
    files.append("state.json")
    return files, summary


def run_fidelity_curve(cfg: RunConfig, out: Path, name: str = "fidelity_curve",
                       spec: PulseSpec | None = None):
    spec = spec or cfg.pulse_spec
    gammas = grid(cfg.sweep, "gamma", {"start": -0.5, "stop": 0.5, "num": 201})
    curve = fidelity_curve(spec, gammas, cfg.propagation)
    curve.to_text(out / f"{name}.tsv")
    return [f"{name}.tsv"], {"pulse": provenance(spec), "points": int(gammas.size)}


def run_curvature(cfg: RunConfig, out: Path):
    spec = cfg.pulse_spec
    threshold = float(cfg.sweep.get("threshold", 0.99))
    gammas = grid(cfg.sweep, "gamma", {"start": -0.5, "stop": 0.5, "num": 401})
    report = robustness_report(spec, gammas, threshold,
                               float(cfg.sweep.get("h", 0.02)), cfg.propagation)
    summary = dict(report.to_dict(), pulse=provenance(spec))
    write_json(out / "robustness.json", summary)
    return ["robustness.json"], summary


def run_map_g(cfg: RunConfig, out: Path, name: str = "map_g"):
    thetas = grid(cfg.sweep, "theta_pi", {"start": 0.0, "stop": 3.0, "num": 61}) * math.pi
    c2ps = grid(cfg.sweep, "c2_prime", {"start": 0.0, "stop": 4.0, "num": 41})
    deltap = cfg.pulse["delta_prime"]
    gmap = map_curvature(thetas, c2ps, deltap, cfg.propagation)
    gmap.metadata.update(bandwidth_rad_s=cfg.pulse["bandwidth_rad_s"])
    files: list[str] = []
    _save_map(out, name, gmap, files)
    i, j = gmap.argmin()
    summary = {"delta_prime": deltap, "grid_min": {"theta_pi": thetas[i] / math.pi,
                                                   "c2_prime": c2ps[j],
                                                   "g": gmap.values[i, j]},
               "invalid_nodes": int((~gmap.valid).sum())}
    if summary["invalid_nodes"]:
        raise PartialFailure([f"{summary['invalid_nodes']} map nodes failed"], files, summary)
    return files, summary


def run_map_pe(cfg: RunConfig, out: Path, name: str = "map_pe", default_ensemble=None):
    spec = cfg.pulse_spec
    thetas = grid(cfg.sweep, "theta_pi", {"start": 0.0, "stop": 3.0, "num": 31}) * math.pi
    c2s = grid(cfg.sweep, "c2_fs2", {"start": 0.0, "stop": 20000.0, "num": 21}) * FS2
    ensemble = ensemble_from(cfg.sweep, default_ensemble)
    pmap = map_pe(thetas, c2s, spec.delta, spec.bandwidth, ensemble, cfg.propagation)
    files: list[str] = []
    _save_map(out, name, pmap, files)
    summary = {"pulse": provenance(spec), "invalid_nodes": int((~pmap.valid).sum()),
               "ensemble": None if ensemble is None else ensemble.__dict__.copy()}
    if summary["invalid_nodes"]:
        raise PartialFailure([f"{summary['invalid_nodes']} map nodes failed"], files, summary)
    return files, summary


def run_bloch_traj(cfg: RunConfig, out: Path, name: str = "bloch_traj",
                   c2p: float | None = None):
    lo, hi = pair(cfg.sweep, "theta_pi_range", [0.0, 3.0])
    n = int(cfg.sweep.get("n", 257))
    c2p = cfg.pulse["c2_prime"] if c2p is None else c2p
    traj = theta_trajectory(c2p, cfg.pulse["delta_prime"], (lo * math.pi, hi * math.pi), n,
                            cfg.pulse["cep"], cfg.propagation)
    traj.to_text(out / f"{name}.tsv")
    report = classify_topology(traj)
    summary = dict(report.to_dict(), c2_prime=c2p, delta_prime=cfg.pulse["delta_prime"])
    write_json(out / f"{name}_cusp.json", summary)
    return [f"{name}.tsv", f"{name}_cusp.json"], summary


def _box(cfg: RunConfig):
    tb = pair(cfg.sweep, "theta_pi_box", [1.0, 3.0])
    cb = pair(cfg.sweep, "c2_prime_box", [1.0, 4.0])
    return (tb[0] * math.pi, tb[1] * math.pi), cb


def run_robust_find(cfg: RunConfig, out: Path):
    tb, cb = _box(cfg)
    point = find_robust_point(cfg.pulse["delta_prime"], tb, cb,
                              n_grid=int(cfg.sweep.get("n_grid", 21)),
                              settings=cfg.propagation)
    spec = PulseSpec.from_dimensionless(point.theta, point.c2p, point.deltap,
                                        cfg.pulse["bandwidth_rad_s"])
    summary = dict(point.to_dict(), provenance=provenance(spec))
    write_json(out / "robust_point.json", summary)
    return ["robust_point.json"], summary


def run_robust_line(cfg: RunConfig, out: Path, name: str = "robust_line"):
    rng = pair(cfg.sweep, "delta_prime_range", [0.15, 1.1])
    line = trace_robust_line(rng, int(cfg.sweep.get("steps", 20)), settings=cfg.propagation)
    files: list[str] = []
    _save_line(out, name, line, files)
    summary = {"points": len(line.points), "complete": line.complete,
               "breaks": list(line.breaks)}
    if not line.complete:
        raise PartialFailure([f"continuation broke at delta' = {b}" for b in line.breaks],
                             files, summary)
    return files, summary, line


def load_line(path) -> RobustLine:
    data = json.loads(Path(path).read_text())
    pts = tuple(RobustPoint(**{k: v for k, v in p.items() if k != "theta_over_pi"})
                for p in data["points"])
    return RobustLine(points=pts, complete=data.get("complete", True),
                      breaks=tuple(data.get("breaks", ())))


def run_fit(cfg: RunConfig, out: Path, line: RobustLine | None = None,
            name: str = "table1"):
    files: list[str] = []
    if line is None:
        source = cfg.sweep.get("line_file")
        if source:
            line = load_line(source)
        else:
            files, _, line = run_robust_line(cfg, out)
    comparison = compare_reference_fits(line)
    write_json(out / f"{name}.json", comparison)
    files.append(f"{name}.json")
    return files, {k: v["rms"] for k, v in comparison.items()}


def run_fit_samples(cfg: RunConfig, out: Path):
    """Plain logistic fit of ``sweep.x`` / ``sweep.pe`` samples."""
    xs = grid(cfg.sweep, "x", [])
    pes = grid(cfg.sweep, "pe", [])
    fit = fit_logistic(xs, pes, FitVariable(cfg.sweep.get("variable", "deltap")))
    write_json(out / "fit.json", fit.to_dict())
    return ["fit.json"], fit.to_dict()


FIGURES = ("fig1a", "fig1b", "fig2", "fig3b", "fig4", "table1")

_DETUNING_KEYS = ("delta_prime", "delta_rad_s", "lambda_c_nm")
_BANDWIDTH_KEYS = ("bandwidth_rad_s", "bandwidth_fwhm_rad_s")
# experimental setting for the population map, the rest sit on the anchor detuning
FIGURE_PULSES = {
    "fig3b": {"lambda_c_nm": 798.5, "bandwidth_fwhm_rad_s": 3.1e13},
}
_ANCHOR_PULSE = {"delta_prime": 0.637}


def figure_pulse(figure: str, pulse: dict) -> dict:
    """Fill the detuning and bandwidth groups the user left unset."""
    defaults = FIGURE_PULSES.get(figure, _ANCHOR_PULSE)
    out = dict(pulse)
    for group in (_DETUNING_KEYS, _BANDWIDTH_KEYS):
        if not any(k in out for k in group):
            out.update({k: v for k, v in defaults.items() if k in group})
    return out


def _anchors(cfg: RunConfig):
    b = find_robust_point(cfg.pulse["delta_prime"], settings=cfg.propagation)
    a = reference_anchor(b, float(cfg.sweep.get("g_a", 0.11)), "lower",
                         settings=cfg.propagation)
    c = reference_anchor(b, float(cfg.sweep.get("g_c", 0.05)), "upper",
                         settings=cfg.propagation)
    return a, b, c


def run_figure(cfg: RunConfig, out: Path, figure: str):
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; valid ids: {', '.join(FIGURES)}")
    files: list[str] = []
    summary: dict = {"figure": figure}
    failures: list[str] = []

    def attempt(label, fn):
        try:
            return fn()
        except PartialFailure as exc:
            files.extend(exc.files)
            failures.extend(f"{label}: {f}" for f in exc.failures)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            failures.append(f"{label}: {exc}")
        return None

    if figure == "fig1a":
        res = attempt("map", lambda: run_map_g(cfg, out, "fig1a_map_g"))
        if res:
            files += res[0]
            summary.update(res[1])
    elif figure == "fig1b":
        pts = attempt("anchors", lambda: _anchors(cfg))
        if pts:
            a, b, c = pts
            theta_rabi, g_rabi = rabi_reference(b.pe)
            rabi = PulseSpec.from_dimensionless(theta_rabi, 0.0, 0.0)
            for label, spec in (("A", _spec(a)), ("B", _spec(b)), ("C", _spec(c)),
                                ("Rabi", rabi)):
                res = attempt(label, lambda s=spec, lb=label:
                              run_fidelity_curve(cfg, out, f"fig1b_fidelity_{lb}", s))
                if res:
                    files += res[0]
            points = {"A": a.to_dict(), "B": b.to_dict(), "C": c.to_dict(),
                      "Rabi": {"theta": theta_rabi, "theta_over_pi": theta_rabi / math.pi,
                               "g": g_rabi, "pe": b.pe}}
            write_json(out / "fig1b_points.json", points)
            files.append("fig1b_points.json")
            summary["points"] = points
    elif figure == "fig2":
        pts = attempt("anchors", lambda: _anchors(cfg))
        if pts:
            reports = {}
            for label, p in zip("ABC", pts):
                res = attempt(label, lambda p=p, lb=label:
                              run_bloch_traj(cfg, out, f"fig2_traj_{lb}", p.c2p))
                if res:
                    files += res[0]
                    reports[label] = res[1]
            summary["trajectories"] = reports
    elif figure == "fig3b":
        res = attempt("map", lambda: run_map_pe(
            cfg, out, "fig3b_map_pe", {"ratio": 0.47, "radial_samples": 64}))
        if res:
            files += res[0]
            summary.update(res[1])
    elif figure == "fig4":
        res = attempt("line", lambda: run_robust_line(cfg, out, "fig4_robust_line"))
        if res:
            files += res[0]
            summary.update(res[1])
    elif figure == "table1":
        res = attempt("line", lambda: run_robust_line(cfg, out, "table1_robust_line"))
        if res:
            files += res[0]
            fit = attempt("fit", lambda: run_fit(cfg, out, res[2]))
            if fit:
                files += fit[0]
                summary["rms"] = fit[1]
    if failures:
        raise PartialFailure(failures, files, summary)
    return files, summary


def _spec(p: RobustPoint) -> PulseSpec:
    return PulseSpec.from_dimensionless(p.theta, p.c2p, p.deltap)


__all__ = ["PartialFailure", "FIGURES", "run_propagate", "run_fidelity_curve",
           "run_curvature", "run_map_g", "run_map_pe", "run_bloch_traj",
           "run_robust_find", "run_robust_line", "run_fit", "run_fit_samples",
           "run_figure", "figure_pulse"]

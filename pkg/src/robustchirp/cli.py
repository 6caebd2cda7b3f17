"""Command-line front end.

    robustchirp propagate --theta-pi 1.78 --c2-prime 2.52 --delta-prime 0.637
    robustchirp figure fig1b --out results/
    robustchirp map-g --config sweep.yaml --workers 4

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, pipelines
from ._backend import BACKEND
from .config import ConfigError, RunConfig, load_file, parse_config
from .dynamics import ConvergenceError
from .fitting import FitError

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_PARTIAL = 0, 2, 3, 4

COMMANDS = ("propagate", "fidelity-curve", "curvature", "map-g", "map-pe", "bloch-traj",
            "robust-find", "robust-line", "fit", "figure")

_PULSE_FLAGS = {
    "theta_pi": ("theta_pi", ()),
    "c2_prime": ("c2_prime", ("c2_fs2",)),
    "c2_fs2": ("c2_fs2", ("c2_prime",)),
    "delta_prime": ("delta_prime", ("delta_rad_s", "lambda_c_nm")),
    "delta_rad_s": ("delta_rad_s", ("delta_prime", "lambda_c_nm")),
    "cep": ("cep", ()),
    "bandwidth": ("bandwidth_rad_s", ("bandwidth_fwhm_rad_s",)),
    "bandwidth_fwhm": ("bandwidth_fwhm_rad_s", ("bandwidth_rad_s",)),
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON or YAML run configuration")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--workers", type=int, help="parallel propagation threads")
    g = p.add_argument_group("pulse")
    g.add_argument("--theta-pi", type=float, help="pulse area in units of pi")
    g.add_argument("--c2-prime", type=float, help="dimensionless chirp c2*bw^2")
    g.add_argument("--c2-fs2", type=float, help="chirp in fs^2")
    g.add_argument("--delta-prime", type=float, help="dimensionless detuning delta/bw")
    g.add_argument("--delta-rad-s", type=float, help="detuning in rad/s")
    g.add_argument("--cep", type=float, help="carrier-envelope phase (rad)")
    g.add_argument("--bandwidth", type=float, help="1/e spectral half-width (rad/s)")
    g.add_argument("--bandwidth-fwhm", type=float, help="spectral field FWHM (rad/s)")
    g = p.add_argument_group("propagation")
    g.add_argument("--span", type=float, help="integration window in units of tau")
    g.add_argument("--steps-per-cycle", type=float, help="steps per Rabi cycle")
    g.add_argument("--frame", choices=["diagonal-detuning", "phase-on-coupling"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="robustchirp", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", parents=[common], help="final state of one pulse")
    p.add_argument("--trajectory", help="also write the state history to this file")
    p.add_argument("--verify", action="store_true", help="step-halving convergence check")

    p = sub.add_parser("fidelity-curve", parents=[common], help="F(gamma) samples")
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--gamma-num", type=int)

    p = sub.add_parser("curvature", parents=[common], help="robustness report")
    p.add_argument("--threshold", type=float)

    sub.add_parser("map-g", parents=[common], help="curvature map over (theta, c2')")
    p = sub.add_parser("map-pe", parents=[common], help="population map over (theta, c2)")
    p.add_argument("--ensemble-ratio", type=float, help="cloud/beam diameter ratio")
    sub.add_parser("bloch-traj", parents=[common], help="theta-parameterized Bloch curve")
    sub.add_parser("robust-find", parents=[common], help="robust point at fixed delta'")
    sub.add_parser("robust-line", parents=[common], help="robust line over delta'")
    p = sub.add_parser("fit", parents=[common], help="logistic fits of the robust line")
    p.add_argument("--line-file", help="robust_line.json from a previous run")

    p = sub.add_parser("figure", parents=[common], help="data for one figure or table")
    p.add_argument("figure_id", help=f"one of {', '.join(pipelines.FIGURES)}")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = load_file(args.config) if args.config else {}
    data = dict(data)
    data["command"] = args.command
    pulse = dict(data.get("pulse") or {})
    for flag, (key, conflicts) in _PULSE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            for other in conflicts:
                pulse.pop(other, None)
            pulse[key] = value
    if args.command == "figure" and args.figure_id in pipelines.FIGURES:
        pulse = pipelines.figure_pulse(args.figure_id, pulse)
    data["pulse"] = pulse
    prop = dict(data.get("propagation") or {})
    if args.span is not None:
        prop["time_span_factor"] = args.span
    if args.steps_per_cycle is not None:
        prop["steps_per_rabi_cycle"] = args.steps_per_cycle
    if args.frame is not None:
        prop["frame"] = args.frame
    data["propagation"] = prop
    sweep = dict(data.get("sweep") or {})
    if getattr(args, "gamma_max", None) is not None or getattr(args, "gamma_num", None):
        gmax = args.gamma_max if args.gamma_max is not None else 0.5
        sweep["gamma"] = {"start": -gmax, "stop": gmax, "num": args.gamma_num or 201}
    if getattr(args, "threshold", None) is not None:
        sweep["threshold"] = args.threshold
    if getattr(args, "ensemble_ratio", None) is not None:
        sweep["ensemble"] = {"ratio": args.ensemble_ratio}
    if getattr(args, "line_file", None):
        sweep["line_file"] = args.line_file
    data["sweep"] = sweep
    output = dict(data.get("output") or {})
    if args.out is not None:
        output["directory"] = str(args.out)
    output.setdefault("directory", ".")
    data["output"] = output
    if args.workers is not None:
        data["workers"] = args.workers
    return parse_config(data)


def _set_workers(n: int) -> None:
    if BACKEND != "numba":
        return
    import numba

    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def write_manifest(cfg: RunConfig, out: Path, files, summary, status: str,
                   failures=(), figure: str | None = None) -> None:
    manifest = {
        "command": cfg.command,
        "figure": figure,
        "config": cfg.to_dict(),
        "version": __version__,
        "backend": BACKEND,
        "files": sorted(files),
        "status": status,
        "failures": list(failures),
        "summary": summary,
    }
    name = "manifest.json" if status == "ok" else "failure_manifest.json"
    pipelines.write_json(out / name, manifest)


def _dispatch(cfg: RunConfig, args, out: Path):
    cmd = cfg.command
    if cmd == "propagate":
        return pipelines.run_propagate(cfg, out, verify=args.verify, trajectory=args.trajectory)
    if cmd == "fidelity-curve":
        return pipelines.run_fidelity_curve(cfg, out)
    if cmd == "curvature":
        return pipelines.run_curvature(cfg, out)
    if cmd == "map-g":
        return pipelines.run_map_g(cfg, out)
    if cmd == "map-pe":
        return pipelines.run_map_pe(cfg, out)
    if cmd == "bloch-traj":
        return pipelines.run_bloch_traj(cfg, out)
    if cmd == "robust-find":
        return pipelines.run_robust_find(cfg, out)
    if cmd == "robust-line":
        files, summary, _ = pipelines.run_robust_line(cfg, out)
        return files, summary
    if cmd == "fit":
        if "x" in cfg.sweep:
            return pipelines.run_fit_samples(cfg, out)
        return pipelines.run_fit(cfg, out)
    if cmd == "figure":
        return pipelines.run_figure(cfg, out, args.figure_id)
    raise ConfigError(f"unknown command {cmd!r}")  # pragma: no cover


def _clean(v: float) -> float:
    # keep "-0.000000" out of the printout
    return 0.0 if abs(v) < 5e-7 else v


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if cfg.command == "figure" and args.figure_id not in pipelines.FIGURES:
            raise ConfigError(f"unknown figure {args.figure_id!r}; valid ids: "
                              f"{', '.join(pipelines.FIGURES)}")
        out = cfg.output_dir
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output.directory not writable: {exc}") from None
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _set_workers(cfg.workers)
    figure = getattr(args, "figure_id", None)
    try:
        files, summary = _dispatch(cfg, args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        write_manifest(cfg, out, [], {"coarse": exc.coarse, "fine": exc.fine}, "failed",
                       [str(exc)], figure)
        return EXIT_CONVERGENCE
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        write_manifest(cfg, out, [], {"best": exc.best}, "failed", [str(exc)], figure)
        return EXIT_CONVERGENCE
    except pipelines.PartialFailure as exc:
        print(f"error: partial failure: {exc}", file=sys.stderr)
        write_manifest(cfg, out, exc.files, exc.summary, "partial", exc.failures, figure)
        return EXIT_PARTIAL

    write_manifest(cfg, out, files, summary, "ok", (), figure)
    if cfg.command == "propagate":
        x, y, z = (_clean(v) for v in summary["bloch"])
        print(f"P_e={summary['pe']:.6f}")
        print(f"bloch=({x:.6f}, {y:.6f}, {z:.6f})")
    else:
        for name in sorted(files):
            print(out / name)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

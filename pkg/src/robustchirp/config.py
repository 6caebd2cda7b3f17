"""Run configuration: parsing, validation and canonical round-trip.

A configuration is a JSON or YAML mapping::

    command: propagate
    pulse:
      theta_pi: 1.78          # area / pi
      c2_prime: 2.52          # or c2_fs2 (needs a bandwidth)
      delta_prime: 0.637      # or delta_rad_s, or lambda_c_nm
      cep: 0.0
      bandwidth_rad_s: 1.0    # or bandwidth_fwhm_rad_s
    propagation: {time_span_factor: 8, steps_per_rabi_cycle: 400, frame: diagonal-detuning}
    sweep: {...}              # command specific
    output: {directory: out}
    workers: 1

Dimensionless pulse keys win over physical ones when both are present.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dynamics import Frame, PropagationSettings
from .pulse import (FS2, RB_D1_WAVELENGTH, PulseSpec, fwhm_to_bandwidth,
                    wavelength_detuning)

WORKERS_ENV = "ROBUSTCHIRP_WORKERS"

PULSE_KEYS = {"theta_pi", "c2_prime", "delta_prime", "cep", "bandwidth_rad_s",
              "bandwidth_fwhm_rad_s", "c2_fs2", "delta_rad_s", "lambda_c_nm",
              "lambda_0_nm"}
PROPAGATION_KEYS = {"time_span_factor", "steps_per_rabi_cycle", "frame"}
TOP_KEYS = {"command", "pulse", "propagation", "sweep", "output", "workers"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _number(block: dict, key: str, where: str) -> float:
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}.{key} must be finite")
    return value


def canonical_pulse(block: dict | None) -> dict:
    """Reduce any accepted pulse block to the dimensionless canonical keys."""
    block = dict(block or {})
    unknown = set(block) - PULSE_KEYS
    if unknown:
        raise ConfigError(f"pulse: unknown key(s) {sorted(unknown)}")
    num = {k: _number(block, k, "pulse") for k in block}

    if "bandwidth_rad_s" in num:
        bw = num["bandwidth_rad_s"]
        bw_key = "bandwidth_rad_s"
    elif "bandwidth_fwhm_rad_s" in num:
        bw = fwhm_to_bandwidth(num["bandwidth_fwhm_rad_s"])
        bw_key = "bandwidth_fwhm_rad_s"
    else:
        bw, bw_key = 1.0, "bandwidth_rad_s"
    if not bw > 0.0:
        raise ConfigError(f"pulse.{bw_key} must be > 0, got {block[bw_key]!r}")

    theta_pi = num.get("theta_pi", 0.0)
    if theta_pi < 0.0:
        raise ConfigError(f"pulse.theta_pi must be >= 0, got {theta_pi!r}")

    if "c2_prime" in num:
        c2p = num["c2_prime"]
    elif "c2_fs2" in num:
        c2p = num["c2_fs2"] * FS2 * bw * bw
    else:
        c2p = 0.0

    if "delta_prime" in num:
        dp = num["delta_prime"]
    elif "delta_rad_s" in num:
        dp = num["delta_rad_s"] / bw
    elif "lambda_c_nm" in num:
        lam0 = num.get("lambda_0_nm", RB_D1_WAVELENGTH * 1e9)
        if num["lambda_c_nm"] <= 0.0 or lam0 <= 0.0:
            raise ConfigError("pulse.lambda_c_nm and pulse.lambda_0_nm must be > 0")
        dp = wavelength_detuning(num["lambda_c_nm"] * 1e-9, lam0 * 1e-9) / bw
    else:
        dp = 0.0
    return {"theta_pi": theta_pi, "c2_prime": c2p, "delta_prime": dp,
            "cep": num.get("cep", 0.0), "bandwidth_rad_s": bw}


def pulse_from_block(block: dict) -> PulseSpec:
    c = canonical_pulse(block)
    return PulseSpec.from_dimensionless(c["theta_pi"] * math.pi, c["c2_prime"],
                                        c["delta_prime"], c["bandwidth_rad_s"], c["cep"])


def settings_from_block(block: dict | None) -> PropagationSettings:
    block = dict(block or {})
    unknown = set(block) - PROPAGATION_KEYS
    if unknown:
        raise ConfigError(f"propagation: unknown key(s) {sorted(unknown)}")
    kw = {}
    for key in ("time_span_factor", "steps_per_rabi_cycle"):
        if key in block:
            kw[key] = _number(block, key, "propagation")
    if "frame" in block:
        try:
            kw["frame"] = Frame(block["frame"])
        except ValueError:
            raise ConfigError(
                f"propagation.frame must be one of {[f.value for f in Frame]}") from None
    try:
        return PropagationSettings(**kw)
    except ValueError as exc:
        raise ConfigError(f"propagation: {exc}") from None


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return n


@dataclass(frozen=True)
class RunConfig:
    command: str
    pulse: dict = field(default_factory=lambda: canonical_pulse({}))
    propagation: PropagationSettings = field(default_factory=PropagationSettings)
    sweep: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"directory": "."})
    workers: int = 1

    @property
    def pulse_spec(self) -> PulseSpec:
        return pulse_from_block(self.pulse)

    @property
    def output_dir(self) -> Path:
        return Path(self.output.get("directory", "."))

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "pulse": dict(self.pulse),
            "propagation": {"time_span_factor": self.propagation.time_span_factor,
                            "steps_per_rabi_cycle": self.propagation.steps_per_rabi_cycle,
                            "frame": self.propagation.frame.value},
            "sweep": dict(self.sweep),
            "output": dict(self.output),
            "workers": self.workers,
        }


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    command = data.get("command")
    if not isinstance(command, str) or not command:
        raise ConfigError("command must be a non-empty string")
    sweep = data.get("sweep") or {}
    output = data.get("output") or {"directory": "."}
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be a mapping")
    if not isinstance(output, dict):
        raise ConfigError("output must be a mapping")
    for key, value in sweep.items():
        if isinstance(value, (list, tuple)) and len(value) == 0:
            raise ConfigError(f"sweep.{key} must not be empty")
    workers = data.get("workers", default_workers())
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")
    return RunConfig(command=command, pulse=canonical_pulse(data.get("pulse")),
                     propagation=settings_from_block(data.get("propagation")),
                     sweep=dict(sweep), output=dict(output), workers=workers)


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return data

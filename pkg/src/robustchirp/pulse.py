"""Chirped, detuned Gaussian pulse: spectral form and time-domain envelope.

The pulse is defined in the frequency domain as

    E(w) = E0 exp[-(w - wc)^2 / dw^2 + i (c2 / 2) (w - wc)^2]

with ``dw`` the 1/e half-width of the field amplitude.  Its time-domain
counterpart (synthesis kernel ``exp(-i w t)``) is a Gaussian envelope of
1/e half-width ``tau`` carrying a linear frequency sweep, so the
instantaneous detuning reads ``delta - 2 alpha t``.

Everything downstream works in Rabi-frequency units: the pulse is fixed by
its area ``theta`` after shaping, never by a field amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
RB_D1_WAVELENGTH = 794.98e-9
FS2 = 1e-30
SQRT_PI = math.sqrt(math.pi)


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PulseSpec:
    """Shaped-pulse parameters in physical units.

    Attributes
    ----------
    theta : float
        Pulse area after shaping (rad).
    c2 : float
        Spectral chirp (s^2).
    delta : float
        Static detuning ``w0 - wc`` (rad/s).
    bandwidth : float
        1/e half-width of the spectral field amplitude (rad/s).
    cep : float
        Carrier-envelope phase (rad).
    """

    theta: float
    c2: float = 0.0
    delta: float = 0.0
    bandwidth: float = 1.0
    cep: float = 0.0

    def __post_init__(self) -> None:
        _check_finite(theta=self.theta, c2=self.c2, delta=self.delta,
                      bandwidth=self.bandwidth, cep=self.cep)
        if self.bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth!r}")
        if self.theta < 0.0:
            raise ValueError(f"theta must be >= 0, got {self.theta!r}")

    @classmethod
    def from_dimensionless(cls, theta: float, c2p: float = 0.0, deltap: float = 0.0,
                           bandwidth: float = 1.0, cep: float = 0.0) -> "PulseSpec":
        """Build from ``(theta, c2', delta')`` at a given bandwidth."""
        _check_finite(c2p=c2p, deltap=deltap, bandwidth=bandwidth)
        if bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be > 0, got {bandwidth!r}")
        return cls(theta=theta, c2=c2p / bandwidth**2, delta=deltap * bandwidth,
                   bandwidth=bandwidth, cep=cep)

    @property
    def c2p(self) -> float:
        return self.c2 * self.bandwidth**2

    @property
    def deltap(self) -> float:
        return self.delta / self.bandwidth

    def with_bandwidth(self, bandwidth: float) -> "PulseSpec":
        """Same dimensionless pulse at another bandwidth."""
        return PulseSpec.from_dimensionless(self.theta, self.c2p, self.deltap,
                                            bandwidth, self.cep)

    def replace(self, **changes) -> "PulseSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class TimePulse:
    """Analytic time-domain envelope ``peak_rabi * exp(-t^2/duration^2)``."""

    peak_rabi: float
    duration: float
    temporal_chirp: float
    cep: float = 0.0

    @property
    def area(self) -> float:
        return self.peak_rabi * SQRT_PI * self.duration


def stretch_factor(c2p: float) -> float:
    return math.sqrt(1.0 + 0.25 * c2p * c2p)


def spectral_field(omega, spec: PulseSpec, peak_amplitude: float = 1.0,
                   center: float = 0.0):
    """Complex spectral amplitude at angular frequency ``omega``.

    ``center`` is the carrier frequency in the same frame as ``omega``.
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or not math.isfinite(peak_amplitude):
        raise ValueError("omega and peak_amplitude must be finite")
    x = w - center
    out = peak_amplitude * np.exp(-(x * x) / spec.bandwidth**2
                                  + 0.5j * spec.c2 * x * x)
    return out[()] if out.ndim == 0 else out


def to_time_domain(spec: PulseSpec) -> TimePulse:
    """Closed-form Gaussian chirp transform of the spectral pulse."""
    s2 = 1.0 + 0.25 * spec.c2p**2
    tau = 2.0 * math.sqrt(s2) / spec.bandwidth
    alpha = spec.c2 * spec.bandwidth**4 / (8.0 * s2)
    return TimePulse(peak_rabi=spec.theta / (SQRT_PI * tau), duration=tau,
                     temporal_chirp=alpha, cep=spec.cep)


def rabi_envelope(t, pulse: TimePulse):
    t = np.asarray(t, dtype=float)
    return pulse.peak_rabi * np.exp(-(t / pulse.duration) ** 2)


def time_pulse_oracle(spec: PulseSpec, times, peak_amplitude: float | None = None,
                      n_widths: float = 7.0):
    """Numerical inverse Fourier transform of the spectral pulse.

    Samples ``E(t) = (1/2pi) int E(w) exp(-i w t) dw`` (carrier removed) at
    ``times`` by trapezoidal quadrature over ``|w| <= n_widths * bandwidth``.
    Used only to check ``to_time_domain``.

    With ``peak_amplitude=None`` the spectral amplitude is chosen so that
    the sampled envelope integrates to ``spec.theta``; pass an explicit
    value to keep the spectral amplitude fixed across chirps instead.

    Raises
    ------
    ValueError
        If ``times`` is not uniform, spans less than 12 envelope widths, or
        undersamples the spectral extent or the temporal chirp.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise ValueError("times must be a 1-D grid with at least 3 samples")
    steps = np.diff(t)
    dt = steps.mean()
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * abs(dt):
        raise ValueError("times must be uniformly increasing")
    tp = to_time_domain(spec)
    tmax = float(np.max(np.abs(t)))
    if t[-1] - t[0] < 12.0 * tp.duration:
        raise ValueError(
            f"grid spans {(t[-1] - t[0]) / tp.duration:.2f} tau, need >= 12 tau")
    wmax = n_widths * spec.bandwidth
    sweep = 2.0 * abs(tp.temporal_chirp) * tmax
    if dt * max(wmax, sweep) >= math.pi:
        raise ValueError(
            f"time step {dt:.3g} s undersamples bandwidth/chirp (need < "
            f"{math.pi / max(wmax, sweep):.3g} s)")

    if peak_amplitude is None:
        peak_amplitude = spec.theta / math.sqrt(stretch_factor(spec.c2p))
    # replica spacing 2pi/dw must clear the sampled window plus the tail
    dw = 2.0 * math.pi / (2.0 * tmax + 16.0 * tp.duration)
    n = int(math.ceil(wmax / dw))
    w = np.linspace(-wmax, wmax, 2 * n + 1)
    weights = spectral_field(w, spec, peak_amplitude) * (w[1] - w[0]) / (2.0 * math.pi)
    weights[[0, -1]] *= 0.5
    out = np.empty(t.shape, dtype=np.complex128)
    chunk = 512
    for start in range(0, t.size, chunk):
        tt = t[start:start + chunk]
        out[start:start + chunk] = np.exp(-1j * np.outer(tt, w)) @ weights
    return out


def fwhm_to_bandwidth(fwhm: float) -> float:
    """Field-amplitude FWHM -> 1/e half-width."""
    return fwhm / (2.0 * math.sqrt(math.log(2.0)))


def bandwidth_to_fwhm(bandwidth: float) -> float:
    return bandwidth * 2.0 * math.sqrt(math.log(2.0))


def wavelength_detuning(lambda_c: float, lambda_0: float = RB_D1_WAVELENGTH) -> float:
    """Static detuning ``w0 - wc`` (rad/s) for carrier and transition wavelengths (m)."""
    if not (lambda_c > 0.0 and lambda_0 > 0.0):
        raise ValueError("wavelengths must be positive")
    return 2.0 * math.pi * SPEED_OF_LIGHT * (lambda_c - lambda_0) / (lambda_0 * lambda_c)

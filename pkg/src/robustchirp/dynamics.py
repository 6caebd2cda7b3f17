"""Two-level dynamics under the chirped, detuned pulse.

The Hamiltonian (units of hbar, RWA) is integrated in one of two frames:

``diagonal``
    ``H = 1/2 [[-D(t), s W(t) e^{i phi}], [s W(t) e^{-i phi}, D(t)]]`` with
    ``D(t) = delta - 2 alpha t``.  No fast phases; the default.
``coupling``
    Detuning folded into the coupling phase,
    ``H = 1/2 [[0, s W e^{-i P(t) + i phi}], [c.c., 0]]`` with
    ``P(t) = delta t - alpha t^2``.  Unitarily equivalent by a diagonal
    frame change, kept as a cross-check.

``s = 1 + scale`` multiplies the Rabi frequency (amplitude fluctuation).
The state starts in ``|0>`` at ``-span * tau`` and is stepped to
``+span * tau`` with a fourth-order Magnus integrator whose steps are exact
SU(2) rotations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .pulse import PulseSpec, TimePulse, rabi_envelope, to_time_domain


class ConvergenceError(RuntimeError):
    """Step-halving check disagreed by more than the tolerance."""

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(f"{message}: coarse={coarse!r}, fine={fine!r}")
        self.coarse = coarse
        self.fine = fine


class Frame(str, enum.Enum):
    DIAGONAL = "diagonal-detuning"
    COUPLING = "phase-on-coupling"

    @property
    def code(self) -> int:
        return 0 if self is Frame.DIAGONAL else 1


@dataclass(frozen=True)
class PropagationSettings:
    """Integration window and step density.

    ``time_span_factor`` sets the window ``[-f tau, f tau]``.  Steps are
    sized so that one cycle of the fastest generalized Rabi frequency that
    matters (peak coupling and the detuning where the envelope is still
    significant) spans ``steps_per_rabi_cycle`` steps.
    """

    time_span_factor: float = 8.0
    steps_per_rabi_cycle: float = 400.0
    frame: Frame = Frame.DIAGONAL
    convergence_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not self.time_span_factor >= 6.0:
            raise ValueError(f"time_span_factor must be >= 6, got {self.time_span_factor!r}")
        if not self.steps_per_rabi_cycle >= 50.0:
            raise ValueError(
                f"steps_per_rabi_cycle must be >= 50, got {self.steps_per_rabi_cycle!r}")
        object.__setattr__(self, "frame", Frame(self.frame))

    def refined(self, factor: float = 2.0) -> "PropagationSettings":
        return PropagationSettings(self.time_span_factor,
                                   self.steps_per_rabi_cycle * factor,
                                   self.frame, self.convergence_tol)


DEFAULT_SETTINGS = PropagationSettings()


@dataclass(frozen=True)
class QuantumState:
    c0: complex
    c1: complex

    @classmethod
    def ground(cls) -> "QuantumState":
        return cls(1.0 + 0j, 0j)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=np.complex128)

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.c0) ** 2 + abs(self.c1) ** 2)

    @property
    def pe(self) -> float:
        return excited_probability(self)

    @property
    def bloch(self) -> tuple[float, float, float]:
        return bloch_coordinates(self)

    def overlap(self, other: "QuantumState") -> complex:
        """``<self|other>``."""
        return self.c0.conjugate() * other.c0 + self.c1.conjugate() * other.c1


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    """Propagator history ``U0(t_n)`` on the integration grid.

    ``propagators[0]`` is the identity at the window start.
    """

    times: np.ndarray
    propagators: np.ndarray

    def __post_init__(self) -> None:
        self.times.setflags(write=False)
        self.propagators.setflags(write=False)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.propagators[:, :, 0]

    @property
    def states(self) -> list[QuantumState]:
        return [QuantumState(complex(a), complex(b)) for a, b in self.amplitudes]

    @property
    def final_state(self) -> QuantumState:
        a, b = self.propagators[-1, :, 0]
        return QuantumState(complex(a), complex(b))

    def unitarity_error(self) -> float:
        u = self.propagators
        prod = np.conj(np.swapaxes(u, 1, 2)) @ u
        return float(np.max(np.abs(prod - np.eye(2))))


@dataclass(frozen=True)
class StepPlan:
    t0: float
    dt: float
    nsteps: int


def plan_steps(spec: PulseSpec, settings: PropagationSettings = DEFAULT_SETTINGS,
               pulse: TimePulse | None = None) -> StepPlan:
    pulse = pulse or to_time_domain(spec)
    tau = pulse.duration
    half = settings.time_span_factor * tau
    if settings.frame is Frame.DIAGONAL:
        # past ~3 tau the coupling is < 1e-4 of peak and diagonal steps are exact
        reach = min(3.0, settings.time_span_factor) * tau
    else:
        reach = half
    sweep = abs(spec.delta) + 2.0 * abs(pulse.temporal_chirp) * reach
    rate = max(math.hypot(pulse.peak_rabi, sweep), 1.0 / tau)
    n = int(math.ceil(settings.steps_per_rabi_cycle * rate * 2.0 * half / (2.0 * math.pi)))
    n = max(n, 64)
    return StepPlan(t0=-half, dt=2.0 * half / n, nsteps=n)


def pack(spec: PulseSpec, plan: StepPlan, scale: float = 0.0,
         pulse: TimePulse | None = None) -> np.ndarray:
    pulse = pulse or to_time_domain(spec)
    p = np.empty(kernels.N_PARAMS)
    p[kernels.OMEGA0] = pulse.peak_rabi
    p[kernels.TAU] = pulse.duration
    p[kernels.ALPHA] = pulse.temporal_chirp
    p[kernels.DELTA] = spec.delta
    p[kernels.PHI] = spec.cep
    p[kernels.SCALE] = 1.0 + scale
    p[kernels.T0] = plan.t0
    p[kernels.DT] = plan.dt
    return p


def hamiltonian(t: float, spec: PulseSpec, pulse: TimePulse | None = None,
                scale: float = 0.0, frame: Frame | str = Frame.DIAGONAL) -> np.ndarray:
    """``H(t)/hbar`` as a 2x2 Hermitian matrix (rad/s)."""
    pulse = pulse or to_time_domain(spec)
    frame = Frame(frame)
    omega = (1.0 + scale) * float(rabi_envelope(t, pulse))
    if frame is Frame.DIAGONAL:
        det = spec.delta - 2.0 * pulse.temporal_chirp * t
        off = omega * np.exp(1j * spec.cep)
        return 0.5 * np.array([[-det, off], [np.conj(off), det]], dtype=np.complex128)
    phase = spec.delta * t - pulse.temporal_chirp * t * t
    off = omega * np.exp(-1j * phase + 1j * spec.cep)
    return 0.5 * np.array([[0.0, off], [np.conj(off), 0.0]], dtype=np.complex128)


def _final(spec: PulseSpec, settings: PropagationSettings, scale: float) -> QuantumState:
    pulse = to_time_domain(spec)
    plan = plan_steps(spec, settings, pulse)
    c0, c1 = kernels.propagate_final(pack(spec, plan, scale, pulse), plan.nsteps,
                                     settings.frame.code)
    return QuantumState(complex(c0), complex(c1))


def propagate(spec: PulseSpec, settings: PropagationSettings = DEFAULT_SETTINGS,
              scale: float = 0.0, record_history: bool = False,
              verify: bool = False):
    """Final state from ``|0>``; with ``record_history`` also the propagators.

    ``verify`` repeats the run at doubled step density and raises
    :class:`ConvergenceError` if ``P_e`` moves by more than
    ``settings.convergence_tol``.
    """
    if verify:
        coarse = _final(spec, settings, scale)
        fine = _final(spec, settings.refined(), scale)
        if abs(coarse.pe - fine.pe) > settings.convergence_tol:
            raise ConvergenceError("step halving changed P_e", coarse.pe, fine.pe)
    if not record_history:
        return _final(spec, settings, scale)
    pulse = to_time_domain(spec)
    plan = plan_steps(spec, settings, pulse)
    hist = kernels.propagate_record(pack(spec, plan, scale, pulse), plan.nsteps,
                                    settings.frame.code)
    times = plan.t0 + plan.dt * np.arange(plan.nsteps + 1)
    record = EvolutionRecord(times=times, propagators=np.asarray(hist))
    return record.final_state, record


def final_states(specs: Sequence[PulseSpec], settings: PropagationSettings = DEFAULT_SETTINGS,
                 scales: Iterable[float] | float = 0.0) -> np.ndarray:
    """Final amplitudes ``(K, 2)`` for many pulses; the data-parallel path.

    Each entry is bit-identical to a single :func:`propagate` call with the
    same inputs.
    """
    specs = list(specs)
    if np.ndim(scales) == 0:
        scales = [float(scales)] * len(specs)
    scales = list(scales)
    if len(scales) != len(specs):
        raise ValueError("scales and specs differ in length")
    if not specs:
        return np.empty((0, 2), dtype=np.complex128)
    params = np.empty((len(specs), kernels.N_PARAMS))
    steps = np.empty(len(specs), dtype=np.int64)
    for i, (spec, scale) in enumerate(zip(specs, scales)):
        pulse = to_time_domain(spec)
        plan = plan_steps(spec, settings, pulse)
        params[i] = pack(spec, plan, scale, pulse)
        steps[i] = plan.nsteps
    return np.asarray(kernels.batch_final(params, steps, settings.frame.code))


def excited_probability(state: QuantumState) -> float:
    return abs(state.c1) ** 2


def bloch_coordinates(state: QuantumState, tol: float = 1e-8) -> tuple[float, float, float]:
    """``(x, y, z)`` with ``x + i y = 2 c0* c1`` and ``z = |c1|^2 - |c0|^2``."""
    if abs(state.norm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm={state.norm!r})")
    cross = 2.0 * state.c0.conjugate() * state.c1
    return (cross.real, cross.imag, abs(state.c1) ** 2 - abs(state.c0) ** 2)


def bloch_array(amplitudes: np.ndarray) -> np.ndarray:
    """Vectorized Bloch coordinates for an ``(..., 2)`` amplitude array."""
    a = np.asarray(amplitudes)
    cross = 2.0 * np.conj(a[..., 0]) * a[..., 1]
    z = np.abs(a[..., 1]) ** 2 - np.abs(a[..., 0]) ** 2
    return np.stack([cross.real, cross.imag, z], axis=-1)


def write_trajectory(path, record: EvolutionRecord) -> None:
    """Dump the state history as tab-separated text with a header row."""
    amp = record.amplitudes
    xyz = bloch_array(amp)
    table = np.column_stack([record.times, amp[:, 0].real, amp[:, 0].imag,
                             amp[:, 1].real, amp[:, 1].imag, xyz])
    np.savetxt(path, table, delimiter="\t", fmt="%.12e",
               header="t\tre_c0\tim_c0\tre_c1\tim_c1\tx\ty\tz", comments="")

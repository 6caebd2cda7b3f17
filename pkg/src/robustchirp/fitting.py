"""Four-parameter logistic ``P = A + B / (1 + C exp(-D x))``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

PE_FIT_RANGE = (0.08, 0.98)


class FitError(RuntimeError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class FitVariable(str, enum.Enum):
    DELTAP = "deltap"
    C2P = "c2p"
    THETA_OVER_PI = "theta_over_pi"


@dataclass(frozen=True)
class LogisticFit:
    A: float
    B: float
    C: float
    D: float
    variable: FitVariable
    residual_rms: float = 0.0

    def __call__(self, x):
        return logistic(x, self.A, self.B, self.C, self.D)

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D,
                "variable": FitVariable(self.variable).value,
                "residual_rms": self.residual_rms}


def logistic(x, A, B, C, D):
    x = np.asarray(x, dtype=float)
    return A + B / (1.0 + C * np.exp(-D * x))


def initial_guess(xs, pes) -> tuple[float, float, float, float]:
    """Deterministic start: plateaus from the extremes, rate from the
    steepest secant, offset from the half-way crossing."""
    order = np.argsort(xs)
    x, y = np.asarray(xs, float)[order], np.asarray(pes, float)[order]
    lo, hi = float(y.min()), float(y.max())
    B = hi - lo
    slopes = np.diff(y) / np.diff(x)
    k = int(np.argmax(np.abs(slopes)))
    # steepest logistic slope is B D / 4 at the midpoint
    D = 4.0 * slopes[k] / B
    half = lo + 0.5 * B
    j = int(np.argmin(np.abs(y - half)))
    C = math.exp(D * x[j])
    return lo, B, C, D


def fit_logistic(xs, pes, variable, strict: bool = True, max_nfev: int = 2000) -> LogisticFit:
    """Least-squares logistic fit (Levenberg-Marquardt on ``(A, B, ln C, D)``).

    Raises
    ------
    ValueError
        Fewer than 6 samples, or (with ``strict``) values outside the
        0.08-0.98 fitting window.
    FitError
        Degenerate data or no convergence; ``best`` carries the last iterate.
    """
    xs = np.asarray(xs, dtype=float)
    pes = np.asarray(pes, dtype=float)
    variable = FitVariable(variable)
    if xs.shape != pes.shape or xs.ndim != 1 or xs.size < 6:
        raise ValueError("need at least 6 paired samples")
    if strict and (pes.min() < PE_FIT_RANGE[0] - 1e-12 or pes.max() > PE_FIT_RANGE[1] + 1e-12):
        raise ValueError(f"P_e samples must lie in {PE_FIT_RANGE}")
    if np.ptp(pes) < 1e-9 or np.unique(xs).size < 4:
        raise FitError("degenerate samples: no step to fit")

    A0, B0, C0, D0 = initial_guess(xs, pes)
    if D0 == 0.0 or not math.isfinite(C0) or C0 <= 0.0:
        raise FitError("degenerate samples: zero slope", best=(A0, B0, C0, D0))

    def resid(p):
        return logistic(xs, p[0], p[1], math.exp(p[2]), p[3]) - pes

    sol = least_squares(resid, [A0, B0, math.log(C0), D0], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    A, B, lnC, D = sol.x
    best = (A, B, math.exp(lnC), D)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError(f"logistic fit did not converge: {sol.message}", best=best)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return LogisticFit(A=float(A), B=float(B), C=float(best[2]), D=float(D),
                       variable=variable, residual_rms=rms)

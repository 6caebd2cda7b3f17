"""Robust two-level control with detuned, chirped Gaussian pulses."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .dynamics import (ConvergenceError, Frame, PropagationSettings, QuantumState,
                       propagate)
from .explorer import (EnsembleModel, RobustLine, RobustPoint, find_robust_point,
                       map_curvature, map_pe, trace_robust_line)
from .fitting import LogisticFit, fit_logistic
from .geometry import Topology, classify_topology, theta_trajectory
from .pulse import PulseSpec, to_time_domain
from .robustness import (curvature_fd, curvature_perturbative, fidelity_curve,
                         robust_width, robustness_report)

__all__ = [
    "BACKEND", "ConvergenceError", "EnsembleModel", "Frame", "LogisticFit",
    "PropagationSettings", "PulseSpec", "QuantumState", "RobustLine", "RobustPoint",
    "Topology", "classify_topology", "curvature_fd", "curvature_perturbative",
    "fidelity_curve", "find_robust_point", "fit_logistic", "map_curvature", "map_pe",
    "propagate", "robust_width", "robustness_report", "theta_trajectory",
    "to_time_domain", "trace_robust_line",
]

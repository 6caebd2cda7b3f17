"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary
(and immediately with ``pytest -s``).  Tolerances are fixed; nothing here is tuned to pass.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from robustchirp.dynamics import PropagationSettings, propagate
from robustchirp.explorer import (EnsembleModel, compare_reference_fits, find_robust_point,
                                  map_pe)
from robustchirp.geometry import Topology, classify_topology, theta_trajectory
from robustchirp.pulse import (PulseSpec, rabi_envelope, time_pulse_oracle,
                               to_time_domain)
from robustchirp.robustness import (curvature_fd, curvature_perturbative, fidelity,
                                    fidelity_curve, rabi_reference, robust_width)


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
    assert ok, detail


def test_1_point_b():
    t0 = time.perf_counter()
    p = find_robust_point(0.637)
    elapsed = time.perf_counter() - t0
    ok = (abs(p.theta_over_pi - 1.78) <= 0.05 and abs(p.c2p - 2.52) <= 0.1
          and p.g <= 0.01 and abs(p.pe - 0.5) <= 0.02 and elapsed < 300)
    record("1 point B", ok, f"theta={p.theta_over_pi:.4f}pi c2'={p.c2p:.4f} g={p.g:.2e} "
           f"P_e={p.pe:.4f} ({elapsed:.1f}s)")


def test_2_rabi_curvature():
    spec = PulseSpec(theta=0.5 * math.pi)
    ref = (math.pi / 4) ** 2
    g_fd, g_pt = curvature_fd(spec), curvature_perturbative(spec)
    ok = abs(g_fd - ref) <= 1e-3 and abs(g_pt - ref) <= 1e-3
    record("2 Rabi curvature", ok, f"g_fd={g_fd:.6f} g_pert={g_pt:.6f} ref={ref:.6f}")


def test_3_star_point():
    p = find_robust_point(0.56)
    ok = (abs(p.theta_over_pi - 1.9) <= 0.05 and abs(p.c2p - 2.79) <= 0.1
          and abs(p.pe - 0.6) <= 0.03)
    record("3 star point", ok,
           f"theta={p.theta_over_pi:.4f}pi c2'={p.c2p:.4f} P_e={p.pe:.4f} g={p.g:.2e}")


def test_4_cusp_topology():
    reports = {c: classify_topology(theta_trajectory(c, 0.637)) for c in (1.5, 2.52, 3.5)}
    labels = [reports[c].classification for c in (1.5, 2.52, 3.5)]
    star = reports[2.52].theta_star / math.pi
    ok = (labels == [Topology.LOOPED, Topology.CUSP, Topology.UNLOOPED]
          and abs(star - 1.78) <= 0.05)
    record("4 cusp topology", ok,
           f"{'/'.join(lab.value for lab in labels)}, theta*={star:.4f}pi")


@pytest.mark.filterwarnings("ignore::robustchirp.robustness.CurvatureWarning")
def test_5_method_cross_validation():
    worst, where = 0.0, None
    for theta in np.linspace(0.5, 3.0, 5) * math.pi:
        for c2p in np.linspace(0.0, 4.0, 5):
            spec = PulseSpec.from_dimensionless(theta, c2p, 0.637)
            g_fd, g_pt = curvature_fd(spec), curvature_perturbative(spec)
            score = abs(g_fd - g_pt) / max(1e-3, 0.02 * abs(g_fd))
            if score > worst:
                worst, where = score, (theta / math.pi, c2p, g_fd, g_pt)
    ok = worst <= 1.0
    record("5 method cross-validation", ok,
           f"worst |dg|/max(1e-3, 2%)={worst:.2e} at theta={where[0]:.3f}pi c2'={where[1]:.1f}")


def test_6_table1(robust_line):
    cmp = compare_reference_fits(robust_line)
    rms = {k: v["rms"] for k, v in cmp.items()}
    ok = robust_line.complete and all(r <= 0.05 for r in rms.values())
    record("6 logistic reference curves", ok,
           " ".join(f"{k}={v:.4f}" for k, v in rms.items()) + f" ({len(robust_line.points)} pts)")


def test_7_width_ratio(spec_b):
    gammas = np.linspace(-0.5, 0.5, 2001)
    w_b = robust_width(fidelity_curve(spec_b, gammas), 0.99)
    theta_r, _ = rabi_reference(0.5)
    w_r = robust_width(fidelity_curve(PulseSpec(theta=theta_r), gammas), 0.99)
    ratio = w_b / w_r
    record("7 width ratio", 2.5 <= ratio <= 4.5,
           f"width_B={w_b:.4f} width_Rabi={w_r:.4f} ratio={ratio:.3f} (band [2.5, 4.5])")


def test_8_property_suite():
    checks = {}
    cases = [(0.5 * math.pi, 0.0, 0.0), (1.78 * math.pi, 2.52, 0.637),
             (2.6 * math.pi, -3.0, -0.5)]
    norm_err, fid0, step_err, cep_err, closure_err = 0.0, True, 0.0, 0.0, 0.0
    for theta, c2p, dp in cases:
        spec = PulseSpec.from_dimensionless(theta, c2p, dp)
        state, rec = propagate(spec, record_history=True)
        norm_err = max(norm_err, rec.unitarity_error())
        fid0 &= fidelity(spec, 0.0) == 1.0
        fine = propagate(spec, PropagationSettings().refined())
        step_err = max(step_err, abs(fine.pe - state.pe))
        cep_err = max(cep_err, abs(propagate(spec.replace(cep=1.3)).pe - state.pe))
        scaled = propagate(spec.with_bandwidth(3.7e13))
        closure_err = max(closure_err, abs(scaled.pe - state.pe))
    checks["norm"] = (norm_err < 1e-9, f"{norm_err:.1e}")
    checks["F(0)=1"] = (fid0, str(fid0))
    checks["step halving"] = (step_err < 1e-8, f"{step_err:.1e}")
    checks["CEP"] = (cep_err < 1e-10, f"{cep_err:.1e}")
    checks["closure"] = (closure_err < 1e-10, f"{closure_err:.1e}")

    env_err, phase_err = 0.0, 0.0
    for c2p in (-4.0, -1.0, 0.0, 1.0, 2.52, 4.0):
        spec = PulseSpec.from_dimensionless(math.pi, c2p, 0.0)
        tp = to_time_domain(spec)
        t = np.linspace(-8 * tp.duration, 8 * tp.duration, 4001)
        field = time_pulse_oracle(spec, t)
        env_err = max(env_err, abs(np.abs(field).max() / tp.peak_rabi - 1.0))
        if c2p:
            m = np.abs(t) < 1.5 * tp.duration
            k = np.polyfit(t[m] ** 2, np.unwrap(np.angle(field[m])), 1)[0]
            phase_err = max(phase_err, abs(-k / tp.temporal_chirp - 1.0))
        assert float(rabi_envelope(0.0, tp)) == tp.peak_rabi
    checks["oracle"] = (env_err < 1e-6 and phase_err < 1e-4,
                        f"env {env_err:.1e} phase {phase_err:.1e}")

    thetas = np.array([0.7, 1.9, 2.8]) * math.pi
    bare = map_pe(thetas, [0.0, 2.0], 0.56, 1.0)
    cloud = map_pe(thetas, [0.0, 2.0], 0.56, 1.0, EnsembleModel(1e-3))
    ens_err = float(np.max(np.abs(cloud.values - bare.values)))
    checks["ensemble limit"] = (ens_err < 1e-4, f"{ens_err:.1e}")

    ok = all(v[0] for v in checks.values())
    record("8 property suite", ok,
           ", ".join(f"{k} {'ok' if v[0] else 'FAIL'} ({v[1]})" for k, v in checks.items()))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))

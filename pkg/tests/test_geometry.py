import math

import numpy as np
import pytest

from robustchirp.geometry import (ThetaTrajectory, Topology, _segments_cross,
                                  classify_topology, endpoint_speed, has_loop,
                                  theta_trajectory)
from robustchirp.pulse import PulseSpec
from robustchirp.robustness import curvature_perturbative


def test_rabi_speed_is_one_per_radian():
    traj = theta_trajectory(0.0, 0.0, (0.2, 2.8), n=257)
    speed = endpoint_speed(traj, unit="rad")
    np.testing.assert_allclose(speed[1:-1], 1.0, atol=1e-4)
    np.testing.assert_allclose(endpoint_speed(traj), math.pi * speed)
    with pytest.raises(ValueError):
        endpoint_speed(traj, unit="deg")


@pytest.mark.parametrize("c2p, dp, theta", [(1.5, 0.637, 2.0 * math.pi),
                                            (3.5, 0.637, 1.4 * math.pi),
                                            (-2.0, 0.3, 1.1 * math.pi)])
def test_speed_equals_curvature_oracle(c2p, dp, theta):
    h = 1e-4
    traj = theta_trajectory(c2p, dp, (theta - 32 * h, theta + 32 * h), n=65)
    speed = endpoint_speed(traj, unit="rad")[32]
    g = curvature_perturbative(PulseSpec.from_dimensionless(theta, c2p, dp))
    assert speed == pytest.approx(2.0 * math.sqrt(g) / theta, rel=1e-4)


@pytest.mark.parametrize("c2p, label", [(1.5, Topology.LOOPED), (2.52, Topology.CUSP),
                                        (3.5, Topology.UNLOOPED)])
def test_classification_across_robust_chirp(c2p, label):
    report = classify_topology(theta_trajectory(c2p, 0.637))
    assert report.classification is label
    if label is Topology.CUSP:
        assert report.theta_star / math.pi == pytest.approx(1.78, abs=0.05)
        assert report.min_speed < 1e-2


def test_single_cusp_on_chirp_scan():
    c2ps = np.round(np.arange(1.5, 3.5001, 0.1), 10)
    labels = [classify_topology(theta_trajectory(c, 0.637)).classification for c in c2ps]
    cusps = [c for c, lab in zip(c2ps, labels) if lab is Topology.CUSP]
    assert len(cusps) == 1
    i = int(np.flatnonzero(c2ps == cusps[0])[0])
    assert all(lab is Topology.LOOPED for lab in labels[:i])
    assert all(lab is Topology.UNLOOPED for lab in labels[i + 1:])


def test_speed_invariant_under_cep():
    a = theta_trajectory(2.0, 0.637, n=129)
    b = theta_trajectory(2.0, 0.637, n=129, cep=1.1)
    np.testing.assert_allclose(endpoint_speed(a), endpoint_speed(b), atol=1e-9)
    np.testing.assert_allclose(a.points[:, 2], b.points[:, 2], atol=1e-12)


def test_segments_cross():
    t = np.linspace(0, 2 * math.pi, 200)
    figure_eight = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    assert _segments_cross(figure_eight)
    arc = np.column_stack([np.cos(t[:100]), np.sin(t[:100])])
    assert not _segments_cross(arc)


def test_loop_detection_directly():
    for c2p, looped in ((1.5, True), (3.5, False)):
        star = classify_topology(theta_trajectory(c2p, 0.637)).theta_star
        assert has_loop(c2p, 0.637, star) is looped


def test_trajectory_validation_and_text(tmp_path):
    with pytest.raises(ValueError):
        theta_trajectory(2.0, 0.6, n=10)
    with pytest.raises(ValueError):
        theta_trajectory(2.0, 0.6, (0.0, 8 * math.pi))
    with pytest.raises(ValueError):
        ThetaTrajectory(np.array([0.0, 1.0, 0.5]), np.zeros((3, 3)), 1.0, 0.0)
    traj = theta_trajectory(2.0, 0.6, n=64)
    path = tmp_path / "t.tsv"
    traj.to_text(path)
    rows = path.read_text().splitlines()
    assert rows[0].split("\t") == ["theta_over_pi", "x", "y", "z", "speed"]
    assert len(rows) == 65
    norms = np.linalg.norm(traj.points, axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-10)


def test_report_dict():
    report = classify_topology(theta_trajectory(2.52, 0.637))
    d = report.to_dict()
    assert d["classification"] == "cusp"
    assert d["theta_star_over_pi"] == pytest.approx(report.theta_star / math.pi)

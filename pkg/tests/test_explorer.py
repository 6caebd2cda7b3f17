import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from robustchirp.explorer import (EnsembleModel, EnsembleWarning, GridMap2D, RobustLine,
                                  RobustPoint, compare_reference_fits, ensemble_average,
                                  equal_population_area, find_robust_point, map_curvature,
                                  map_pe)
from robustchirp.geometry import Topology, classify_topology, theta_trajectory
from robustchirp.pulse import FS2, fwhm_to_bandwidth

# (1/r^2) int_0^1 v^(1/r^2 - 1) sin^2(pi v) dv at r = 0.47, mpmath at 30 digits
ENSEMBLE_2PI = 0.31316012311273765552


def _ensemble_oracle(theta, ratio):
    mp.mp.dps = 30
    r2 = mp.mpf(ratio) ** 2
    f = lambda v: v ** (1 / r2 - 1) * mp.sin(theta * v / 2) ** 2  # noqa: E731
    return float(mp.quad(f, [0, 0.5, 1]) / r2)


def test_ensemble_quadrature_matches_oracle():
    assert _ensemble_oracle(2 * math.pi, 0.47) == pytest.approx(ENSEMBLE_2PI, rel=1e-15)
    model = EnsembleModel(0.47)
    value = ensemble_average(lambda s: np.sin(math.pi * s) ** 2, model)
    assert value == pytest.approx(ENSEMBLE_2PI, abs=1e-10)
    for theta in (0.7 * math.pi, 1.9 * math.pi, 3.0 * math.pi):
        avg = map_pe([theta], [0.0], 0.0, 1.0, model).values[0, 0]
        assert avg == pytest.approx(_ensemble_oracle(theta, 0.47), abs=1e-9)


def test_intensity_profile_rescales_ratio():
    a = EnsembleModel(0.47 * math.sqrt(2), profile="intensity")
    b = EnsembleModel(0.47)
    assert a.field_ratio == pytest.approx(b.field_ratio)


def test_point_cloud_limit():
    thetas = np.linspace(0.5, 3.0, 4) * math.pi
    c2s = np.array([0.0, 5e3, 1.5e4]) * FS2
    bw = fwhm_to_bandwidth(3.1e13)
    bare = map_pe(thetas, c2s, 1.04e13, bw)
    cloud = map_pe(thetas, c2s, 1.04e13, bw, EnsembleModel(1e-3))
    np.testing.assert_allclose(cloud.values, bare.values, atol=1e-4)


def test_ensemble_reduces_rabi_contrast():
    thetas = np.linspace(0, 3, 61) * math.pi
    bw = fwhm_to_bandwidth(3.1e13)
    bare = map_pe(thetas, [0.0], 1.04e13, bw).values[:, 0]
    cloud = map_pe(thetas, [0.0], 1.04e13, bw, EnsembleModel(0.47)).values[:, 0]
    assert np.ptp(cloud) < np.ptp(bare)


def test_ensemble_warning_and_validation():
    with pytest.warns(EnsembleWarning):
        ensemble_average(lambda s: np.sin(400 * s) ** 2, EnsembleModel(2.0, radial_samples=32))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ensemble_average(lambda s: np.sin(math.pi * s) ** 2, EnsembleModel(0.47))
    for kwargs in ({"ratio": 0.0}, {"radial_samples": 8}, {"profile": "radius"}):
        with pytest.raises(ValueError):
            EnsembleModel(**kwargs)


def test_pe_map_rabi_column():
    thetas = np.linspace(0, 3, 13) * math.pi
    m = map_pe(thetas, [0.0, 1e-28], 0.0, 2e13)
    np.testing.assert_allclose(m.values[:, 0], np.sin(thetas / 2) ** 2, atol=1e-10)
    assert m.valid.all()


def test_star_point_physical_units():
    bw = fwhm_to_bandwidth(3.1e13)
    m = map_pe([1.9 * math.pi], [8.1e3 * FS2], 1.04e13, bw)
    assert m.values[0, 0] == pytest.approx(0.6, abs=0.03)


def test_curvature_map_nodes():
    m = map_curvature([0.0, 0.5 * math.pi, 1.78 * math.pi], [0.0, 2.52], 0.637)
    assert np.all(m.values[0] == 0.0)
    assert np.all(m.values >= -1e-6)
    assert m.values[2, 1] <= 0.01
    rabi = map_curvature([0.5 * math.pi], [0.0], 0.0)
    assert rabi.values[0, 0] == pytest.approx((math.pi / 4) ** 2, abs=1e-3)
    with pytest.raises(ValueError, match="monotone"):
        map_curvature([1.0, 3.0, 2.0], [0.0], 0.0)


def test_grid_map_outputs(tmp_path):
    values = np.array([[1.0, np.nan], [0.5, 2.0]])
    m = GridMap2D("theta", np.array([1.0, 2.0]), "c2p", np.array([0.0, 1.0]), values,
                  np.isfinite(values), {"deltap": 0.5})
    assert m.argmin() == (1, 0)
    assert m.to_dict()["values"][0][1] is None
    path = tmp_path / "m.tsv"
    m.to_text(path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# theta (rows) x c2p")
    assert text[2].split("\t")[0] == "theta\\c2p"
    with pytest.raises(ValueError):
        GridMap2D("a", np.zeros(2), "b", np.zeros(3), np.zeros((2, 2)), np.ones((2, 2)))


def test_robust_point_at_anchor(robust_b):
    assert robust_b.robust
    assert robust_b.theta_over_pi == pytest.approx(1.78, abs=0.05)
    assert robust_b.c2p == pytest.approx(2.52, abs=0.1)
    assert robust_b.g <= 0.01
    assert robust_b.pe == pytest.approx(0.5, abs=0.02)
    d = robust_b.to_dict()
    assert d["theta_over_pi"] == pytest.approx(robust_b.theta / math.pi)


def test_robust_point_box_errors():
    with pytest.raises(ValueError):
        find_robust_point(0.637, theta_box=(2.0, 1.0))
    with pytest.raises(ValueError):
        find_robust_point(0.637, n_grid=5)


def test_no_robust_point_reports_best():
    # tiny box away from the robust line
    p = find_robust_point(0.637, theta_box=(0.4 * math.pi, 0.6 * math.pi),
                          c2p_box=(0.0, 0.2))
    assert not p.robust and p.g > 0.01


def test_robust_line_properties(robust_line):
    assert robust_line.complete
    pts = robust_line.points
    assert len(pts) >= 19
    assert all(p.g < 0.01 for p in pts)
    pe = robust_line.column("pe")
    dp = robust_line.column("deltap")
    assert np.all(np.diff(dp) > 0)
    assert np.all(np.diff(pe) < 0)
    for p in (pts[2], pts[len(pts) // 2], pts[-3]):
        traj = theta_trajectory(p.c2p, p.deltap,
                                (max(p.theta - 0.5 * math.pi, 0.05), p.theta + 0.5 * math.pi))
        assert classify_topology(traj).classification is Topology.CUSP


def test_reference_fit_comparison(robust_line):
    cmp = compare_reference_fits(robust_line)
    assert set(cmp) == {"deltap", "c2p", "theta_over_pi"}
    for row in cmp.values():
        assert row["rms"] <= 0.05
        assert row["x_range"][0] < row["x_range"][1]


def test_equal_population_area(robust_b):
    theta = equal_population_area(2.3, 0.637, robust_b.pe, robust_b.theta)
    pe = map_pe([theta], [2.3], 0.637, 1.0).values[0, 0]
    assert pe == pytest.approx(robust_b.pe, abs=1e-9)
    assert equal_population_area(2.3, 0.637, 2.0, robust_b.theta) is None


def test_line_serialization(robust_line):
    d = robust_line.to_dict()
    back = RobustLine(points=tuple(RobustPoint(**{k: v for k, v in p.items()
                                                   if k != "theta_over_pi"})
                                   for p in d["points"]))
    assert back.points == robust_line.points

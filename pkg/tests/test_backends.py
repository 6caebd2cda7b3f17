import math
import os
import subprocess
import sys

import numpy as np
import pytest

from robustchirp import kernels
from robustchirp.dynamics import pack, plan_steps
from robustchirp.pulse import PulseSpec, to_time_domain

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba not installed")

CASES = [(0.5 * math.pi, 0.0, 0.0, 0.0), (1.78 * math.pi, 2.52, 0.637, 0.1),
         (2.9 * math.pi, -3.5, -0.8, -0.2)]


def _params(theta, c2p, dp, scale):
    spec = PulseSpec.from_dimensionless(theta, c2p, dp, cep=0.3)
    plan = plan_steps(spec)
    return pack(spec, plan, scale, to_time_domain(spec)), plan.nsteps


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("frame", [0, 1])
def test_final_and_perturbative_agree(case, frame):
    p, n = _params(*case)
    a = np.array(kernels.numba_impl.propagate_final(p, n, frame))
    b = np.array(kernels.numpy_impl.propagate_final(p, n, frame))
    np.testing.assert_allclose(a, b, atol=1e-12)
    a = np.array(kernels.numba_impl.perturbative(p, n, frame))
    b = np.array(kernels.numpy_impl.perturbative(p, n, frame))
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_record_agrees():
    p, n = _params(*CASES[1])
    a = kernels.numba_impl.propagate_record(p, n, 0)
    b = kernels.numpy_impl.propagate_record(p, n, 0)
    assert a.shape == b.shape == (n + 1, 2, 2)
    np.testing.assert_allclose(a, b, atol=1e-12)
    np.testing.assert_allclose(a[-1, :, 0], kernels.numba_impl.propagate_final(p, n, 0),
                               atol=1e-13)


def test_batches_agree():
    rows = [_params(*c) for c in CASES]
    params = np.array([r[0] for r in rows])
    steps = np.array([r[1] for r in rows], dtype=np.int64)
    np.testing.assert_allclose(kernels.numba_impl.batch_final(params, steps, 0),
                               kernels.numpy_impl.batch_final(params, steps, 0), atol=1e-12)
    np.testing.assert_allclose(kernels.numba_impl.batch_perturbative(params, steps, 0),
                               kernels.numpy_impl.batch_perturbative(params, steps, 0),
                               atol=1e-11)


def _run(backend):
    env = dict(os.environ, ROBUSTCHIRP_BACKEND=backend)
    code = ("import math, robustchirp as r\n"
            "s = r.PulseSpec.from_dimensionless(1.78 * math.pi, 2.52, 0.637)\n"
            "print(r.BACKEND, repr(r.propagate(s).pe))\n")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    name, pe = out.stdout.split()
    return name, float(pe)


def test_env_flag_selects_backend():
    name_a, pe_a = _run("numba")
    name_b, pe_b = _run("numpy")
    assert (name_a, name_b) == ("numba", "numpy")
    assert pe_a == pytest.approx(pe_b, abs=1e-12)


def test_env_flag_rejects_unknown():
    env = dict(os.environ, ROBUSTCHIRP_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import robustchirp"], env=env,
                         capture_output=True, text=True)
    assert out.returncode != 0
    assert "ROBUSTCHIRP_BACKEND" in out.stderr

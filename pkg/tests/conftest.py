import math
import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import pytest  # noqa: E402

from robustchirp.explorer import (find_robust_point, reference_anchor,  # noqa: E402
                                  trace_robust_line)
from robustchirp.pulse import PulseSpec  # noqa: E402

POINT_B = (1.78 * math.pi, 2.52, 0.637)

# criterion -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def spec_b():
    return PulseSpec.from_dimensionless(*POINT_B)


@pytest.fixture(scope="session")
def robust_b():
    return find_robust_point(0.637)


@pytest.fixture(scope="session")
def anchors(robust_b):
    a = reference_anchor(robust_b, 0.11, "lower")
    c = reference_anchor(robust_b, 0.05, "upper")
    return a, robust_b, c


@pytest.fixture(scope="session")
def robust_line(robust_b):
    return trace_robust_line((0.15, 1.1), 20, anchor=robust_b)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")

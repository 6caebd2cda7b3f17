import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustchirp.explorer import REFERENCE_FITS
from robustchirp.fitting import FitError, FitVariable, fit_logistic, logistic

# x-ranges over which each reference curve spans the fitting window
RANGES = {FitVariable.DELTAP: (0.15, 1.1), FitVariable.C2P: (1.6, 3.6),
          FitVariable.THETA_OVER_PI: (1.3, 2.3)}


def test_reference_coefficients():
    assert REFERENCE_FITS[FitVariable.DELTAP] == (-0.055, 1.19, 0.079, -4.20)
    assert REFERENCE_FITS[FitVariable.C2P] == (-0.097, 1.076, 22.5, 1.32)
    assert REFERENCE_FITS[FitVariable.THETA_OVER_PI] == (-0.0033, 1.019, 264.0, 3.14)


@pytest.mark.parametrize("var", list(FitVariable))
def test_recovers_synthetic_parameters(var):
    ref = REFERENCE_FITS[var]
    x = np.linspace(*RANGES[var], 40)
    fit = fit_logistic(x, logistic(x, *ref), var, strict=False)
    np.testing.assert_allclose([fit.A, fit.B, fit.C, fit.D], ref, rtol=1e-6)
    assert fit.residual_rms < 1e-10
    assert fit.variable is var
    assert fit(x) == pytest.approx(logistic(x, *ref))
    assert fit.to_dict()["variable"] == var.value


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_sample_order_does_not_matter(seed):
    x = np.linspace(0.2, 1.0, 15)
    y = logistic(x, *REFERENCE_FITS[FitVariable.DELTAP])
    perm = np.random.default_rng(seed).permutation(x.size)
    a = fit_logistic(x, y, "deltap", strict=False)
    b = fit_logistic(x[perm], y[perm], "deltap", strict=False)
    assert b.A == pytest.approx(a.A, abs=1e-9)
    assert b.D == pytest.approx(a.D, rel=1e-8)


def test_noisy_samples_stay_close():
    rng = np.random.default_rng(7)
    ref = REFERENCE_FITS[FitVariable.C2P]
    x = np.linspace(1.6, 3.6, 60)
    y = logistic(x, *ref) + rng.normal(0, 2e-3, x.size)
    fit = fit_logistic(x, y, "c2p", strict=False)
    gap = fit(x) - logistic(x, *ref)
    assert np.sqrt(np.mean(gap**2)) < 2e-3


def test_input_errors():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError, match="6"):
        fit_logistic(x, 0.5 * np.ones(5), "deltap")
    x = np.linspace(0, 1, 10)
    with pytest.raises(ValueError, match="P_e"):
        fit_logistic(x, np.linspace(0.0, 1.0, 10), "deltap")
    with pytest.raises(FitError):
        fit_logistic(x, 0.5 * np.ones(10), "deltap")
    with pytest.raises(ValueError):
        fit_logistic(x, 0.5 + 0.1 * x, "not-a-variable")

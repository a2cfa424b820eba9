import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lawson_ac.errors import FitError
from lawson_ac.fitting import fit_powers


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_exact_two_term_recovery(c1, c2):
    x = np.geomspace(5, 50, 300)
    fit = fit_powers(x, c1 * x**-2.0 + c2 * x**-3.0, (-2.0, -3.0), weight_exponent=2.0)
    assert fit.coefficients[0] == pytest.approx(c1, abs=1e-8)
    assert fit.coefficients[1] == pytest.approx(c2, abs=1e-8)
    assert fit.residual_rms < 1e-10


def test_model_mismatch_is_visible():
    x = np.geomspace(5, 50, 300)
    y = x**-3.0 * np.log(x)
    fit = fit_powers(x, y, (-2.0, -3.0), weight_exponent=2.0)
    assert fit.residual_rms > 1e-7
    assert not fit.stable


def test_ill_conditioned_design_is_refused():
    x = np.geomspace(10, 10.001, 50)
    with pytest.raises(FitError, match="widen"):
        fit_powers(x, x**-2.0, (-2.0, -2.0 - 1e-9))


def test_bad_windows():
    x = np.geomspace(1, 10, 50)
    with pytest.raises(FitError):
        fit_powers(x, x, (1.0,), window=(5, 4))
    with pytest.raises(FitError):
        fit_powers(x, x, (1.0, 2.0), window=(9.9, 10))


def test_loglog_slope_and_json(tmp_path):
    x = np.geomspace(2, 20, 100)
    fit = fit_powers(x, 3 * x**-2.0, (-2.0,))
    assert fit.loglog_slope == pytest.approx(-2.0, abs=1e-12)
    path = tmp_path / "fit.json"
    fit.to_json(path)
    data = json.loads(path.read_text())
    for key in ("exponents", "coefficients", "residual_rms", "window",
                "condition_number", "drift"):
        assert key in data
    assert data["condition_number"] <= 1e8

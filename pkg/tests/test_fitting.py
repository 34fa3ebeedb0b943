import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casim.fitting import FitError, fit_exp_decay, fit_power_law


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(-6, 3))
def test_power_law_exact_recovery(a, b):
    x = np.linspace(1.0, 6.0, 6)
    res = fit_power_law(x, a * x**b)
    assert res.params["b"] == pytest.approx(b, rel=1e-9, abs=1e-9)
    assert res.params["a"] == pytest.approx(a, rel=1e-9)
    assert res.rms_rel < 1e-9


def test_power_law_constant_data():
    res = fit_power_law([1, 2, 3, 4], [5.0] * 4)
    assert abs(res.params["b"]) < 1e-12
    assert res.params["a"] == pytest.approx(5.0)


def test_power_law_callable():
    res = fit_power_law([1, 2, 4], [3, 12, 48])
    assert res(3.0) == pytest.approx(27.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(0.1, 0.9), st.floats(0.3, 2.0))
def test_exp_decay_exact_recovery(f_inf, frac, tau):
    x = np.arange(0.5, 4.01, 0.5)
    y = f_inf - frac * f_inf * np.exp(-x / tau)
    res = fit_exp_decay(x, y * 1e-10)
    assert res.params["f_inf"] == pytest.approx(f_inf * 1e-10, rel=1e-6)
    assert res.params["tau"] == pytest.approx(tau, rel=1e-6)
    assert res.params["amp"] == pytest.approx(frac * f_inf * 1e-10, rel=1e-6)


def test_exp_decay_noisy():
    rng = np.random.default_rng(0)
    x = np.linspace(0.5, 4, 8)
    y = 2.0 - 1.2 * np.exp(-x / 0.8)
    res = fit_exp_decay(x, y * (1 + 1e-3 * rng.standard_normal(8)))
    assert res.params["tau"] == pytest.approx(0.8, rel=0.05)
    assert res.rms_rel < 3e-3


@pytest.mark.parametrize("x, y, fragment", [
    ([1, 2], [1, 2], "at least 3"),
    ([1, 1, 1], [1, 2, 3], "equal"),
    ([1, 2, np.nan], [1, 2, 3], "non-finite"),
    ([[1, 2, 3]], [[1, 2, 3]], "1-D"),
])
def test_fit_input_errors(x, y, fragment):
    for fit in (fit_power_law, fit_exp_decay):
        with pytest.raises(FitError, match=fragment):
            fit(x, y)


def test_power_law_needs_positive():
    with pytest.raises(FitError, match="positive"):
        fit_power_law([1, 2, 3], [1, -2, 3])


def test_exp_decay_unbracketed_reports_diagnostics():
    # linear data has no finite decay length
    with pytest.raises(FitError) as err:
        fit_exp_decay([1, 2, 3, 4], [1, 2, 3, 4])
    assert "tau_scan_min" in err.value.diagnostics

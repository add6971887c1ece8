import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from admissibility_lab.fitting import fit_exponent


def test_exact_power_law():
    x = np.geomspace(1, 100, 20)
    fit = fit_exponent(x, x**-0.5)
    assert fit.slope == pytest.approx(-0.5, abs=1e-14)
    assert fit.stderr < 1e-14
    assert not fit.curvature_flag
    assert fit.n_points == 20 and fit.window == (1.0, 100.0)


def test_constant():
    fit = fit_exponent(np.geomspace(1, 10, 8), np.full(8, 3.0))
    assert fit.slope == pytest.approx(0.0, abs=1e-15)
    assert not fit.curvature_flag


def test_exponential_is_curved():
    x = np.linspace(1, 10, 30)
    assert fit_exponent(x, np.exp(x)).curvature_flag


def test_window_selects_points():
    x = np.geomspace(1, 1000, 31)
    y = np.where(x < 10, x**2, 100 * (x / 10) ** -1.0)
    fit = fit_exponent(x, y, (10, 1000))
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.n_points == 21


def test_noise_gives_stderr():
    rng = np.random.default_rng(0)
    x = np.geomspace(1, 100, 40)
    fit = fit_exponent(x, x**0.7 * np.exp(0.01 * rng.standard_normal(40)))
    assert 0 < fit.stderr < 0.01
    assert abs(fit.slope - 0.7) < 5 * fit.stderr + 1e-3


@pytest.mark.parametrize("x,y", [([1, 2], [1, 2]), ([], [])])
def test_insufficient_points(x, y):
    with pytest.raises(ValueError, match="insufficient points"):
        fit_exponent(x, y)


@pytest.mark.parametrize("y", [[1, 0, 2, 3], [1, -1, 2, 3], [1, np.inf, 2, 3]])
def test_nonpositive(y):
    with pytest.raises(ValueError):
        fit_exponent([1, 2, 3, 4], y)


def test_summary_flat_json():
    fit = fit_exponent([1, 2, 4, 8], [1, 2, 4, 8])
    d = json.loads(fit.to_json())
    assert set(d) == {"slope", "stderr", "window_lo", "window_hi", "n_points", "curvature_flag"}


@settings(max_examples=50, deadline=None)
@given(slope=st.floats(-3, 3), c=st.floats(1e-3, 1e3), lo=st.floats(0.1, 10), span=st.floats(1.5, 1e3))
def test_recovers_any_exact_power(slope, c, lo, span):
    x = np.geomspace(lo, lo * span, 12)
    fit = fit_exponent(x, c * x**slope)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert not fit.curvature_flag

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import CubicSpline

from anisoflow.interp import InterpScheme, sample

SCHEMES = list(InterpScheme)


@pytest.mark.property
@pytest.mark.parametrize("scheme", SCHEMES)
def test_integer_positions_exact(scheme):
    line = np.random.default_rng(0).random(12)
    for k in range(12):
        assert sample(line, k, scheme) == line[k]


def test_quadratic_examples():
    line = np.arange(10.0) ** 2
    assert sample(line, 3.5, InterpScheme.KEYS) == pytest.approx(12.25, abs=1e-12)
    assert sample(line, 3.5, InterpScheme.LINEAR) == pytest.approx(12.5, abs=1e-12)


@pytest.mark.property
def test_keys_reproduces_quadratics_everywhere():
    line = 0.3 * np.arange(9.0) ** 2 - 2 * np.arange(9.0) + 1
    for pos in np.linspace(0, 8, 81):
        assert sample(line, pos, InterpScheme.KEYS) == pytest.approx(
            0.3 * pos * pos - 2 * pos + 1, abs=1e-12)


@pytest.mark.property
@pytest.mark.parametrize("scheme", SCHEMES)
def test_linear_functions_reproduced(scheme):
    line = 2.0 * np.arange(8.0) - 3
    for pos in np.linspace(0, 7, 29):
        assert sample(line, pos, scheme) == pytest.approx(2 * pos - 3, abs=1e-12)


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(3, 40), st.floats(0, 1), st.integers(0, 2 ** 31))
def test_cubic_is_natural_spline(n, frac, seed):
    line = np.random.default_rng(seed).random(n)
    pos = frac * (n - 1)
    ref = CubicSpline(np.arange(n), line, bc_type="natural")(pos)
    assert sample(line, pos, InterpScheme.CUBIC) == pytest.approx(float(ref), abs=1e-12)


@pytest.mark.property
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.floats(0, 1), st.integers(0, 2 ** 31))
def test_linear_is_convex(n, frac, seed):
    line = np.random.default_rng(seed).random(n)
    pos = frac * (n - 1)
    i = min(int(pos), n - 2)
    v = sample(line, pos, InterpScheme.LINEAR)
    assert min(line[i], line[i + 1]) - 1e-15 <= v <= max(line[i], line[i + 1]) + 1e-15


def test_keys_overshoot_bounded():
    # worst case is the outer tap weight (t^3 - t^2)/2 at t = 2/3, i.e. -2/27
    step = np.array([0.0] * 6 + [1.0] * 6)
    vals = [sample(step, p, InterpScheme.KEYS) for p in np.linspace(0, 11, 3301)]
    assert min(vals) == pytest.approx(-2 / 27, abs=1e-12)
    assert max(vals) == pytest.approx(1 + 2 / 27, abs=1e-12)


def test_out_of_range():
    with pytest.raises(IndexError):
        sample(np.ones(5), 4.5)
    with pytest.raises(IndexError):
        sample(np.ones(5), -0.1)


def test_bad_line():
    with pytest.raises(ValueError):
        sample(np.ones((2, 2)), 0.5)


def test_taps():
    assert InterpScheme.LINEAR.taps == 2
    assert InterpScheme.CUBIC.taps == 4
    assert InterpScheme.KEYS.taps == 4

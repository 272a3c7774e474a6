import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risloc.specfun import bessel_j0, bessel_y0, hankel2_0

from oracles import j0_oracle, y0_oracle, bisect_root


def test_j0_at_zero():
    assert abs(bessel_j0(0.0) - 1.0) < 1e-12


def test_j0_at_one_matches_series():
    assert abs(bessel_j0(1.0) - 0.7651976866) < 1e-9
    assert abs(bessel_j0(1.0) - j0_oracle(1.0)) < 1e-14


def test_j0_first_root_located_by_series_bisection():
    root = bisect_root(j0_oracle, 2.0, 3.0)
    assert abs(root - 2.4048255577) < 1e-8
    assert abs(bessel_j0(root)) < 1e-9


def test_y0_at_one_matches_series():
    assert abs(bessel_y0(1.0) - 0.0882569642) < 1e-9
    assert abs(bessel_y0(1.0) - y0_oracle(1.0)) < 1e-14


def test_y0_first_root():
    root = bisect_root(y0_oracle, 0.5, 1.0)
    assert abs(root - 0.8935769663) < 1e-8
    assert abs(bessel_y0(root)) < 1e-8


def test_y0_log_divergence_sign():
    assert bessel_y0(1e-8) < -10


def test_y0_rejects_nonpositive():
    with pytest.raises(ValueError):
        bessel_y0(0.0)
    with pytest.raises(ValueError):
        bessel_y0(-1.0)


def test_j0_rejects_nan():
    with pytest.raises(ValueError):
        bessel_j0(float("nan"))


def test_hankel_at_one():
    h = hankel2_0(1.0)
    assert abs(h - (0.7651976866 - 0.0882569642j)) < 2e-9


def test_hankel_large_argument_magnitude():
    # asymptotic envelope sqrt(2/(pi x)) at x = 10
    h = hankel2_0(10.0)
    assert abs(abs(h) - 0.2525) / 0.2525 < 0.05


@given(st.floats(min_value=1e-6, max_value=100.0))
@settings(max_examples=200, deadline=None)
def test_hankel_is_j0_minus_jy0_bit_exact(x):
    h = hankel2_0(x)
    assert h.real == bessel_j0(x)
    assert h.imag == -bessel_y0(x)


def test_wronskian_identity():
    # J0 Y0' - J0' Y0 = 2/(pi x), derivatives by centered differences
    rng = np.random.default_rng(7)
    xs = rng.uniform(0.5, 90.0, size=200)
    h = 1e-5
    j0p = (bessel_j0(xs + h) - bessel_j0(xs - h)) / (2 * h)
    y0p = (bessel_y0(xs + h) - bessel_y0(xs - h)) / (2 * h)
    w = bessel_j0(xs) * y0p - j0p * bessel_y0(xs)
    ref = 2.0 / (np.pi * xs)
    assert np.max(np.abs(w - ref) / np.abs(ref)) < 1e-8


def test_large_argument_envelope():
    xs = np.linspace(50.0, 100.0, 301)
    h = hankel2_0(xs)
    env = np.abs(h) * np.sqrt(np.pi * xs / 2.0)
    assert np.max(np.abs(env - 1.0)) < 0.01


def test_array_input_round_trip():
    xs = np.array([0.5, 1.0, 7.9, 8.1, 40.0])
    out = bessel_j0(xs)
    assert out.shape == xs.shape
    for x, v in zip(xs, out):
        assert v == bessel_j0(float(x))


def test_against_series_oracle_dense():
    # spot version of the acceptance sweep: max(1,|.|)-scaled error <= 1e-10/1e-9
    rng = np.random.default_rng(3)
    xs = rng.uniform(1e-3, 100.0, size=200)
    for x in xs:
        jr = j0_oracle(x)
        yr = y0_oracle(x)
        assert abs(bessel_j0(x) - jr) <= 1e-10 * max(1.0, abs(jr))
        assert abs(bessel_y0(x) - yr) <= 1e-9 * max(1.0, abs(yr))

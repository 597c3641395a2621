import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from d2dmimo.quadrature import (QuadratureConvergenceError, integrate_finite, integrate_semi_infinite,
                                integrate_to_minus_infinity)


def test_polynomial_exact():
    res = integrate_finite(lambda x: 3 * x ** 2, 0.0, 2.0)
    assert res.value == pytest.approx(8.0, rel=1e-14)
    assert res.evaluations == 15


def test_endpoint_singularity():
    res = integrate_finite(lambda x: x ** -0.5, 0.0, 1.0, 1e-10, 0.0)
    assert res.value == pytest.approx(2.0, rel=1e-9)


def test_breakpoint_kink():
    res = integrate_finite(lambda x: np.abs(x - 0.3), 0.0, 1.0, 1e-13, 0.0, breakpoints=[0.3])
    assert res.value == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-13)


def test_vector_output():
    t = np.array([0.5, 1.0, 2.0])
    res = integrate_semi_infinite(lambda x: np.exp(-np.outer(x, t)), 0.0, 1e-11, 0.0)
    np.testing.assert_allclose(res.value, 1.0 / t, rtol=1e-10)
    assert res.abs_error_estimate.shape == (3,)


@given(st.floats(0.2, 20.0), st.floats(-5.0, 5.0))
def test_semi_infinite_against_scipy(rate, a):
    ours = integrate_semi_infinite(lambda x: np.exp(-rate * x) / (1 + x * x), a, 1e-10, 1e-300).value
    ref = integrate.quad(lambda x: math.exp(-rate * x) / (1 + x * x), a, np.inf, epsrel=1e-12, epsabs=0)[0]
    assert ours == pytest.approx(ref, rel=1e-8)


def test_minus_infinity():
    res = integrate_to_minus_infinity(lambda x: np.exp(x), 1.0, 1e-12, 0.0)
    assert res.value == pytest.approx(math.e, rel=1e-11)


def test_error_estimate_covers_error():
    res = integrate_finite(lambda x: np.sin(30 * x) ** 2, 0.0, 3.0, 1e-6, 0.0)
    exact = 1.5 - math.sin(180.0) / 120.0
    assert abs(res.value - exact) <= max(res.abs_error_estimate, 1e-15)


def test_convergence_failure_carries_partial_result():
    with pytest.raises(QuadratureConvergenceError) as info:
        integrate_finite(lambda x: np.sin(1.0 / x) / x, 0.0, 1.0, 1e-14, 0.0, max_panels=20)
    assert info.value.result.evaluations > 0


def test_empty_interval():
    assert integrate_finite(lambda x: x, 1.0, 1.0).value == 0.0
    with pytest.raises(ValueError):
        integrate_finite(lambda x: x, 1.0, 0.0)

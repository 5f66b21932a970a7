import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tpnsi.quadrature import QuadratureError, QuadratureSpec, geometric_breakpoints, integrate


def test_polynomial_exact():
    value, err = integrate(lambda x: 3 * x**2, [0.0, 2.0])
    assert value == pytest.approx(8.0, rel=1e-15)
    assert err < 1e-12


def test_narrow_gaussian_needs_breakpoints():
    s = 1e-3
    f = lambda x: np.exp(-((x / s) ** 2))
    value, _ = integrate(f, geometric_breakpoints(0.0, 1.0, s))
    assert value == pytest.approx(math.sqrt(math.pi) * s / 2, rel=1e-12)


def test_nonconvergence_carries_partial_value():
    spec = QuadratureSpec(rel_tol=1e-15, abs_tol=1e-300, max_subdivisions=2)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sqrt(np.abs(x - 0.3)), [0.0, 1.0], spec)
    assert math.isfinite(info.value.value)
    assert info.value.error > 0


@pytest.mark.parametrize("field,value", [("rel_tol", 0.0), ("abs_tol", -1.0), ("max_subdivisions", 0)])
def test_spec_validation(field, value):
    with pytest.raises(ValueError):
        QuadratureSpec(**{field: value})


def test_breakpoints_geometric():
    assert geometric_breakpoints(0.0, 10.0, 1.0) == [0.0, 1.0, 2.0, 4.0, 8.0, 10.0]


@given(st.floats(0.1, 20.0), st.floats(0.1, 5.0))
def test_exponential_integral(k, b):
    value, err = integrate(lambda x: np.exp(-k * x), geometric_breakpoints(0.0, b, 0.5 / k))
    exact = -math.expm1(-k * b) / k
    assert abs(value - exact) <= max(err, 1e-15 * exact) + 1e-15

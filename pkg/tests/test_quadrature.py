import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgnlse.errors import QuadratureNotConverged
from fgnlse.quadrature import QuadratureSpec, integrate


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.floats(-3, 3), st.floats(0.1, 4))
def test_polynomials_are_exact(coeffs, a, width):
    b = a + width
    P = np.polynomial.Polynomial(coeffs)
    val, err = integrate(P, a, b)
    exact = P.integ()(b) - P.integ()(a)
    assert val == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_vector_valued_integrand():
    f = lambda t: np.stack([np.exp(t), np.cos(t)], axis=-1)  # noqa: E731
    val, _ = integrate(f, 0.0, 2.0)
    np.testing.assert_allclose(val, [math.e**2 - 1, math.sin(2.0)], rtol=1e-12)


def test_inverse_sqrt_endpoint():
    # the substitution-free rule still converges on an integrable endpoint singularity
    val, _ = integrate(lambda t: 1 / np.sqrt(t), 0.0, 1.0, QuadratureSpec(rel_tol=1e-6, max_depth=40))
    assert val == pytest.approx(2.0, rel=1e-5)


def test_depth_limit_raises():
    with pytest.raises(QuadratureNotConverged):
        integrate(lambda t: np.sin(1 / np.maximum(t, 1e-12)), 0.0, 1.0, QuadratureSpec(max_depth=2))

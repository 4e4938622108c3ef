import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fgnlse.errors import InvalidRiemannMatrix
from fgnlse.theta import RiemannMatrix, ThetaValue, theta, theta_batch, theta_grid, theta_ratio

TAU2 = np.array([[1.3j + 0.2, 0.3 - 0.4j], [0.3 - 0.4j, 0.9j - 0.1]])


def brute_force(x, tau, n=12):
    g = len(x)
    total = 0j
    for m in itertools.product(range(-n, n + 1), repeat=g):
        m = np.array(m)
        total += np.exp(1j * np.pi * m @ tau @ m + 2j * np.pi * m @ x)
    return total


def random_riemann(rng, g):
    A = rng.normal(size=(g, g))
    Y = A @ A.T + 0.5 * np.eye(g)
    X = rng.normal(size=(g, g))
    return 0.5 * (X + X.T) + 1j * Y


finite = st.floats(-2, 2, allow_nan=False)


@given(hnp.arrays(float, 2, elements=finite), hnp.arrays(float, 2, elements=st.floats(-0.5, 0.5)))
def test_matches_direct_lattice_sum(re, im):
    x = re + 1j * im
    assert theta(x, TAU2).value == pytest.approx(brute_force(x, TAU2), rel=1e-9, abs=1e-12)


@settings(max_examples=30)
@given(
    st.integers(0, 2**31),
    hnp.arrays(int, 2, elements=st.integers(-3, 3)),
    hnp.arrays(int, 2, elements=st.integers(-3, 3)),
)
def test_quasi_periodicity(seed, m, n):
    rng = np.random.default_rng(seed)
    tau = random_riemann(rng, 2)
    x = rng.normal(size=2) + 0.3j * rng.normal(size=2)
    lhs = theta(x + n + tau @ m, tau)
    rhs = theta(x, tau)
    # compare logs so large factors cannot overflow
    log_factor = -1j * np.pi * m @ tau @ m - 2j * np.pi * m @ x
    d = np.log(lhs.mantissa / rhs.mantissa) + lhs.log_scale - rhs.log_scale - log_factor
    assert abs(d.real) < 1e-9
    assert abs((d.imag + np.pi) % (2 * np.pi) - np.pi) < 1e-9


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_even_function(seed, g):
    rng = np.random.default_rng(seed)
    tau = random_riemann(rng, g)
    x = rng.normal(size=g) + 0.2j * rng.normal(size=g)
    assert theta(-x, tau).value == pytest.approx(theta(x, tau).value, rel=1e-10)


def test_large_imaginary_argument_does_not_overflow():
    x = np.array([0.1 + 400j, -0.2 + 300j])
    v = theta(x, TAU2)
    assert np.isfinite(v.mantissa) and v.log_scale > 700
    assert 1 <= abs(v.mantissa) < np.e


def test_batch_and_grid_agree_with_scalar():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(7, 2)) + 0.1j * rng.normal(size=(7, 2))
    mant, ls = theta_batch(X, TAU2)
    ref = np.array([theta(x, TAU2).value for x in X])
    np.testing.assert_allclose(mant * np.exp(ls), ref, rtol=1e-10)
    u = rng.normal(size=(4, 2)) + 0.2j
    v = rng.normal(size=(5, 2))
    G = theta_grid(u, v, TAU2)
    ref = np.array([[theta(a + b, TAU2).value for b in v] for a in u])
    np.testing.assert_allclose(G, ref, rtol=1e-10)


def test_ratio_and_normalization():
    x, y = np.array([0.1, 0.2]), np.array([0.3, -0.1])
    assert theta_ratio(x, y, TAU2) == pytest.approx(theta(x, TAU2).value / theta(y, TAU2).value, rel=1e-12)
    assert ThetaValue.normalized(0j, 5.0) == ThetaValue(0j, 0.0)


def test_invalid_matrices():
    with pytest.raises(InvalidRiemannMatrix):
        RiemannMatrix(np.array([[1j, 0.5], [0.1, 1j]]))
    with pytest.raises(InvalidRiemannMatrix):
        RiemannMatrix(np.array([[1j, 0], [0, -1j]]))
    with pytest.raises(ValueError):
        theta([0.0], [[1j]], eps=2.0)

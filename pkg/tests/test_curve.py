import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgnlse import curve as cv
from fgnlse.errors import DegenerateSpectrum, OverlappingCuts


def j_invariant_from_tau(tau):
    n = np.arange(-30, 31)
    q = np.exp(1j * np.pi * tau)
    t2 = np.sum(q ** ((n + 0.5) ** 2))
    t3 = np.sum(q ** (n**2))
    lam = t2**4 / t3**4
    return 256 * (1 - lam + lam**2) ** 3 / (lam**2 * (1 - lam) ** 2)


def j_invariant_from_points(e):
    e1, e2, e3, e4 = e
    lam = (e1 - e3) * (e2 - e4) / ((e1 - e4) * (e2 - e3))
    return 256 * (1 - lam + lam**2) ** 3 / (lam**2 * (1 - lam) ** 2)


def periods(points):
    c = cv.build_curve(cv.MainSpectrum(points))
    return c, cv.period_matrices(c, cv.canonical_homology_basis(c))


def test_spectrum_validation():
    with pytest.raises(DegenerateSpectrum):
        cv.MainSpectrum(())
    with pytest.raises(DegenerateSpectrum):
        cv.MainSpectrum((1 - 1j,))
    with pytest.raises(DegenerateSpectrum):
        cv.MainSpectrum((1j, 1j))
    with pytest.raises(OverlappingCuts):
        cv.build_curve(cv.MainSpectrum((1j, 2j)))


def test_spectrum_json_roundtrip():
    s = cv.MainSpectrum((-1 + 4.5j, 5j, 1 + 4.5j))
    assert cv.MainSpectrum.from_json(s.to_json()) == s
    assert s.genus == 2


@settings(max_examples=8)
@given(
    st.floats(-2, 2),
    st.floats(0.6, 3),
    st.floats(0.3, 3),
    st.floats(0.3, 3),
)
def test_genus1_tau_matches_modular_invariant(x0, gap, h1, h2):
    # j(tau) is basis independent and fixed by the cross-ratio of the branch points
    pts = (complex(x0, h1), complex(x0 + gap, h2))
    c, pd = periods(pts)
    tau = complex(pd.tau[0, 0])
    assert tau.imag > 0
    j1 = j_invariant_from_tau(tau)
    j2 = j_invariant_from_points(c.branch_points)
    assert abs(j1 - j2) <= 1e-7 * max(1.0, abs(j2))


@settings(max_examples=6)
@given(st.floats(0.3, 4), st.floats(-3, 3))
def test_tau_invariant_under_real_affine_maps(scale, shift):
    base = (-1 + 4.5j, 5j, 1 + 4.5j)
    _, p0 = periods(base)
    _, p1 = periods(tuple(scale * z + shift for z in base))
    np.testing.assert_allclose(p1.tau, p0.tau, atol=1e-9)


@pytest.mark.parametrize(
    "points",
    [
        (-1 + 4.5j, 5j, 1 + 4.5j),
        (-11.5 + 5j, -10.5 + 4j, 10.5 + 4j, 11.5 + 5j),
        (-0.3 + 1j, 0.5 + 2j),
    ],
)
def test_basis_is_canonical_and_tau_is_riemann(points):
    c, pd = periods(points)
    g = c.genus
    M = cv.intersection_matrix(cv.canonical_homology_basis(c))
    J = np.block([[np.zeros((g, g)), np.eye(g)], [-np.eye(g), np.zeros((g, g))]])
    np.testing.assert_array_equal(M, J)
    np.testing.assert_allclose(pd.tau, pd.tau.T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(pd.tau.imag)) > 0


def test_symmetric_spectrum_gives_imaginary_tau():
    # reflection symmetry Re -> -Re makes the normalized periods purely imaginary up to half-integers
    _, pd = periods((-1 + 4.5j, 5j, 1 + 4.5j))
    frac = pd.tau.real * 2
    np.testing.assert_allclose(frac, np.round(frac), atol=1e-9)


def test_transform_basis_is_unimodular_only():
    _, pd = periods((-1 + 4.5j, 5j, 1 + 4.5j))
    with pytest.raises(ValueError):
        cv.transform_basis(pd, [[2, 0], [0, 1]])
    t = cv.transform_basis(pd, [[1, 1], [0, 1]])
    assert np.min(np.linalg.eigvalsh(t.tau.imag)) > 0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgnlse import fgs, nlse
from fgnlse.errors import NonFiniteField, StepUnderflow

N = 256
DT = 2.0 / N  # ns
T = (np.arange(N) - N // 2) * DT


def soliton(t0=0.05, beta2=-21.5, gamma=1.3):
    p0 = abs(beta2) * 1e-6 / (gamma * 1e-3 * t0**2)  # mW
    return np.sqrt(p0) / np.cosh(T / t0)


@given(st.floats(-60, 60))
def test_db_roundtrip(db):
    assert float(nlse.linear_to_db(nlse.db_to_linear(db))) == pytest.approx(db, abs=1e-9)


@given(st.floats(0.0, 1.0), st.floats(1.0, 200.0))
def test_effective_length_bounds(alpha, L):
    leff, g = nlse.effective_params(1.3, alpha, L)
    assert 0 < leff <= L
    assert g == pytest.approx(1.3 * leff / L)
    if alpha == 0:
        assert leff == L


def test_lengths():
    assert nlse.dispersion_length(0.05, -21.5) == pytest.approx(2500 / 21.5)
    assert nlse.nonlinear_length(1.3, 10.0) == pytest.approx(1 / 0.013)


@settings(max_examples=10)
@given(st.floats(1.0, 150.0), st.floats(-30, -5))
def test_linear_dispersion_matches_analytic(L, beta2):
    A0 = np.exp(-(T**2) / (2 * 0.03**2)) * np.exp(2j * np.pi * 3 * T)
    span = nlse.FiberSpan(beta2, 0.0, 0.0, L)
    A = nlse.split_step(A0, span, dt=DT)
    w = 2 * np.pi * nlse.frequencies(N, DT)
    ref = np.fft.ifft(np.fft.fft(A0) * np.exp(0.5j * beta2 * 1e-6 * w**2 * L))
    np.testing.assert_allclose(A, ref, atol=1e-12)


def test_fundamental_soliton_keeps_its_shape():
    span = nlse.FiberSpan(-21.5, 1.3, 0.0, 75.0)
    A0 = soliton()
    A = nlse.split_step(A0, span, nlse.SimConfig(max_phase_deg=0.02), dt=DT)
    assert np.max(np.abs(np.abs(A) - np.abs(A0))) < 1e-3 * np.max(np.abs(A0))
    # the soliton phase advances by z / (2 L_D)
    ld = nlse.dispersion_length(0.05, -21.5)
    assert np.angle(A[N // 2] / A0[N // 2]) == pytest.approx((75.0 / (2 * ld) + np.pi) % (2 * np.pi) - np.pi, abs=1e-3)


@given(st.floats(0.0, 0.4))
def test_energy_follows_the_loss(alpha):
    span = nlse.FiberSpan(-21.5, 1.3, alpha, 75.0)
    A0 = soliton()
    A = nlse.split_step(A0, span, dt=DT)
    e0, e1 = np.sum(np.abs(A0) ** 2), np.sum(np.abs(A) ** 2)
    assert e1 / e0 == pytest.approx(math.exp(-nlse.alpha_per_km(alpha) * 75.0), rel=1e-10)


def test_batch_rows_are_independent():
    span = nlse.FiberSpan(-21.5, 1.3, 0.2, 75.0)
    rows = np.stack([soliton(), 0.5 * soliton()])
    B = nlse.split_step(rows, span, dt=DT)
    # a shared step sequence is at least as fine as each row needs
    for r in range(2):
        single = nlse.split_step(rows[r], span, dt=DT)
        assert np.max(np.abs(B[r] - single)) < 1e-4 * np.max(np.abs(single))


def test_split_step_validation():
    span = nlse.FiberSpan()
    with pytest.raises(ValueError):
        nlse.split_step(np.ones(48), span, dt=DT)
    with pytest.raises(ValueError):
        nlse.split_step(np.ones(64), span)
    with pytest.raises(StepUnderflow):
        nlse.split_step(np.full(64, 1e9), span, dt=DT)
    with pytest.raises(ValueError):
        nlse.FiberSpan(length=0.0)
    with pytest.raises(ValueError):
        nlse.SimConfig(max_phase_deg=0)


def test_amplifier_restores_span_loss():
    link = nlse.LinkModel(nlse.FiberSpan(alpha=0.2, length=75.0), n_spans=3)
    g0 = fgs.FieldGrid(soliton()[None, :], DT, [0.0])
    out = nlse.propagate_link(g0, link)
    assert out.samples.shape == (4, N)
    np.testing.assert_allclose(out.z_values, [0, 75, 150, 225])
    e = np.sum(out.power, axis=1)
    np.testing.assert_allclose(e / e[0], 1.0, rtol=1e-10)


def test_zero_spans_copies_input():
    g0 = fgs.FieldGrid(soliton()[None, :], DT, [0.0])
    out = nlse.propagate_link(g0, nlse.LinkModel(n_spans=0))
    np.testing.assert_array_equal(out.samples, g0.samples)


def test_filter_offset_breaks_spectral_symmetry():
    A0 = np.cos(2 * np.pi * 10 * T) + 1.5
    link = nlse.LinkModel(nlse.FiberSpan(gamma=0.0, alpha=0.0), n_spans=1, filter=nlse.GaussianFilter(30.0, 8.0))
    out = nlse.propagate_link(fgs.FieldGrid(A0[None, :], DT, [0.0]), link)
    assert nlse.spectral_asymmetry(A0, 40) < 1e-12
    assert nlse.spectral_asymmetry(out.samples[-1], 40) > 0.1
    f = nlse.GaussianFilter(147.0)
    assert f.response(np.array([73.5]))[0] == pytest.approx(0.5)


def test_ase_statistics():
    rng = np.random.default_rng(0)
    n = 2**16
    noise = nlse.add_ase(np.zeros(n), DT, 100.0, 5.0, rng)
    var = nlse.ase_variance(100.0, 5.0, 1 / DT)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(var, rel=0.03)
    assert abs(np.mean(noise)) < 5 * math.sqrt(var / n)
    # n_sp (G - 1) h nu B with n_sp = (NF G - 1) / (2 (G - 1)), in mW
    nu = nlse.C_LIGHT / 1550e-9
    expect = (nlse.db_to_linear(5.0) * 100 - 1) / 2 * nlse.H_PLANCK * nu * (1e9 / DT) * 1e3
    assert var == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        nlse.add_ase(np.zeros(4), DT, 1.0, 5.0, rng)


def test_ensemble_is_seeded():
    link = nlse.LinkModel(nlse.FiberSpan(), n_spans=2, ase=nlse.ASEConfig(5.0, seed=3))
    a = nlse.propagate_ensemble(soliton(), DT, link, 4, [0, 2])
    b = nlse.propagate_ensemble(soliton(), DT, link, 4, [0, 2])
    np.testing.assert_array_equal(a[2], b[2])
    np.testing.assert_array_equal(a[0], np.tile(soliton(), (4, 1)))
    assert not np.allclose(a[2][0], a[2][1])
    with pytest.raises(ValueError):
        nlse.propagate_ensemble(soliton(), DT, link, 2, [5])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_field_is_reported():
    g0 = fgs.FieldGrid(np.ones((1, 16)), DT, [0.0])
    link = nlse.LinkModel(nlse.FiberSpan(gamma=0.0), n_spans=1, gain_db=1e5)
    with pytest.raises(NonFiniteField):
        nlse.propagate_link(g0, link)


def test_spectral_helpers():
    tone = np.exp(2j * np.pi * 4 * T)
    assert nlse.fourier_bandwidth(tone, DT) == pytest.approx(1 / (N * DT))
    idx, mag = nlse.comb_lines(tone + 0.5, 2)
    np.testing.assert_array_equal(idx, [-2, -1, 0, 1, 2])
    assert mag[2] == pytest.approx(0.5)
    m, x = nlse.relative_deviation(np.array([[1.0, 2.0]]), np.array([[1.0, 1.0]]))
    assert (m, x) == (0.5, 1.0)

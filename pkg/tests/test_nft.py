import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgnlse import fgs, nft
from fgnlse.errors import LengthMismatch, NoRootsFound

PAPER = (-1 + 4.5j, 5j, 1 + 4.5j)
lam_st = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=30)
@given(st.floats(0.1, 3), st.floats(0.2, 3), lam_st)
def test_constant_potential_discriminant(a, T, lam):
    # Delta = cos(T sqrt(lam^2 + a^2)) for psi = a
    pot = nft.ZSPotential(np.full(16, a), T)
    d = nft.floquet_discriminant(pot, np.array([lam]))[0]
    assert d == pytest.approx(np.cos(T * np.sqrt(lam**2 + a**2 + 0j)), rel=1e-9, abs=1e-9)


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.integers(4, 64), lam_st)
def test_monodromy_is_unimodular(seed, n, lam):
    rng = np.random.default_rng(seed)
    pot = nft.ZSPotential(rng.normal(size=n) + 1j * rng.normal(size=n), rng.uniform(0.5, 3))
    M = nft.monodromy(pot, np.array([lam]))[0]
    assert abs(np.linalg.det(M) - 1) < 1e-9 * max(1.0, np.max(np.abs(M)) ** 2)


@settings(max_examples=20)
@given(st.integers(0, 2**31), lam_st)
def test_schwarz_symmetry(seed, lam):
    rng = np.random.default_rng(seed)
    pot = nft.ZSPotential(rng.normal(size=32) + 1j * rng.normal(size=32), 1.3)
    d = nft.floquet_discriminant(pot, np.array([lam, np.conj(lam)]))
    assert d[1] == pytest.approx(np.conj(d[0]), rel=1e-9, abs=1e-9)


def test_plane_wave_band_edge():
    est = nft.find_main_spectrum(nft.ZSPotential(np.full(64, 1.7), 1.3), search_box=(-1, 1, 0.05, 3))
    assert nft.match_points(est.accepted, [1.7j]) < 1e-10


@pytest.mark.parametrize("k", [-2, 1, 3])
def test_carrier_shifts_the_spectrum(k):
    # psi -> psi exp(i k t) moves lam by -k / 2
    n, T = 128, 2 * np.pi
    t = np.arange(n) * T / n
    pot = nft.ZSPotential(1.5 * np.exp(1j * k * t), T)
    est = nft.find_main_spectrum(pot, search_box=(-2, 2, 0.5, 2.5), grid_density=60, upsample=4)
    assert nft.match_points(est.accepted, [-k / 2 + 1.5j]) < 1e-3


def test_recovers_the_genus2_spectrum():
    params = fgs.construct(PAPER, "commensurate")
    pT = fgs.time_period(params)
    t = np.arange(128) * pT / 128
    for z in (0.0, 0.013):
        psi = fgs.evaluate_grid(params, [z], t)[0]
        est = nft.find_main_spectrum(nft.ZSPotential(psi, pT), upsample=8)
        assert nft.match_points(est.accepted, PAPER) < 1e-4
        assert nft.match_points(PAPER, est.accepted) < 1e-4


def test_upsampling_preserves_samples():
    rng = np.random.default_rng(1)
    n = 32
    c = np.zeros(n, complex)
    c[:6] = rng.normal(size=6)
    c[-5:] = rng.normal(size=5)
    pot = nft.ZSPotential(np.fft.ifft(c), 2.0)
    up = pot.upsampled(4)
    assert up.samples.size == 128 and up.period == 2.0
    np.testing.assert_allclose(up.samples[::4], pot.samples, atol=1e-14)


def test_potential_validation():
    with pytest.raises(ValueError):
        nft.ZSPotential(np.zeros(0), 1.0)
    with pytest.raises(ValueError):
        nft.ZSPotential(np.ones(4), 0.0)
    with pytest.raises(ValueError):
        nft.ZSPotential(np.array([np.nan]), 1.0)
    with pytest.raises(ValueError):
        nft.ensemble_spectra(np.ones((1, 8)), 1.0, search_box=(1, -1, 0, 1))


def test_no_roots_raises():
    # tiny box far from the band edge of a weak plane wave
    with pytest.raises(NoRootsFound):
        nft.find_main_spectrum(nft.ZSPotential(np.full(8, 0.1), 0.5), search_box=(2, 3, 5, 6), grid_density=8)


def test_estimate_json_roundtrip():
    est = nft.find_main_spectrum(nft.ZSPotential(np.full(16, 1.0), 1.0), search_box=(-1, 1, 0.05, 2))
    back = nft.SpectrumEstimate.from_dict(json.loads(est.to_json()))
    np.testing.assert_array_equal(back.points, est.points)
    np.testing.assert_array_equal(back.converged, est.converged)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_average_periods(n_groups, group, block):
    rec = np.arange(n_groups * group * block, dtype=float)
    out = nft.average_periods(rec, block, group)
    assert out.shape == (n_groups, block)
    np.testing.assert_allclose(out, rec.reshape(n_groups, group, block).mean(axis=1))



def test_average_periods_length_mismatch():
    with pytest.raises(LengthMismatch):
        nft.average_periods(np.arange(7.0), 2, 3)
    with pytest.raises(ValueError):
        nft.average_periods(np.arange(4.0), 0, 1)


def test_histogram_counts_and_csv(tmp_path):
    pts = np.array([0.1 + 4j, -0.9 + 4.5j, 0.2 + 0.1j, 9 + 4j])
    est = nft.SpectrumEstimate(pts, np.zeros(4), np.ones(4, int), np.ones(4, bool))
    h = nft.spectrum_histogram([est, est], bins=(10, 7), box=(-3, 3, 0, 7), floor=0.5)
    assert h.total == 4 and h.artifacts == 2 and h.outside == 2
    h.to_csv(tmp_path / "h.csv")
    rows = (tmp_path / "h.csv").read_text().splitlines()
    assert rows[0] == "re_center,im_center,count" and len(rows) == 71


def test_match_points():
    assert nft.match_points([], [1j]) == np.inf
    assert nft.match_points([1j, 2j], [1.1j]) == pytest.approx(0.1)

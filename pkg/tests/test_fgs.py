import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fgnlse import fgs
from fgnlse.errors import NonRealFrequency

PAPER = (-1 + 4.5j, 5j, 1 + 4.5j)


@pytest.fixture(scope="module")
def params():
    return fgs.construct(PAPER, "commensurate")


@given(st.floats(-2, 2), st.floats(0.2, 3))
def test_genus0_is_the_plane_wave(a, b):
    p = fgs.construct([complex(a, b)])
    assert p.genus == 0
    assert abs(p.K) == pytest.approx(b)
    z, t = 0.37, 0.81
    psi = fgs.evaluate_psi(p, z, t)
    assert abs(psi) == pytest.approx(b, rel=1e-12)
    # i psi_z + psi_tt + 2|psi|^2 psi = 0 for psi = K exp(i(w0 t + k0 z))
    assert -p.k0 - p.omega0**2 + 2 * b**2 == pytest.approx(0, abs=1e-10)


def test_paper_parameters(params):
    assert params.genus == 2
    assert params.omega0 == 0.0
    assert params.omega[0] == 0.0
    assert params.k[0] == pytest.approx(2 * params.k[1], rel=1e-9)
    assert abs(params.K) ** 2 == pytest.approx(3.2098, rel=1e-4)
    # peak of |psi|^2 is (sum Im lambda)^2 for this reflection-symmetric spectrum
    z = np.linspace(0, fgs.spatial_period(params), 201)
    t = np.linspace(0, fgs.time_period(params), 128, endpoint=False)
    P = np.abs(fgs.evaluate_grid(params, z, t)) ** 2
    assert P.max() == pytest.approx(14.0**2, rel=1e-3)


def test_residual_small(params):
    r = fgs.nlse_residual(params, n_zeta=128, n_tau=128)
    assert r["residual"] < 1e-6
    assert r["residual"] < r["residual_coarse"]


@settings(max_examples=5)
@given(st.floats(0.4, 2.5))
def test_spectral_scaling(c):
    # lambda -> c lambda maps psi to c psi(c^2 z, c t)
    p = fgs.construct(PAPER, "commensurate")
    q = fgs.construct(tuple(c * z for z in PAPER), "commensurate")
    z = np.linspace(0, 0.05, 4)
    t = np.linspace(0, 1.3, 5)
    a = c * np.abs(fgs.evaluate_grid(p, c * c * z, c * t))
    b = np.abs(fgs.evaluate_grid(q, z, t))
    np.testing.assert_allclose(b, a, rtol=1e-8)


def test_galilean_boost(params):
    # a real shift s of the spectrum moves the modulus along t + 4 s z
    s = 0.7
    q = fgs.construct(tuple(z + s for z in PAPER), "commensurate")
    z = np.linspace(0, 0.05, 4)
    t = np.linspace(0, 1.3, 5)
    b = np.abs(fgs.evaluate_grid(q, z, t))
    a = np.array([[abs(fgs.evaluate_psi(params, zz, tt + 4 * s * zz)) for tt in t] for zz in z])
    np.testing.assert_allclose(b, a, rtol=1e-9)


def test_parameters_json_roundtrip(params):
    q = fgs.ThetaParameters.from_dict(json.loads(params.to_json()))
    np.testing.assert_array_equal(q.tau, params.tau)
    np.testing.assert_array_equal(q.delta_plus, params.delta_plus)
    assert q.K == params.K and q.k0 == params.k0
    assert fgs.evaluate_psi(q, 0.1, 0.2) == fgs.evaluate_psi(params, 0.1, 0.2)


def test_commensurate_transform_and_periods(params):
    assert fgs.time_period(params) == pytest.approx(2 * np.pi / abs(params.omega[1]), rel=1e-12)
    pz = fgs.spatial_period(params)
    t = np.linspace(0, 1, 16)
    a = np.abs(fgs.evaluate_grid(params, [0.0, pz], t))
    np.testing.assert_allclose(a[1], a[0], rtol=1e-8)


def test_sanitize_rejects_complex_frequencies():
    with pytest.raises(NonRealFrequency):
        fgs._sanitize("omega", np.array([1.0 + 1e-3j]), {})


def test_dimensional_scaling_homogeneity(params):
    s1 = fgs.dimensionalize(params, fgs.ScalingParams(period_target_ns=1.0))
    s2 = fgs.dimensionalize(params, fgs.ScalingParams(period_target_ns=2.0))
    assert s2.spatial_period == pytest.approx(4 * s1.spatial_period, rel=1e-12)
    assert s2.amplitude**2 == pytest.approx(s1.amplitude**2 / 4, rel=1e-12)
    assert s1.time_period == pytest.approx(1.0)


def test_dimensional_solution_solves_the_fiber_equation(params):
    # i A_z - (beta2/2) A_TT + gamma_eff |A|^2 A = 0
    sol = fgs.dimensionalize(params)
    sc = sol.scaling
    z0, T0 = 123.0, 0.31
    hz, hT = 1e-2, 1e-4
    A = sol(z0, T0)
    Az = (sol(z0 + hz, T0) - sol(z0 - hz, T0)) / (2 * hz)
    ATT = (sol(z0, T0 + hT) - 2 * A + sol(z0, T0 - hT)) / hT**2
    b2 = sc.beta2 * 1e-6  # ns^2/km
    g = sc.effective_gamma * 1e-3  # 1/(mW km)
    res = 1j * Az - b2 / 2 * ATT + g * abs(A) ** 2 * A
    assert abs(res) < 1e-4 * abs(g * abs(A) ** 2 * A)


def test_scaling_validation():
    with pytest.raises(ValueError):
        fgs.ScalingParams(beta2=1.0)
    with pytest.raises(ValueError):
        fgs.ScalingParams(alpha_db=-1)


@settings(max_examples=10)
@given(n_z=st.integers(1, 4), n_t=st.sampled_from([4, 8, 16]), t_start=st.floats(0.0, 5.0))
def test_field_grid_roundtrips(tmp_path_factory, n_z, n_t, t_start):
    rng = np.random.default_rng(n_z * n_t)
    g = fgs.FieldGrid(rng.normal(size=(n_z, n_t)) + 1j * rng.normal(size=(n_z, n_t)), 0.125, np.arange(n_z) * 75.0, t_start)
    d = tmp_path_factory.mktemp("grid")
    g.to_binary(d / "f.bin")
    h = fgs.FieldGrid.from_binary(d / "f.bin")
    np.testing.assert_array_equal(h.samples, g.samples)
    np.testing.assert_array_equal(h.z_values, g.z_values)
    assert (h.dt, h.t_start, h.units) == (g.dt, g.t_start, g.units)
    g.to_csv(d / "f.csv")
    c = fgs.FieldGrid.from_csv(d / "f.csv")
    np.testing.assert_array_equal(c.samples, g.samples)
    assert c.dt == pytest.approx(g.dt) and c.t_start == pytest.approx(g.t_start)


def test_field_grid_validation():
    with pytest.raises(ValueError):
        fgs.FieldGrid(np.zeros((2, 4)), 0.1, [0.0])
    with pytest.raises(ValueError):
        fgs.FieldGrid(np.full((1, 4), np.nan), 0.1, [0.0])
    with pytest.raises(ValueError):
        fgs.FieldGrid(np.zeros((1, 4)), 0.1, [0.0], units="furlongs")


def test_sample_grid(params):
    sol = fgs.dimensionalize(params)
    g = fgs.sample_grid(sol, 2, 64, [0.0, 10.0])
    assert g.samples.shape == (2, 64)
    assert g.dt == pytest.approx(2 * sol.time_period / 64)
    # two periods: the second half repeats the first
    np.testing.assert_allclose(g.samples[:, 32:], g.samples[:, :32], atol=1e-10)
    with pytest.raises(ValueError):
        fgs.sample_grid(sol, 1, 48, [0.0])
    with pytest.raises(ValueError):
        fgs.sample_grid(sol, 1.5, 64, [0.0])


def test_quasi_periodic_field_needs_an_explicit_window():
    from fgnlse import observables as ob

    p = fgs.construct(ob.GENUS3_SPECTRUM, ob.GENUS3_TRANSFORM)
    with pytest.raises(ValueError):
        fgs.dimensionalize(p)
    sol = fgs.dimensionalize(p, approximate_tol=0.02)
    assert sol.time_period == 1.0

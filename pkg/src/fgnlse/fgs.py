"""Finite-gap solutions: theta-quotient parameters, evaluation, units.

    psi(zeta, tau) = K theta((k zeta + omega tau + delta+)/2pi)
                       / theta((k zeta + omega tau + delta-)/2pi)
                       * exp(i k0 zeta + i omega0 tau)

solves  i psi_zeta + psi_tautau + 2 |psi|^2 psi = 0.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import curve as cv
from .errors import NonRealFrequency
from .theta import RiemannMatrix, _theta_jet, theta_grid, theta_ratio_batch

log = logging.getLogger(__name__)

STRIP_TOL = 1e-8
REAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ThetaParameters:
    genus: int
    k: np.ndarray
    omega: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    K: complex
    k0: float
    omega0: float
    tau: np.ndarray
    spectrum: tuple = ()
    stripped: dict = field(default_factory=dict)
    consistency: float = 0.0

    @property
    def riemann(self):
        return RiemannMatrix(self.tau)

    def to_dict(self):
        def c(z):
            z = np.asarray(z, dtype=complex)
            return np.stack([z.real, z.imag], axis=-1).tolist()

        return {
            "genus": self.genus,
            "k": np.asarray(self.k).tolist(),
            "omega": np.asarray(self.omega).tolist(),
            "delta_plus": c(self.delta_plus),
            "delta_minus": c(self.delta_minus),
            "K": [complex(self.K).real, complex(self.K).imag],
            "k0": self.k0,
            "omega0": self.omega0,
            "tau": c(self.tau),
            "spectrum": [[p.real, p.imag] for p in self.spectrum],
            "stripped_imaginary_residues": self.stripped,
            "consistency": self.consistency,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        def c(a):
            a = np.asarray(a, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        g = d["genus"]
        return cls(
            genus=g,
            k=np.asarray(d["k"], dtype=float),
            omega=np.asarray(d["omega"], dtype=float),
            delta_plus=c(d["delta_plus"]) if g else np.zeros(0, complex),
            delta_minus=c(d["delta_minus"]) if g else np.zeros(0, complex),
            K=complex(*d["K"]),
            k0=float(d["k0"]),
            omega0=float(d["omega0"]),
            tau=c(d["tau"]).reshape(g, g) if g else np.zeros((0, 0), complex),
            spectrum=tuple(complex(*p) for p in d.get("spectrum", [])),
            stripped=d.get("stripped_imaginary_residues", {}),
            consistency=d.get("consistency", 0.0),
        )


def _sanitize(name, values, stripped):
    values = np.asarray(values, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    resid = float(np.max(np.abs(values.imag), initial=0.0))
    if resid > REAL_TOL * scale:
        raise NonRealFrequency(f"{name} has imaginary residue {resid:.3e}")
    if resid > STRIP_TOL * scale:
        log.warning("%s: stripping imaginary residue %.3e", name, resid)
    elif resid > 0:
        log.info("%s: stripping imaginary residue %.3e", name, resid)
    stripped[name] = resid
    return values.real.copy()


# ------------------------------------------------------------ basis choice


def _integer_relation(omega, max_coef=6, tol=1e-9):
    """Primitive integer vector r with r . omega = 0 (small entries), or None."""
    g = omega.size
    scale = float(np.max(np.abs(omega)))
    best = None
    for r in itertools.product(range(-max_coef, max_coef + 1), repeat=g):
        r = np.array(r)
        if not np.any(r) or math.gcd(*map(int, np.abs(r))) != 1:
            continue
        if abs(r @ omega) <= tol * scale:
            key = (int(np.sum(np.abs(r))), tuple(-r))
            if best is None or key < best[0]:
                best = (key, r)
    return None if best is None else best[1]


def commensurate_transform(omega, k=None):
    """Unimodular M for which the relabelled frequencies start with a zero.

    Finds the simplest integer relation r . omega = 0, uses it as the first
    row of N = M^-T and completes N with small-entry rows to determinant one.
    For the symmetric genus-2 spectrum this gives omega' = (0, w) and
    k' = (2 k2, k2). Returns the identity when no relation exists.
    """
    omega = np.asarray(omega, dtype=float)
    g = omega.size
    r = _integer_relation(omega)
    if r is None or g == 1:
        return np.eye(g, dtype=int)
    if np.sum(r != 0) == 1:
        # a frequency is already zero; move it to the front
        i = int(np.nonzero(r)[0][0])
        perm = [i] + [j for j in range(g) if j != i]
        P = np.eye(g, dtype=int)[perm]
        return P
    cand = sorted(
        (np.array(v) for v in itertools.product(range(-2, 3), repeat=g) if any(v)),
        key=lambda v: (int(np.sum(np.abs(v))), tuple(-v)),
    )
    for rest in itertools.combinations(range(len(cand)), g - 1):
        N = np.vstack([r] + [cand[i] for i in rest])
        d = round(np.linalg.det(N))
        if abs(d) == 1:
            if d == -1:
                N[-1] = -N[-1]
            return np.rint(np.linalg.inv(N).T).astype(int)
    return np.eye(g, dtype=int)


# -------------------------------------------------------------- parameters


def _jets(params_k, params_w, dplus, dminus, tau, zeta, t, eps):
    X = (np.outer(zeta, params_k) + np.outer(t, params_w)) / (2 * np.pi)
    dirs = [params_k / (2 * np.pi), params_w / (2 * np.pi)]
    out = []
    for d in (dplus, dminus):
        th, d1, d2, ls = _theta_jet(X + d / (2 * np.pi), tau, dirs, eps)
        out.append((th, d1, d2, ls))
    return out


def _quotient_derivatives(k, w, dplus, dminus, tau, zeta, t, eps=1e-13):
    """F = theta+/theta- and F_zeta, F_tau, F_tautau at sample points."""
    (tp, p1, p2, lp), (tm, m1, m2, lm) = _jets(k, w, dplus, dminus, tau, zeta, t, eps)
    F = tp / tm * np.exp(lp - lm)
    lz = p1[0] / tp - m1[0] / tm
    lt = p1[1] / tp - m1[1] / tm
    ltt = (p2[1, 1] / tp - (p1[1] / tp) ** 2) - (m2[1, 1] / tm - (m1[1] / tm) ** 2)
    return F, F * lz, F * lt, F * (lt**2 + ltt)


def _solve_constants(k, w, dplus, dminus, tau, n_samples=96, seed=12345):
    """Real c1, omega0, |K|^2 with
    i F_z + F_tt + 2 i omega0 F_t + c1 F + 2 |K|^2 |F|^2 F = 0,
    where c1 = -k0 - omega0^2. Sample points are deterministic.
    """
    rng = np.random.default_rng(seed)
    kmax = max(float(np.max(np.abs(k))), 1e-3)
    wmax = max(float(np.max(np.abs(w))), 1e-3)
    zeta = rng.uniform(0.0, 2 * np.pi / kmax * 3, n_samples)
    t = rng.uniform(0.0, 2 * np.pi / wmax * 3, n_samples)
    F, Fz, Ft, Ftt = _quotient_derivatives(k, w, dplus, dminus, tau, zeta, t)
    M = np.column_stack([F, 2j * Ft, 2 * np.abs(F) ** 2 * F])
    rhs = -(1j * Fz + Ftt)
    Mr = np.vstack([M.real, M.imag])
    r = np.concatenate([rhs.real, rhs.imag])
    sol, *_ = np.linalg.lstsq(Mr, r, rcond=None)
    rel = float(np.max(np.abs(Mr @ sol - r)) / np.max(np.abs(r)))
    c1, omega0, K2 = sol
    return c1, omega0, K2, rel


def _reduce_omega0(omega0, omega, span=3):
    """Integer m minimising |omega0 + m . omega|.

    Shifting delta+ by 2 pi tau m multiplies the quotient by
    exp(-i m.(k zeta + omega tau)) times a constant, so omega0 moves by
    -m.omega; the sign is absorbed by searching over +-m.
    """
    g = omega.size
    best = (abs(omega0), 0, np.zeros(g, dtype=int))
    for m in itertools.product(range(-span, span + 1), repeat=g):
        m = np.array(m)
        val = abs(omega0 + m @ omega)
        key = (round(val, 9), int(np.sum(np.abs(m))))
        if key < (round(best[0], 9), best[1]):
            best = (val, key[1], m)
    return best[2]


def derive_parameters(
    periods,
    curve,
    basis_transform=None,
    quad=cv.QuadratureSpec(),
):
    """Theta-quotient parameters from the periods of ``curve``.

    omega_j = -4 pi i (A^-1)_{j,g},
    k_j = -8 pi i ((A^-1)_{j,g-1} + sum_k Re(lambda_k) (A^-1)_{j,g}),
    tau = A^-1 B, delta- = 0 and delta+ = 2 pi times the integral of the
    normalized holomorphic differentials from infinity+ to infinity-.

    ``basis_transform`` is an integer matrix, ``"commensurate"`` (see
    :func:`commensurate_transform`) or None for the basis as constructed.
    The remaining constants are fixed by requiring the quotient to satisfy
    the NLSE; the lattice ambiguity of delta+ is used to make |omega0|
    minimal (zero for time-periodic solutions).
    """
    if isinstance(curve, cv.MainSpectrum):
        curve = cv.build_curve(curve)
    g = curve.genus
    pts = curve.spectrum.points
    stripped = {}
    if g == 0:
        lam = pts[0]
        omega0 = -2.0 * lam.real
        k0 = 2.0 * lam.imag**2 - omega0**2
        z = np.zeros(0)
        return ThetaParameters(
            0, z, z, z.astype(complex), z.astype(complex), complex(lam.imag), k0, omega0,
            np.zeros((0, 0), complex), tuple(pts), stripped, 0.0,
        )
    if isinstance(basis_transform, str):
        if basis_transform != "commensurate":
            raise ValueError(f"unknown basis transform {basis_transform!r}")
        om0 = (-4j * np.pi * periods.A_inv[:, g - 1]).real
        periods = cv.transform_basis(periods, commensurate_transform(om0))
    elif basis_transform is not None:
        periods = cv.transform_basis(periods, basis_transform)
    Ai = periods.A_inv
    sum_re = sum(p.real for p in pts)
    omega = _sanitize("omega", -4j * np.pi * Ai[:, g - 1], stripped)
    prev = Ai[:, g - 2] if g > 1 else 0.0
    k = _sanitize("k", -8j * np.pi * (prev + sum_re * Ai[:, g - 1]), stripped)
    scale = float(np.max(np.abs(omega)))
    tiny = np.abs(omega) < STRIP_TOL * scale
    if np.any(tiny):
        stripped["omega_zero_components"] = float(np.max(np.abs(omega[tiny])))
        omega[tiny] = 0.0
    tau = RiemannMatrix(periods.tau)

    path = cv.infinity_path(curve)
    r, _ = cv.abelian_integral(curve, path, cv.DifferentialSpec(Ai), quad)
    # the quotient solves the NLSE with the shift taken from infinity+ to infinity-
    dplus = -2 * np.pi * r
    dminus = np.zeros(g, dtype=complex)

    c1, omega0, K2, rel = _solve_constants(k, omega, dplus, dminus, tau)
    m = _reduce_omega0(omega0, omega)
    # shift only when it removes omega0 outright; other shifts just rescale K
    if np.any(m) and abs(omega0 + m @ omega) < STRIP_TOL * max(1.0, float(np.max(np.abs(omega)))):
        dplus = dplus + 2 * np.pi * (tau.tau @ m)
        c1, omega0, K2, rel = _solve_constants(k, omega, dplus, dminus, tau)
    if K2 <= 0:
        raise NonRealFrequency(f"amplitude solve gave |K|^2 = {K2:.3e}")
    if abs(omega0) < STRIP_TOL * max(1.0, float(np.max(np.abs(omega)))):
        stripped["omega0"] = abs(omega0)
        omega0 = 0.0
    k0 = -c1 - omega0**2
    return ThetaParameters(
        genus=g,
        k=k,
        omega=omega,
        delta_plus=dplus,
        delta_minus=dminus,
        K=complex(math.sqrt(K2)),
        k0=float(k0),
        omega0=float(omega0),
        tau=tau.tau,
        spectrum=tuple(pts),
        stripped=stripped,
        consistency=rel,
    )


def construct(spectrum, basis_transform=None, quad=cv.QuadratureSpec()):
    """Spectrum -> ThetaParameters through curve, basis and periods."""
    if not isinstance(spectrum, cv.MainSpectrum):
        spectrum = cv.MainSpectrum(tuple(spectrum))
    curve = cv.build_curve(spectrum)
    basis = cv.canonical_homology_basis(curve)
    periods = cv.period_matrices(curve, basis, quad)
    return derive_parameters(periods, curve, basis_transform, quad)


# -------------------------------------------------------------- evaluation


def evaluate_psi(params, zeta, tau):
    """psi at matching arrays (or scalars) of zeta and tau."""
    zeta = np.asarray(zeta, dtype=float)
    tau_ = np.asarray(tau, dtype=float)
    zeta, tau_ = np.broadcast_arrays(zeta, tau_)
    phase = np.exp(1j * (params.k0 * zeta + params.omega0 * tau_))
    if params.genus == 0:
        out = params.K * phase
    else:
        X = (zeta[..., None] * params.k + tau_[..., None] * params.omega) / (2 * np.pi)
        ratio = theta_ratio_batch(
            X + params.delta_plus / (2 * np.pi), X + params.delta_minus / (2 * np.pi), params.tau
        )
        out = params.K * ratio * phase
    return out[()] if out.ndim == 0 else out


def evaluate_grid(params, zetas, taus, eps=1e-13):
    """psi on the tensor grid zetas x taus, shape (len(zetas), len(taus))."""
    zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    phase = np.exp(1j * (params.k0 * zetas[:, None] + params.omega0 * taus[None, :]))
    if params.genus == 0:
        return params.K * phase
    u = np.outer(zetas, params.k) / (2 * np.pi)
    v = np.outer(taus, params.omega) / (2 * np.pi)
    num = theta_grid(u + params.delta_plus / (2 * np.pi), v, params.tau, eps)
    den = theta_grid(u + params.delta_minus / (2 * np.pi), v, params.tau, eps)
    return params.K * num / den * phase


# ----------------------------------------------------------------- periods


def _commensurate_period(freqs, max_den=12, tol=1e-9):
    """Smallest P > 0 with P f in 2 pi Z for all f, or inf."""
    freqs = np.abs(np.asarray(freqs, dtype=float))
    freqs = freqs[freqs > tol * max(1.0, float(np.max(freqs, initial=0.0)))]
    if freqs.size == 0:
        return math.inf
    base = float(np.min(freqs))
    ratios = []
    for f in freqs:
        fr = Fraction(f / base).limit_denominator(max_den)
        if abs(float(fr) - f / base) > tol * f / base:
            return math.inf
        ratios.append(fr)
    den = math.lcm(*(fr.denominator for fr in ratios))
    nums = [int(fr * den) for fr in ratios]
    g = math.gcd(*nums)
    # all f = base * n_i / den; common period 2 pi den / (base g)
    return 2 * np.pi * den / (base * g)


def time_period(params):
    """Exact time period of psi (inf if the frequencies are incommensurate)."""
    return _commensurate_period(list(params.omega) + [params.omega0])


def spatial_period(params):
    """Quasi-period in zeta: psi repeats up to the constant phase exp(i k0 p)."""
    return _commensurate_period(params.k)


def component_periods(params):
    """2 pi / omega_j per component (inf where omega_j = 0)."""
    with np.errstate(divide="ignore"):
        return np.where(params.omega == 0, np.inf, 2 * np.pi / np.abs(params.omega))


# ---------------------------------------------------------------- residual


def _residual_once(params, zetas, taus, hz, ht):
    def ev(dz, dt):
        return evaluate_grid(params, zetas + dz, taus + dt)

    f0 = ev(0, 0)
    fz = (-ev(2 * hz, 0) + 8 * ev(hz, 0) - 8 * ev(-hz, 0) + ev(-2 * hz, 0)) / (12 * hz)
    ftt = (-ev(0, 2 * ht) + 16 * ev(0, ht) - 30 * f0 + 16 * ev(0, -ht) - ev(0, -2 * ht)) / (
        12 * ht**2
    )
    R = 1j * fz + ftt + 2 * np.abs(f0) ** 2 * f0
    return float(np.max(np.abs(R)) / np.max(np.abs(f0)) ** 3)


def nlse_residual(params, zeta_range=None, tau_range=None, n_zeta=512, n_tau=512, h=None):
    """Normalized max |i psi_z + psi_tt + 2|psi|^2 psi| over a grid.

    Derivatives use 4th-order central differences; the step is halved once
    (Richardson-style confirmation) and both values are returned as
    ``{"residual", "residual_coarse", "h_zeta", "h_tau"}``, ``residual``
    being the finer-step value. Ranges default to one period in each
    direction.
    """
    if zeta_range is None:
        pz = spatial_period(params) if params.genus else 1.0
        if not np.isfinite(pz):
            pz = 2 * np.pi / max(float(np.max(np.abs(params.k))), 1e-3)
        zeta_range = (0.0, pz)
    if tau_range is None:
        pt = time_period(params)
        if not np.isfinite(pt):
            pt = 2 * np.pi / max(float(np.max(np.abs(params.omega), initial=0.0)), 1.0)
        tau_range = (0.0, pt)
    zetas = np.linspace(*zeta_range, n_zeta, endpoint=False)
    taus = np.linspace(*tau_range, n_tau, endpoint=False)
    kmax = max(float(np.max(np.abs(params.k), initial=0.0)), abs(params.k0), 1.0)
    wmax = max(float(np.max(np.abs(params.omega), initial=0.0)), abs(params.omega0), 1.0)
    hz = h if h is not None else 0.02 / kmax
    ht = h if h is not None else 0.02 / wmax
    coarse = _residual_once(params, zetas, taus, hz, ht)
    fine = _residual_once(params, zetas, taus, hz / 2, ht / 2)
    return {"residual": fine, "residual_coarse": coarse, "h_zeta": hz / 2, "h_tau": ht / 2}


# --------------------------------------------------------- dimensional units


@dataclass(frozen=True)
class ScalingParams:
    """Physical constants for the dimensional envelope.

    Units: beta2 in ps^2/km, gamma in 1/(W km), alpha in dB/km, span in km,
    target period in ns. ``gamma_eff`` overrides the effective-model value.
    """

    beta2: float = -21.5
    gamma: float = 1.3
    alpha_db: float = 0.2
    span_length: float = 75.0
    period_target_ns: float = 1.0
    gamma_eff: float | None = None

    def __post_init__(self):
        if self.beta2 >= 0:
            raise ValueError("focusing dynamics need anomalous dispersion (beta2 < 0)")
        if self.gamma <= 0 or self.span_length <= 0 or self.period_target_ns <= 0:
            raise ValueError("gamma, span length and target period must be positive")
        if self.alpha_db < 0:
            raise ValueError("alpha must be non-negative")

    @property
    def effective_gamma(self):
        if self.gamma_eff is not None:
            return self.gamma_eff
        alpha = self.alpha_db * math.log(10) / 10
        L = self.span_length
        l_eff = L if alpha == 0 else min(-math.expm1(-alpha * L) / alpha, L)
        return self.gamma * l_eff / L


@dataclass(frozen=True, eq=False)
class DimensionalSolution:
    """A(z, T) = a psi(z / Z, T / T0) with z in km, T in ns, |A|^2 in mW.

    The substitution that maps i psi_zeta + psi_tautau + 2|psi|^2 psi = 0
    onto i A_z - (beta2/2) A_TT + gamma_eff |A|^2 A = 0 is
    Z = 2 T0^2 / |beta2| and a^2 = |beta2| / (gamma_eff T0^2).
    """

    params: ThetaParameters
    scaling: ScalingParams
    T0: float
    z_scale: float
    amplitude: float

    def __call__(self, z, T):
        z = np.asarray(z, dtype=float)
        T = np.asarray(T, dtype=float)
        return self.amplitude * evaluate_psi(self.params, z / self.z_scale, T / self.T0)

    def grid(self, z, T):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        T = np.atleast_1d(np.asarray(T, dtype=float))
        return self.amplitude * evaluate_grid(self.params, z / self.z_scale, T / self.T0)

    window_ns: float | None = None

    @property
    def time_period(self):
        """Exact period in ns, or the sampling window for aperiodic fields."""
        if self.window_ns is not None:
            return self.window_ns
        return self.T0 * time_period(self.params)

    @property
    def spatial_period(self):
        return self.z_scale * spatial_period(self.params)

    def report(self, n_t=256, n_z=257):
        """Average power, peak power and its location over one spatial period."""
        pT = self.time_period
        pz = self.spatial_period
        T = np.arange(n_t) * pT / n_t
        z = np.linspace(0.0, pz / 2, n_z)
        P = np.abs(self.grid(z, T)) ** 2
        iz, it = np.unravel_index(np.argmax(P), P.shape)
        # refine the compression distance with a parabola through the grid maximum
        zpk = z[iz]
        if 0 < iz < n_z - 1:
            y0, y1, y2 = P[iz - 1 : iz + 2, it]
            den = y0 - 2 * y1 + y2
            if den != 0:
                zpk = z[iz] + 0.5 * (y0 - y2) / den * (z[1] - z[0])
        return {
            "T0_ns": self.T0,
            "period_ns": pT,
            "spatial_period_km": pz,
            "half_period_km": pz / 2,
            "average_power_mW": float(np.mean(P[0])),
            "peak_power_mW": float(P.max()),
            "peak_distance_km": float(zpk),
            "initial_peak_mW": float(P[0].max()),
        }


def approximate_time_period(params, tol=0.02):
    """Common period of the omega_j when their ratios are rational within ``tol``."""
    return _commensurate_period(list(params.omega) + [params.omega0], max_den=12, tol=tol)


def dimensionalize(params, scaling=ScalingParams(), approximate_tol=None):
    """Dimensional solution with T0 chosen so that the time period hits the target.

    A time-independent plane wave takes T0 = target / (2 pi). Quasi-periodic
    fields are scaled on their approximate common period when
    ``approximate_tol`` is given; the window then fits the field only
    approximately.
    """
    pt = time_period(params)
    window = None
    if not np.isfinite(pt) and params.genus == 0:
        pt, window = 2 * np.pi, scaling.period_target_ns
    elif not np.isfinite(pt) and approximate_tol is not None:
        pt, window = approximate_time_period(params, approximate_tol), scaling.period_target_ns
        log.warning("quasi-periodic field: scaling on the approximate period %.6g", pt)
    if not np.isfinite(pt):
        raise ValueError("solution is not periodic in time; no time period to scale")
    T0 = scaling.period_target_ns / pt
    b2 = abs(scaling.beta2) * 1e-6  # ns^2/km
    z_scale = 2 * T0**2 / b2
    amp = math.sqrt(b2 / (scaling.effective_gamma * T0**2) * 1e3)  # sqrt(mW)
    return DimensionalSolution(params, scaling, T0, z_scale, amp, window)


# -------------------------------------------------------------- field grids


@dataclass(eq=False)
class FieldGrid:
    """Complex envelope samples, shape (n_z, n_t).

    ``units`` is "dimensionless" (zeta, tau) or "dimensional" (km, ns, sqrt(mW)).
    """

    samples: np.ndarray
    dt: float
    z_values: np.ndarray
    t_start: float = 0.0
    units: str = "dimensional"

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        self.z_values = np.atleast_1d(np.asarray(self.z_values, dtype=float))
        if self.samples.shape[0] != self.z_values.size:
            raise ValueError("one row of samples per z value")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        if self.units not in ("dimensional", "dimensionless"):
            raise ValueError(f"unknown units {self.units!r}")

    @property
    def n_t(self):
        return self.samples.shape[1]

    @property
    def n_z(self):
        return self.samples.shape[0]

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.n_t)

    @property
    def power(self):
        return np.abs(self.samples) ** 2

    @property
    def average_power(self):
        return self.power.mean(axis=1)

    def slice(self, i):
        return FieldGrid(self.samples[i : i + 1], self.dt, self.z_values[i : i + 1], self.t_start, self.units)

    def _header(self):
        return {
            "n_t": self.n_t,
            "n_z": self.n_z,
            "dt_ns": self.dt,
            "t_start": self.t_start,
            "z_km": self.z_values.tolist(),
            "units": self.units,
        }

    def to_csv(self, path):
        T, Z = np.meshgrid(self.times, self.z_values)
        data = np.column_stack([T.ravel(), Z.ravel(), self.samples.real.ravel(), self.samples.imag.ravel()])
        np.savetxt(path, data, delimiter=",", header="t,z,re,im", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path, units="dimensional"):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        z = np.unique(data[:, 1])
        n_t = data.shape[0] // z.size
        t = data[:n_t, 0]
        dt = float(t[1] - t[0]) if n_t > 1 else 1.0
        samples = (data[:, 2] + 1j * data[:, 3]).reshape(z.size, n_t)
        return cls(samples, dt, data[::n_t, 1], float(t[0]), units)

    def to_binary(self, path):
        """Little-endian float64 (re, im) pairs, row-major by z, plus a JSON sidecar."""
        from pathlib import Path

        path = Path(path)
        arr = np.empty(self.samples.shape + (2,), dtype="<f8")
        arr[..., 0] = self.samples.real
        arr[..., 1] = self.samples.imag
        path.write_bytes(arr.tobytes())
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(self._header(), indent=2))

    @classmethod
    def from_binary(cls, path):
        from pathlib import Path

        path = Path(path)
        hdr = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        arr = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(hdr["n_z"], hdr["n_t"], 2)
        return cls(arr[..., 0] + 1j * arr[..., 1], hdr["dt_ns"], hdr["z_km"], hdr.get("t_start", 0.0), hdr["units"])


def sample_grid(solution, n_periods, n_t, z_values):
    """Sample a DimensionalSolution over an integer number of time periods."""
    if n_t & (n_t - 1) or n_t < 1:
        raise ValueError("n_t must be a power of two")
    if int(n_periods) != n_periods or n_periods < 1:
        raise ValueError("window must be an integer number of periods")
    if isinstance(solution, ThetaParameters):
        period, units = time_period(solution), "dimensionless"
        ev = lambda z, T: evaluate_grid(solution, z, T)  # noqa: E731
    else:
        period, units = solution.time_period, "dimensional"
        ev = solution.grid
    dt = n_periods * period / n_t
    T = dt * np.arange(n_t)
    z = np.atleast_1d(np.asarray(z_values, dtype=float))
    return FieldGrid(ev(z, T), dt, z, 0.0, units)

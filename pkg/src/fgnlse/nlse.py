"""Split-step propagation of the dimensional envelope through fiber links.

    i A_z - (beta2/2) A_TT + gamma |A|^2 A + (i alpha/2) A = 0

Units: z in km, T in ns, A in sqrt(mW), frequencies in GHz.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteField, StepUnderflow
from .fgs import FieldGrid

H_PLANCK = 6.62607015e-34  # J s
C_LIGHT = 299792458.0  # m/s
MIN_STEP_KM = 1e-6


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def alpha_per_km(alpha_db):
    """Power attenuation in 1/km from dB/km."""
    return alpha_db * math.log(10) / 10


def effective_params(gamma, alpha_db, length):
    """(L_eff, gamma_eff) of a span; L_eff = L in the lossless limit."""
    if length <= 0 or alpha_db < 0:
        raise ValueError("need length > 0 and alpha >= 0")
    a = alpha_per_km(alpha_db)
    l_eff = length if a == 0 else min(-math.expm1(-a * length) / a, length)
    return l_eff, gamma * l_eff / length


def nonlinear_length(gamma_eff, power_mw):
    return 1.0 / (gamma_eff * power_mw * 1e-3)


def dispersion_length(t_width_ns, beta2):
    return (t_width_ns * 1e3) ** 2 / abs(beta2)


@dataclass(frozen=True)
class FiberSpan:
    beta2: float = -21.5  # ps^2/km
    gamma: float = 1.3  # 1/(W km)
    alpha: float = 0.2  # dB/km
    length: float = 75.0  # km

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("span length must be positive")
        if self.alpha < 0:
            raise ValueError("attenuation must be non-negative")

    def effective(self):
        """Lossless span with the renormalized nonlinearity."""
        _, g = effective_params(self.gamma, self.alpha, self.length)
        return FiberSpan(self.beta2, g, 0.0, self.length)


@dataclass(frozen=True)
class GaussianFilter:
    fwhm: float = 147.0  # GHz
    offset: float = 0.0  # GHz

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValueError("filter FWHM must be positive")

    @property
    def sigma(self):
        return self.fwhm / (2 * math.sqrt(2 * math.log(2)))

    def response(self, f):
        return np.exp(-((f - self.offset) ** 2) / (2 * self.sigma**2))


@dataclass(frozen=True)
class ASEConfig:
    noise_figure_db: float = 5.0
    seed: int = 0
    wavelength_nm: float = 1550.0


@dataclass(frozen=True)
class LinkModel:
    """``gain_db`` None means the amplifier exactly restores the span loss."""

    span: FiberSpan = field(default_factory=FiberSpan)
    n_spans: int = 1
    gain_db: float | None = None
    filter: GaussianFilter | None = None
    ase: ASEConfig | None = None

    def __post_init__(self):
        if self.n_spans < 0:
            raise ValueError("n_spans must be non-negative")

    @property
    def amplitude_gain(self):
        if self.gain_db is None:
            return math.exp(alpha_per_km(self.span.alpha) * self.span.length / 2)
        return math.sqrt(db_to_linear(self.gain_db))


@dataclass(frozen=True)
class SimConfig:
    max_phase_deg: float = 0.05
    max_dz: float = 1.0  # km
    record_every_span: bool = True

    def __post_init__(self):
        if self.max_phase_deg <= 0 or self.max_dz <= 0:
            raise ValueError("step controls must be positive")


def frequencies(n_t, dt):
    """FFT-ordered frequency axis in GHz for a time step in ns."""
    return np.fft.fftfreq(n_t, d=dt)


def _as_field(field_in):
    if isinstance(field_in, FieldGrid):
        return field_in.samples[-1].copy(), field_in.dt, float(field_in.z_values[-1])
    raise TypeError("expected a FieldGrid")


def _check_grid(n):
    if n < 1 or n & (n - 1):
        raise ValueError("time grid must have a power-of-two number of samples")


def split_step(field_in, span, config=SimConfig(), dt=None):
    """Propagate one field slice through ``span``.

    Symmetric splitting: half dispersion step, exact nonlinear and loss step,
    half dispersion step. The step is sized so that the peak nonlinear phase
    per step stays below ``config.max_phase_deg``. Accepts a FieldGrid (last
    row used) or a bare array together with ``dt``; returns the same kind.
    A 2D array is treated as a batch of independent rows sharing one step
    sequence.
    """
    grid_in = isinstance(field_in, FieldGrid)
    if grid_in:
        A, dt, z0 = _as_field(field_in)
    else:
        A = np.array(field_in, dtype=complex)
        z0 = 0.0
        if dt is None:
            raise ValueError("dt is required for array input")
    n = A.shape[-1]
    _check_grid(n)
    w = 2 * np.pi * frequencies(n, dt)  # rad/ns
    b2 = span.beta2 * 1e-6  # ns^2/km
    g = span.gamma * 1e-3  # 1/(mW km)
    a = alpha_per_km(span.alpha)
    phi_max = math.radians(config.max_phase_deg)
    lin_rate = 0.5j * b2 * w**2

    z = 0.0
    while z < span.length:
        remaining = span.length - z
        pmax = float(np.max(np.abs(A) ** 2))
        if pmax * g > 0:
            # gamma P L_eff(h) <= phi_max, with the current power decaying as exp(-a h)
            target = phi_max / (g * pmax)
            if a > 0:
                h = math.inf if a * target >= 1 else -math.log1p(-a * target) / a
            else:
                h = target
        else:
            h = math.inf
        h = min(h, config.max_dz, remaining)
        if h < MIN_STEP_KM and h < remaining:
            raise StepUnderflow(f"required step {h:.3e} km at z = {z0 + z:.3f} km")
        half = np.exp(lin_rate * (h / 2))
        A = np.fft.ifft(half * np.fft.fft(A))
        leff = h if a == 0 else -math.expm1(-a * h) / a
        A = A * np.exp(1j * g * np.abs(A) ** 2 * leff - a * h / 2)
        A = np.fft.ifft(half * np.fft.fft(A))
        z += h
    if not np.all(np.isfinite(A)):
        raise NonFiniteField("field became non-finite during the span")
    if grid_in:
        return FieldGrid(A[None, :], dt, [z0 + span.length], field_in.t_start, field_in.units)
    return A


def ase_variance(gain_linear, noise_figure_db, bandwidth_ghz, wavelength_nm=1550.0):
    """Per-sample ASE variance in mW over the simulation bandwidth (one polarization)."""
    G = float(gain_linear)
    nf = float(db_to_linear(noise_figure_db))
    n_sp = max((nf * G - 1) / (2 * (G - 1)), 0.0)
    nu = C_LIGHT / (wavelength_nm * 1e-9)
    psd = n_sp * H_PLANCK * nu * (G - 1)  # W/Hz
    return psd * bandwidth_ghz * 1e9 * 1e3


def add_ase(A, dt, gain_linear, noise_figure_db, rng, wavelength_nm=1550.0):
    """Add circular complex Gaussian ASE noise to a field sampled at ``dt`` ns.

    ``rng`` is a numpy Generator or an integer seed.
    """
    if gain_linear <= 1:
        raise ValueError("ASE needs gain > 1")
    rng = np.random.default_rng(rng)
    A = np.asarray(A, dtype=complex)
    var = ase_variance(gain_linear, noise_figure_db, 1.0 / dt, wavelength_nm)
    noise = rng.standard_normal(A.shape) + 1j * rng.standard_normal(A.shape)
    return A + math.sqrt(var / 2) * noise


def propagate_link(field_in, link, config=SimConfig()):
    """Run ``link.n_spans`` spans: fiber, amplifier, filter, optional ASE.

    Returns a FieldGrid with the input row followed by one row per span
    (or only the final row when ``config.record_every_span`` is off).
    """
    A, dt, z0 = _as_field(field_in)
    _check_grid(A.size)
    f = frequencies(A.size, dt)
    H = None if link.filter is None else link.filter.response(f)
    gain = link.amplitude_gain
    rng = None if link.ase is None else np.random.default_rng(link.ase.seed)
    rows, zs = [A.copy()], [z0]
    z = z0
    for _ in range(link.n_spans):
        A = split_step(A, link.span, config, dt=dt)
        A = A * gain
        if H is not None:
            A = np.fft.ifft(H * np.fft.fft(A))
        if rng is not None:
            A = add_ase(A, dt, gain**2, link.ase.noise_figure_db, rng, link.ase.wavelength_nm)
        if not np.all(np.isfinite(A)):
            raise NonFiniteField(f"non-finite field after span ending at {z + link.span.length} km")
        z += link.span.length
        if config.record_every_span:
            rows.append(A.copy())
            zs.append(z)
    if not config.record_every_span:
        rows.append(A.copy())
        zs.append(z)
    return FieldGrid(np.array(rows), dt, zs, field_in.t_start, field_in.units)


def propagate_ensemble(A0, dt, link, n_realizations, record_spans, config=SimConfig()):
    """Propagate ``n_realizations`` copies of ``A0`` with independent ASE.

    All copies share the noise-free step sequence bookkeeping and differ
    only through the noise stream of ``link.ase.seed``. Returns
    {span: array (n_realizations, n_t)} for every span in ``record_spans``.
    """
    A0 = np.asarray(A0, dtype=complex)
    _check_grid(A0.size)
    record = sorted(set(int(s) for s in record_spans))
    if record and (record[0] < 0 or record[-1] > link.n_spans):
        raise ValueError("recorded spans must lie within the link")
    f = frequencies(A0.size, dt)
    H = None if link.filter is None else link.filter.response(f)
    gain = link.amplitude_gain
    rng = None if link.ase is None else np.random.default_rng(link.ase.seed)
    A = np.tile(A0, (n_realizations, 1))
    out = {}
    if 0 in record:
        out[0] = A.copy()
    for span in range(1, (record[-1] if record else 0) + 1):
        A = split_step(A, link.span, config, dt=dt) * gain
        if H is not None:
            A = np.fft.ifft(H * np.fft.fft(A))
        if rng is not None:
            A = add_ase(A, dt, gain**2, link.ase.noise_figure_db, rng, link.ase.wavelength_nm)
        if not np.all(np.isfinite(A)):
            raise NonFiniteField(f"non-finite field after span {span}")
        if span in record:
            out[span] = A.copy()
    return out


def fourier_bandwidth(samples, dt, fraction=0.99):
    """Width (GHz) of the smallest band symmetric about the spectral centroid
    that holds ``fraction`` of the power; at least one FFT bin wide."""
    samples = np.asarray(samples, dtype=complex).ravel()
    n = samples.size
    P = np.abs(np.fft.fft(samples)) ** 2
    f = frequencies(n, dt)
    total = P.sum()
    if total == 0:
        return 0.0
    fc = float(np.sum(f * P) / total)
    d = np.abs(f - fc)
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(P[order])
    i = int(np.searchsorted(cum, fraction * total * (1 - 1e-12)))
    df = 1.0 / (n * dt)
    return max(2.0 * float(d[order[min(i, n - 1)]]), df)


def comb_lines(samples, n_lines):
    """|c_n| for n = -n_lines..n_lines of a one-period field."""
    c = np.fft.fft(np.asarray(samples, dtype=complex)) / len(samples)
    idx = np.arange(-n_lines, n_lines + 1)
    return idx, np.abs(c[idx])


def spectral_asymmetry(samples, n_lines):
    """sum_n ||c_+n| - |c_-n||, normalized by sum |c_n|."""
    idx, mag = comb_lines(samples, n_lines)
    pos = mag[idx > 0]
    neg = mag[idx < 0][::-1]
    return float(np.sum(np.abs(pos - neg)) / np.sum(mag))


def relative_deviation(A, B):
    """Pointwise |A - B| / max|B| per row, returned as (mean, max)."""
    A = np.asarray(A)
    B = np.asarray(B)
    scale = np.max(np.abs(B), axis=-1, keepdims=True)
    dev = np.abs(A - B) / scale
    return float(dev.mean()), float(dev.max())

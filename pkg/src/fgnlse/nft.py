"""Periodic nonlinear Fourier transform for the Zakharov-Shabat problem.

    Phi_tau = U Phi,  U = [[-i lam, -psi], [conj(psi), i lam]]

The main spectrum is the set of lam where the Floquet discriminant
Delta(lam) = tr M(lam) / 2 equals +1 or -1.
"""

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NoRootsFound

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ZSPotential:
    """One period of a dimensionless potential, sampled uniformly."""

    samples: np.ndarray
    period: float

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.samples, dtype=complex))
        if s.size == 0 or s.ndim != 1:
            raise ValueError("potential needs a nonempty 1D sample vector")
        if not np.all(np.isfinite(s)):
            raise ValueError("potential samples must be finite")
        if not self.period > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def dt(self):
        return self.period / self.samples.size

    def upsampled(self, factor):
        """Band-limited interpolation onto ``factor`` times as many samples."""
        if factor == 1:
            return self
        n = self.samples.size
        c = np.fft.fft(self.samples)
        m = n * factor
        out = np.zeros(m, dtype=complex)
        half = n // 2
        out[:half] = c[:half]
        out[m - (n - half) :] = c[half:]
        if n % 2 == 0:
            # split the Nyquist bin between both ends to keep real signals real
            out[half] = 0.5 * c[half]
            out[m - half] = 0.5 * c[half]
        return ZSPotential(np.fft.ifft(out) * factor, self.period)

    @classmethod
    def from_dimensional(cls, samples, dt, solution):
        """Undo the fgs substitutions: psi = A / a, tau = T / T0."""
        s = np.asarray(samples, dtype=complex) / solution.amplitude
        return cls(s, s.size * dt / solution.T0)


def monodromy(potential, lam):
    """Transfer matrix over one period, shape lam.shape + (2, 2).

    Each sample is held constant over its cell (cells centered on the samples,
    which is exact bookkeeping for periodic potentials) and the cell
    propagator is exp(U h) = cosh(kappa h) I + sinh(kappa h)/kappa U with
    kappa^2 = -lam^2 - |psi|^2.
    """
    lam = np.asarray(lam, dtype=complex)
    shape = lam.shape
    lam = lam.ravel()
    h = potential.dt
    m00 = np.ones(lam.size, dtype=complex)
    m11 = np.ones(lam.size, dtype=complex)
    m01 = np.zeros(lam.size, dtype=complex)
    m10 = np.zeros(lam.size, dtype=complex)
    lam2 = lam * lam
    ilam = 1j * lam
    for q in potential.samples:
        kap = np.sqrt(-lam2 - abs(q) ** 2)
        kh = kap * h
        ch = np.cosh(kh)
        small = np.abs(kh) < 1e-8
        sh = np.where(small, h, np.sinh(kh) / np.where(small, 1.0, kap))
        e00 = ch - ilam * sh
        e11 = ch + ilam * sh
        e01 = -q * sh
        e10 = np.conj(q) * sh
        m00, m01, m10, m11 = (
            e00 * m00 + e01 * m10,
            e00 * m01 + e01 * m11,
            e10 * m00 + e11 * m10,
            e10 * m01 + e11 * m11,
        )
    M = np.stack([np.stack([m00, m01], -1), np.stack([m10, m11], -1)], -2)
    return M.reshape(shape + (2, 2))


def floquet_discriminant(potential, lam):
    """Delta(lam) = half-trace of the monodromy matrix."""
    M = monodromy(potential, lam)
    return 0.5 * (M[..., 0, 0] + M[..., 1, 1])


@dataclass(eq=False)
class SpectrumEstimate:
    """Main-spectrum points in the upper half-plane (conjugates implied)."""

    points: np.ndarray
    residuals: np.ndarray
    families: np.ndarray
    converged: np.ndarray
    unconverged_seeds: list = field(default_factory=list)

    @property
    def accepted(self):
        return self.points[self.converged]

    def to_dict(self):
        return {
            "points": [[p.real, p.imag] for p in self.points],
            "residuals": self.residuals.tolist(),
            "families": self.families.tolist(),
            "converged": self.converged.tolist(),
            "unconverged_seeds": [[p.real, p.imag] for p in self.unconverged_seeds],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        pts = np.array([complex(*p) for p in d["points"]], dtype=complex)
        return cls(
            pts,
            np.asarray(d["residuals"], dtype=float),
            np.asarray(d["families"], dtype=int),
            np.asarray(d["converged"], dtype=bool),
            [complex(*p) for p in d.get("unconverged_seeds", [])],
        )


def _grid_minima(vals):
    """Indices of strict-ish local minima (8-neighbourhood, edges included)."""
    pad = np.pad(vals, 1, constant_values=np.inf)
    n, m = vals.shape
    is_min = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            is_min &= vals <= pad[1 + di : 1 + di + n, 1 + dj : 1 + dj + m]
    return np.argwhere(is_min)


def _half_trace_batch(samples, h, lam):
    """Delta for potentials ``samples`` (R, n) at ``lam`` (R, m)."""
    lam2 = lam * lam
    ilam = 1j * lam
    m00 = np.ones(lam.shape, dtype=complex)
    m11 = np.ones(lam.shape, dtype=complex)
    m01 = np.zeros(lam.shape, dtype=complex)
    m10 = np.zeros(lam.shape, dtype=complex)
    for col in samples.T:
        q = col[:, None]
        kap = np.sqrt(-lam2 - np.abs(q) ** 2)
        kh = kap * h
        ch = np.cosh(kh)
        small = np.abs(kh) < 1e-8
        sh = np.where(small, h, np.sinh(kh) / np.where(small, 1.0, kap))
        e00 = ch - ilam * sh
        e11 = ch + ilam * sh
        e01 = -q * sh
        e10 = np.conj(q) * sh
        m00, m01, m10, m11 = (
            e00 * m00 + e01 * m10,
            e00 * m01 + e01 * m11,
            e10 * m00 + e11 * m10,
            e10 * m01 + e11 * m11,
        )
    return 0.5 * (m00 + m11)


def _newton(samples, h, seeds, targets, tol, max_iter, max_step):
    """Newton on Delta - target, all seeds at once; seeds (R, m)."""
    lam = seeds.copy()
    active = np.isfinite(lam)
    lam[~active] = 1j
    res = np.full(lam.shape, np.inf)
    for _ in range(max_iter):
        if not active.any():
            break
        fd = 1e-6 * np.maximum(1.0, np.abs(lam))
        d = _half_trace_batch(samples, h, np.concatenate([lam, lam + fd, lam - fd], axis=1))
        m = lam.shape[1]
        f = d[:, :m] - targets
        slope = (d[:, m : 2 * m] - d[:, 2 * m :]) / (2 * fd)
        r = np.abs(f)
        res = np.where(active, r, res)
        done = r < tol
        bad = ~np.isfinite(slope) | (slope == 0)
        step = np.where(bad, 0.0, f / np.where(bad, 1.0, slope))
        big = np.abs(step) > max_step
        step[big] *= max_step / np.abs(step[big])
        move = active & ~done & ~bad
        lam = np.where(move, lam - step, lam)
        active &= ~(done | bad)
    if active.any():
        r = np.abs(_half_trace_batch(samples, h, lam) - targets)
        res = np.where(active, r, res)
    return lam, res, res < tol


def _validate_box(box):
    re_lo, re_hi, im_lo, im_hi = box
    if im_lo < 0 or im_hi <= im_lo or re_hi <= re_lo:
        raise ValueError("search box must lie in the closed upper half-plane")


def ensemble_spectra(
    samples,
    period,
    search_box=(-3.0, 3.0, 0.05, 7.0),
    grid_density=40,
    tol=1e-8,
    merge_radius=1e-5,
    upsample=1,
    max_iter=60,
    simple_only=True,
    extra_seeds=None,
    allow_empty=True,
):
    """Main spectra of many one-period potentials (rows of ``samples``).

    Same algorithm as :func:`find_main_spectrum`, vectorized over rows.
    Returns one SpectrumEstimate per row.
    """
    _validate_box(search_box)
    re_lo, re_hi, im_lo, im_hi = search_box
    S = np.atleast_2d(np.asarray(samples, dtype=complex))
    if upsample > 1:
        S = np.array([ZSPotential(row, period).upsampled(upsample).samples for row in S])
    R, n = S.shape
    h = period / n

    re = np.linspace(re_lo, re_hi, grid_density)
    im = np.linspace(im_lo, im_hi, grid_density)
    L = (re[None, :] + 1j * im[:, None]).ravel()
    D = _half_trace_batch(S, h, np.broadcast_to(L, (R, L.size)))
    vals = np.abs(D * D - 1) / (1 + np.abs(D) ** 2)
    extra = [] if extra_seeds is None else [complex(z) for z in np.atleast_1d(extra_seeds)]
    per_row = []
    for r in range(R):
        v = vals[r].reshape(grid_density, grid_density)
        per_row.append([L[i * grid_density + j] for i, j in _grid_minima(v)] + extra)
    m = max(len(p) for p in per_row)
    seeds = np.full((R, m), np.nan + 0j)
    for r, p in enumerate(per_row):
        seeds[r, : len(p)] = p
    valid = np.isfinite(seeds)
    d0 = _half_trace_batch(S, h, np.where(valid, seeds, 1j))
    targets = np.where(d0.real >= 0, 1.0, -1.0)
    max_step = 0.5 * max(re_hi - re_lo, im_hi - im_lo)
    lam, res_all, ok = _newton(S, h, seeds, targets, tol, max_iter, max_step)

    out = []
    for r in range(R):
        found, res, fam = [], [], []
        sel = valid[r] & ok[r]
        unconv = [complex(z) for z in seeds[r][valid[r] & ~ok[r]]]
        for z, e, t in zip(lam[r][sel], res_all[r][sel], targets[r][sel]):
            if not (re_lo <= z.real <= re_hi and im_lo <= z.imag <= im_hi):
                continue
            if any(abs(z - p) < merge_radius for p in found):
                continue
            found.append(z)
            res.append(e)
            fam.append(int(t))
        if simple_only and found:
            z = np.asarray(found)[None, :]
            fd = 1e-4 * np.maximum(1.0, np.abs(z))
            dd = _half_trace_batch(S[r : r + 1], h, np.concatenate([z, z + fd, z - fd], axis=1))[0]
            k = z.shape[1]
            d0, dp, dm = dd[:k], dd[k : 2 * k], dd[2 * k :]
            d1 = np.abs(dp - dm) / (2 * fd[0])
            d2 = np.abs(dp - 2 * d0 + dm) / fd[0] ** 2
            resid = np.maximum(np.abs(d0 - np.asarray(fam)), 1e-15)
            # near a double point Delta - t ~ D2 e^2 / 2 and Delta' ~ D2 e, so
            # Delta'^2 / (2 D2 |Delta - t|) stays O(1); at a simple root it blows up
            ratio = d1**2 / np.maximum(2 * d2 * resid, 1e-300)
            keep = (d1 >= 1e-4 * period) & (ratio > 100)
            found = list(z[0][keep])
            res = list(np.asarray(res)[keep])
            fam = list(np.asarray(fam)[keep])
        if unconv:
            log.info("row %d: %d seeds did not converge", r, len(unconv))
        if not found and not allow_empty:
            raise NoRootsFound(f"no main-spectrum points in box {search_box}")
        found = np.asarray(found, dtype=complex)
        order = np.lexsort((found.imag, found.real))
        out.append(
            SpectrumEstimate(
                found[order],
                np.asarray(res, dtype=float)[order],
                np.asarray(fam, dtype=int)[order],
                np.ones(found.size, dtype=bool),
                unconv,
            )
        )
    return out


def find_main_spectrum(
    potential,
    search_box=(-3.0, 3.0, 0.05, 7.0),
    grid_density=40,
    tol=1e-8,
    merge_radius=1e-5,
    upsample=1,
    max_iter=60,
    simple_only=True,
    extra_seeds=None,
):
    """Roots of Delta = +-1 inside ``search_box`` = (re_lo, re_hi, im_lo, im_hi).

    A coarse grid of |Delta^2 - 1| seeds Newton iterations on Delta - s with
    s the nearer of +-1. Converged roots within ``merge_radius`` are merged.
    With ``simple_only`` the double points of Delta^2 = 1 (where Delta' also
    vanishes, i.e. closed gaps) are dropped. ``extra_seeds`` are added to
    the grid seeds, e.g. points of a reference spectrum. Seeds that fail to
    converge are listed in ``unconverged_seeds``.
    """
    _validate_box(search_box)
    pot = potential.upsampled(upsample) if upsample > 1 else potential
    probe = np.array([0.3 + 0.7j, -1.1 + 2.3j])
    dp = floquet_discriminant(pot, probe)
    sym = np.max(np.abs(floquet_discriminant(pot, probe.conj()) - np.conj(dp)))
    if sym > 1e-8 * max(1.0, float(np.max(np.abs(dp)))):
        log.warning("discriminant violates Schwarz symmetry by %.2e", sym)
    (est,) = ensemble_spectra(
        pot.samples[None, :],
        pot.period,
        search_box,
        grid_density,
        tol,
        merge_radius,
        1,
        max_iter,
        simple_only,
        extra_seeds,
        allow_empty=False,
    )
    return est


def average_periods(record, block_length, group_size):
    """Coherent averages over groups of consecutive blocks.

    ``record`` of length n_groups * group_size * block_length is returned as
    an (n_groups, block_length) array of per-group mean blocks.
    """
    record = np.asarray(record)
    if block_length < 1 or group_size < 1:
        raise ValueError("block_length and group_size must be positive")
    chunk = block_length * group_size
    if record.size == 0 or record.size % chunk:
        raise LengthMismatch(
            f"record of {record.size} samples is not a multiple of {group_size} x {block_length}"
        )
    return record.reshape(-1, group_size, block_length).mean(axis=1)


@dataclass(eq=False)
class SpectrumHistogram:
    re_edges: np.ndarray
    im_edges: np.ndarray
    counts: np.ndarray
    artifacts: int = 0
    outside: int = 0

    @property
    def total(self):
        return int(self.counts.sum())

    def centers(self):
        rc = 0.5 * (self.re_edges[1:] + self.re_edges[:-1])
        ic = 0.5 * (self.im_edges[1:] + self.im_edges[:-1])
        return rc, ic

    def to_csv(self, path):
        rc, ic = self.centers()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_center", "im_center", "count"])
            for i, r in enumerate(rc):
                for j, m in enumerate(ic):
                    w.writerow([f"{r:.12g}", f"{m:.12g}", int(self.counts[i, j])])


def spectrum_histogram(estimates, bins=(60, 60), box=(-3.0, 3.0, 0.0, 7.0), floor=0.5):
    """2D histogram of converged points; Im < ``floor`` is tallied as artifacts."""
    pts = [e.accepted for e in estimates]
    pts = np.concatenate(pts) if pts else np.zeros(0, complex)
    low = pts.imag < floor
    keep = pts[~low]
    re_edges = np.linspace(box[0], box[1], bins[0] + 1)
    im_edges = np.linspace(box[2], box[3], bins[1] + 1)
    counts, _, _ = np.histogram2d(keep.real, keep.imag, bins=[re_edges, im_edges])
    counts = counts.astype(int)
    return SpectrumHistogram(re_edges, im_edges, counts, int(low.sum()), int(keep.size - counts.sum()))


def match_points(found, reference):
    """Max over reference points of the distance to the nearest found point."""
    found = np.asarray(found, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    if found.size == 0:
        return np.inf
    return float(max(np.min(np.abs(found - r)) for r in reference))

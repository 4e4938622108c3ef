"""Derived observables of the genus-2 experiment and the checks built on them."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import curve_fit, linear_sum_assignment
from scipy.stats import gaussian_kde

from . import fgs, nft, nlse

PAPER_SPECTRUM = (-1 + 4.5j, 5j, 1 + 4.5j)
GENUS3_SPECTRUM = (-11.5 + 5j, -10.5 + 4j, 10.5 + 4j, 11.5 + 5j)
# relabels the constructed genus-3 a-cycles: a1, -(a1 + a2), -a3
GENUS3_TRANSFORM = ((1, 0, 0), (-1, -1, 0), (0, 0, -1))


def paper_solution(scaling=fgs.ScalingParams()):
    params = fgs.construct(PAPER_SPECTRUM, "commensurate")
    return params, fgs.dimensionalize(params, scaling)


# ------------------------------------------------------------ power shape


def gaussian_pulse_fit(t, power):
    """Fit P(t) = P0 exp(-(t - t0)^2 / (2 s^2)); returns (P0, t0, s)."""
    i = int(np.argmax(power))
    p0 = [float(power[i]), float(t[i]), 0.25 * float(t[-1] - t[0])]
    with warnings.catch_warnings():
        # the covariance estimate is not used
        warnings.simplefilter("ignore")
        (a, t0, s), _ = curve_fit(
            lambda x, a, c, w: a * np.exp(-((x - c) ** 2) / (2 * w**2)), t, power, p0=p0, maxfev=20000
        )
    return float(a), float(t0), abs(float(s))


def initial_pulse(solution, n_t=256):
    """Gaussian fit of one pulse (half a time period) of the launched power."""
    pT = solution.time_period
    T = np.arange(n_t) * pT / n_t
    P = np.abs(solution.grid([0.0], T)[0]) ** 2
    i = int(np.argmax(P))
    rel = (T - T[i] + 0.5 * pT) % pT - 0.5 * pT
    win = np.abs(rel) <= 0.25 * pT
    order = np.argsort(rel[win])
    return gaussian_pulse_fit(rel[win][order], P[win][order])


def dimensional_report(solution):
    rep = solution.report()
    peak0, _, width = initial_pulse(solution)
    rep["initial_gaussian_peak_mW"] = peak0
    rep["initial_gaussian_width_ns"] = width
    rep["peak_ratio"] = rep["peak_power_mW"] / peak0
    return rep


# -------------------------------------------------------------- spectrum


def comb(samples, n_lines=6):
    return nlse.comb_lines(samples, n_lines)


def is_triangular(samples, n_sidebands=5):
    """Sideband magnitudes decay monotonically from the first one on both sides."""
    idx, mag = nlse.comb_lines(samples, n_sidebands)
    logm = np.log(mag)
    ok = True
    for side in (1, -1):
        seq = np.array([logm[idx == side * n][0] for n in range(1, n_sidebands + 1)])
        ok &= bool(np.all(np.diff(seq) < 0))
    first = min(mag[idx == 1][0], mag[idx == -1][0])
    return ok and bool(np.all(mag[np.abs(idx) >= 2] < first))


def bandwidth_report(solution, n_t=1024):
    pT = solution.time_period
    dt = pT / n_t
    T = dt * np.arange(n_t)
    rep = solution.report()
    z = [0.0, rep["peak_distance_km"]]
    A = solution.grid(z, T)
    return {
        "bandwidth_initial_GHz": nlse.fourier_bandwidth(A[0], dt),
        "bandwidth_compression_GHz": nlse.fourier_bandwidth(A[1], dt),
        "triangular_comb": is_triangular(A[1]),
        "sidebands_compression": nlse.comb_lines(A[1], 5)[1].tolist(),
    }


# ----------------------------------------------------------------- phase


def phase_report(solution, n_t=256, n_z=401):
    """Peak-background phase at compression and its accumulation over p^z/2.

    The peak slice is the time of maximal power at compression; the
    background slice sits half a period away.
    """
    pT = solution.time_period
    rep = solution.report()
    T = np.arange(n_t) * pT / n_t
    Ac = solution.grid([rep["peak_distance_km"]], T)[0]
    i = int(np.argmax(np.abs(Ac)))
    j = (i + n_t // 2) % n_t
    at_peak = float(abs(np.angle(Ac[i] / Ac[j])))
    z = np.linspace(0.0, rep["half_period_km"], n_z)
    A = solution.grid(z, np.array([T[i], T[j]]))
    d = np.unwrap(np.angle(A[:, 0] / A[:, 1]))
    return {
        "peak_time_ns": float(T[i]),
        "background_time_ns": float(T[j]),
        "phase_difference_at_compression": at_peak,
        "accumulated_phase_half_period": float(abs(d[-1] - d[0])),
    }


# ----------------------------------------------------- symmetric structure


def symmetry_report(params, n=64):
    pz = fgs.spatial_period(params)
    pt = fgs.time_period(params)
    z = np.linspace(0, pz, n, endpoint=False)
    t = np.linspace(0, pt, n, endpoint=False)
    base = np.abs(fgs.evaluate_grid(params, z, t))
    shifted = np.abs(fgs.evaluate_grid(params, z + pz / 2, t + pt / 2))
    scale = float(np.max(np.abs(params.omega)))
    nz = int(np.argmin(np.abs(params.k)))
    k_big, k_small = sorted(np.abs(params.k))[::-1]
    return {
        "omega0": params.omega0,
        "omega_min": float(np.min(np.abs(params.omega))) / scale,
        "k_ratio_error": abs(k_big - 2 * k_small) / k_small,
        "half_shift_error": float(np.max(np.abs(shifted - base)) / np.max(base)),
        "zero_k_index": nz,
    }


# -------------------------------------------------------- effective model


def effective_model_report(solution, n_spans=120, n_t=64, config=nlse.SimConfig()):
    g0 = fgs.sample_grid(solution, 1, n_t, [0.0])
    span = nlse.FiberSpan(
        solution.scaling.beta2, solution.scaling.gamma, solution.scaling.alpha_db, solution.scaling.span_length
    )
    out = {}
    for name, sp in (("lossy", span), ("lossless", span.effective())):
        res = nlse.propagate_link(g0, nlse.LinkModel(span=sp, n_spans=n_spans), config)
        ref = solution.grid(res.z_values, g0.times)
        mean, mx = nlse.relative_deviation(res.samples, ref)
        out[name] = {"mean": mean, "max": mx}
    return out


# --------------------------------------------------------- isospectrality


def isospectrality_report(solution, n_dist=10, n_t=64, upsample=16, config=nlse.SimConfig()):
    """NFT of the lossless effective-model field at ``n_dist`` distances up to p^z/2."""
    rep = solution.report()
    span_len = solution.scaling.span_length
    total = rep["half_period_km"]
    n_spans = int(math.ceil(total / span_len))
    span = nlse.FiberSpan(
        solution.scaling.beta2, solution.scaling.gamma, solution.scaling.alpha_db, span_len
    ).effective()
    # equal spans ending exactly at the half period
    span = nlse.FiberSpan(span.beta2, span.gamma, 0.0, total / n_spans)
    g0 = fgs.sample_grid(solution, 1, n_t, [0.0])
    res = nlse.propagate_link(g0, nlse.LinkModel(span=span, n_spans=n_spans), config)
    pick = np.unique(np.linspace(0, n_spans, n_dist).round().astype(int))
    period = solution.time_period / solution.T0
    S = res.samples[pick] / solution.amplitude
    ests = nft.ensemble_spectra(S, period, upsample=upsample, extra_seeds=PAPER_SPECTRUM)
    errs = [nft.match_points(e.points, PAPER_SPECTRUM) for e in ests]
    return {"distances_km": res.z_values[pick].tolist(), "max_error": float(max(errs)), "errors": errs}


# ------------------------------------------------------------ noise clouds


@dataclass(frozen=True)
class CloudStudy:
    n_realizations: int = 500
    group_size: int = 25
    spans: tuple = (13, 15, 40)
    calibration_span: int = 13
    target_radius_fraction: float = 1 / 16  # of the smallest spectral gap
    pilot_noise_figure_db: float = 5.0
    pilot_realizations: int = 100
    seed: int = 2024
    n_t: int = 64
    floor: float = 0.5
    density_level: float = 0.05
    search_box: tuple = (-3.0, 3.0, 0.05, 7.0)
    grid_density: int = 30


def track_points(estimates, reference, floor=0.5):
    """Match each estimate's points above ``floor`` to the reference points.

    Returns (points, labels, n_artifacts) with the optimal one-to-one
    assignment per realization.
    """
    reference = np.asarray(reference)
    pts, lab, art = [], [], 0
    for e in estimates:
        q = e.points[e.points.imag > floor]
        art += int(np.sum(e.points.imag <= floor))
        if q.size == 0:
            continue
        r, c = linear_sum_assignment(np.abs(q[:, None] - reference[None, :]))
        pts.extend(q[r])
        lab.extend(c)
    return np.asarray(pts), np.asarray(lab, dtype=int), art


def cloud_radii(points, labels, n):
    out = []
    for i in range(n):
        p = points[labels == i]
        out.append(float(np.sqrt(np.mean(np.abs(p - p.mean()) ** 2))) if p.size else math.nan)
    return out


def cloud_topology(points, reference, level=0.05, n_grid=160):
    """Connected components of {density >= level * max} and their modes.

    Returns {"components": component id per reference point,
    "modes": number of local density maxima above 20% of the peak in each
    component that holds more than one reference point}.
    """
    reference = np.asarray(reference)
    kde = gaussian_kde(np.vstack([points.real, points.imag]))
    pad = 0.6
    re = np.linspace(min(points.real.min(), reference.real.min()) - pad, max(points.real.max(), reference.real.max()) + pad, n_grid)
    im = np.linspace(min(points.imag.min(), reference.imag.min()) - pad, max(points.imag.max(), reference.imag.max()) + pad, n_grid)
    X, Y = np.meshgrid(re, im)
    D = kde(np.vstack([X.ravel(), Y.ravel()])).reshape(X.shape)
    lab, _ = ndimage.label(D >= level * D.max())
    comp = []
    for z in reference:
        i = int(np.argmin(np.abs(im - z.imag)))
        j = int(np.argmin(np.abs(re - z.real)))
        comp.append(int(lab[i, j]))
    peaks = (D == ndimage.maximum_filter(D, size=9)) & (D >= 0.2 * D.max())
    modes = {}
    for c in set(comp):
        if c and comp.count(c) > 1:
            modes[c] = int(np.sum(peaks & (lab == c)))
    return {"components": comp, "modes": modes}


def _spectra(rows, solution, study):
    period = solution.time_period / solution.T0
    return nft.ensemble_spectra(
        rows / solution.amplitude, period, search_box=study.search_box, grid_density=study.grid_density
    )


def _link(solution, nf, seed, n_spans):
    sc = solution.scaling
    span = nlse.FiberSpan(sc.beta2, sc.gamma, sc.alpha_db, sc.span_length)
    return nlse.LinkModel(span=span, n_spans=n_spans, ase=nlse.ASEConfig(noise_figure_db=nf, seed=seed))


def calibrate_noise_figure(solution, study=CloudStudy()):
    """Noise figure giving the target cloud radius at the calibration span.

    Radii grow with the square root of the ASE variance at small noise, and
    the variance is proportional to the linear noise figure.
    """
    g0 = fgs.sample_grid(solution, 1, study.n_t, [0.0])
    link = _link(solution, study.pilot_noise_figure_db, study.seed + 1, study.calibration_span)
    A = nlse.propagate_ensemble(g0.samples[0], g0.dt, link, study.pilot_realizations, [study.calibration_span])
    pts, lab, _ = track_points(_spectra(A[study.calibration_span], solution, study), PAPER_SPECTRUM, study.floor)
    r0 = float(np.mean(cloud_radii(pts, lab, 3)))
    gap = _min_gap(PAPER_SPECTRUM)
    target = study.target_radius_fraction * gap
    return study.pilot_noise_figure_db + 20 * math.log10(target / r0)


def _min_gap(points):
    p = np.asarray(points)
    d = np.abs(p[:, None] - p[None, :])
    return float(np.min(d[np.triu_indices(len(p), 1)]))


def noise_cloud_report(solution, study=CloudStudy(), noise_figure_db=None):
    nf = calibrate_noise_figure(solution, study) if noise_figure_db is None else noise_figure_db
    g0 = fgs.sample_grid(solution, 1, study.n_t, [0.0])
    link = _link(solution, nf, study.seed, max(study.spans))
    fields = nlse.propagate_ensemble(g0.samples[0], g0.dt, link, study.n_realizations, study.spans)
    gap = _min_gap(PAPER_SPECTRUM)
    out = {"noise_figure_db": nf, "gap": gap, "spans": {}}
    for sp in study.spans:
        A = fields[sp]
        raw = _spectra(A, solution, study)
        pts, lab, art = track_points(raw, PAPER_SPECTRUM, study.floor)
        avg_rows = nft.average_periods(A.ravel(), A.shape[1], study.group_size)
        apts, alab, _ = track_points(_spectra(avg_rows, solution, study), PAPER_SPECTRUM, study.floor)
        r_raw = cloud_radii(pts, lab, 3)
        r_avg = cloud_radii(apts, alab, 3)
        topo = cloud_topology(pts, PAPER_SPECTRUM, study.density_level)
        comps = topo["components"]
        out["spans"][sp] = {
            "distance_km": sp * solution.scaling.span_length,
            "radius_raw": r_raw,
            "radius_avg": r_avg,
            "averaging_factor": float(np.sqrt(np.mean(np.square(r_raw)) / np.mean(np.square(r_avg)))),
            "artifacts": art,
            "components": comps,
            "disjoint": len(set(comps)) == 3 and 0 not in comps,
            "merged": len(set(comps)) < 3,
            "bimodal": bool(topo["modes"]) and all(v >= 2 for v in topo["modes"].values()),
            "max_radius_over_half_gap": float(np.nanmax(r_raw) / (gap / 2)),
        }
    return out

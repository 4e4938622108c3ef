"""Config-driven pipeline: construct, propagate, nft, compare.

Each invocation writes into a fresh versioned directory ``<out>/run-NNNN``
and finishes with a ``manifest.json`` written atomically. Stages that need
upstream files read them from the most recent earlier run that has them.

Exit codes: 0 success (and every acceptance check passed), 1 computation
error, 2 acceptance failure.
"""

import argparse
import copy
import hashlib
import json
import logging
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import acceptance as ac
from . import fgs, nft, nlse
from . import observables as ob

log = logging.getLogger("fgnlse")

STAGES = ("construct", "propagate", "nft", "compare")
EXIT_OK, EXIT_ERROR, EXIT_ACCEPTANCE = 0, 1, 2

ANALYSIS_DEFAULTS = {
    "search_box": [-3.0, 3.0, 0.05, 7.0],
    "grid_density": 40,
    "bins": [60, 60],
    "nft_spans": None,
    "upsample": 4,
    "group_size": 25,
    "acceptance": list(ac.CRITERIA),
    "noise_realizations": 500,
}


def load_schema():
    return json.loads(resources.files("fgnlse").joinpath("config.schema.json").read_text())


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


@dataclass
class ExperimentConfig:
    """Validated experiment description; field names carry their units."""

    spectrum: dict
    time_period_ns: float
    fiber: dict
    link: dict
    grid: dict
    analysis: dict
    output_dir: str

    @classmethod
    def from_dict(cls, d):
        jsonschema.validate(d, load_schema())
        d = copy.deepcopy(d)
        d["analysis"] = {**ANALYSIS_DEFAULTS, **d.get("analysis", {})}
        d["link"].setdefault("filter", None)
        d["link"].setdefault("ase", None)
        d["spectrum"].setdefault("basis_transform", None)
        return cls(**d)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)

    def with_seed(self, seed):
        d = self.to_dict()
        d["link"]["seed"] = int(seed)
        return ExperimentConfig(**d)

    @property
    def sha256(self):
        return hashlib.sha256(_canonical(self.to_dict()).encode()).hexdigest()

    # -- derived objects

    @property
    def points(self):
        return [complex(a, b) for a, b in self.spectrum["points"]]

    @property
    def basis_transform(self):
        return self.spectrum["basis_transform"]

    @property
    def scaling(self):
        f = self.fiber
        return fgs.ScalingParams(
            beta2=f["beta2_ps2_per_km"],
            gamma=f["gamma_per_W_per_km"],
            alpha_db=f["alpha_dB_per_km"],
            span_length=f["span_length_km"],
            period_target_ns=self.time_period_ns,
        )

    @property
    def span(self):
        f = self.fiber
        return nlse.FiberSpan(f["beta2_ps2_per_km"], f["gamma_per_W_per_km"], f["alpha_dB_per_km"], f["span_length_km"])

    def link_model(self, with_ase=True):
        lk = self.link
        flt = lk["filter"]
        ase = lk["ase"] if with_ase else None
        return nlse.LinkModel(
            span=self.span,
            n_spans=lk["n_spans"],
            filter=None if flt is None else nlse.GaussianFilter(flt["fwhm_GHz"], flt.get("offset_GHz", 0.0)),
            ase=None
            if ase is None
            else nlse.ASEConfig(ase["noise_figure_dB"], lk["seed"], ase.get("wavelength_nm", 1550.0)),
        )

    @property
    def n_t(self):
        return self.grid["samples_per_period"] * self.grid["periods"]

    @property
    def integrable(self):
        """Lossless and unfiltered: the recorded field must conserve its spectrum."""
        return self.fiber["alpha_dB_per_km"] == 0 and self.link["filter"] is None

    @property
    def nft_spans(self):
        spans = self.analysis["nft_spans"]
        if spans is None:
            spans = sorted({0, self.link["n_spans"]})
        return [s for s in spans if s <= self.link["n_spans"]]


@dataclass
class RunManifest:
    config_sha256: str
    version: str
    seed: int
    stages: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    status: str = "running"

    def record(self, stage, files, seconds, error=None):
        self.stages[stage] = {
            "files": sorted(files),
            "seconds": seconds,
            "status": "failed" if error else "ok",
        }
        if error:
            self.stages[stage]["error"] = error

    def write(self, run_dir):
        """Atomic write: temp file in the same directory, then rename."""
        fd, tmp = tempfile.mkstemp(dir=run_dir, prefix=".manifest-", suffix=".json")
        with os.fdopen(fd, "w") as fh:
            fh.write(_dump(asdict(self)))
        os.replace(tmp, Path(run_dir) / "manifest.json")


# ------------------------------------------------------------ run folders


RUN_RE = re.compile(r"run-(\d{4,})$")


def _runs(out):
    out = Path(out)
    if not out.is_dir():
        return []
    found = [(int(m.group(1)), p) for p in out.iterdir() if (m := RUN_RE.match(p.name)) and p.is_dir()]
    return [p for _, p in sorted(found)]


def new_run_dir(out):
    """Create the next free run-NNNN directory; never reuses an existing one."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    runs = _runs(out)
    n = int(RUN_RE.match(runs[-1].name).group(1)) + 1 if runs else 1
    while True:
        p = out / f"run-{n:04d}"
        try:
            p.mkdir()
            return p
        except FileExistsError:
            n += 1


def find_input(out, name, exclude=None):
    """Most recent run directory under ``out`` that holds file ``name``."""
    for p in reversed(_runs(out)):
        if p != exclude and (p / name).exists():
            return p / name
    return None


# ----------------------------------------------------------------- stages


class StageError(RuntimeError):
    pass


def _solution(cfg, params):
    return fgs.dimensionalize(params, cfg.scaling, approximate_tol=0.02)


def _write(run_dir, name, text, files):
    (run_dir / name).write_text(text)
    files.append(name)


def _write_grid(run_dir, stem, grid, files):
    grid.to_binary(run_dir / f"{stem}.bin")
    grid.to_csv(run_dir / f"{stem}.csv")
    files.extend([f"{stem}.bin", f"{stem}.bin.json", f"{stem}.csv"])


def stage_construct(cfg, run_dir, ctx):
    files = []
    params = fgs.construct(cfg.points, cfg.basis_transform)
    sol = _solution(cfg, params)
    g = cfg.grid
    z = np.linspace(0.0, g["z_max_km"], g["n_z"])
    grid = fgs.sample_grid(sol, g["periods"], cfg.n_t, z)
    n = g.get("residual_points", 256)
    res = fgs.nlse_residual(params, n_zeta=n, n_tau=n)
    report = {
        "genus": params.genus,
        "residual": res,
        "T0_ns": sol.T0,
        "z_scale_km": sol.z_scale,
        "amplitude_sqrt_mW": sol.amplitude,
        "time_period_ns": sol.time_period,
        "stripped_components": params.stripped,
    }
    if math.isfinite(sol.spatial_period):
        report["dimensional"] = sol.report()
    _write(run_dir, "params.json", params.to_json(), files)
    _write_grid(run_dir, "theory_field", grid, files)
    _write(run_dir, "construct_report.json", _dump(report), files)
    log.info("construct: genus %d, residual %.2e", params.genus, res["residual"])
    return files


def _load_params(ctx):
    return fgs.ThetaParameters.from_dict(json.loads(Path(ctx["params.json"]).read_text()))


def _phase_slices(grid):
    """Phase of the launched peak time relative to the time half a window away."""
    i = int(np.argmax(np.abs(grid.samples[0])))
    j = (i + grid.n_t // 2) % grid.n_t
    d = np.unwrap(np.angle(grid.samples[:, i] / grid.samples[:, j]))
    return grid.times[i], grid.times[j], d


def stage_propagate(cfg, run_dir, ctx):
    files = []
    params = _load_params(ctx)
    sol = _solution(cfg, params)
    g = cfg.grid
    launch = fgs.sample_grid(sol, g["periods"], cfg.n_t, [0.0])
    # the recorded field is noiseless; ASE enters through the ensembles only
    out = nlse.propagate_link(launch, cfg.link_model(with_ase=False))
    theory = sol.grid(out.z_values, out.times)
    mean, mx = nlse.relative_deviation(out.samples, theory)
    per_row = [nlse.relative_deviation(out.samples[k], theory[k])[1] for k in range(out.n_z)]
    bw = [nlse.fourier_bandwidth(row, out.dt) for row in out.samples]
    n_lines = min(5, cfg.n_t // 2 - 1)
    asym = [nlse.spectral_asymmetry(row, n_lines) for row in out.samples]
    tp, tb, dphi = _phase_slices(out)
    table = np.column_stack([out.z_values, bw, asym, dphi, per_row])
    np.savetxt(
        run_dir / "propagate_series.csv",
        table,
        delimiter=",",
        header="z_km,bandwidth_GHz,asymmetry,phase_peak_minus_background_rad,deviation_max",
        comments="",
        fmt="%.17g",
    )
    files.append("propagate_series.csv")
    _write_grid(run_dir, "field", out, files)
    if cfg.link["ase"] is not None:
        A = nlse.propagate_ensemble(
            launch.samples[0], launch.dt, cfg.link_model(), cfg.link["ase"]["n_realizations"], cfg.nft_spans
        )
        for sp, rows in A.items():
            z = sp * cfg.span.length
            eg = fgs.FieldGrid(rows, launch.dt, np.full(rows.shape[0], z))
            eg.to_binary(run_dir / f"ensemble_span{sp:04d}.bin")
            files.extend([f"ensemble_span{sp:04d}.bin", f"ensemble_span{sp:04d}.bin.json"])
    report = {
        "n_spans": cfg.link["n_spans"],
        "deviation_vs_theory": {"mean": mean, "max": mx},
        "bandwidth_GHz": {"initial": bw[0], "final": bw[-1], "max": max(bw)},
        "asymmetry": {"initial": asym[0], "final": asym[-1], "max": max(asym)},
        "phase_slice_times_ns": [tp, tb],
        "energy_ratio": float(np.sum(np.abs(out.samples[-1]) ** 2) / np.sum(np.abs(out.samples[0]) ** 2)),
    }
    _write(run_dir, "propagate_report.json", _dump(report), files)
    log.info("propagate: %d spans, deviation mean %.3g max %.3g", cfg.link["n_spans"], mean, mx)
    return files


def _normalized(rows, sol):
    return np.asarray(rows) / sol.amplitude


def stage_nft(cfg, run_dir, ctx):
    files = []
    params = _load_params(ctx)
    sol = _solution(cfg, params)
    a = cfg.analysis
    grid = fgs.FieldGrid.from_binary(ctx["field.bin"])
    period = grid.n_t * grid.dt / sol.T0
    z_want = {sp: sp * cfg.span.length for sp in cfg.nft_spans}
    idx = {sp: int(np.argmin(np.abs(grid.z_values - z))) for sp, z in z_want.items()}
    kw = dict(search_box=tuple(a["search_box"]), grid_density=a["grid_density"], upsample=a["upsample"])
    rows = np.array([grid.samples[i] for i in idx.values()])
    est = nft.ensemble_spectra(_normalized(rows, sol), period, **kw) if idx else []
    ref = cfg.points
    spectra = {}
    for (sp, i), e in zip(idx.items(), est):
        spectra[str(sp)] = {
            "z_km": float(grid.z_values[i]),
            "estimate": e.to_dict(),
            "match_error": nft.match_points(e.accepted, ref) if e.accepted.size else None,
        }
    _write(run_dir, "spectra.json", _dump(spectra), files)
    errors = [s["match_error"] for s in spectra.values() if s["match_error"] is not None]
    report = {"max_match_error": max(errors) if errors else None, "ensembles": {}}

    hbox = (a["search_box"][0], a["search_box"][1], 0.0, a["search_box"][3])
    floor = 0.5 * min(z.imag for z in ref)
    for sp in cfg.nft_spans:
        path = ctx.get(f"ensemble_span{sp:04d}.bin")
        if path is None:
            continue
        eg = fgs.FieldGrid.from_binary(path)
        R = _normalized(eg.samples, sol)
        # noisy rows are not band-limited, so they are analyzed as sampled
        kw_noisy = {**kw, "upsample": 1}
        raw = nft.ensemble_spectra(R, period, **kw_noisy)
        avg_rows = nft.average_periods(R.ravel(), R.shape[1], a["group_size"])
        avg = nft.ensemble_spectra(avg_rows, period, **kw_noisy)
        for mode, ests in (("raw", raw), ("avg", avg)):
            h = nft.spectrum_histogram(ests, bins=tuple(a["bins"]), box=hbox, floor=floor)
            name = f"histogram_span{sp:04d}_{mode}.csv"
            h.to_csv(run_dir / name)
            files.append(name)
        pr, lr, art = ob.track_points(raw, ref, floor)
        pa, la, _ = ob.track_points(avg, ref, floor)
        rr = ob.cloud_radii(pr, lr, len(ref))
        ra = ob.cloud_radii(pa, la, len(ref))
        ms_raw = float(np.nanmean(np.square(rr))) if pr.size else 0.0
        ms_avg = float(np.nanmean(np.square(ra))) if pa.size else 0.0
        # noiseless ensembles have zero spread in both modes
        ratio = math.sqrt(ms_raw / ms_avg) if ms_avg > 0 else None
        report["ensembles"][str(sp)] = {
            "z_km": sp * cfg.span.length,
            "radius_raw": rr,
            "radius_avg": ra,
            "spread_ratio": ratio,
            "artifacts": art,
        }
    _write(run_dir, "nft_report.json", _dump(report), files)
    log.info("nft: max match error %s", report["max_match_error"])
    return files


def stage_compare(cfg, run_dir, ctx):
    files = []
    study = ob.CloudStudy(n_realizations=cfg.analysis["noise_realizations"], seed=cfg.link["seed"])
    results = ac.run_all(tuple(cfg.analysis["acceptance"]), study=study) if cfg.analysis["acceptance"] else []
    run_checks = ac.Criterion(0, "configured run")
    if "nft_report.json" in ctx:
        nr = json.loads(Path(ctx["nft_report.json"]).read_text())
        e = nr.get("max_match_error")
        if cfg.integrable and e is not None:
            run_checks.add("isospectral_max_dlambda", e, "< 1e-3", e < 1e-3)
    if "propagate_report.json" in ctx and cfg.integrable:
        pr = json.loads(Path(ctx["propagate_report.json"]).read_text())
        d = pr["energy_ratio"] - 1
        run_checks.add("energy_drift", abs(d), "< 1e-10", abs(d) < 1e-10)
    if run_checks.checks:
        results.append(run_checks)
    for r in results:
        log.info(r.line())
    out = {"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}
    _write(run_dir, "acceptance.json", _dump(out), files)
    ctx["_passed"] = out["passed"]
    return files


STAGE_FUNCS = {
    "construct": stage_construct,
    "propagate": stage_propagate,
    "nft": stage_nft,
    "compare": stage_compare,
}

NEEDS = {
    "construct": [],
    "propagate": ["params.json"],
    "nft": ["params.json", "field.bin"],
    "compare": [],
}
OPTIONAL = {"compare": ["nft_report.json", "propagate_report.json"]}


def _resolve_inputs(stage, cfg, out, run_dir, ctx, manifest):
    for name in NEEDS[stage]:
        if name in ctx:
            continue
        p = find_input(out, name, exclude=run_dir)
        if p is None:
            raise StageError(f"stage {stage!r} needs {name}; run an upstream stage first")
        ctx[name] = str(p)
        if name.endswith(".bin"):
            ctx.setdefault(name + ".json", str(p) + ".json")
        manifest.inputs[name] = str(p)
    for name in OPTIONAL.get(stage, []):
        if name not in ctx and (p := find_input(out, name, exclude=run_dir)) is not None:
            ctx[name] = str(p)
            manifest.inputs[name] = str(p)
    if stage == "nft":
        for sp in cfg.nft_spans:
            name = f"ensemble_span{sp:04d}.bin"
            if name in ctx:
                continue
            src = Path(ctx["field.bin"]).parent / name
            if src.exists():
                ctx[name] = str(src)
                manifest.inputs.setdefault(name, str(src))


def run(cfg, stage="pipeline", out=None):
    """Run one stage or the whole pipeline. Returns (exit_code, run_dir)."""
    out = Path(out or cfg.output_dir)
    stages = STAGES if stage == "pipeline" else (stage,)
    run_dir = new_run_dir(out)
    manifest = RunManifest(cfg.sha256, __version__, cfg.link["seed"])
    (run_dir / "config.json").write_text(_dump(cfg.to_dict()))
    manifest.stages["config"] = {"files": ["config.json"], "seconds": 0.0, "status": "ok"}
    ctx = {}
    code = EXIT_OK
    for st in stages:
        t = time.perf_counter()
        try:
            _resolve_inputs(st, cfg, out, run_dir, ctx, manifest)
            files = STAGE_FUNCS[st](cfg, run_dir, ctx)
        except Exception as exc:  # any failure aborts with a partial manifest
            log.error("stage %s failed: %s: %s", st, type(exc).__name__, exc)
            written = sorted(
                p.name for p in run_dir.iterdir() if p.is_file() and not p.name.startswith((".", "manifest"))
            )
            claimed = {f for s in manifest.stages.values() for f in s["files"]}
            manifest.record(st, [f for f in written if f not in claimed], time.perf_counter() - t, f"{type(exc).__name__}: {exc}")
            manifest.status = "failed"
            manifest.write(run_dir)
            return EXIT_ERROR, run_dir
        manifest.record(st, files, time.perf_counter() - t)
        for f in files:
            ctx[f] = str(run_dir / f)
        if st == "compare" and not ctx.get("_passed", True):
            code = EXIT_ACCEPTANCE
    manifest.status = "ok" if code == EXIT_OK else "acceptance_failed"
    manifest.write(run_dir)
    return code, run_dir


def default_config_path():
    return resources.files("fgnlse").joinpath("default_config.json")


def build_parser():
    p = argparse.ArgumentParser(prog="fgnlse", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="experiment config JSON (default: packaged paper config)")
    p.add_argument("--stage", default="pipeline", choices=STAGES + ("pipeline",))
    p.add_argument("--out", type=Path, help="output root (overrides output_dir)")
    p.add_argument("--seed", type=int, help="overrides link.seed")
    p.add_argument("--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        src = args.config if args.config else default_config_path()
        cfg = ExperimentConfig.from_dict(json.loads(Path(src).read_text()))
    except (OSError, ValueError, jsonschema.ValidationError) as exc:
        log.error("invalid config: %s", getattr(exc, "message", exc))
        return EXIT_ERROR
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    code, run_dir = run(cfg, args.stage, args.out)
    print(run_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())

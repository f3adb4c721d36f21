"""Named end-to-end runs driven by a RunConfig.

Each pipeline writes its data files into the output directory and returns
key metrics; ``run_pipeline`` adds a manifest.json listing the files with
their hashes, the config digest and the seed.
"""
from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.ndimage import uniform_filter1d

from . import __version__
from . import constants as K
from . import io
from .analysis import (
    detect_bins,
    difference_marginal,
    expected_bin_count,
    extract_bin,
    jsa_from_jsi,
    marginals,
    modulation_contrast,
    schmidt_decompose,
)
from .config import RunConfig
from .detection import (
    DetectorSpec,
    DispersionSpec,
    PairSource,
    apply_detector,
    coincidences_and_klyshko,
    compose_jitter,
    crop_to_band,
    edges_from_axis,
    freq_to_time,
    period_half_width,
    sample_pair_events,
    spectral_resolution,
    tof_reconstruct,
)
from .errors import ConfigError, EmptyReportError, FreqbinError
from .hom import hom_curve
from .kernels import diagonal_sums
from .network import ClockModel, FiberLink, fold_and_histogram, folded_spectrum, resolve_report, simulate_two_node
from .spectral import (
    CrystalSpec,
    FrequencyGrid,
    PhaseMatchModel,
    PumpSpectrum,
    build_frequency_grid,
    build_jsa,
    default_grid,
    load_phase_match_table,
)
from .synthesis import (
    StageGeometry,
    SynthesisConfig,
    apply_bidirectional,
    displacement_to_delays,
    jsi_from_amplitude,
    jta_transform,
    phase_from_path,
)

# --------------------------------------------------------------------------
# builders


def build_grid(cfg: RunConfig) -> FrequencyGrid:
    g = cfg.sections["grid"]
    return default_grid(g["n"], 2 * math.pi * g["span_hz"], cfg.get("pump", "wavelength"))


def build_pump(cfg: RunConfig) -> PumpSpectrum:
    p = cfg.sections["pump"]
    if p["shape"] == "tabulated":
        raise ConfigError("tabulated pump shapes are only available through the library API")
    return PumpSpectrum.from_wavelength(p["wavelength"], p["bandwidth_wl"], p["shape"])


def build_crystal(cfg: RunConfig) -> CrystalSpec:
    c = cfg.sections["crystal"]
    omega0 = K.degenerate_omega(cfg.get("pump", "wavelength"))
    if c["table"]:
        model = load_phase_match_table(c["table"], omega0)
    else:
        model = PhaseMatchModel.default(c["ridge_fwhm_hz"], c["length"], c["mean_beta"], omega0)
        model = replace(
            model,
            dk0=c["dk0"],
            beta_h=model.beta_h if c["beta_h"] is None else c["beta_h"],
            beta_v=model.beta_v if c["beta_v"] is None else c["beta_v"],
        )
    return CrystalSpec(c["length"], c["poling_period"], model, c["temperature"])


def build_delays(cfg: RunConfig):
    """(dt_h, dt_v) with direct values taking precedence over displacements."""
    s = cfg.sections["synthesis"]
    if s["dt_h"] is not None or s["dt_v"] is not None:
        return s["dt_h"] or 0.0, s["dt_v"] or 0.0
    if s["dt_minus"] is not None:
        return s["dt_minus"] / 2, -s["dt_minus"] / 2
    if s["d1"] is not None or s["d2"] is not None:
        dt_h, dt_v, _ = displacement_to_delays(StageGeometry(s["d1"] or 0.0, s["d2"] or 0.0))
        return dt_h, dt_v
    return 0.0, 0.0


def build_phases(cfg: RunConfig):
    """Phases to run: the explicit phase, else one per pump-mirror position."""
    s = cfg.sections["synthesis"]
    lam = cfg.get("pump", "wavelength")
    if s["phase"] is not None:
        return [s["phase"]]
    if s["d3_scan"]:
        return [phase_from_path(StageGeometry(d3=d), lam) for d in s["d3_scan"]]
    if s["d3"] is not None:
        return [phase_from_path(StageGeometry(d3=s["d3"]), lam)]
    return [0.0]


def build_synthesis(cfg: RunConfig, phase=None) -> SynthesisConfig:
    dt_h, dt_v = build_delays(cfg)
    phase = build_phases(cfg)[0] if phase is None else phase
    return SynthesisConfig(dt_h, dt_v, phase, cfg.get("pump", "wavelength"))


def build_source(cfg: RunConfig, phase=None):
    """(grid, baseline JSA, synthesis config, synthesized JSA)."""
    grid = build_grid(cfg)
    f0 = build_jsa(grid, build_pump(cfg), build_crystal(cfg))
    syn = build_synthesis(cfg, phase)
    return grid, f0, syn, apply_bidirectional(f0, syn)


def detector_from_config(cfg: RunConfig) -> DetectorSpec:
    d = cfg.sections["detection"]
    if d["system_jitter_fwhm"] is not None:
        fwhm = d["system_jitter_fwhm"]
    else:
        fwhm = compose_jitter(d["jitter_fwhm"], d["electronics_jitter_fwhm"])
    return DetectorSpec.from_fwhm(d["efficiency"], fwhm, d["dark_rate"], d["dead_time"])


def dispersion_from_config(cfg: RunConfig) -> DispersionSpec:
    d = cfg.sections["detection"]
    return DispersionSpec(d["dispersion_ps_nm"] * 1e-3 * d["dispersion_scale"], d["lambda_ref"])


def _target_spacing(syn: SynthesisConfig):
    return None if syn.dt_minus == 0 else syn.bin_spacing


def _bin_offset_fraction(syn: SynthesisConfig) -> float:
    """Offset of the single-photon modulation maxima from the degenerate
    frequency, in units of the spacing, reduced to [-0.5, 0.5)."""
    frac = syn.phase / (2 * math.pi) * math.copysign(1.0, syn.dt_minus)
    return (frac + 0.5) % 1.0 - 0.5


def _crop_axis(grid: FrequencyGrid, half_width_hz):
    nu0 = grid.center / (2 * math.pi)
    return np.nonzero(np.abs(grid.nu_a - nu0) <= half_width_hz)[0]


def _bins_or_none(y, axis, threshold_db):
    try:
        return detect_bins(y, axis, threshold_db)
    except EmptyReportError:
        return None


# --------------------------------------------------------------------------
# pipelines


def _modulation_correlations(profiles, axis, dt_minus):
    """Correlation of each profile's fringe pattern with the first one.

    Each profile is divided by its one-period moving average so the common
    envelope does not dominate; only points above 10 % of the envelope peak
    enter.
    """
    if not dt_minus:
        return [None] * len(profiles)
    step = float(axis[1] - axis[0])
    width = max(1, int(round(1.0 / abs(dt_minus) / step)))
    mods, masks = [], []
    for p in profiles:
        env = uniform_filter1d(np.asarray(p, dtype=float), width, mode="constant")
        mask = env > 0.1 * env.max()
        mods.append(np.where(mask, p / np.where(mask, env, 1.0) - 1.0, 0.0))
        masks.append(mask)
    keep = np.logical_and.reduce(masks)
    ref = mods[0][keep]
    return [float(np.corrcoef(ref, m[keep])[0, 1]) for m in mods]


def pipeline_jsi(cfg: RunConfig, out: Path):
    grid = build_grid(cfg)
    f0 = build_jsa(grid, build_pump(cfg), build_crystal(cfg))
    phases = build_phases(cfg)
    thr = cfg.get("analysis", "threshold_db")
    files = []
    metrics = {"phases": phases}
    base_total = float(jsi_from_amplitude(f0).sum())
    scan_ma, scan_dm = [], []
    for k, phase in enumerate(phases):
        syn = build_synthesis(cfg, phase)
        j = jsi_from_amplitude(apply_bidirectional(f0, syn))
        ma, mb = marginals(j, grid)
        ax, dm = difference_marginal(j, grid)
        scan_ma.append(ma)
        scan_dm.append(dm)
        if k == 0:
            idx = _crop_axis(grid, cfg.get("analysis", "export_half_width_hz"))
            sl = slice(idx[0], idx[-1] + 1)
            io.write_matrix(out / "jsi.csv", j[sl, sl], grid.nu_a[sl], grid.nu_b[sl])
            io.write_columns(out / "marginals.csv", ["nu_hz", "marginal_a", "marginal_b"], [grid.nu_a, ma, mb])
            io.write_columns(out / "difference_marginal.csv", ["nu_minus_hz", "density"], [ax, dm])
            files += ["jsi.csv", "marginals.csv", "difference_marginal.csv"]
            report = _bins_or_none(dm, ax, thr)
            metrics.update(
                {
                    "dt_h_s": syn.dt_h,
                    "dt_v_s": syn.dt_v,
                    "dt_minus_s": syn.dt_minus,
                    "phase_rad": syn.phase,
                    "target_spacing_hz": _target_spacing(syn),
                    "detected_spacing_hz": None if report is None else report.spacing,
                    "detected_peaks": None if report is None else report.count,
                    "intensity_ratio_to_baseline": float(j.sum()) / base_total,
                }
            )
            if report is not None:
                io.write_json(out / "bins.json", report.to_dict())
                files.append("bins.json")
    if len(phases) > 1:
        heads = ["nu_hz"] + [f"marginal_phase_{k}" for k in range(len(phases))]
        io.write_columns(out / "marginals_phase_scan.csv", heads, [grid.nu_a] + scan_ma)
        files.append("marginals_phase_scan.csv")
        metrics["modulation_correlation_to_first"] = _modulation_correlations(scan_dm, ax, syn.dt_minus)
    return files, metrics


def ridge_positions(profile, axis, level=0.05):
    """Centroids of the connected regions where ``profile`` exceeds
    ``level`` times its maximum."""
    y = np.asarray(profile, dtype=float)
    labels, n = ndimage.label(y > level * y.max())
    idx = np.arange(1, n + 1)
    w = ndimage.sum(y, labels, idx)
    return np.asarray(ndimage.sum(y * axis, labels, idx)) / np.asarray(w)


def pipeline_jta(cfg: RunConfig, out: Path):
    grid, f0, syn, f = build_source(cfg)
    jta = jta_transform(f, "to_time")
    inten = np.abs(jta.values) ** 2
    n = len(jta.t_a)
    proj = diagonal_sums(np.ascontiguousarray(inten))
    t_minus = np.arange(-(n - 1), n) * jta.step
    io.write_columns(out / "jta_difference.csv", ["t_minus_s", "density"], [t_minus, proj])
    half = max(2 * abs(syn.dt_minus), 5e-12)
    idx = np.nonzero(np.abs(jta.t_a) <= half)[0]
    stride = max(1, int(math.ceil(len(idx) / 512)))
    idx = idx[::stride]
    io.write_matrix(out / "jta.csv", inten[np.ix_(idx, idx)], jta.t_a[idx], jta.t_b[idx], corner="t_a_s\\t_b_s")
    ridges = ridge_positions(proj, t_minus)
    sep = float(np.ptp(ridges)) if len(ridges) > 1 else 0.0
    metrics = {
        "dt_minus_s": syn.dt_minus,
        "ridge_count": int(len(ridges)),
        "ridge_separation_s": sep,
        "parseval_ratio": jta.norm() / f.norm(),
        "time_step_s": jta.step,
    }
    return ["jta_difference.csv", "jta.csv"], metrics


def intra_bin_schmidt(pump, crystal, syn, center_hz, window_hz, n=128, threshold=1e-3):
    """Schmidt result of one bin on a local grid fine enough for any spacing.

    The local grid spans twice the window around the degenerate frequency;
    the bin and its partner are cropped with ``extract_bin``.
    """
    omega0 = crystal.model.omega0
    grid = build_frequency_grid(omega0, 2 * math.pi * 2 * window_hz, n)
    j = jsi_from_amplitude(apply_bidirectional(build_jsa(grid, pump, crystal, normalize=False), syn))
    return schmidt_decompose(extract_bin(j, grid, center_hz, window_hz), threshold)


def pipeline_schmidt(cfg: RunConfig, out: Path):
    grid = build_grid(cfg)
    pump, crystal = build_pump(cfg), build_crystal(cfg)
    f0 = build_jsa(grid, pump, crystal)
    syn = build_synthesis(cfg)
    j = jsi_from_amplitude(apply_bidirectional(f0, syn))
    idx = _crop_axis(grid, cfg.get("analysis", "schmidt_half_width_hz"))
    sl = slice(idx[0], idx[-1] + 1)
    thr = cfg.get("analysis", "schmidt_threshold")
    full = schmidt_decompose(jsa_from_jsi(j[sl, sl], grid.subgrid(sl, sl)), thr)
    io.write_json(out / "schmidt_full.json", full.to_dict())
    io.write_columns(out / "schmidt_coefficients.csv", ["index", "lambda"], [np.arange(len(full.coefficients)), full.coefficients])
    files = ["schmidt_full.json", "schmidt_coefficients.csv"]
    metrics = {
        "full_K": full.schmidt_number,
        "full_purity": full.purity,
        "dimension_proxy": full.schmidt_number**2,
        "modes_retained": full.modes_retained,
        "warning": full.warning,
        "target_spacing_hz": _target_spacing(syn),
    }
    spacing = _target_spacing(syn)
    if spacing is not None:
        window = cfg.get("analysis", "bin_window_hz") or spacing
        nu0 = grid.center / (2 * math.pi)
        center = nu0 + _bin_offset_fraction(syn) * spacing
        b = intra_bin_schmidt(pump, crystal, syn, center, window, threshold=thr)
        io.write_json(out / "schmidt_bin.json", {**b.to_dict(), "center_hz": center, "window_hz": window})
        files.append("schmidt_bin.json")
        metrics.update({"bin_K": b.schmidt_number, "bin_purity": b.purity, "bin_center_hz": center, "bin_window_hz": window})
    return files, metrics


def pipeline_hom(cfg: RunConfig, out: Path):
    grid, f0, syn, f = build_source(cfg)
    h = cfg.sections["hom"]
    dtm = syn.dt_minus
    half = h["half_range"] if h["half_range"] is not None else (3 * abs(dtm) / 2 if dtm else 2e-12)
    offset = -dtm / 2 if h["compensate_walkoff"] else 0.0
    curve = hom_curve(f.normalize(), half, h["n_points"], tau_offset=offset)
    io.write_columns(out / "hom.csv", ["tau_s", "coincidence_probability"], [curve.delays, curve.probability])
    metrics = {
        **curve.to_dict(),
        "dt_minus_s": dtm,
        "phase_rad": syn.phase,
        "expected_period_s": abs(dtm) / 2 if dtm else None,
        "p_at_zero": float(curve.probability[int(np.argmin(np.abs(curve.delays)))]),
    }
    io.write_json(out / "hom.json", metrics)
    return ["hom.csv", "hom.json"], metrics


def pipeline_tof(cfg: RunConfig, out: Path):
    d = cfg.sections["detection"]
    grid, f0, syn, f = build_source(cfg)
    disp = dispersion_from_config(cfg)
    det = detector_from_config(cfg)
    hw = period_half_width(grid, disp) * 0.999
    js, sub = crop_to_band(jsi_from_amplitude(f), grid, hw)
    src = PairSource.from_jsi(js, sub, d["pair_rate"])
    duration = d["pairs"] / d["pair_rate"]
    s_pairs, s_a, s_b = np.random.SeedSequence(cfg.seed).spawn(3)
    pairs = sample_pair_events(src, duration, s_pairs)
    ea = apply_detector(pairs, "a", det, disp, s_a)
    eb = apply_detector(pairs, "b", det, disp, s_b)
    n_pulses = int(math.floor(duration * K.REP_RATE))
    sync = np.arange(0, n_pulses, max(1, d["sync_every"])) / K.REP_RATE
    lo, hi = sub.omega_a[0], sub.omega_a[-1]
    axis = np.linspace(lo, hi, d["recon_n"])
    rgrid = FrequencyGrid(axis, axis.copy(), grid.center)
    h = tof_reconstruct(ea, eb, sync, disp, rgrid)
    edges = edges_from_axis(axis)
    wa = np.broadcast_to(sub.omega_a[:, None], js.shape).ravel()
    wb = np.broadcast_to(sub.omega_b[None, :], js.shape).ravel()
    analytic, _, _ = np.histogram2d(wa, wb, bins=[edges, edges], weights=js.ravel())
    corr = float(np.corrcoef(h.ravel(), analytic.ravel())[0, 1]) if h.sum() > 0 else None
    ax, dm = difference_marginal(h, rgrid)
    spacing = _target_spacing(syn)
    contrast = modulation_contrast(dm, ax, spacing) if spacing and h.sum() > 0 else None
    # both photons cross the same module, so the pair delay is centered on zero
    kl = coincidences_and_klyshko(ea, eb, 2 / K.REP_RATE)
    io.write_matrix(out / "tof_jsi.csv", h, rgrid.nu_a, rgrid.nu_b)
    io.write_columns(out / "tof_marginals.csv", ["nu_hz", "counts_a", "counts_b"], [rgrid.nu_a, h.sum(1), h.sum(0)])
    io.write_events(out / "events_signal.bin", ea)
    io.write_events(out / "events_idler.bin", eb)
    metrics = {
        "pairs_generated": len(pairs),
        "coincidences_reconstructed": int(h.sum()),
        "correlation_to_analytic": corr,
        "valley_to_peak": contrast,
        "target_spacing_hz": spacing,
        "dispersion_ps_nm": disp.ps_per_nm,
        "jitter_fwhm_s": det.jitter_fwhm,
        "resolution_nm": spectral_resolution(det.jitter_fwhm, disp) * 1e9,
        "band_half_width_hz": hw,
        **{f"klyshko_{k}": v for k, v in kl.to_dict().items()},
    }
    io.write_json(out / "tof.json", metrics)
    return ["tof_jsi.csv", "tof_marginals.csv", "events_signal.bin", "events_idler.bin", "tof.json"], metrics


def pipeline_netsim(cfg: RunConfig, out: Path):
    d = cfg.sections["detection"]
    nw = cfg.sections["network"]
    grid, f0, syn, f = build_source(cfg)
    local_disp = DispersionSpec(nw["local_dispersion_ps_nm"] * 1e-3, d["lambda_ref"])
    hw = period_half_width(grid, local_disp) * 0.999
    js, sub = crop_to_band(jsi_from_amplitude(f), grid, hw)
    src = PairSource.from_jsi(js, sub, d["pair_rate"])
    local_det = DetectorSpec.from_fwhm(d["efficiency"], d["jitter_fwhm"], d["dark_rate"], d["dead_time"])
    remote_det = DetectorSpec.from_fwhm(nw["remote_efficiency"], nw["remote_jitter_fwhm"], d["dark_rate"], d["dead_time"])
    link = FiberLink(nw["link_length"], nw["group_index"], nw["link_dispersion_ps_nm_km"] * 1e-6, nw["loss_db"])
    clocks = (
        ClockModel(nw["local_offset"], 0.0, nw["sync_jitter"], nw["referenced"], nw["random_walk"]),
        ClockModel(nw["remote_offset"], nw["remote_drift"], nw["sync_jitter"], nw["referenced"], nw["random_walk"]),
    )
    local, remote = simulate_two_node(
        src, local_det, local_disp, remote_det, link, clocks, nw["duration"], cfg.seed, nw["sync_every"]
    )
    center_delay = freq_to_time(local_disp, grid.center)
    h = fold_and_histogram(
        local, remote, K.REP_RATE, nw["bin_width"], referenced=nw["referenced"], center_delay=center_delay, delay=nw["link_delay"]
    )
    io.write_columns(out / "folded.csv", ["bin_start_ps", "counts"], [h.edges[:-1] * 1e12, h.counts])
    ax, y = folded_spectrum(h, local_disp)
    io.write_columns(out / "folded_spectrum.csv", ["nu_hz", "counts"], [ax, y])
    io.write_events(out / "events_local.bin", local)
    io.write_events(out / "events_remote.bin", remote)
    files = ["folded.csv", "folded_spectrum.csv", "events_local.bin", "events_remote.bin"]
    spacing = _target_spacing(syn)
    report = None
    if h.counts.sum() > 0:
        try:
            report = resolve_report(h, local_disp, cfg.get("analysis", "threshold_db"))
        except EmptyReportError:
            report = None
    if report is not None:
        io.write_json(out / "bins.json", report.to_dict())
        files.append("bins.json")
    ma0, _ = marginals(jsi_from_amplitude(f0), grid)
    nu0 = grid.center / (2 * math.pi)
    metrics = {
        **h.to_dict(),
        "target_spacing_hz": spacing,
        "detected_spacing_hz": None if report is None else report.spacing,
        "detected_bins": None if report is None else report.count,
        "single_peak": None if report is None else report.single_peak,
        "configured_bins": None
        if spacing is None
        else expected_bin_count(
            ma0, grid.nu_a, spacing, nu0, cfg.get("analysis", "threshold_db"), hw, _bin_offset_fraction(syn)
        ),
        "valley_to_peak": None if spacing is None else modulation_contrast(y, ax, spacing),
        "band_half_width_hz": hw,
    }
    io.write_json(out / "netsim.json", metrics)
    files.append("netsim.json")
    return files, metrics


PIPELINE_FUNCS = {
    "jsi": pipeline_jsi,
    "jta": pipeline_jta,
    "schmidt": pipeline_schmidt,
    "hom": pipeline_hom,
    "tof": pipeline_tof,
    "netsim": pipeline_netsim,
}


def run_pipeline(cfg: RunConfig, out_dir=None):
    """Run the configured pipeline. Returns (status, manifest or error record).

    Status 0 on success, 2 when a module raises. The manifest (or error
    record) is also written to the output directory.
    """
    out = io.ensure_dir(out_dir if out_dir is not None else cfg.out)
    for stale in ("manifest.json", "error.json"):
        (out / stale).unlink(missing_ok=True)
    try:
        files, metrics = PIPELINE_FUNCS[cfg.pipeline](cfg, out)
    except (FreqbinError, ValueError, ArithmeticError) as exc:
        record = {
            "status": "error",
            "pipeline": cfg.pipeline,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "config_sha256": cfg.digest(),
            "seed": cfg.seed,
        }
        io.write_json(out / "error.json", record)
        return 2, record
    manifest = {
        "status": "ok",
        "pipeline": cfg.pipeline,
        "package_version": __version__,
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "presets": list(cfg.presets),
        "warnings": list(cfg.warnings),
        "outputs": [{"file": name, "sha256": io.sha256_file(out / name)} for name in files],
        "metrics": metrics,
    }
    io.write_json(out / "manifest.json", manifest)
    return 0, manifest

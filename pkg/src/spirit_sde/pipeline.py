"""Experiment orchestration: simulate -> calibrate -> reconstruct -> evaluate.

Stages communicate through CXT1 files in the output directory, so every
stage is standalone-runnable and a rerun from the written artifacts
reproduces the in-process results bit for bit.
"""

import csv
import json
from pathlib import Path

import numpy as np

from . import plots
from .classic import cg_spirit, gd_spirit, zero_filled
from .config import ExperimentConfig, config_to_dict
from .cxt1 import read_cxt1, write_cxt1
from .encoding import CoilSensitivities, MeasuredData, SamplingMask, sos_combine
from .metrics import evaluate
from .sampler import pc_sample, ve_sde_sample
from .score import fit_linear_score
from .simulation import (PhantomSpec, _acs_bounds, make_coil_maps, make_mask,
                         make_phantom, synthesize_measurement)
from .spirit import SpiritKernel, calibrate

METRIC_COLUMNS = ("method", "acceleration", "nmse", "psnr_db", "ssim")


def _paths(outdir):
    outdir = Path(outdir)
    return {
        "truth": outdir / "ground_truth.cxt",
        "maps": outdir / "coil_maps.cxt",
        "mask": outdir / "mask.cxt",
        "measurement": outdir / "measurement.cxt",
        "kernel": outdir / "kernel.cxt",
        "score_mean": outdir / "score_mean.cxt",
        "metrics_csv": outdir / "metrics.csv",
        "metrics_txt": outdir / "metrics.txt",
        "metadata": outdir / "metadata.json",
        "figure": outdir / "figure.png",
    }


def _load_mask(cfg: ExperimentConfig, outdir) -> SamplingMask:
    arr = read_cxt1(_paths(outdir)["mask"])
    acs = _acs_bounds(arr.shape, cfg.mask.acs)
    return SamplingMask(mask=arr.real.astype(bool), acs=acs)


def _load_measurement(cfg, outdir) -> MeasuredData:
    mask = _load_mask(cfg, outdir)
    y = read_cxt1(_paths(outdir)["measurement"])
    return MeasuredData(y=y, mask=mask, noise_std=cfg.noise_std)


def _load_maps(outdir) -> CoilSensitivities:
    return CoilSensitivities.from_maps(read_cxt1(_paths(outdir)["maps"]))


def stage_simulate(cfg: ExperimentConfig, outdir):
    """Generate phantom, coil maps, mask, and measurement; write all as CXT1."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    p = _paths(outdir)
    truth = make_phantom(cfg.phantom)
    S = make_coil_maps(cfg.phantom.size, cfg.coils.count, cfg.coils.seed)
    mask = make_mask(cfg.mask, cfg.phantom.size)
    write_cxt1(p["truth"], truth)
    write_cxt1(p["maps"], S.maps)
    write_cxt1(p["mask"], mask.mask.astype(np.complex128))
    # Measurement is synthesized from the arrays as stored on disk so that
    # downstream stages reproduce in-process results exactly.
    truth_d = read_cxt1(p["truth"])
    S_d = _load_maps(outdir)
    mask_d = _load_mask(cfg, outdir)
    meas = synthesize_measurement(truth_d, S_d, mask_d, cfg.noise_std, cfg.measure_seed)
    write_cxt1(p["measurement"], meas.y)
    return p


def stage_calibrate(cfg: ExperimentConfig, outdir) -> SpiritKernel:
    """Calibrate the interpolation kernel on the measurement's ACS block."""
    p = _paths(outdir)
    meas = _load_measurement(cfg, outdir)
    r0, r1, c0, c1 = meas.mask.acs
    acs = meas.y[:, r0:r1, c0:c1]
    kern = calibrate(acs, cfg.spirit.kernel_size, cfg.spirit.tikhonov)
    write_cxt1(p["kernel"], kern.weights)
    return kern


def _load_kernel(cfg, outdir) -> SpiritKernel:
    weights = read_cxt1(_paths(outdir)["kernel"])
    # Stored weights are float32-rounded; re-zero the center taps exactly.
    # calib_residual lives in the metadata file, not the binary.
    kr, kc = cfg.spirit.kernel_size
    idx = np.arange(weights.shape[0])
    weights[idx, idx, kr // 2, kc // 2] = 0.0
    return SpiritKernel(weights=weights, kernel_size=tuple(cfg.spirit.kernel_size),
                        tikhonov=cfg.spirit.tikhonov, calib_residual=0.0)


def _fit_score(cfg: ExperimentConfig, outdir, S: CoilSensitivities, sched):
    """Fit the linear score on a synthetic coil-consistent training set."""
    from .encoding import coil_expand

    samples = []
    for i in range(cfg.score.train_samples):
        spec = PhantomSpec(size=cfg.phantom.size, kind=cfg.score.train_kind,
                           seed=cfg.score.train_seed + i)
        samples.append(coil_expand(make_phantom(spec), S))
    sf = fit_linear_score(samples, sched, S, cfg.score.ridge)
    write_cxt1(_paths(outdir)["score_mean"], sf.mean)
    return sf


def stage_recon(cfg: ExperimentConfig, outdir, method, trace=False):
    """Run one reconstruction method from the on-disk artifacts; write its output."""
    outdir = Path(outdir)
    meas = _load_measurement(cfg, outdir)
    S = _load_maps(outdir)
    # CG/GD always record their iteration tables; sampler traces are opt-in.
    record = [] if (trace or method in ("cg-spirit", "gd-spirit")) else None

    if method == "zero-filled":
        out = zero_filled(meas, S)
        record = None
    elif method == "cg-spirit":
        out = cg_spirit(meas, _load_kernel(cfg, outdir), S, cfg.classic, record=record)
    elif method == "gd-spirit":
        out = gd_spirit(meas, _load_kernel(cfg, outdir), S, cfg.classic, record=record)
    elif method == "spirit-diffusion":
        sched = cfg.make_schedule()
        sf = _fit_score(cfg, outdir, S, sched)
        out = pc_sample(sf, meas, _load_kernel(cfg, outdir), S, sched, cfg.sampler,
                        record=record)
    elif method == "ve-sde":
        sched = cfg.make_schedule()
        sf = _fit_score(cfg, outdir, S, sched)
        out = ve_sde_sample(sf, meas, S, sched, cfg.sampler, record=record)
    else:
        raise ValueError(f"unknown method '{method}'")

    write_cxt1(outdir / f"recon_{method}.cxt", out)
    if record:
        header = (("iter", "objective", "grad_ratio", "dc_residual")
                  if method in ("cg-spirit", "gd-spirit")
                  else ("i", "norm_g", "norm_m", "eps", "eps1", "eps2", "residual"))
        plots.write_trace(outdir / f"trace_{method}.txt", record, header)
    return out


def _magnitude(arr):
    return sos_combine(arr) if arr.ndim == 3 else np.abs(arr)


def default_roi(ref_mag, threshold=0.05):
    """Bounding box of the imaging region (pixels above threshold * peak)."""
    nz = np.argwhere(ref_mag > threshold * ref_mag.max())
    if nz.size == 0:
        return (0, ref_mag.shape[0], 0, ref_mag.shape[1])
    (r0, c0), (r1, c1) = nz.min(axis=0), nz.max(axis=0) + 1
    return (int(r0), int(r1), int(c0), int(c1))


def stage_eval(cfg: ExperimentConfig, outdir, methods=None):
    """Evaluate written reconstructions against the ground truth; write reports."""
    outdir = Path(outdir)
    p = _paths(outdir)
    methods = list(methods if methods is not None else cfg.methods)
    ref_mag = _magnitude(read_cxt1(p["truth"]))
    roi = cfg.roi if cfg.roi is not None else default_roi(ref_mag)
    mask = _load_mask(cfg, outdir)
    acc = mask.acceleration

    rows = []
    recon_mags = {}
    windows = {}
    for method in methods:
        mag = _magnitude(read_cxt1(outdir / f"recon_{method}.cxt"))
        recon_mags[method] = mag
        rep = evaluate(ref_mag, mag, roi)
        rows.append((method, acc, rep.nmse, rep.psnr_db, rep.ssim))
        windows[f"recon_{method}.png"] = plots.save_grayscale(
            outdir / f"recon_{method}.png", mag)
        err_win = cfg.error_window * float(ref_mag.max())
        windows[f"error_{method}.png"] = plots.save_grayscale(
            outdir / f"error_{method}.png", np.abs(mag - ref_mag), window=(0.0, err_win))

    with open(p["metrics_csv"], "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(METRIC_COLUMNS)
        for method, a, n, ps, ss in rows:
            w.writerow([method, f"{a:.6f}", f"{n:.10e}", f"{ps:.6f}", f"{ss:.8f}"])

    with open(p["metrics_txt"], "w") as f:
        f.write(f"{'method':<18} {'accel':>7} {'NMSE':>14} {'PSNR (dB)':>10} {'SSIM':>8}\n")
        for method, a, n, ps, ss in rows:
            f.write(f"{method:<18} {a:>7.2f} {n:>14.4e} {ps:>10.2f} {ss:>8.4f}\n")

    plots.comparison_figure(p["figure"], ref_mag, recon_mags, roi=roi,
                            error_window=cfg.error_window * float(ref_mag.max()))
    return rows, roi, windows


def run_experiment(cfg: ExperimentConfig, outdir=None, trace=False):
    """Full pipeline for every configured method; returns the metric rows."""
    outdir = Path(outdir if outdir is not None else cfg.output_dir)
    stage_simulate(cfg, outdir)
    kern = None
    needs_kernel = any(m in ("cg-spirit", "gd-spirit", "spirit-diffusion")
                       for m in cfg.methods)
    if needs_kernel:
        kern = stage_calibrate(cfg, outdir)
    for method in cfg.methods:
        stage_recon(cfg, outdir, method, trace=trace)
    rows, roi, windows = stage_eval(cfg, outdir)

    metadata = {
        "config": config_to_dict(cfg),
        "roi": list(roi),
        "export_windows": {k: list(v) for k, v in sorted(windows.items())},
        "metrics": [dict(zip(METRIC_COLUMNS, row)) for row in rows],
    }
    if kern is not None:
        metadata["spirit_kernel"] = {
            "kernel_size": list(kern.kernel_size),
            "tikhonov": kern.tikhonov,
            "calib_residual": kern.calib_residual,
        }
    if any(m in ("spirit-diffusion", "ve-sde") for m in cfg.methods):
        sched = cfg.make_schedule()
        S = _load_maps(outdir)
        sf = _fit_score(cfg, outdir, S, sched)
        metadata["fitted_score"] = {"v0": sf.v0, "mean_file": "score_mean.cxt"}
    with open(_paths(outdir)["metadata"], "w") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
        f.write("\n")
    return rows

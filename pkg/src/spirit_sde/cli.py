"""Command-line interface.

    spirit-sde <subcommand> --config <path> [--trace] [--output-dir <path>] [--seed <u64>]

Subcommands: run, simulate, calibrate, recon, eval, trace-plot.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import METHODS, load_config
from .errors import ConfigError, NumericalError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required, help="experiment config (YAML)")
    p.add_argument("--output-dir", default=None, help="override the config output_dir")
    p.add_argument("--seed", type=int, default=None, help="override the sampler seed")
    p.add_argument("--trace", action="store_true", help="record per-step solver traces")


def build_parser():
    ap = argparse.ArgumentParser(prog="spirit-sde",
                                 description="multi-coil MRI reconstruction experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("run", "full pipeline: simulate, calibrate, reconstruct, evaluate"),
        ("simulate", "generate phantom, maps, mask, and measurement"),
        ("calibrate", "fit the interpolation kernel on the measurement ACS"),
        ("recon", "run one reconstruction method on saved artifacts"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "recon":
            p.add_argument("--method", required=True, choices=METHODS)

    p = sub.add_parser("eval", help="metrics for a (reference, test) CXT1 pair "
                                    "or for all configured methods")
    _add_common(p, config_required=False)
    p.add_argument("--ref", help="reference CXT1 image")
    p.add_argument("--test", help="test CXT1 image")
    p.add_argument("--roi", type=int, nargs=4, metavar=("R0", "R1", "C0", "C1"))
    p.add_argument("--label", default="pair", help="method label for the output row")
    p.add_argument("--out", default=None, help="write the metrics row to this CSV file")

    p = sub.add_parser("trace-plot", help="render a solver/sampler trace as a line plot")
    p.add_argument("--trace-file", required=True)
    p.add_argument("--out", required=True)
    return ap


def _resolve(args):
    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.output_dir)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, sampler=dataclasses.replace(cfg.sampler, seed=args.seed))
    return cfg, Path(cfg.output_dir)


def _cmd_run(args):
    from .pipeline import run_experiment
    cfg, outdir = _resolve(args)
    rows = run_experiment(cfg, outdir, trace=args.trace)
    for method, acc, nm, ps, ss in rows:
        print(f"{method}: acceleration {acc:.2f}  NMSE {nm:.4e}  "
              f"PSNR {ps:.2f} dB  SSIM {ss:.4f}")
    return 0


def _cmd_simulate(args):
    from .pipeline import stage_simulate
    cfg, outdir = _resolve(args)
    paths = stage_simulate(cfg, outdir)
    print(f"wrote {paths['measurement']}")
    return 0


def _cmd_calibrate(args):
    from .pipeline import _paths, stage_calibrate
    import json
    cfg, outdir = _resolve(args)
    kern = stage_calibrate(cfg, outdir)
    meta_path = _paths(outdir)["metadata"]
    meta = {}
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    meta["spirit_kernel"] = {
        "kernel_size": list(kern.kernel_size),
        "tikhonov": kern.tikhonov,
        "calib_residual": kern.calib_residual,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"calibrated kernel, residual {kern.calib_residual:.4e}")
    return 0


def _cmd_recon(args):
    from .pipeline import stage_recon
    cfg, outdir = _resolve(args)
    stage_recon(cfg, outdir, args.method, trace=args.trace)
    print(f"wrote {outdir / f'recon_{args.method}.cxt'}")
    return 0


def _cmd_eval(args):
    import csv

    import numpy as np

    from .cxt1 import read_cxt1
    from .metrics import evaluate
    from .pipeline import METRIC_COLUMNS, stage_eval

    if args.ref and args.test:
        ref = np.abs(read_cxt1(args.ref))
        test = np.abs(read_cxt1(args.test))
        roi = tuple(args.roi) if args.roi else None
        rep = evaluate(ref, test, roi)
        row = [args.label, "", f"{rep.nmse:.10e}", f"{rep.psnr_db:.6f}", f"{rep.ssim:.8f}"]
        if args.out:
            with open(args.out, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(METRIC_COLUMNS)
                w.writerow(row)
        print(f"NMSE {rep.nmse:.4e}  PSNR {rep.psnr_db:.2f} dB  SSIM {rep.ssim:.4f}")
        return 0
    if not args.config:
        raise ConfigError("eval needs either --ref/--test or --config")
    cfg, outdir = _resolve(args)
    rows, _, _ = stage_eval(cfg, outdir)
    for method, acc, nm, ps, ss in rows:
        print(f"{method}: NMSE {nm:.4e}  PSNR {ps:.2f} dB  SSIM {ss:.4f}")
    return 0


def _cmd_trace_plot(args):
    from .plots import plot_trace
    plot_trace(args.trace_file, args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "recon": _cmd_recon,
    "eval": _cmd_eval,
    "trace-plot": _cmd_trace_plot,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

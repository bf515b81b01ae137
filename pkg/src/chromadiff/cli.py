"""Command-line front end.

Verbs: `train` fits the small network on a toy dataset and writes a
checkpoint, `path` exports a color trajectory as CSV, `generate`
renders a frame sequence with its manifest, `analyze` recomputes the
metrics of a finished run from the files on disk, `verify` runs the
oracle property suite. Exit codes: 0 success, 1 configuration error,
2 numerical fault or failed verification, 3 I/O error.
"""

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .epsnet import save_checkpoint, save_loss_history, train_denoiser
from .errors import ConfigurationError, ContractViolation, NumericalFault
from .imageio import from_display, read_ppm
from .paths import build_path, write_path_csv
from .pipeline import (
    color_correlation,
    generate_sequence,
    read_manifest,
    rms_distance,
)
from .verify import run_property_suite


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors (exit 1), not argparse's 2
    def error(self, message):
        raise ConfigurationError(message)


def _sections(args, defaults):
    layers = []
    if args.config:
        layers.append(cfgmod.load_config_file(args.config))
    layers.append(cfgmod.parse_overrides(args.set))
    return cfgmod.merge_sections(defaults, *layers)


def _cmd_train(args) -> int:
    sections = _sections(args, cfgmod.DEFAULT_TRAIN_SECTIONS)
    setup = cfgmod.train_setup_from_sections(sections)
    net = setup["net"]
    print(f"training {net.n_parameters} parameters on {setup['dataset'].__class__.__name__} "
          f"{setup['dataset'].shape}, {setup['train'].steps} steps")
    net, history = train_denoiser(net, setup["dataset"], setup["schedule"], setup["train"])
    save_checkpoint(net, setup["checkpoint"])
    save_loss_history(history, setup["loss_csv"])
    first = history[: min(50, len(history))].mean()
    last = history[-min(50, len(history)):].mean()
    print(f"loss (smoothed over 50): {first:.5f} -> {last:.5f}")
    print(f"checkpoint: {setup['checkpoint']}")
    print(f"loss history: {setup['loss_csv']}")
    return 0


def _cmd_path(args) -> int:
    sections = _sections(args, cfgmod.DEFAULT_RUN_SECTIONS)
    spec = cfgmod.path_spec_from_sections(sections)
    dt = float(sections["path"]["dt"])
    path = build_path(spec, dt)
    write_path_csv(path, args.out)
    print(f"{spec.kind} path: {path.times.shape[0]} samples over "
          f"t in [{path.times[0]:g}, {path.times[-1]:g}] -> {args.out}")
    return 0


def _cmd_generate(args) -> int:
    sections = _sections(args, cfgmod.DEFAULT_RUN_SECTIONS)
    run_cfg = cfgmod.run_config_from_sections(sections)
    if not run_cfg.output_dir:
        raise ConfigurationError("run.output must name a directory")
    frames = generate_sequence(run_cfg)
    print(f"wrote {len(frames)} frames + manifest to {run_cfg.output_dir}")
    corr = color_correlation(frames) if len(frames) >= 3 else None
    if corr is not None:
        pretty = ", ".join(
            f"{ch}={c:.3f}" if c is not None else f"{ch}=undefined"
            for ch, c in zip("rgb", corr)
        )
        print(f"injected/output correlation: {pretty}")
    return 0


def _cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    meta, _, rows = read_manifest(run_dir / "manifest.txt")
    print(f"manifest: status={meta.get('status')}, frames={meta.get('frame_count')}")
    bad_hash = []
    mean_dev = 0.0
    images = []
    saturated = []
    for row in rows:
        ppm_path = run_dir / f"frame_{row['index']:04d}.ppm"
        file_bytes = ppm_path.read_bytes()
        if hashlib.sha256(file_bytes).hexdigest() != row["sha256"]:
            bad_hash.append(row["index"])
        display = read_ppm(ppm_path)
        images.append(from_display(display))
        saturated.append(bool((display == 0).any() or (display == 255).any()))
        recomputed = tuple(float(display[c].mean()) / 255.0 for c in range(3))
        mean_dev = max(mean_dev, max(abs(a - b) for a, b in zip(recomputed, row["mean_rgb"])))
    # model-space distances are only recoverable from 8-bit files when no
    # pixel was clamped by the display mapping
    cont_dev = 0.0
    checked = skipped = 0
    for i in range(1, len(rows)):
        if rows[i]["dist_prev"] is None:
            continue
        if saturated[i] or saturated[i - 1]:
            skipped += 1
            continue
        recomputed = rms_distance(images[i], images[i - 1])
        cont_dev = max(cont_dev, abs(recomputed - rows[i]["dist_prev"]))
        checked += 1
    quant_tol = 2.0 / 255.0
    print(f"hash check: {'OK' if not bad_hash else f'MISMATCH at frames {bad_hash}'}")
    print(f"mean color recomputation: max deviation {mean_dev:.3e}")
    print(f"continuity recomputation: {checked} pairs checked, max deviation {cont_dev:.3e} "
          f"(tolerance {quant_tol:.3e}); {skipped} pairs skipped (saturated pixels)")
    if len(rows) >= 3:
        injected = np.array([r["injected_rgb"] for r in rows])
        means = np.array([r["mean_rgb"] for r in rows])
        for c, name in enumerate("rgb"):
            x, y = injected[:, c], means[:, c]
            if x.std() == 0.0 or y.std() == 0.0:
                print(f"correlation {name}: undefined")
            else:
                r = float(np.mean((x - x.mean()) * (y - y.mean())) / (x.std() * y.std()))
                print(f"correlation {name}: {r:.4f}")
    dists = [r["dist_prev"] for r in rows if r["dist_prev"] is not None]
    if dists:
        print(f"median adjacent distance: {float(np.median(dists)):.6g}")
    ok = not bad_hash and mean_dev <= 1e-12 and cont_dev <= quant_tol
    if not ok:
        raise NumericalFault("analysis disagrees with manifest")
    return 0


def _cmd_verify(args) -> int:
    results = run_property_suite(steps=args.steps, size=args.size)
    failed = 0
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        failed += 0 if passed else 1
    if failed:
        raise NumericalFault(f"{failed} property check(s) failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chromadiff", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_config_opts(p):
        p.add_argument("--config", help="key = value config file with [section] headers")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")

    p = sub.add_parser("train", help="train the epsilon net on a toy dataset")
    add_config_opts(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("path", help="generate a color trajectory and write it as CSV")
    add_config_opts(p)
    p.add_argument("--out", required=True, help="destination CSV file")
    p.set_defaults(func=_cmd_path)

    p = sub.add_parser("generate", help="render a frame sequence with manifest")
    add_config_opts(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("analyze", help="recompute and check metrics of a finished run")
    p.add_argument("run_dir", help="directory holding manifest.txt and frame PPMs")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("verify", help="run the oracle property suite")
    p.add_argument("--steps", type=int, default=1000, help="schedule length to test at")
    p.add_argument("--size", type=int, default=8, help="image side length to test at")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigurationError, ContractViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

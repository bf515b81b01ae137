"""Full pipeline: one fixed latent, a color sweep, an ordered frame sequence.

The initial latent and the per-step noise stream are pinned by one seed,
so the injected color is the only thing that changes between frames.
Colors follow the bouncing-ball trajectory; each sampled color becomes a
mask injected during the first ten denoising steps. Frames, metrics and
content hashes land next to a manifest that a later `analyze` run can
check against the pixel data.

Run demos/04_train_toy_faces.py first, then:
    python3 demos/05_color_sequence.py
Outputs land in demos_output/sequence/.
"""

import sys
from pathlib import Path

import numpy as np

from chromadiff import (
    PathSpec,
    RunConfig,
    color_correlation,
    continuity_profile,
    generate_sequence,
)

ckpt = Path("demos_output/model/faces.ckpt")
if not ckpt.exists():
    sys.exit("checkpoint missing; run demos/04_train_toy_faces.py first")

out_dir = Path("demos_output/sequence")
spec = PathSpec(
    kind="bouncing_ball", start=(0.2, 0.8, 0.4), velocity=(0.25, 0.0, 0.15),
    gravity=9.8, gravity_axis=1, restitution=0.85, duration=3.0,
)
cfg = RunConfig(
    steps=1000,
    denoiser="checkpoint",
    checkpoint=str(ckpt),
    height=24,
    width=24,
    path_spec=spec,
    path_dt=1e-3,
    frames=48,
    s_noise=0.01,
    window_first=1,
    window_last=10,
    sampler="ancestral",
    seed=3,
    output_dir=str(out_dir),
)

print(f"rendering {cfg.frames} frames along a {spec.kind} path (this takes a minute)...")
frames = generate_sequence(cfg)
print(f"frames + manifest written to {out_dir}/")

corr = color_correlation(frames)
pretty = ", ".join(
    f"{ch}={c:.3f}" if c is not None else f"{ch}=undefined" for ch, c in zip("rgb", corr)
)
print(f"injected color vs mean output color, per channel: {pretty}")

dists = continuity_profile(frames)
print(f"adjacent-frame RMS distance: median {np.median(dists):.4f}, max {dists.max():.4f}")

print("\ninspect frames with any PPM viewer, or assemble a video externally, e.g.:")
print(f"  ffmpeg -framerate 12 -i {out_dir}/frame_%04d.ppm sequence.mp4")

"""The three color-space trajectories, exported as CSV.

A ball bouncing on the cube floor under gravity, a ray reflecting off
the six cube faces, and a reflected Gaussian random walk. Each path is
simulated with exact event handling, sampled, written as CSV, and
summarized. If matplotlib is importable a 3-D overview figure is saved
too.

Run:
    python3 demos/03_color_paths.py
Outputs land in demos_output/paths/.
"""

from pathlib import Path

import numpy as np

from chromadiff import PathSpec, build_path, mirror_state, sample_path, write_path_csv

out_dir = Path("demos_output/paths")
out_dir.mkdir(parents=True, exist_ok=True)

specs = {
    "bouncing_ball": PathSpec(
        kind="bouncing_ball", start=(0.2, 0.8, 0.4), velocity=(0.25, 0.0, 0.15),
        gravity=9.8, gravity_axis=1, restitution=0.85, duration=3.0,
    ),
    "mirror": PathSpec(
        kind="mirror", start=(0.3, 0.5, 0.7), velocity=(0.61, 0.47, 0.83), duration=6.0
    ),
    "brownian": PathSpec(
        kind="brownian", start=(0.5, 0.5, 0.5), step_std=0.02, steps=1500, seed=12
    ),
}

paths = {}
for name, spec in specs.items():
    path = build_path(spec, dt=1e-3)
    paths[name] = path
    dest = out_dir / f"{name}.csv"
    write_path_csv(path, dest)
    rgb = path.rgb
    print(f"{name}: {rgb.shape[0]} samples, bounds "
          f"[{rgb.min():.3f}, {rgb.max():.3f}], wrote {dest}")

print("\nbouncing ball: apex heights of the gravity axis decay with restitution^2")
y = paths["bouncing_ball"].rgb[:, 1]
apexes, current = [], None
for value in y:
    if value < 0.02:
        if current is not None:
            apexes.append(current)
            current = None
    else:
        current = value if current is None else max(current, value)
print(f"  apexes: {[f'{a:.3f}' for a in apexes[:6]]}  (ratio target {0.85**2:.4f})")

print("\nmirror: speed is conserved across reflections")
_, vel, count = mirror_state(specs["mirror"], specs["mirror"].duration)
v0 = np.linalg.norm(specs["mirror"].velocity)
print(f"  {count} reflections, |v| {np.linalg.norm(vel):.12f} vs initial {v0:.12f}")

print("\nsampling 8 colors evenly along the bouncing-ball path:")
for t, (r, g, b) in zip(np.linspace(0, 3, 8), sample_path(paths["bouncing_ball"], 8)):
    print(f"  t={t:.2f}  rgb = ({r:.3f}, {g:.3f}, {b:.3f})")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(12, 4))
    for i, (name, path) in enumerate(paths.items(), start=1):
        ax = fig.add_subplot(1, 3, i, projection="3d")
        r, g, b = path.rgb.T
        ax.plot(r, g, b, lw=0.6)
        ax.scatter(*path.rgb[0], color="tab:blue", s=25)
        ax.scatter(*path.rgb[-1], color="tab:green", s=25)
        ax.set_title(name)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_zlim(0, 1)
    fig.tight_layout()
    fig.savefig(out_dir / "paths_overview.png", dpi=130)
    print(f"\nfigure: {out_dir / 'paths_overview.png'}")
except ImportError:
    print("\nmatplotlib not available; skipped the overview figure")

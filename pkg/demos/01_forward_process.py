"""Forward process walkthrough: how the noise schedule degrades an image.

Builds the default 1000-step linear schedule, pushes one procedural face
through the closed-form marginal at a few step indices, and writes the
progression as PPM files. Also spot-checks the variance law the marginal
must obey.

Run:
    python3 demos/01_forward_process.py
Outputs land in demos_output/forward/.
"""

from pathlib import Path

import numpy as np

from chromadiff import blob_faces, build_linear_schedule, forward_marginal, write_ppm
from chromadiff.rng import gaussian_tensor

out_dir = Path("demos_output/forward")
out_dir.mkdir(parents=True, exist_ok=True)

schedule = build_linear_schedule(1000, 1e-4, 0.02)
print("linear schedule: T=1000, beta 1e-4 .. 0.02")
for t in (0, 250, 500, 750, 999):
    print(f"  t={t:4d}  beta={schedule.betas[t]:.5f}  alpha_bar={schedule.alpha_bars[t]:.6f}")

# one fixed face, one fixed noise realization per step index
face = blob_faces(32, 32, seed=0).sample(4)
write_ppm(face, out_dir / "clean.ppm")
for t in (50, 250, 500, 750, 999):
    eps = gaussian_tensor(7, t, face.shape)
    noisy = forward_marginal(schedule, face, t, eps)
    write_ppm(noisy, out_dir / f"noised_t{t:04d}.ppm")
    signal = np.sqrt(schedule.alpha_bars[t])
    print(f"wrote noised_t{t:04d}.ppm  (signal fraction {signal:.3f})")

# the marginal keeps unit-variance data at unit variance for every t
rng = np.random.Generator(np.random.PCG64(123))
n = 200_000
x0 = rng.standard_normal(n)
eps = rng.standard_normal(n)
print("\nvariance preservation for unit-variance scalar data:")
for t in (10, 500, 999):
    var = forward_marginal(schedule, x0, t, eps).var(ddof=1)
    print(f"  t={t:4d}  Var[x_t] = {var:.4f}  (expected 1.0)")

print(f"\ndone; images in {out_dir}/")

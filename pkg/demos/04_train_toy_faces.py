"""Train the small epsilon net on procedural blob faces.

The net learns to predict the noise mixed into a face at a random step
of the forward process. Training is seeded end to end, so re-running
this script reproduces the loss history bit for bit. The checkpoint and
loss CSV written here feed demos/05_color_sequence.py.

Run:
    python3 demos/04_train_toy_faces.py        (about half a minute)
Outputs land in demos_output/model/.
"""

import time
from pathlib import Path

from chromadiff import (
    SmallEpsNet,
    TrainConfig,
    blob_faces,
    build_linear_schedule,
    save_checkpoint,
    save_loss_history,
    train_denoiser,
)
from chromadiff.data import dump_ppm_dir

out_dir = Path("demos_output/model")
out_dir.mkdir(parents=True, exist_ok=True)

H = W = 24
schedule = build_linear_schedule(1000)
dataset = blob_faces(H, W, seed=0)
dump_ppm_dir(dataset, out_dir / "dataset_preview", 6)
print(f"dataset: procedural {H}x{W} blob faces, preview in {out_dir / 'dataset_preview'}")

net = SmallEpsNet(dataset.shape, hidden=(64,), time_width=8, total_steps=1000, seed=0)
print(f"network: sizes {net.sizes}, {net.n_parameters} parameters")

cfg = TrainConfig(learning_rate=1e-3, batch_size=8, steps=2500, optimizer="adam", seed=1)
t0 = time.time()
net, history = train_denoiser(net, dataset, schedule, cfg)
print(f"trained {cfg.steps} steps in {time.time() - t0:.1f}s")
print(f"loss (window 50): {history[:50].mean():.4f} -> {history[-50:].mean():.4f}")

save_checkpoint(net, out_dir / "faces.ckpt")
save_loss_history(history, out_dir / "loss.csv")
print(f"checkpoint: {out_dir / 'faces.ckpt'}")
print(f"loss history: {out_dir / 'loss.csv'}")

"""Small trainable epsilon-prediction network.

A fully-connected net maps (flattened latent, sinusoidal time features)
to a flattened noise estimate. Gradients are computed by reverse-mode
accumulation over the layer graph, written out by hand so the whole
training path stays auditable; the only dependency is numpy.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .denoisers import Denoiser
from .errors import ConfigurationError, ContractViolation, NumericalFault
from .schedule import NoiseSchedule

_CKPT_MAGIC = b"CDNET\x00"
_CKPT_VERSION = 1


def time_features(tau, width: int) -> np.ndarray:
    """Sinusoidal embedding of normalized time tau = t / T.

    Column pairs are (sin, cos) at geometrically spaced frequencies.
    """
    if width < 2 or width % 2 != 0:
        raise ConfigurationError(f"time embedding width must be even and >= 2, got {width}")
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    freqs = np.pi * (2.0 ** np.arange(width // 2))
    angles = tau[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


class SmallEpsNet(Denoiser):
    """Fully-connected tanh network predicting the noise in a latent.

    ``hidden`` sets the hidden layer widths; input is 3*H*W latent values
    plus ``time_width`` time features, output is 3*H*W. A learned scalar
    gate g(t) = time features . gate_w + gate_b adds a passthrough term
    g(t) * x_t to the output: the hidden layers are far narrower than the
    latent, and without a full-rank path the chain cannot cancel noise in
    directions the bottleneck drops. The forward pass is deterministic,
    and with all parameters zero the output is zero.
    """

    def __init__(self, data_shape, hidden=(64,), time_width=8, total_steps=1000, seed=0):
        self.data_shape = tuple(int(s) for s in data_shape)
        if len(self.data_shape) != 3:
            raise ConfigurationError(f"data shape must be (C, H, W), got {data_shape!r}")
        self.time_width = int(time_width)
        self.total_steps = int(total_steps)
        if self.total_steps < 1:
            raise ConfigurationError(f"total_steps must be >= 1, got {total_steps}")
        flat = int(np.prod(self.data_shape))
        self.sizes = [flat + self.time_width, *(int(h) for h in hidden), flat]
        if any(s < 1 for s in self.sizes):
            raise ConfigurationError(f"layer sizes must be positive, got {self.sizes}")
        # time_features validates the width
        time_features(0.0, self.time_width)
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            self.weights.append(rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, n_out)))
            self.biases.append(np.zeros(n_out))
        self.gate_w = np.zeros(self.time_width)
        self.gate_b = np.ones(1)  # start as a plain passthrough

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_parameters(self) -> int:
        mlp = sum(w.size + b.size for w, b in zip(self.weights, self.biases))
        return mlp + self.gate_w.size + self.gate_b.size

    def parameters(self):
        """Flat list of parameter arrays: layer weights and biases, then the gate."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        out.append(self.gate_w)
        out.append(self.gate_b)
        return out

    def _forward(self, x_flat: np.ndarray, tau: np.ndarray):
        """Batched forward pass returning every layer activation for backprop.

        The last entry is the final output (branch sum); hidden entries
        are the tanh activations the backward pass differentiates through.
        """
        feats = time_features(tau, self.time_width)
        acts = [np.concatenate([x_flat, feats], axis=1)]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            a = np.tanh(z) if i < self.n_layers - 1 else z
            if not np.all(np.isfinite(a)):
                raise NumericalFault("non-finite activations", context=f"layer {i}")
            acts.append(a)
        gate = feats @ self.gate_w + self.gate_b[0]
        out = acts[-1] + gate[:, None] * x_flat
        if not np.all(np.isfinite(out)):
            raise NumericalFault("non-finite activations", context="gate")
        acts[-1] = out
        return acts

    def _backward(self, acts, d_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output); reverse accumulation."""
        flat = int(np.prod(self.data_shape))
        x_flat = acts[0][:, :flat]
        feats = acts[0][:, flat:]
        # passthrough branch: out += g(tau) * x, so dg is a per-sample scalar
        dg = (d_out * x_flat).sum(axis=1)
        grad_gate_w = feats.T @ dg
        grad_gate_b = np.array([dg.sum()])
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        dz = d_out
        for i in range(self.n_layers - 1, -1, -1):
            grads_w[i] = acts[i].T @ dz
            grads_b[i] = dz.sum(axis=0)
            if i > 0:
                da = dz @ self.weights[i].T
                dz = da * (1.0 - acts[i] ** 2)  # tanh'
        return grads_w, grads_b, grad_gate_w, grad_gate_b

    def predict_batch(self, x_batch: np.ndarray, t_batch: np.ndarray) -> np.ndarray:
        """Noise estimates for a batch of latents at integer step indices."""
        x_batch = np.asarray(x_batch, dtype=np.float64)
        flat = x_batch.reshape(x_batch.shape[0], -1)
        tau = np.asarray(t_batch, dtype=np.float64) / self.total_steps
        return self._forward(flat, tau)[-1].reshape(x_batch.shape)

    def predict_epsilon(self, x_t: np.ndarray, t: int) -> np.ndarray:
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != self.data_shape:
            raise ContractViolation(
                f"latent shape {x_t.shape} does not match network shape {self.data_shape}"
            )
        return self.predict_batch(x_t[None], np.array([t]))[0]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run; the seed pins the whole trajectory."""

    learning_rate: float = 1e-3
    batch_size: int = 16
    steps: int = 5000
    optimizer: str = "adam"  # "sgd" or "adam"
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be positive, got {self.batch_size}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be positive, got {self.steps}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigurationError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")


class _Adam:
    """Adaptive-moment update with the usual bias correction.

    The correction is folded into the step size and the arithmetic runs
    in place through scratch buffers; the update stays mathematically
    the standard one.
    """

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.scratch = [np.empty_like(p) for p in params]
        self.t = 0

    def update(self, params, grads):
        self.t += 1
        corr2 = np.sqrt(1.0 - self.beta2**self.t)
        step = self.lr * corr2 / (1.0 - self.beta1**self.t)
        for p, g, m, v, buf in zip(params, grads, self.m, self.v, self.scratch):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            np.multiply(g, g, out=buf)
            buf *= 1.0 - self.beta2
            v += buf
            np.sqrt(v, out=buf)
            buf += self.eps * corr2
            np.divide(m, buf, out=buf)
            buf *= step
            p -= buf


class _SGD:
    def __init__(self, lr):
        self.lr = lr

    def update(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def train_denoiser(net: SmallEpsNet, dataset, schedule: NoiseSchedule, cfg: TrainConfig):
    """Fit the net to predict forward-process noise; returns (net, loss history).

    Each step draws a batch of clean samples, uniform step indices and
    fresh noise, forms x_t through the closed-form marginal and minimizes
    the mean squared error between the noise and the net's estimate. The
    net is updated in place. A non-finite loss aborts with the step index.
    """
    if dataset.size is not None and dataset.size < 1:
        raise ConfigurationError("dataset is empty")
    if tuple(dataset.shape) != net.data_shape:
        raise ConfigurationError(
            f"dataset shape {dataset.shape} does not match network shape {net.data_shape}"
        )
    if net.total_steps != schedule.steps:
        raise ConfigurationError(
            f"network was built for {net.total_steps} steps, schedule has {schedule.steps}"
        )
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    params = net.parameters()
    opt = _Adam(params, cfg.learning_rate) if cfg.optimizer == "adam" else _SGD(cfg.learning_rate)
    history = np.empty(cfg.steps)
    n_index = dataset.size if dataset.size is not None else 2**31
    abar = schedule.alpha_bars
    for step in range(cfg.steps):
        idx = rng.integers(0, n_index, cfg.batch_size)
        x0 = np.stack([dataset.sample(int(i)) for i in idx])
        t = rng.integers(0, schedule.steps, cfg.batch_size)
        eps = rng.standard_normal(x0.shape)
        coef_sig = np.sqrt(abar[t]).reshape(-1, 1, 1, 1)
        coef_noise = np.sqrt(1.0 - abar[t]).reshape(-1, 1, 1, 1)
        x_t = coef_sig * x0 + coef_noise * eps

        flat = x_t.reshape(cfg.batch_size, -1)
        tau = t.astype(np.float64) / net.total_steps
        acts = net._forward(flat, tau)
        resid = acts[-1] - eps.reshape(cfg.batch_size, -1)
        loss = float(np.mean(resid**2))
        if not np.isfinite(loss):
            raise NumericalFault("training loss diverged", context=f"step {step}")
        history[step] = loss
        gw, gb, ggw, ggb = net._backward(acts, 2.0 * resid / resid.size)
        grads = []
        for w, b in zip(gw, gb):
            grads.append(w)
            grads.append(b)
        grads.append(ggw)
        grads.append(ggb)
        opt.update(params, grads)
    return net, history


def epsilon_loss(net: SmallEpsNet, x0: np.ndarray, t: np.ndarray, eps: np.ndarray,
                 schedule: NoiseSchedule) -> float:
    """Mean squared noise-prediction error on one explicit batch."""
    coef_sig = np.sqrt(schedule.alpha_bars[t]).reshape(-1, 1, 1, 1)
    coef_noise = np.sqrt(1.0 - schedule.alpha_bars[t]).reshape(-1, 1, 1, 1)
    x_t = coef_sig * x0 + coef_noise * eps
    pred = net.predict_batch(x_t, t)
    return float(np.mean((pred - eps) ** 2))


def epsilon_loss_gradients(net: SmallEpsNet, x0: np.ndarray, t: np.ndarray,
                           eps: np.ndarray, schedule: NoiseSchedule):
    """Analytic parameter gradients of :func:`epsilon_loss` for the same batch."""
    coef_sig = np.sqrt(schedule.alpha_bars[t]).reshape(-1, 1, 1, 1)
    coef_noise = np.sqrt(1.0 - schedule.alpha_bars[t]).reshape(-1, 1, 1, 1)
    x_t = coef_sig * x0 + coef_noise * eps
    flat = x_t.reshape(x_t.shape[0], -1)
    tau = np.asarray(t, dtype=np.float64) / net.total_steps
    acts = net._forward(flat, tau)
    resid = acts[-1] - eps.reshape(eps.shape[0], -1)
    gw, gb, ggw, ggb = net._backward(acts, 2.0 * resid / resid.size)
    grads = []
    for w, b in zip(gw, gb):
        grads.append(w)
        grads.append(b)
    grads.append(ggw)
    grads.append(ggb)
    return grads


def save_checkpoint(net: SmallEpsNet, path) -> None:
    """Write parameters as a versioned little-endian binary file."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<H", _CKPT_VERSION))
        fh.write(struct.pack("<II", net.total_steps, net.time_width))
        fh.write(struct.pack("<3I", *net.data_shape))
        fh.write(struct.pack("<I", len(net.sizes)))
        fh.write(struct.pack(f"<{len(net.sizes)}I", *net.sizes))
        fh.write(struct.pack("<Q", net.n_parameters))
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(net.gate_w, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(net.gate_b, dtype="<f8").tobytes())


def load_checkpoint(path) -> SmallEpsNet:
    """Rebuild a network from :func:`save_checkpoint` output."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ConfigurationError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != _CKPT_VERSION:
            raise ConfigurationError(f"{path}: unsupported checkpoint version {version}")
        total_steps, time_width = struct.unpack("<II", fh.read(8))
        data_shape = struct.unpack("<3I", fh.read(12))
        (n_sizes,) = struct.unpack("<I", fh.read(4))
        sizes = list(struct.unpack(f"<{n_sizes}I", fh.read(4 * n_sizes)))
        (n_params,) = struct.unpack("<Q", fh.read(8))
        net = SmallEpsNet(data_shape, hidden=sizes[1:-1], time_width=time_width,
                          total_steps=total_steps)
        if net.sizes != sizes or net.n_parameters != n_params:
            raise ConfigurationError(f"{path}: inconsistent layer-size table")
        for w, b in zip(net.weights, net.biases):
            w[:] = np.frombuffer(fh.read(8 * w.size), dtype="<f8").reshape(w.shape)
            b[:] = np.frombuffer(fh.read(8 * b.size), dtype="<f8")
        net.gate_w[:] = np.frombuffer(fh.read(8 * net.gate_w.size), dtype="<f8")
        net.gate_b[:] = np.frombuffer(fh.read(8 * net.gate_b.size), dtype="<f8")
        trailing = fh.read(1)
        if trailing:
            raise ConfigurationError(f"{path}: trailing bytes after parameter block")
    return net


def save_loss_history(history: np.ndarray, path) -> None:
    """Two-column CSV of (step, loss)."""
    with open(path, "w") as fh:
        fh.write("step,loss\n")
        for i, value in enumerate(history):
            fh.write(f"{i},{value:.17g}\n")

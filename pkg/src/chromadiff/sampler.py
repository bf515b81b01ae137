"""Reverse (denoising) process with color-noise injection.

Starting from a pure-noise latent, the chain applies T posterior steps.
During a configurable early window of denoising steps (1-based, step 1
operating on the noisiest latent), a constant per-channel color tensor
scaled by ``s_noise`` is added to the latent. Two samplers are provided:
the ancestral one draws fresh Gaussian noise from a deterministic stream
at every step, the other uses the zero-extra-noise update so the whole
trajectory is a pure function of the initial latent.
"""

from dataclasses import dataclass

import numpy as np

from .denoisers import Denoiser
from .errors import ContractViolation, NumericalFault
from .rng import NoiseStream
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class ColorMask:
    """Constant per-channel color tensor, unit-normalized.

    ``rgb`` holds the three channel intensities in [0, 1]; the logical
    3 x H x W mask broadcasts each value over its channel plane.
    """

    rgb: tuple

    def __post_init__(self):
        rgb = tuple(float(v) for v in self.rgb)
        if len(rgb) != 3:
            raise ContractViolation(f"mask needs exactly 3 channel values, got {self.rgb!r}")
        if not all(np.isfinite(v) and 0.0 <= v <= 1.0 for v in rgb):
            raise ContractViolation(f"mask channels must lie in [0, 1], got {rgb}")
        object.__setattr__(self, "rgb", rgb)

    def broadcast(self) -> np.ndarray:
        """(3, 1, 1) view that broadcasts over any 3 x H x W latent."""
        return np.asarray(self.rgb, dtype=np.float64).reshape(3, 1, 1)

    def materialize(self, height: int, width: int) -> np.ndarray:
        return np.broadcast_to(self.broadcast(), (3, height, width)).copy()


@dataclass(frozen=True)
class InjectionConfig:
    """What to add, how much, and during which denoising steps.

    The window is inclusive and 1-based: step 1 consumes the noisiest
    latent. ``mode`` selects whether the addition happens before or after
    that step's denoiser call. ``s_noise`` of zero disables injection
    entirely.
    """

    s_noise: float
    mask: ColorMask
    window_first: int = 1
    window_last: int = 10
    mode: str = "before"

    def __post_init__(self):
        if not np.isfinite(self.s_noise) or self.s_noise < 0.0:
            raise ContractViolation(f"s_noise must be a non-negative real, got {self.s_noise!r}")
        if not 1 <= self.window_first <= self.window_last:
            raise ContractViolation(
                f"need 1 <= window_first <= window_last, got "
                f"[{self.window_first}, {self.window_last}]"
            )
        if self.mode not in ("before", "after"):
            raise ContractViolation(f"mode must be 'before' or 'after', got {self.mode!r}")

    def active(self, j: int) -> bool:
        """Whether injection applies at 1-based denoising step j."""
        return self.s_noise > 0.0 and self.window_first <= j <= self.window_last


def _check_injection(inj, schedule: NoiseSchedule, x: np.ndarray):
    if inj is None:
        return
    if inj.window_last > schedule.steps:
        raise ContractViolation(
            f"injection window [{inj.window_first}, {inj.window_last}] exceeds "
            f"the {schedule.steps}-step schedule"
        )
    if inj.s_noise > 0.0 and (x.ndim != 3 or x.shape[0] != 3):
        raise ContractViolation(
            f"color injection needs a 3 x H x W latent, got shape {x.shape}"
        )


def ancestral_step(
    d: Denoiser, s: NoiseSchedule, x_t: np.ndarray, t: int, z: np.ndarray
) -> np.ndarray:
    """One posterior step x_t -> x_{t-1}.

        x_{t-1} = (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
                  + sqrt(btilde_t) * z

    with btilde_t = (1 - abar_{t-1}) / (1 - abar_t) * beta_t. At t = 0 the
    fresh-noise coefficient is zero by contract, so z is ignored there.
    """
    s.check_step(t)
    x_t = np.asarray(x_t, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x_t.shape != z.shape:
        raise ContractViolation(f"ancestral_step: shape mismatch {x_t.shape} vs {z.shape}")
    eps_hat = d.predict_epsilon(x_t, t)
    if eps_hat.shape != x_t.shape:
        raise ContractViolation(
            f"denoiser returned shape {eps_hat.shape} for input {x_t.shape}"
        )
    mean = (x_t - s.betas[t] / np.sqrt(1.0 - s.alpha_bars[t]) * eps_hat) / np.sqrt(s.alphas[t])
    if t == 0:
        out = mean
    else:
        btilde = (1.0 - s.alpha_bars[t - 1]) / (1.0 - s.alpha_bars[t]) * s.betas[t]
        out = mean + np.sqrt(btilde) * z
    if not np.all(np.isfinite(out)):
        raise NumericalFault("non-finite latent", context=f"reverse step t={t}")
    return out


def _ddim_step(d: Denoiser, s: NoiseSchedule, x_t: np.ndarray, t: int) -> np.ndarray:
    eps_hat = d.predict_epsilon(x_t, t)
    if eps_hat.shape != x_t.shape:
        raise ContractViolation(
            f"denoiser returned shape {eps_hat.shape} for input {x_t.shape}"
        )
    abar = s.alpha_bars[t]
    abar_prev = s.alpha_bars[t - 1] if t > 0 else 1.0
    x0_hat = (x_t - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)
    out = np.sqrt(abar_prev) * x0_hat + np.sqrt(1.0 - abar_prev) * eps_hat
    if not np.all(np.isfinite(out)):
        raise NumericalFault("non-finite latent", context=f"reverse step t={t}")
    return out


def sample(
    d: Denoiser, s: NoiseSchedule, stream: NoiseStream, inj: InjectionConfig | None = None
) -> np.ndarray:
    """Full ancestral chain from the stream's initial latent to an image.

    Pure given (stream seed, configuration). With ``inj`` inactive the
    output is bit-identical to a run without any injection logic.
    """
    x = stream.initial()
    _check_injection(inj, s, x)
    term = inj.s_noise * inj.mask.broadcast() if inj is not None else None
    for t in range(s.steps - 1, -1, -1):
        j = s.steps - t
        injected = inj is not None and inj.active(j)
        if injected and inj.mode == "before":
            x = x + term
        z = stream.step_noise(j) if t > 0 else np.zeros_like(x)
        x = ancestral_step(d, s, x, t, z)
        if injected and inj.mode == "after":
            x = x + term
    return x


def ddim_sample(
    d: Denoiser, s: NoiseSchedule, initial: np.ndarray, inj: InjectionConfig | None = None
) -> np.ndarray:
    """Deterministic chain: no per-step noise, same injection semantics."""
    x = np.asarray(initial, dtype=np.float64)
    _check_injection(inj, s, x)
    term = inj.s_noise * inj.mask.broadcast() if inj is not None else None
    for t in range(s.steps - 1, -1, -1):
        j = s.steps - t
        injected = inj is not None and inj.active(j)
        if injected and inj.mode == "before":
            x = x + term
        x = _ddim_step(d, s, x, t)
        if injected and inj.mode == "after":
            x = x + term
    return x

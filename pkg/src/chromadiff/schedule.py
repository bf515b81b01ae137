"""Noise schedule and forward (noising) process.

The forward process degrades a clean image x0 over T steps. With
beta_t the per-step noise variance, alpha_t = 1 - beta_t and
abar_t = prod_{s<=t} alpha_s, the closed-form marginal is

    x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps,   eps ~ N(0, I)

and a single incremental step is

    x_t = sqrt(alpha_t) x_{t-1} + sqrt(beta_t) eps.

Everything here is pure: identical inputs give bit-identical outputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step coefficients of a T-step diffusion.

    Immutable after construction; safe to share across workers.
    """

    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def steps(self) -> int:
        return self.betas.shape[0]

    def check_step(self, t: int) -> None:
        if not isinstance(t, (int, np.integer)):
            raise ContractViolation(f"step index must be an integer, got {t!r}")
        if not 0 <= t < self.steps:
            raise ContractViolation(
                f"step index {t} out of range for a {self.steps}-step schedule"
            )


def build_linear_schedule(
    steps: int, beta_start: float = 1e-4, beta_end: float = 0.02
) -> NoiseSchedule:
    """Build a schedule with betas linearly spaced from beta_start to beta_end.

    Both endpoints are included; alpha_bars is the left-to-right cumulative
    product of the alphas.
    """
    if not isinstance(steps, (int, np.integer)) or isinstance(steps, bool):
        raise ConfigurationError(f"steps must be a positive integer, got {steps!r}")
    if steps < 1:
        raise ConfigurationError(f"steps must be >= 1, got {steps}")
    for name, value in (("beta_start", beta_start), ("beta_end", beta_end)):
        if not np.isfinite(value):
            raise ConfigurationError(f"{name} must be finite, got {value!r}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ConfigurationError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    betas = np.linspace(beta_start, beta_end, steps, dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    return NoiseSchedule(_frozen(betas), _frozen(alphas), _frozen(alpha_bars))


def _check_shapes(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ContractViolation(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def forward_marginal(
    schedule: NoiseSchedule, x0: np.ndarray, t: int, eps: np.ndarray
) -> np.ndarray:
    """Jump straight from x0 to x_t given the noise realization eps."""
    schedule.check_step(t)
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    _check_shapes(x0, eps, "forward_marginal")
    abar = schedule.alpha_bars[t]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def forward_step(
    schedule: NoiseSchedule, x_prev: np.ndarray, t: int, eps: np.ndarray
) -> np.ndarray:
    """Apply the single noising step taking x_{t-1} to x_t."""
    schedule.check_step(t)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    _check_shapes(x_prev, eps, "forward_step")
    return np.sqrt(schedule.alphas[t]) * x_prev + np.sqrt(schedule.betas[t]) * eps

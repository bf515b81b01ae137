"""Epsilon-prediction denoisers used by the reverse process.

Two implementations live in this package: the closed-form optimal
denoiser below, exact when the data distribution is Gaussian, and the
trainable network in :mod:`chromadiff.epsnet`.
"""

from abc import ABC, abstractmethod

import numpy as np

from .errors import ContractViolation
from .schedule import NoiseSchedule


class Denoiser(ABC):
    """Predicts the forward-process noise component of a noisy latent.

    Implementations are pure for fixed parameters: the same (x_t, t)
    must give bit-identical output, and output shape equals input shape.
    """

    @abstractmethod
    def predict_epsilon(self, x_t: np.ndarray, t: int) -> np.ndarray:
        ...


class GaussianOracleDenoiser(Denoiser):
    """Bayes-optimal denoiser for data distributed as N(mu0, sigma0^2 I).

    With a = sqrt(abar_t), the posterior mean of the clean sample is

        E[x0 | x_t] = mu0 + (a sigma0^2) / (a^2 sigma0^2 + 1 - a^2) (x_t - a mu0)

    and the implied noise estimate is

        eps_hat = (x_t - a E[x0 | x_t]) / sqrt(1 - a^2).

    The map is affine in x_t, which makes whole reverse chains built on it
    exactly analyzable: eps_hat(x) - eps_hat(y) = epsilon_slope(t) * (x - y).
    """

    def __init__(self, mu0, sigma0: float, schedule: NoiseSchedule):
        sigma0 = float(sigma0)
        if not np.isfinite(sigma0) or sigma0 <= 0.0:
            raise ContractViolation(f"sigma0 must be a positive real, got {sigma0!r}")
        self.mu0 = np.asarray(mu0, dtype=np.float64)
        self.sigma0 = sigma0
        self.schedule = schedule

    def posterior_mean_x0(self, x_t: np.ndarray, t: int) -> np.ndarray:
        """Conditional expectation of the clean sample given the latent."""
        self.schedule.check_step(t)
        x_t = np.asarray(x_t, dtype=np.float64)
        a = np.sqrt(self.schedule.alpha_bars[t])
        var_signal = a * a * self.sigma0 * self.sigma0
        gain = a * self.sigma0 * self.sigma0 / (var_signal + 1.0 - a * a)
        return self.mu0 + gain * (x_t - a * self.mu0)

    def epsilon_slope(self, t: int) -> float:
        """d eps_hat / d x_t, a scalar depending only on t."""
        self.schedule.check_step(t)
        a2 = self.schedule.alpha_bars[t]
        s2 = a2 * self.sigma0 * self.sigma0 + 1.0 - a2
        return float(np.sqrt(1.0 - a2) / s2)

    def predict_epsilon(self, x_t: np.ndarray, t: int) -> np.ndarray:
        self.schedule.check_step(t)
        x_t = np.asarray(x_t, dtype=np.float64)
        a = np.sqrt(self.schedule.alpha_bars[t])
        x0_hat = self.posterior_mean_x0(x_t, t)
        return (x_t - a * x0_hat) / np.sqrt(1.0 - a * a)

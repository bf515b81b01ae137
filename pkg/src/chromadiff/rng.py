"""Deterministic Gaussian tensor generation.

Tensors are produced counter-style: every (seed, index) pair maps to its
own Philox keystream, so a tensor's bytes depend only on the seed, the
index and the shape, never on how many tensors were drawn before it or
in what order. Normals come from the Box-Muller transform applied to the
uniform output of the keyed generator.
"""

import math

import numpy as np

from .errors import ContractViolation

_TWO_PI = 2.0 * math.pi


def gaussian_tensor(seed: int, index: int, shape) -> np.ndarray:
    """Standard-normal tensor for stream position ``index`` of stream ``seed``."""
    if not 0 <= int(seed) < 2**64:
        raise ContractViolation(f"seed must fit in 64 bits, got {seed!r}")
    if index < 0:
        raise ContractViolation(f"stream index must be >= 0, got {index!r}")
    shape = (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)
    n = int(np.prod(shape)) if shape else 1
    pairs = (n + 1) // 2
    gen = np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))
    u1 = 1.0 - gen.random(pairs)  # (0, 1]: keeps the log finite
    u2 = gen.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(_TWO_PI * u2), r * np.sin(_TWO_PI * u2)])
    return z[:n].reshape(shape)


class NoiseStream:
    """Per-run source of the initial latent and one z tensor per reverse step.

    Index 0 is the initial latent; index j >= 1 is the fresh noise consumed
    by the reverse step with 1-based denoising index j. Same seed, same
    shape: bit-identical tensors, regardless of access order.
    """

    def __init__(self, seed: int, shape):
        self.seed = int(seed)
        self.shape = tuple(int(s) for s in shape)
        if not 0 <= self.seed < 2**64:
            raise ContractViolation(f"seed must fit in 64 bits, got {seed!r}")

    def initial(self) -> np.ndarray:
        return gaussian_tensor(self.seed, 0, self.shape)

    def step_noise(self, j: int) -> np.ndarray:
        if j < 1:
            raise ContractViolation(f"denoising step index must be >= 1, got {j}")
        return gaussian_tensor(self.seed, j, self.shape)

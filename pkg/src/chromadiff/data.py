"""Procedural toy datasets.

Two flavors: Gaussian tensors with known mean and scale (the
distribution the closed-form oracle denoiser is exact for), and
procedural blob faces for qualitative generation. Model pixel space is
[-1, 1]; see :mod:`chromadiff.imageio` for the display mapping.

Sampling is counter-based: sample(i) depends only on (seed, i), so
datasets are safe to read concurrently and bit-reproducible.
"""

from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .imageio import write_ppm
from .rng import gaussian_tensor


class Dataset(ABC):
    """Fixed-shape image source; ``size`` is None for generative datasets."""

    shape: tuple
    size: int | None

    def _check_index(self, index: int) -> None:
        if index < 0:
            raise ContractViolation(f"sample index must be >= 0, got {index}")
        if self.size is not None and index >= self.size:
            raise ContractViolation(f"sample index {index} >= dataset size {self.size}")

    @abstractmethod
    def sample(self, index: int) -> np.ndarray:
        ...


class GaussianDataset(Dataset):
    """i.i.d. samples mu0 + sigma0 * standard normal."""

    def __init__(self, mu0: np.ndarray, sigma0: float, seed: int = 0):
        sigma0 = float(sigma0)
        if not np.isfinite(sigma0) or sigma0 <= 0.0:
            raise ConfigurationError(f"sigma0 must be positive, got {sigma0!r}")
        self.mu0 = np.asarray(mu0, dtype=np.float64)
        if self.mu0.ndim != 3:
            raise ConfigurationError(f"mu0 must be a (C, H, W) tensor, got shape {self.mu0.shape}")
        self.sigma0 = sigma0
        self.seed = int(seed)
        self.shape = self.mu0.shape
        self.size = None

    def sample(self, index: int) -> np.ndarray:
        self._check_index(index)
        return self.mu0 + self.sigma0 * gaussian_tensor(self.seed, index, self.shape)


def gaussian_dataset(mu0: np.ndarray, sigma0: float, seed: int = 0) -> GaussianDataset:
    return GaussianDataset(mu0, sigma0, seed)


def _soft_disc(dist: np.ndarray, radius: float, edge: float) -> np.ndarray:
    """1 inside, 0 outside, linear ramp of width ``edge`` at the rim."""
    return np.clip((radius - dist) / edge, 0.0, 1.0)


class BlobFaceDataset(Dataset):
    """Procedural faces: skin-tone disc, two dark eye blobs, a mouth arc.

    Geometry, palette and a global color tint are jittered per sample;
    ``jitter`` scales every deviation, so zero gives identical samples.
    The tint is deliberately wide, putting substantial variance on
    constant-color directions of the data distribution.
    """

    # display-space palette, before tinting
    _BG = np.array([0.16, 0.18, 0.22])
    _SKIN = np.array([0.86, 0.66, 0.52])
    _EYE = np.array([0.10, 0.08, 0.08])
    _MOUTH = np.array([0.52, 0.20, 0.20])

    def __init__(self, height: int, width: int, seed: int = 0, jitter: float = 1.0):
        if height < 8 or width < 8:
            raise ConfigurationError(f"canvas too small: {height}x{width}, need at least 8x8")
        if not np.isfinite(jitter) or jitter < 0.0:
            raise ConfigurationError(f"jitter must be >= 0, got {jitter!r}")
        self.height = int(height)
        self.width = int(width)
        self.seed = int(seed)
        self.jitter = float(jitter)
        self.shape = (3, self.height, self.width)
        self.size = None
        ys = (np.arange(self.height) + 0.5) / self.height
        xs = (np.arange(self.width) + 0.5) / self.width
        self._yy, self._xx = np.meshgrid(ys, xs, indexing="ij")
        self._edge = 1.5 / min(self.height, self.width)

    def sample(self, index: int) -> np.ndarray:
        self._check_index(index)
        rng = np.random.Generator(np.random.Philox(key=[self.seed, index]))
        n = self.jitter * rng.standard_normal(20)

        tint = 0.12 * n[0:3]
        cx = 0.50 + 0.02 * n[3]
        cy = 0.52 + 0.02 * n[4]
        r_face = 0.34 + 0.02 * n[5]
        skin = self._SKIN + 0.05 * n[6:9]
        bg = self._BG + 0.04 * n[9:12]
        eye_dx_l = 0.14 + 0.015 * n[12]
        eye_dx_r = 0.14 + 0.015 * n[13]
        eye_dy = 0.10 + 0.012 * n[14]
        r_eye = 0.055 + 0.006 * n[15]
        mouth_down = 0.14 + 0.015 * n[16]
        r_mouth = 0.11 + 0.010 * n[17]
        mouth_th = 0.030 + 0.004 * n[18]
        mouth = self._MOUTH + 0.04 * n[19]

        xx, yy, edge = self._xx, self._yy, self._edge
        d_face = np.hypot(xx - cx, yy - cy)
        face_m = _soft_disc(d_face, max(r_face, 0.05), edge)
        d_el = np.hypot(xx - (cx - eye_dx_l), yy - (cy - eye_dy))
        d_er = np.hypot(xx - (cx + eye_dx_r), yy - (cy - eye_dy))
        eye_m = np.maximum(
            _soft_disc(d_el, max(r_eye, 0.01), edge), _soft_disc(d_er, max(r_eye, 0.01), edge)
        )
        d_mouth = np.hypot(xx - cx, yy - (cy + mouth_down - r_mouth))
        ring = np.clip((max(mouth_th, 0.005) - np.abs(d_mouth - r_mouth)) / edge, 0.0, 1.0)
        mouth_m = ring * (yy > cy + mouth_down - r_mouth * 0.4)

        img = np.empty((3, self.height, self.width))
        for c in range(3):
            plane = bg[c] * (1.0 - face_m) + skin[c] * face_m
            plane = plane * (1.0 - eye_m) + self._EYE[c] * eye_m
            plane = plane * (1.0 - mouth_m) + mouth[c] * mouth_m
            img[c] = plane + tint[c]
        np.clip(img, 0.0, 1.0, out=img)
        return img * 2.0 - 1.0


def blob_faces(height: int, width: int, seed: int = 0, jitter: float = 1.0) -> BlobFaceDataset:
    return BlobFaceDataset(height, width, seed=seed, jitter=jitter)


def dump_ppm_dir(dataset: Dataset, directory, count: int) -> list:
    """Write the first ``count`` samples as PPM files for inspection."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(count):
        dest = directory / f"sample_{i:04d}.ppm"
        write_ppm(dataset.sample(i), dest)
        written.append(dest)
    return written

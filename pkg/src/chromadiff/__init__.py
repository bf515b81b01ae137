"""Pixel-space denoising diffusion with color-noise injection.

The package provides a T-step noise schedule and forward process, two
epsilon denoisers (a closed-form Gaussian oracle and a small trainable
net), ancestral and deterministic reverse samplers with a configurable
color-injection window, three color-space trajectory generators, toy
datasets, and a reproducible frame-sequence pipeline with PPM output
and text manifests.
"""

from .data import BlobFaceDataset, Dataset, GaussianDataset, blob_faces, gaussian_dataset
from .denoisers import Denoiser, GaussianOracleDenoiser
from .epsnet import (
    SmallEpsNet,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    save_loss_history,
    train_denoiser,
)
from .errors import (
    ChromadiffError,
    ConfigurationError,
    ContractViolation,
    NumericalFault,
)
from .imageio import from_display, ppm_bytes, read_ppm, to_display, write_ppm
from .paths import (
    ColorPath,
    PathSpec,
    bouncing_ball_path,
    brownian_path,
    build_path,
    mirror_path,
    mirror_state,
    rgb255_to_unit,
    sample_path,
    write_path_csv,
)
from .pipeline import (
    FrameRecord,
    RunConfig,
    color_correlation,
    continuity_profile,
    generate_sequence,
    mean_color,
    read_manifest,
    rms_distance,
    strip_timestamp,
    write_manifest,
)
from .rng import NoiseStream, gaussian_tensor
from .sampler import ColorMask, InjectionConfig, ancestral_step, ddim_sample, sample
from .schedule import NoiseSchedule, build_linear_schedule, forward_marginal, forward_step

__version__ = "0.1.0"

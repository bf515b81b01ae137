"""End-to-end frame-sequence generation and its analysis metrics.

A run fixes the initial latent and the per-step noise stream, sweeps the
injected color along a trajectory, and renders one frame per sampled
color, so the injected color is the only varying factor between frames.
Frames land on disk as binary PPMs next to a text manifest holding the
config echo, per-frame metrics and content hashes.
"""

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .denoisers import GaussianOracleDenoiser
from .epsnet import load_checkpoint
from .errors import ChromadiffError, ConfigurationError, ContractViolation
from .imageio import ppm_bytes, to_display
from .paths import PathSpec, build_path, sample_path
from .rng import NoiseStream
from .sampler import ColorMask, InjectionConfig, ddim_sample, sample
from .schedule import build_linear_schedule

MANIFEST_HEADER = "chromadiff-manifest v1"


@dataclass(frozen=True)
class RunConfig:
    """Everything one `generate` run depends on; validated as a whole."""

    steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    denoiser: str = "oracle"  # "oracle" or "checkpoint"
    checkpoint: str = ""
    mu0: float = 0.0
    sigma0: float = 1.0
    height: int = 32
    width: int = 32
    path_spec: PathSpec = field(default_factory=lambda: PathSpec(kind="bouncing_ball"))
    path_dt: float = 1e-3
    frames: int = 120
    s_noise: float = 0.01
    window_first: int = 1
    window_last: int = 10
    injection_mode: str = "before"
    sampler: str = "ancestral"  # "ancestral" or "deterministic"
    seed: int = 0
    output_dir: str = ""

    def validate(self) -> None:
        if self.denoiser not in ("oracle", "checkpoint"):
            raise ConfigurationError(f"denoiser must be 'oracle' or 'checkpoint', got {self.denoiser!r}")
        if self.denoiser == "checkpoint" and not self.checkpoint:
            raise ConfigurationError("denoiser 'checkpoint' needs a checkpoint path")
        if self.sampler not in ("ancestral", "deterministic"):
            raise ConfigurationError(f"sampler must be 'ancestral' or 'deterministic', got {self.sampler!r}")
        if self.frames < 1:
            raise ConfigurationError(f"frames must be >= 1, got {self.frames}")
        if self.height < 1 or self.width < 1:
            raise ConfigurationError(f"bad image size {self.height}x{self.width}")
        if not np.isfinite(self.sigma0) or self.sigma0 <= 0:
            raise ConfigurationError(f"sigma0 must be positive, got {self.sigma0}")
        if not np.isfinite(self.mu0):
            raise ConfigurationError(f"mu0 must be finite, got {self.mu0}")
        if not np.isfinite(self.s_noise) or self.s_noise < 0:
            raise ConfigurationError(f"s_noise must be >= 0, got {self.s_noise}")
        if not 1 <= self.window_first <= self.window_last <= self.steps:
            raise ConfigurationError(
                f"need 1 <= window_first <= window_last <= steps, got "
                f"[{self.window_first}, {self.window_last}] with {self.steps} steps"
            )
        if self.injection_mode not in ("before", "after"):
            raise ConfigurationError(f"injection_mode must be 'before' or 'after', got {self.injection_mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must fit in 64 bits, got {self.seed}")
        # raises ConfigurationError itself on bad values
        build_linear_schedule(self.steps, self.beta_start, self.beta_end)

    def to_flat(self) -> list:
        """Canonical (key, value) pairs echoed into the manifest."""
        p = self.path_spec

        def vec(v):
            return " ".join(repr(float(c)) for c in v)

        return [
            ("schedule.steps", str(self.steps)),
            ("schedule.beta_start", repr(float(self.beta_start))),
            ("schedule.beta_end", repr(float(self.beta_end))),
            ("denoiser.kind", self.denoiser),
            ("denoiser.checkpoint", self.checkpoint or "-"),
            ("denoiser.mu0", repr(float(self.mu0))),
            ("denoiser.sigma0", repr(float(self.sigma0))),
            ("image.height", str(self.height)),
            ("image.width", str(self.width)),
            ("path.kind", p.kind),
            ("path.start", vec(p.start)),
            ("path.velocity", vec(p.velocity)),
            ("path.gravity", repr(float(p.gravity))),
            ("path.gravity_axis", str(p.gravity_axis)),
            ("path.restitution", repr(float(p.restitution))),
            ("path.duration", repr(float(p.duration))),
            ("path.step_std", repr(float(p.step_std))),
            ("path.steps", str(p.steps)),
            ("path.seed", str(p.seed)),
            ("path.dt", repr(float(self.path_dt))),
            ("injection.s_noise", repr(float(self.s_noise))),
            ("injection.window_first", str(self.window_first)),
            ("injection.window_last", str(self.window_last)),
            ("injection.mode", self.injection_mode),
            ("run.frames", str(self.frames)),
            ("run.sampler", self.sampler),
            ("run.seed", str(self.seed)),
            ("run.output", self.output_dir or "-"),
        ]


@dataclass
class FrameRecord:
    """One rendered frame plus the metrics the manifest reports."""

    index: int
    injected_rgb: tuple
    image: np.ndarray
    mean_rgb: tuple
    dist_prev: float | None  # None for the first frame


def mean_color(img: np.ndarray) -> tuple:
    """Per-channel mean in display space (8-bit quantized, then /255)."""
    display = to_display(img)
    return tuple(float(display[c].mean()) / 255.0 for c in range(3))


def rms_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Root-mean-square difference over all channels and pixels, model space."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"rms_distance: shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def continuity_profile(frames) -> np.ndarray:
    """RMS distance between each adjacent frame pair."""
    if len(frames) < 2:
        raise ContractViolation(f"need at least 2 frames, got {len(frames)}")
    return np.array(
        [rms_distance(frames[i].image, frames[i - 1].image) for i in range(1, len(frames))]
    )


def color_correlation(frames) -> tuple:
    """Pearson correlation, per channel, of injected vs mean output value.

    A channel whose injected or output values have zero variance has no
    defined correlation and is reported as None.
    """
    if len(frames) < 3:
        raise ContractViolation(f"need at least 3 frames, got {len(frames)}")
    injected = np.array([f.injected_rgb for f in frames])
    output = np.array([f.mean_rgb for f in frames])
    result = []
    for c in range(3):
        x = injected[:, c]
        y = output[:, c]
        sx = x.std()
        sy = y.std()
        if sx == 0.0 or sy == 0.0:
            result.append(None)
            continue
        result.append(float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy)))
    return tuple(result)


def _build_denoiser(cfg: RunConfig, schedule):
    if cfg.denoiser == "oracle":
        return GaussianOracleDenoiser(np.float64(cfg.mu0), cfg.sigma0, schedule)
    net = load_checkpoint(cfg.checkpoint)
    if net.data_shape != (3, cfg.height, cfg.width):
        raise ConfigurationError(
            f"checkpoint shape {net.data_shape} does not match configured "
            f"image {3, cfg.height, cfg.width}"
        )
    if net.total_steps != cfg.steps:
        raise ConfigurationError(
            f"checkpoint was trained for {net.total_steps} steps, config says {cfg.steps}"
        )
    return net


def generate_sequence(cfg: RunConfig, denoiser=None) -> list:
    """Render the frame sequence for one run configuration.

    All frames share the initial latent and, in ancestral mode, the whole
    per-step noise stream; only the injected color varies. With an output
    directory set, frames are written as they complete and the manifest
    last; a failing frame still leaves a manifest, marked incomplete with
    the frame index.
    """
    cfg.validate()
    schedule = build_linear_schedule(cfg.steps, cfg.beta_start, cfg.beta_end)
    if denoiser is None:
        denoiser = _build_denoiser(cfg, schedule)
    path = build_path(cfg.path_spec, cfg.path_dt)
    colors = path.rgb[[0]] if cfg.frames == 1 else sample_path(path, cfg.frames)
    stream = NoiseStream(cfg.seed, (3, cfg.height, cfg.width))
    initial = stream.initial()
    out_dir = Path(cfg.output_dir) if cfg.output_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    frames = []
    hashes = []
    try:
        for i, rgb in enumerate(colors):
            inj = InjectionConfig(
                s_noise=cfg.s_noise,
                mask=ColorMask(tuple(rgb)),
                window_first=cfg.window_first,
                window_last=cfg.window_last,
                mode=cfg.injection_mode,
            )
            if cfg.sampler == "deterministic":
                img = ddim_sample(denoiser, schedule, initial, inj)
            else:
                img = sample(denoiser, schedule, stream, inj)
            dist = rms_distance(img, frames[-1].image) if frames else None
            rec = FrameRecord(i, tuple(float(v) for v in rgb), img, mean_color(img), dist)
            if out_dir is not None:
                data = ppm_bytes(img)
                (out_dir / f"frame_{i:04d}.ppm").write_bytes(data)
                hashes.append(hashlib.sha256(data).hexdigest())
            frames.append(rec)
    except Exception as exc:
        failed = len(frames)
        if out_dir is not None:
            write_manifest(
                cfg, frames, out_dir / "manifest.txt",
                hashes=hashes, status=f"incomplete failed_frame={failed}",
            )
        if isinstance(exc, ChromadiffError):
            raise type(exc)(f"frame {failed}: {exc}") from exc
        raise
    if out_dir is not None:
        write_manifest(cfg, frames, out_dir / "manifest.txt", hashes=hashes)
    return frames


def frame_hashes(frames) -> list:
    """sha256 of each frame's PPM serialization (equals the on-disk bytes)."""
    return [hashlib.sha256(ppm_bytes(f.image)).hexdigest() for f in frames]


def render_manifest(cfg: RunConfig, frames, hashes=None, status="complete",
                    timestamp=None) -> str:
    if hashes is None or len(hashes) != len(frames):
        hashes = frame_hashes(frames)
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [
        MANIFEST_HEADER,
        f"timestamp = {timestamp}",
        f"status = {status}",
        f"frame_count = {len(frames)}",
        "",
        "[config]",
    ]
    lines += [f"{key} = {value}" for key, value in cfg.to_flat()]
    lines += [
        "",
        "[frames]",
        "# index r_inj g_inj b_inj r_mean g_mean b_mean dist_prev sha256",
    ]
    for rec, digest in zip(frames, hashes):
        inj = " ".join(f"{v:.17g}" for v in rec.injected_rgb)
        mean = " ".join(f"{v:.17g}" for v in rec.mean_rgb)
        dist = f"{rec.dist_prev:.17g}" if rec.dist_prev is not None else "-"
        lines.append(f"{rec.index} {inj} {mean} {dist} {digest}")
    return "\n".join(lines) + "\n"


def write_manifest(cfg: RunConfig, frames, path, hashes=None, status="complete") -> None:
    Path(path).write_text(render_manifest(cfg, frames, hashes=hashes, status=status))


def read_manifest(path):
    """Parse a manifest back into (meta, config dict, frame row dicts)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise ConfigurationError(f"{path}: not a recognized manifest")
    meta = {}
    config = {}
    rows = []
    section = None
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        if section is None:
            key, _, value = line.partition(" = ")
            meta[key] = value
        elif section == "config":
            key, _, value = line.partition(" = ")
            config[key] = value
        elif section == "frames":
            parts = line.split()
            rows.append(
                {
                    "index": int(parts[0]),
                    "injected_rgb": tuple(float(v) for v in parts[1:4]),
                    "mean_rgb": tuple(float(v) for v in parts[4:7]),
                    "dist_prev": None if parts[7] == "-" else float(parts[7]),
                    "sha256": parts[8],
                }
            )
    return meta, config, rows


def strip_timestamp(manifest_text: str) -> str:
    """Manifest text without its timestamp line, for reproducibility diffs."""
    return "\n".join(
        line for line in manifest_text.splitlines() if not line.startswith("timestamp = ")
    )

"""Flat key = value run configuration with section headers.

Files look like INI: ``[section]`` headers over ``key = value`` lines.
Every key has a default, every key can be overridden on the command
line as ``--set section.key=value``, and parsing round-trips exactly.
"""

import configparser
import copy

import numpy as np

from .data import blob_faces, gaussian_dataset
from .epsnet import SmallEpsNet, TrainConfig
from .errors import ConfigurationError
from .paths import PathSpec
from .pipeline import RunConfig
from .schedule import build_linear_schedule

DEFAULT_RUN_SECTIONS = {
    "schedule": {"steps": "1000", "beta_start": "1e-4", "beta_end": "0.02"},
    "denoiser": {"kind": "oracle", "checkpoint": "", "mu0": "0.0", "sigma0": "1.0"},
    "image": {"height": "32", "width": "32"},
    "path": {
        "kind": "bouncing_ball",
        "start": "0.8 0.7 0.3",
        "velocity": "0.25 0.0 0.15",
        "gravity": "9.8",
        "gravity_axis": "1",
        "restitution": "0.85",
        "duration": "3.0",
        "step_std": "0.02",
        "steps": "1000",
        "seed": "0",
        "dt": "0.001",
    },
    "injection": {"s_noise": "0.01", "window_first": "1", "window_last": "10", "mode": "before"},
    "run": {"frames": "120", "sampler": "ancestral", "seed": "0", "output": "out"},
}

DEFAULT_TRAIN_SECTIONS = {
    "schedule": {"steps": "1000", "beta_start": "1e-4", "beta_end": "0.02"},
    "data": {
        "kind": "blob_faces",
        "height": "32",
        "width": "32",
        "seed": "0",
        "jitter": "1.0",
        "mu0": "0.0",
        "sigma0": "1.0",
    },
    "net": {"hidden": "96", "time_width": "8", "init_seed": "0"},
    "train": {
        "learning_rate": "1e-3",
        "batch_size": "8",
        "steps": "5000",
        "optimizer": "adam",
        "seed": "0",
    },
    "output": {"checkpoint": "model.ckpt", "loss_csv": "loss.csv"},
}


def load_config_file(path) -> dict:
    """Parse a config file into nested {section: {key: value}} strings."""
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh, source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return {section: dict(parser[section]) for section in parser.sections()}


def save_config_file(sections: dict, path) -> None:
    with open(path, "w") as fh:
        for name, keys in sections.items():
            fh.write(f"[{name}]\n")
            for key, value in keys.items():
                fh.write(f"{key} = {value}\n")
            fh.write("\n")


def merge_sections(defaults: dict, *layers) -> dict:
    """Defaults overlaid by file sections and CLI overrides; keys validated."""
    merged = copy.deepcopy(defaults)
    for layer in layers:
        for section, keys in layer.items():
            if section not in merged:
                raise ConfigurationError(f"unknown config section [{section}]")
            for key, value in keys.items():
                if key not in merged[section]:
                    raise ConfigurationError(f"unknown config key {section}.{key}")
                merged[section][key] = value
    return merged


def parse_overrides(pairs) -> dict:
    """Turn ['section.key=value', ...] into nested sections."""
    out: dict = {}
    for pair in pairs or ():
        head, sep, value = pair.partition("=")
        if not sep:
            raise ConfigurationError(f"override {pair!r} is not of the form section.key=value")
        section, dot, key = head.strip().partition(".")
        if not dot or not section or not key:
            raise ConfigurationError(f"override key {head!r} is not of the form section.key")
        out.setdefault(section, {})[key.strip()] = value.strip()
    return out


def _as_int(sections, section, key):
    raw = sections[section][key]
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{section}.{key}: expected an integer, got {raw!r}") from exc


def _as_float(sections, section, key):
    raw = sections[section][key]
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{section}.{key}: expected a number, got {raw!r}") from exc


def _as_vec3(sections, section, key):
    raw = sections[section][key]
    parts = raw.split()
    if len(parts) != 3:
        raise ConfigurationError(f"{section}.{key}: expected 3 numbers, got {raw!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigurationError(f"{section}.{key}: expected 3 numbers, got {raw!r}") from exc


def _as_ints(sections, section, key):
    raw = sections[section][key]
    try:
        return tuple(int(p) for p in raw.split())
    except ValueError as exc:
        raise ConfigurationError(f"{section}.{key}: expected integers, got {raw!r}") from exc


def path_spec_from_sections(sections: dict) -> PathSpec:
    return PathSpec(
        kind=sections["path"]["kind"],
        start=_as_vec3(sections, "path", "start"),
        velocity=_as_vec3(sections, "path", "velocity"),
        gravity=_as_float(sections, "path", "gravity"),
        gravity_axis=_as_int(sections, "path", "gravity_axis"),
        restitution=_as_float(sections, "path", "restitution"),
        duration=_as_float(sections, "path", "duration"),
        step_std=_as_float(sections, "path", "step_std"),
        steps=_as_int(sections, "path", "steps"),
        seed=_as_int(sections, "path", "seed"),
    )


def run_config_from_sections(sections: dict) -> RunConfig:
    cfg = RunConfig(
        steps=_as_int(sections, "schedule", "steps"),
        beta_start=_as_float(sections, "schedule", "beta_start"),
        beta_end=_as_float(sections, "schedule", "beta_end"),
        denoiser=sections["denoiser"]["kind"],
        checkpoint=sections["denoiser"]["checkpoint"],
        mu0=_as_float(sections, "denoiser", "mu0"),
        sigma0=_as_float(sections, "denoiser", "sigma0"),
        height=_as_int(sections, "image", "height"),
        width=_as_int(sections, "image", "width"),
        path_spec=path_spec_from_sections(sections),
        path_dt=_as_float(sections, "path", "dt"),
        frames=_as_int(sections, "run", "frames"),
        s_noise=_as_float(sections, "injection", "s_noise"),
        window_first=_as_int(sections, "injection", "window_first"),
        window_last=_as_int(sections, "injection", "window_last"),
        injection_mode=sections["injection"]["mode"],
        sampler=sections["run"]["sampler"],
        seed=_as_int(sections, "run", "seed"),
        output_dir=sections["run"]["output"],
    )
    cfg.validate()
    return cfg


def train_setup_from_sections(sections: dict) -> dict:
    """Typed training inputs: dataset, net, TrainConfig, output paths."""
    schedule = build_linear_schedule(
        _as_int(sections, "schedule", "steps"),
        _as_float(sections, "schedule", "beta_start"),
        _as_float(sections, "schedule", "beta_end"),
    )
    kind = sections["data"]["kind"]
    height = _as_int(sections, "data", "height")
    width = _as_int(sections, "data", "width")
    if kind == "blob_faces":
        dataset = blob_faces(
            height, width,
            seed=_as_int(sections, "data", "seed"),
            jitter=_as_float(sections, "data", "jitter"),
        )
    elif kind == "gaussian":
        mu0 = np.full((3, height, width), _as_float(sections, "data", "mu0"))
        dataset = gaussian_dataset(
            mu0, _as_float(sections, "data", "sigma0"), seed=_as_int(sections, "data", "seed")
        )
    else:
        raise ConfigurationError(f"data.kind must be 'blob_faces' or 'gaussian', got {kind!r}")
    net = SmallEpsNet(
        dataset.shape,
        hidden=_as_ints(sections, "net", "hidden"),
        time_width=_as_int(sections, "net", "time_width"),
        total_steps=schedule.steps,
        seed=_as_int(sections, "net", "init_seed"),
    )
    cfg = TrainConfig(
        learning_rate=_as_float(sections, "train", "learning_rate"),
        batch_size=_as_int(sections, "train", "batch_size"),
        steps=_as_int(sections, "train", "steps"),
        optimizer=sections["train"]["optimizer"],
        seed=_as_int(sections, "train", "seed"),
    )
    return {
        "schedule": schedule,
        "dataset": dataset,
        "net": net,
        "train": cfg,
        "checkpoint": sections["output"]["checkpoint"],
        "loss_csv": sections["output"]["loss_csv"],
    }

"""Trajectories inside the unit RGB cube.

Three generators: a ball bouncing on the floor of the cube under
constant gravity, a straight ray reflecting specularly off all six cube
faces, and a reflected Gaussian random walk. The first two advance with
exact event handling: face-crossing times inside a time step are solved
analytically, the state is reflected there, and integration continues,
so conservation properties hold to floating-point accuracy regardless
of the sampling step.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation, NumericalFault

_KINDS = ("bouncing_ball", "mirror", "brownian")


@dataclass(frozen=True)
class PathSpec:
    """Parameters of one trajectory; unused fields are ignored per kind."""

    kind: str
    start: tuple = (0.5, 0.5, 0.5)
    velocity: tuple = (1.0, 0.0, 0.0)
    gravity: float = 9.8
    gravity_axis: int = 1
    restitution: float = 0.85
    duration: float = 3.0
    step_std: float = 0.02
    steps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown path kind {self.kind!r}; expected one of {_KINDS}")
        start = tuple(float(v) for v in self.start)
        if len(start) != 3 or not all(np.isfinite(v) and 0.0 <= v <= 1.0 for v in start):
            raise ConfigurationError(f"start must lie in the unit cube, got {self.start!r}")
        object.__setattr__(self, "start", start)
        velocity = tuple(float(v) for v in self.velocity)
        if len(velocity) != 3 or not all(np.isfinite(v) for v in velocity):
            raise ConfigurationError(f"velocity must be a finite 3-vector, got {self.velocity!r}")
        object.__setattr__(self, "velocity", velocity)
        if self.kind == "bouncing_ball":
            if not np.isfinite(self.gravity) or self.gravity < 0.0:
                raise ConfigurationError(f"gravity must be >= 0, got {self.gravity}")
            if self.gravity_axis not in (0, 1, 2):
                raise ConfigurationError(f"gravity_axis must be 0, 1 or 2, got {self.gravity_axis}")
            if not 0.0 < self.restitution <= 1.0:
                raise ConfigurationError(f"restitution must be in (0, 1], got {self.restitution}")
        if self.kind in ("bouncing_ball", "mirror"):
            if not np.isfinite(self.duration) or self.duration <= 0.0:
                raise ConfigurationError(f"duration must be positive, got {self.duration}")
        if self.kind == "mirror" and all(v == 0.0 for v in velocity):
            raise ConfigurationError("mirror path needs a nonzero velocity")
        if self.kind == "brownian":
            if not np.isfinite(self.step_std) or self.step_std <= 0.0:
                raise ConfigurationError(f"step_std must be positive, got {self.step_std}")
            if self.steps < 1:
                raise ConfigurationError(f"steps must be >= 1, got {self.steps}")


@dataclass(frozen=True)
class ColorPath:
    """Time-ordered RGB samples, all inside the unit cube."""

    times: np.ndarray  # (N,), strictly increasing
    rgb: np.ndarray    # (N, 3)
    spec: PathSpec

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        rgb = np.ascontiguousarray(self.rgb, dtype=np.float64)
        if times.ndim != 1 or rgb.shape != (times.shape[0], 3):
            raise ContractViolation(f"inconsistent path arrays: {times.shape}, {rgb.shape}")
        if times.shape[0] < 2:
            raise ContractViolation("a path needs at least 2 samples")
        if not np.all(np.diff(times) > 0):
            raise ContractViolation("path times must be strictly increasing")
        if rgb.min() < 0.0 or rgb.max() > 1.0:
            raise ContractViolation("path left the unit color cube")
        times.setflags(write=False)
        rgb.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "rgb", rgb)


def _fold_unit(y: float) -> float:
    """Reflect a free coordinate into [0, 1] (tent map, period 2)."""
    m = y % 2.0
    return 2.0 - m if m > 1.0 else m


def _advance_linear(p: float, v: float, h: float):
    """Advance a coordinate moving at constant speed with elastic walls.

    Returns (position, velocity, reflection count) after time h; every
    wall crossing inside the interval is resolved at its exact time.
    """
    count = 0
    remaining = h
    while True:
        if v > 0.0:
            t_hit = (1.0 - p) / v
            wall = 1.0
        elif v < 0.0:
            t_hit = p / -v
            wall = 0.0
        else:
            return p, v, count
        if t_hit > remaining:
            return p + v * remaining, v, count
        p = wall
        v = -v
        remaining -= t_hit
        count += 1
        if count > 10_000_000:
            raise NumericalFault("runaway reflection cascade", context="linear axis")


def _time_to_floor(p: float, v: float, g: float):
    """First time the ballistic coordinate p + v t - g t^2 / 2 reaches 0."""
    if g == 0.0:
        return p / -v if v < 0.0 else math.inf
    return (v + math.sqrt(v * v + 2.0 * g * p)) / g


def _time_to_ceiling(p: float, v: float, g: float):
    """First upward crossing of 1, or inf when the apex stays below it."""
    if v <= 0.0:
        return math.inf
    if g == 0.0:
        return (1.0 - p) / v
    disc = v * v - 2.0 * g * (1.0 - p)
    if disc < 0.0:
        return math.inf
    return (v - math.sqrt(disc)) / g


def _advance_ballistic(p: float, v: float, h: float, g: float, e: float, resting: bool):
    """Advance the gravity axis by time h with exact bounce handling.

    Floor bounces scale the speed by the restitution e; ceiling hits are
    elastic. Once the rebound speed falls below a threshold the axis is
    frozen at the floor, which terminates the geometric bounce cascade a
    restitution < 1 would otherwise produce in finite time.
    """
    if resting:
        return 0.0, 0.0, True
    v_rest = math.sqrt(2.0 * g * 1e-13) if g > 0.0 else 1e-13
    remaining = h
    for _ in range(1_000_000):
        t_floor = _time_to_floor(p, v, g)
        t_ceil = _time_to_ceiling(p, v, g)
        t_hit = min(t_floor, t_ceil)
        if t_hit > remaining or t_hit is math.inf:
            p = p + v * remaining - 0.5 * g * remaining * remaining
            v = v - g * remaining
            return p, v, False
        v_at = v - g * t_hit
        if t_floor <= t_ceil:
            p = 0.0
            v = -e * v_at
            if v <= v_rest:
                return 0.0, 0.0, True
        else:
            p = 1.0
            v = -v_at
        remaining -= t_hit
    raise NumericalFault("runaway bounce cascade", context="gravity axis")


def _sample_times(duration: float, dt: float) -> np.ndarray:
    if not np.isfinite(dt) or dt <= 0.0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    n = int(math.floor(duration / dt + 1e-9))
    if n < 1:
        raise ConfigurationError(f"duration {duration} shorter than one step dt={dt}")
    return np.arange(n + 1, dtype=np.float64) * dt


def bouncing_ball_path(spec: PathSpec, dt: float) -> ColorPath:
    """Ballistic motion under gravity along one axis, linear on the others."""
    if spec.kind != "bouncing_ball":
        raise ContractViolation(f"spec kind is {spec.kind!r}, expected 'bouncing_ball'")
    times = _sample_times(spec.duration, dt)
    pos = list(spec.start)
    vel = list(spec.velocity)
    resting = False
    ax = spec.gravity_axis
    points = np.empty((times.shape[0], 3))
    points[0] = pos
    for k in range(1, times.shape[0]):
        for i in range(3):
            if i == ax:
                pos[i], vel[i], resting = _advance_ballistic(
                    pos[i], vel[i], dt, spec.gravity, spec.restitution, resting
                )
            else:
                pos[i], vel[i], _ = _advance_linear(pos[i], vel[i], dt)
        points[k] = pos
    np.clip(points, 0.0, 1.0, out=points)
    return ColorPath(times, points, spec)


def mirror_path(spec: PathSpec, dt: float) -> ColorPath:
    """Straight-line motion with specular reflection at all six faces."""
    if spec.kind != "mirror":
        raise ContractViolation(f"spec kind is {spec.kind!r}, expected 'mirror'")
    times = _sample_times(spec.duration, dt)
    pos = list(spec.start)
    vel = list(spec.velocity)
    points = np.empty((times.shape[0], 3))
    points[0] = pos
    for k in range(1, times.shape[0]):
        for i in range(3):
            pos[i], vel[i], _ = _advance_linear(pos[i], vel[i], dt)
        points[k] = pos
    np.clip(points, 0.0, 1.0, out=points)
    return ColorPath(times, points, spec)


def mirror_state(spec: PathSpec, time: float):
    """Position, velocity and reflection count of a mirror ray after ``time``."""
    if spec.kind != "mirror":
        raise ContractViolation(f"spec kind is {spec.kind!r}, expected 'mirror'")
    pos = list(spec.start)
    vel = list(spec.velocity)
    total = 0
    for i in range(3):
        pos[i], vel[i], count = _advance_linear(pos[i], vel[i], time)
        total += count
    return np.array(pos), np.array(vel), total


def brownian_path(spec: PathSpec) -> ColorPath:
    """Reflected Gaussian random walk; the seed pins the whole path."""
    if spec.kind != "brownian":
        raise ContractViolation(f"spec kind is {spec.kind!r}, expected 'brownian'")
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    increments = rng.normal(0.0, spec.step_std, (spec.steps, 3))
    points = np.empty((spec.steps + 1, 3))
    points[0] = spec.start
    x, y, z = spec.start
    for k in range(spec.steps):
        dx, dy, dz = increments[k]
        x = _fold_unit(x + dx)
        y = _fold_unit(y + dy)
        z = _fold_unit(z + dz)
        points[k + 1] = (x, y, z)
    times = np.arange(spec.steps + 1, dtype=np.float64)
    return ColorPath(times, points, spec)


def build_path(spec: PathSpec, dt: float = 1e-3) -> ColorPath:
    """Dispatch on the spec kind; dt only applies to the physical kinds."""
    if spec.kind == "bouncing_ball":
        return bouncing_ball_path(spec, dt)
    if spec.kind == "mirror":
        return mirror_path(spec, dt)
    return brownian_path(spec)


def sample_path(path: ColorPath, n: int) -> np.ndarray:
    """n colors at uniform time spacing over the path, endpoints exact."""
    if n < 2:
        raise ContractViolation(f"need at least 2 sample points, got {n}")
    t = np.linspace(path.times[0], path.times[-1], n)
    out = np.column_stack([np.interp(t, path.times, path.rgb[:, c]) for c in range(3)])
    out[0] = path.rgb[0]
    out[-1] = path.rgb[-1]
    return out


def rgb255_to_unit(r: int, g: int, b: int) -> tuple:
    """8-bit channel values to the unit cube (division by 255)."""
    channels = (r, g, b)
    for v in channels:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ContractViolation(f"channel values must be integers, got {v!r}")
        if not 0 <= v <= 255:
            raise ContractViolation(f"channel value {v} outside 0..255")
    return tuple(v / 255.0 for v in channels)


def write_path_csv(path: ColorPath, dest) -> None:
    """CSV rows of (time, r, g, b)."""
    with open(dest, "w") as fh:
        fh.write("time,r,g,b\n")
        for t, (r, g, b) in zip(path.times, path.rgb):
            fh.write(f"{t:.17g},{r:.17g},{g:.17g},{b:.17g}\n")

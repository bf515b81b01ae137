import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromadiff import (
    ConfigurationError,
    ContractViolation,
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


def fold(y):
    m = np.mod(y, 2.0)
    return np.where(m > 1.0, 2.0 - m, m)


def apex_heights(path, axis, floor_eps=0.02):
    """Max height of each flight segment between floor contacts."""
    y = path.rgb[:, axis]
    grounded = y < floor_eps
    apexes = []
    current = None
    for i in range(len(y)):
        if grounded[i]:
            if current is not None:
                apexes.append(current)
                current = None
        else:
            current = y[i] if current is None else max(current, y[i])
    if current is not None:
        apexes.append(current)
    return apexes


class TestPathSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            PathSpec(kind="spiral")

    def test_rejects_start_outside_cube(self):
        with pytest.raises(ConfigurationError):
            PathSpec(kind="mirror", start=(1.2, 0.5, 0.5))

    def test_rejects_bad_restitution(self):
        with pytest.raises(ConfigurationError):
            PathSpec(kind="bouncing_ball", restitution=0.0)
        with pytest.raises(ConfigurationError):
            PathSpec(kind="bouncing_ball", restitution=1.5)

    def test_rejects_zero_mirror_velocity(self):
        with pytest.raises(ConfigurationError):
            PathSpec(kind="mirror", velocity=(0.0, 0.0, 0.0))

    def test_rejects_bad_brownian_params(self):
        with pytest.raises(ConfigurationError):
            PathSpec(kind="brownian", step_std=0.0)
        with pytest.raises(ConfigurationError):
            PathSpec(kind="brownian", steps=0)


class TestBouncingBall:
    def test_constant_when_nothing_moves(self):
        spec = PathSpec(
            kind="bouncing_ball", start=(0.3, 0.6, 0.9), velocity=(0, 0, 0), gravity=0.0,
            duration=1.0,
        )
        path = bouncing_ball_path(spec, 0.01)
        assert np.all(path.rgb == np.array([0.3, 0.6, 0.9]))

    def test_elastic_bounce_conserves_apex(self):
        # restitution 1 must return the drop to its release height every time
        spec = PathSpec(
            kind="bouncing_ball", start=(0.5, 0.5, 0.5), velocity=(0, 0, 0),
            gravity=9.8, gravity_axis=1, restitution=1.0, duration=3.3,
        )
        path = bouncing_ball_path(spec, 1e-4)
        apexes = apex_heights(path, 1)
        assert len(apexes) >= 5
        for apex in apexes[:6]:
            assert abs(apex - 0.5) < 1e-3

    def test_restitution_apex_ratio(self):
        spec = PathSpec(
            kind="bouncing_ball", start=(0.5, 0.8, 0.5), velocity=(0, 0, 0),
            gravity=9.8, gravity_axis=1, restitution=0.8, duration=2.6,
        )
        path = bouncing_ball_path(spec, 1e-4)
        apexes = apex_heights(path, 1)
        assert len(apexes) >= 5
        for a, b in zip(apexes[:5], apexes[1:6]):
            assert abs(b / a - 0.64) < 0.02 * 0.64

    def test_low_restitution_comes_to_rest(self):
        spec = PathSpec(
            kind="bouncing_ball", start=(0.5, 0.4, 0.5), velocity=(0, 0, 0),
            gravity=9.8, gravity_axis=1, restitution=0.5, duration=5.0,
        )
        path = bouncing_ball_path(spec, 1e-3)
        assert path.rgb[-1, 1] == 0.0

    def test_horizontal_axes_reflect(self):
        spec = PathSpec(
            kind="bouncing_ball", start=(0.9, 0.5, 0.1), velocity=(1.0, 0.0, -0.7),
            gravity=9.8, gravity_axis=1, duration=2.0,
        )
        path = bouncing_ball_path(spec, 1e-3)
        assert path.rgb[:, 0].max() <= 1.0
        assert path.rgb[:, 2].min() >= 0.0
        assert path.rgb[:, 0].std() > 0.1

    def test_rejects_bad_dt(self):
        spec = PathSpec(kind="bouncing_ball")
        with pytest.raises(ConfigurationError):
            bouncing_ball_path(spec, 0.0)

    def test_kind_mismatch(self):
        with pytest.raises(ContractViolation):
            bouncing_ball_path(PathSpec(kind="mirror"), 0.01)


class TestMirror:
    def test_one_dimensional_period(self):
        # from the center at speed v along one axis the bounce period is 2/|v|
        spec = PathSpec(kind="mirror", start=(0.5, 0.5, 0.5), velocity=(0.5, 0, 0), duration=12.0)
        path = mirror_path(spec, 0.01)
        period = 2.0 / 0.5
        k = int(round(period / 0.01))
        assert np.allclose(path.rgb[:-k, 0], path.rgb[k:, 0], atol=1e-9)

    def test_speed_conserved_over_many_reflections(self):
        spec = PathSpec(
            kind="mirror", start=(0.31, 0.47, 0.59), velocity=(0.93, 0.71, 0.52), duration=5000.0
        )
        pos, vel, count = mirror_state(spec, 5000.0)
        assert count >= 10_000
        v0 = np.linalg.norm(spec.velocity)
        assert abs(np.linalg.norm(vel) - v0) / v0 < 1e-9
        assert np.all((pos >= 0) & (pos <= 1))

    def test_matches_unfolding_oracle(self):
        spec = PathSpec(
            kind="mirror", start=(0.31, 0.47, 0.59), velocity=(0.93, 0.71, 0.52), duration=5000.0
        )
        path = mirror_path(spec, 0.5)
        start = np.array(spec.start)
        vel = np.array(spec.velocity)
        expected = fold(start[None, :] + vel[None, :] * path.times[:, None])
        assert np.max(np.abs(path.rgb - expected)) < 1e-9

    def test_kind_mismatch(self):
        with pytest.raises(ContractViolation):
            mirror_path(PathSpec(kind="brownian"), 0.01)


class TestBrownian:
    def test_deterministic_per_seed(self):
        spec = PathSpec(kind="brownian", start=(0.5, 0.5, 0.5), step_std=0.05, steps=1000, seed=9)
        a = brownian_path(spec)
        b = brownian_path(spec)
        assert a.rgb.tobytes() == b.rgb.tobytes()
        other = brownian_path(
            PathSpec(kind="brownian", start=(0.5, 0.5, 0.5), step_std=0.05, steps=1000, seed=10)
        )
        assert a.rgb.tobytes() != other.rgb.tobytes()

    def test_tiny_deviation_stays_put(self):
        spec = PathSpec(kind="brownian", start=(0.2, 0.4, 0.6), step_std=1e-14, steps=500, seed=1)
        path = brownian_path(spec)
        assert np.max(np.abs(path.rgb - np.array([0.2, 0.4, 0.6]))) < 1e-11

    def test_contained_in_cube(self):
        spec = PathSpec(kind="brownian", start=(0.5, 0.5, 0.5), step_std=0.08, steps=20_000, seed=3)
        path = brownian_path(spec)
        assert path.rgb.min() >= 0.0
        assert path.rgb.max() <= 1.0

    def test_increment_variance_before_boundary_contact(self):
        # deviation small enough that the walk never reaches a wall
        spec = PathSpec(kind="brownian", start=(0.5, 0.5, 0.5), step_std=1e-4, steps=100_000, seed=7)
        path = brownian_path(spec)
        assert path.rgb.min() > 0.05 and path.rgb.max() < 0.95  # no contact
        increments = np.diff(path.rgb, axis=0).ravel()
        var = increments.var(ddof=1)
        want = 1e-8
        se = var * np.sqrt(2.0 / (increments.size - 1))
        assert abs(var - want) <= 3 * se


class TestSamplePath:
    def test_two_points_returns_endpoints(self):
        spec = PathSpec(kind="mirror", start=(0.1, 0.2, 0.3), velocity=(0.2, 0.1, 0.0), duration=1.0)
        path = mirror_path(spec, 0.01)
        out = sample_path(path, 2)
        assert np.array_equal(out[0], path.rgb[0])
        assert np.array_equal(out[-1], path.rgb[-1])

    def test_constant_path_repeats_start(self):
        spec = PathSpec(
            kind="bouncing_ball", start=(0.3, 0.6, 0.9), velocity=(0, 0, 0), gravity=0.0,
            duration=1.0,
        )
        out = sample_path(bouncing_ball_path(spec, 0.1), 7)
        assert np.all(out == np.array([0.3, 0.6, 0.9]))

    def test_linear_interpolation_by_hand(self):
        from chromadiff.paths import ColorPath

        path = ColorPath(
            np.array([0.0, 1.0]), np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]),
            PathSpec(kind="mirror", velocity=(1, 0, 0)),
        )
        out = sample_path(path, 5)
        assert np.allclose(out, np.array([0.0, 0.25, 0.5, 0.75, 1.0])[:, None], atol=0)

    def test_rejects_small_n(self):
        spec = PathSpec(kind="mirror", velocity=(0.5, 0, 0), duration=1.0)
        with pytest.raises(ContractViolation):
            sample_path(mirror_path(spec, 0.1), 1)


class TestRgb255:
    def test_examples(self):
        assert rgb255_to_unit(255, 0, 0) == (1.0, 0.0, 0.0)
        assert rgb255_to_unit(0, 0, 0) == (0.0, 0.0, 0.0)
        assert rgb255_to_unit(51, 102, 204) == (0.2, 0.4, 0.8)

    def test_rejects_out_of_range_and_non_integers(self):
        with pytest.raises(ContractViolation):
            rgb255_to_unit(256, 0, 0)
        with pytest.raises(ContractViolation):
            rgb255_to_unit(-1, 0, 0)
        with pytest.raises(ContractViolation):
            rgb255_to_unit(0.5, 0, 0)
        with pytest.raises(ContractViolation):
            rgb255_to_unit(True, 0, 0)


class TestContainmentProperty:
    @settings(max_examples=25, deadline=None)
    @given(
        start=st.tuples(*[st.floats(min_value=0, max_value=1) for _ in range(3)]),
        velocity=st.tuples(*[st.floats(min_value=-3, max_value=3) for _ in range(3)]),
        e=st.floats(min_value=0.05, max_value=1.0),
    )
    def test_ball_paths_stay_in_cube(self, start, velocity, e):
        spec = PathSpec(
            kind="bouncing_ball", start=start, velocity=velocity, restitution=e, duration=1.0
        )
        path = bouncing_ball_path(spec, 0.01)
        assert path.rgb.min() >= 0.0
        assert path.rgb.max() <= 1.0

    @settings(max_examples=25, deadline=None)
    @given(
        start=st.tuples(*[st.floats(min_value=0, max_value=1) for _ in range(3)]),
        seed=st.integers(min_value=0, max_value=2**32),
        std=st.floats(min_value=1e-6, max_value=0.5),
    )
    def test_brownian_paths_stay_in_cube(self, start, seed, std):
        spec = PathSpec(kind="brownian", start=start, step_std=std, steps=300, seed=seed)
        path = brownian_path(spec)
        assert path.rgb.min() >= 0.0
        assert path.rgb.max() <= 1.0


class TestCsvExport:
    def test_round_trip(self, tmp_path):
        spec = PathSpec(kind="brownian", start=(0.5, 0.5, 0.5), step_std=0.03, steps=50, seed=4)
        path = build_path(spec)
        dest = tmp_path / "path.csv"
        write_path_csv(path, dest)
        rows = dest.read_text().splitlines()
        assert rows[0] == "time,r,g,b"
        parsed = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
        assert np.array_equal(parsed[:, 0], path.times)
        assert np.array_equal(parsed[:, 1:], path.rgb)

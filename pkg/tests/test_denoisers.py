import numpy as np
import pytest
from scipy import integrate, stats

from chromadiff import (
    ConfigurationError,
    ContractViolation,
    GaussianOracleDenoiser,
    NoiseSchedule,
    NumericalFault,
    SmallEpsNet,
    TrainConfig,
    gaussian_dataset,
    load_checkpoint,
    save_checkpoint,
    save_loss_history,
    train_denoiser,
)
from chromadiff.data import blob_faces
from chromadiff.epsnet import epsilon_loss, epsilon_loss_gradients, time_features


def half_abar_schedule():
    # one-step schedule whose alpha_bar is exactly 0.5
    betas = np.array([0.5])
    return NoiseSchedule(betas, 1.0 - betas, np.cumprod(1.0 - betas))


class TestGaussianOracle:
    def test_pushed_forward_mean_gives_zero_epsilon(self, sched1000):
        mu0 = np.full((3, 2, 2), 0.4)
        d = GaussianOracleDenoiser(mu0, 0.7, sched1000)
        t = 250
        x_t = np.sqrt(sched1000.alpha_bars[t]) * mu0
        eps = d.predict_epsilon(x_t, t)
        assert np.allclose(eps, 0.0, atol=1e-14)

    def test_point_mass_limit_returns_mean(self, sched1000):
        mu0 = np.full((3, 1, 1), -0.3)
        d = GaussianOracleDenoiser(mu0, 1e-12, sched1000)
        x_t = np.array([[[5.0]], [[-7.0]], [[0.1]]])
        post = d.posterior_mean_x0(x_t, 500)
        assert np.allclose(post, mu0, atol=1e-10)

    def test_matches_quadrature_oracle(self):
        # posterior E[eps | x_t] for N(0,1) data integrated numerically
        s = half_abar_schedule()
        d = GaussianOracleDenoiser(np.float64(0.0), 1.0, s)
        a = np.sqrt(0.5)
        for x in (-2.0, -0.3, 0.7, 1.9):
            def weight(x0):
                return stats.norm.pdf(x, a * x0, np.sqrt(0.5)) * stats.norm.pdf(x0)

            num, _ = integrate.quad(lambda x0: x0 * weight(x0), -12, 12)
            den, _ = integrate.quad(weight, -12, 12)
            eps_expected = (x - a * (num / den)) / np.sqrt(0.5)
            got = d.predict_epsilon(np.array(x), 0)
            assert abs(got - eps_expected) / abs(eps_expected) < 1e-9
            # closed form for this case: E[x0|x] = a*x/(a^2 + 1 - a^2)
            assert np.isclose(d.posterior_mean_x0(np.array(x), 0), a * x)

    def test_affine_in_latent(self, sched1000):
        rng = np.random.Generator(np.random.PCG64(5))
        d = GaussianOracleDenoiser(np.float64(0.2), 0.6, sched1000)
        x = rng.standard_normal((3, 4, 4))
        y = rng.standard_normal((3, 4, 4))
        for t in (0, 17, 500, 999):
            lhs = d.predict_epsilon(x, t) - d.predict_epsilon(y, t)
            rhs = d.epsilon_slope(t) * (x - y)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))

    def test_rejects_bad_inputs(self, sched1000):
        with pytest.raises(ContractViolation):
            GaussianOracleDenoiser(np.float64(0.0), 0.0, sched1000)
        with pytest.raises(ContractViolation):
            GaussianOracleDenoiser(np.float64(0.0), -1.0, sched1000)
        d = GaussianOracleDenoiser(np.float64(0.0), 1.0, sched1000)
        with pytest.raises(ContractViolation):
            d.predict_epsilon(np.zeros(3), 1000)


class TestSmallEpsNet:
    def test_zero_parameters_give_zero_output(self, sched300):
        net = SmallEpsNet((3, 4, 4), hidden=(6,), total_steps=300, seed=0)
        for p in net.parameters():
            p[:] = 0.0
        out = net.predict_epsilon(np.random.randn(3, 4, 4), 100)
        assert np.array_equal(out, np.zeros((3, 4, 4)))

    def test_deterministic_forward(self):
        x = np.random.Generator(np.random.PCG64(3)).standard_normal((3, 4, 4))
        a = SmallEpsNet((3, 4, 4), hidden=(6,), total_steps=100, seed=11)
        b = SmallEpsNet((3, 4, 4), hidden=(6,), total_steps=100, seed=11)
        ya = a.predict_epsilon(x, 40)
        yb = b.predict_epsilon(x, 40)
        assert ya.tobytes() == yb.tobytes()
        assert ya.tobytes() == a.predict_epsilon(x, 40).tobytes()

    def test_output_shape_and_parameter_count(self):
        net = SmallEpsNet((3, 5, 4), hidden=(10, 7), time_width=6, total_steps=50)
        assert net.sizes == [66, 10, 7, 60]
        want = 66 * 10 + 10 + 10 * 7 + 7 + 7 * 60 + 60 + 6 + 1  # layers + time gate
        assert net.n_parameters == want
        out = net.predict_epsilon(np.zeros((3, 5, 4)), 0)
        assert out.shape == (3, 5, 4)

    def test_non_finite_input_names_the_layer(self, sched300):
        net = SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300)
        x = np.full((3, 2, 2), np.nan)
        with pytest.raises(NumericalFault, match="layer 0"):
            net.predict_epsilon(x, 10)

    def test_shape_mismatch_rejected(self):
        net = SmallEpsNet((3, 2, 2), total_steps=10)
        with pytest.raises(ContractViolation):
            net.predict_epsilon(np.zeros((3, 3, 3)), 0)

    def test_time_feature_width_validation(self):
        with pytest.raises(ConfigurationError):
            time_features(0.5, 3)
        with pytest.raises(ConfigurationError):
            SmallEpsNet((3, 2, 2), time_width=0)

    def test_gradients_match_central_finite_differences(self, sched300):
        net = SmallEpsNet((3, 3, 3), hidden=(5,), total_steps=300, seed=4)
        rng = np.random.Generator(np.random.PCG64(17))
        x0 = rng.standard_normal((4, 3, 3, 3))
        t = rng.integers(0, 300, 4)
        eps = rng.standard_normal((4, 3, 3, 3))
        grads = epsilon_loss_gradients(net, x0, t, eps, sched300)
        params = net.parameters()
        h = 1e-5
        checked = 0
        for _ in range(12):
            pi = int(rng.integers(0, len(params)))
            flat_idx = int(rng.integers(0, params[pi].size))
            idx = np.unravel_index(flat_idx, params[pi].shape)
            orig = params[pi][idx]
            params[pi][idx] = orig + h
            up = epsilon_loss(net, x0, t, eps, sched300)
            params[pi][idx] = orig - h
            down = epsilon_loss(net, x0, t, eps, sched300)
            params[pi][idx] = orig
            numeric = (up - down) / (2 * h)
            analytic = grads[pi][idx]
            assert abs(analytic - numeric) / max(abs(numeric), 1e-8) < 1e-4
            checked += 1
        assert checked >= 10


class TestTraining:
    def test_zero_learning_rate_leaves_parameters_unchanged(self, sched300):
        ds = gaussian_dataset(np.zeros((3, 2, 2)), 1.0, seed=0)
        net = SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300, seed=1)
        before = [p.copy() for p in net.parameters()]
        _, hist = train_denoiser(net, ds, sched300, TrainConfig(learning_rate=0.0, steps=200, batch_size=4, seed=2))
        for p, q in zip(net.parameters(), before):
            assert np.array_equal(p, q)
        # with frozen parameters the loss has no trend, only batch noise
        first, last = hist[:50], hist[-50:]
        spread = hist.std(ddof=1) / np.sqrt(50)
        assert abs(last.mean() - first.mean()) <= 4 * spread * np.sqrt(2)

    def test_single_image_loss_decreases(self, sched300):
        ds = blob_faces(8, 8, seed=3, jitter=0.0)  # zero jitter: one repeated image
        net = SmallEpsNet((3, 8, 8), hidden=(16,), total_steps=300, seed=5)
        _, hist = train_denoiser(net, ds, sched300, TrainConfig(steps=500, batch_size=8, seed=6))
        assert hist[-50:].mean() < hist[:50].mean()

    def test_trained_net_approaches_oracle(self, sched300):
        mu0 = np.zeros((3, 1, 1))
        ds = gaussian_dataset(mu0, 1.0, seed=9)
        oracle = GaussianOracleDenoiser(mu0, 1.0, sched300)
        net = SmallEpsNet((3, 1, 1), hidden=(8,), total_steps=300, seed=2)

        rng = np.random.Generator(np.random.PCG64(33))
        x0 = np.stack([ds.sample(100_000 + i) for i in range(64)])
        t = rng.integers(0, 300, 64)
        eps = rng.standard_normal(x0.shape)
        coef_s = np.sqrt(sched300.alpha_bars[t]).reshape(-1, 1, 1, 1)
        coef_n = np.sqrt(1 - sched300.alpha_bars[t]).reshape(-1, 1, 1, 1)
        x_t = coef_s * x0 + coef_n * eps
        oracle_pred = np.stack([oracle.predict_epsilon(x_t[i], int(t[i])) for i in range(64)])

        def deviation():
            return float(np.mean((net.predict_batch(x_t, t) - oracle_pred) ** 2))

        train_denoiser(net, ds, sched300, TrainConfig(steps=150, batch_size=16, seed=4))
        early = deviation()
        train_denoiser(net, ds, sched300, TrainConfig(steps=1200, batch_size=16, seed=5))
        late = deviation()
        assert late < early

        # statistical optimality: the oracle's epsilon MSE is the floor
        net_mse = float(np.mean((net.predict_batch(x_t, t) - eps) ** 2))
        oracle_mse = float(np.mean((oracle_pred - eps) ** 2))
        assert oracle_mse <= net_mse + 3 * np.sqrt(2.0 / eps.size)

    def test_loss_history_bit_reproducible(self, sched300):
        ds = gaussian_dataset(np.zeros((3, 2, 2)), 1.0, seed=1)
        cfg = TrainConfig(steps=120, batch_size=4, seed=77)
        _, h1 = train_denoiser(SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300, seed=8), ds, sched300, cfg)
        _, h2 = train_denoiser(SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300, seed=8), ds, sched300, cfg)
        assert h1.tobytes() == h2.tobytes()

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_divergence_reports_step(self, sched300):
        ds = gaussian_dataset(np.zeros((3, 2, 2)), 1.0, seed=1)
        net = SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300, seed=8)
        cfg = TrainConfig(learning_rate=1e200, optimizer="sgd", steps=50, batch_size=4, seed=0)
        with pytest.raises(NumericalFault):
            train_denoiser(net, ds, sched300, cfg)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(learning_rate=-1.0)
        with pytest.raises(ConfigurationError):
            TrainConfig(batch_size=0)
        with pytest.raises(ConfigurationError):
            TrainConfig(steps=0)
        with pytest.raises(ConfigurationError):
            TrainConfig(optimizer="momentum")

    def test_sgd_optimizer_also_learns(self, sched300):
        ds = blob_faces(8, 8, seed=3, jitter=0.0)
        net = SmallEpsNet((3, 8, 8), hidden=(16,), total_steps=300, seed=5)
        cfg = TrainConfig(learning_rate=0.05, optimizer="sgd", steps=500, batch_size=8, seed=6)
        _, hist = train_denoiser(net, ds, sched300, cfg)
        assert hist[-50:].mean() < hist[:50].mean()


class TestCheckpointAndCsv:
    def test_round_trip_exact(self, tmp_path, sched300):
        net = SmallEpsNet((3, 4, 4), hidden=(7, 5), time_width=6, total_steps=300, seed=13)
        dest = tmp_path / "model.ckpt"
        save_checkpoint(net, dest)
        loaded = load_checkpoint(dest)
        assert loaded.sizes == net.sizes
        assert loaded.data_shape == net.data_shape
        assert loaded.total_steps == net.total_steps
        assert loaded.time_width == net.time_width
        for a, b in zip(net.parameters(), loaded.parameters()):
            assert a.tobytes() == b.tobytes()
        x = np.random.Generator(np.random.PCG64(1)).standard_normal((3, 4, 4))
        assert net.predict_epsilon(x, 12).tobytes() == loaded.predict_epsilon(x, 12).tobytes()

    def test_bad_magic_rejected(self, tmp_path):
        dest = tmp_path / "junk.ckpt"
        dest.write_bytes(b"NOTAMODEL" + b"\x00" * 64)
        with pytest.raises(ConfigurationError):
            load_checkpoint(dest)

    def test_truncated_file_rejected(self, tmp_path, sched300):
        net = SmallEpsNet((3, 2, 2), hidden=(4,), total_steps=300)
        dest = tmp_path / "model.ckpt"
        save_checkpoint(net, dest)
        data = dest.read_bytes()
        dest.write_bytes(data + b"\x00")
        with pytest.raises(ConfigurationError):
            load_checkpoint(dest)

    def test_loss_csv_round_trips_exactly(self, tmp_path):
        hist = np.array([1.5, 0.1234567890123456789, 3e-17])
        dest = tmp_path / "loss.csv"
        save_loss_history(hist, dest)
        lines = dest.read_text().splitlines()
        assert lines[0] == "step,loss"
        parsed = [float(line.split(",")[1]) for line in lines[1:]]
        assert parsed == hist.tolist()

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eh2marg import (
    EulerAngles,
    ImuSample,
    NoiseParams,
    WorldConstants,
    dcm_body_from_inertial,
    measurement_noise_cov,
    process_noise_cov,
    simulate_accel,
    simulate_gyro,
    simulate_imu_stream,
    simulate_mag,
    step_bias,
)

SILENT = NoiseParams(0.0, 0.0, 0.0, 0.0)


class TestNoiseParams:
    def test_defaults(self):
        p = NoiseParams()
        assert (p.n_w, p.n_b, p.n_a, p.n_m) == (0.005, 1e-4, 0.02, 0.005)

    @pytest.mark.parametrize("field", ["n_w", "n_b", "n_a", "n_m"])
    def test_negative_rejected(self, field):
        with pytest.raises(ValueError):
            NoiseParams(**{field: -0.1})


class TestWorldConstants:
    def test_defaults(self):
        w = WorldConstants()
        assert_allclose(w.g_inertial, [0.0, 0.0, 9.81])
        assert_allclose(w.h_inertial, [0.48, 0.0, 0.58])

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            WorldConstants(g_inertial=[0.0, 0.0, 0.0])

    def test_parallel_field_rejected(self):
        with pytest.raises(ValueError):
            WorldConstants(h_inertial=[0.0, 0.0, -3.0])


def test_simulate_gyro_noise_free():
    rng = np.random.default_rng(0)
    assert_allclose(simulate_gyro([0.3, 0.0, -0.1], np.zeros(3), SILENT, rng), [0.3, 0.0, -0.1])
    assert_allclose(simulate_gyro(np.zeros(3), [0.01, 0.0, 0.0], SILENT, rng), [0.01, 0.0, 0.0])


def test_simulate_gyro_sample_mean():
    p = NoiseParams(n_w=0.1)
    rng = np.random.default_rng(42)
    n = 100_000
    total = np.zeros(3)
    for _ in range(n):
        total += simulate_gyro([0.2, 0.0, 0.0], [0.0, 0.01, 0.0], p, rng)
    assert np.all(np.abs(total / n - [0.2, 0.01, 0.0]) < 3.0 * p.n_w / np.sqrt(n))


def test_step_bias_scaling_and_precondition():
    rng = np.random.default_rng(3)
    p = NoiseParams(n_b=0.01)
    assert_allclose(step_bias([0.1, 0.0, 0.0], SILENT, 0.01, rng), [0.1, 0.0, 0.0])
    with pytest.raises(ValueError):
        step_bias(np.zeros(3), p, 0.0, rng)
    # variance after N steps ~ N dt n_b^2
    n_paths, n_steps, dt = 10_000, 10, 0.01
    rng = np.random.default_rng(7)
    finals = np.zeros((n_paths, 3))
    for i in range(n_paths):
        b = np.zeros(3)
        for _ in range(n_steps):
            b = step_bias(b, p, dt, rng)
        finals[i] = b
    target = n_steps * dt * p.n_b**2
    assert_allclose(finals.var(axis=0), target, rtol=0.05)


@pytest.mark.parametrize(
    "e, expected",
    [
        (EulerAngles.zero(), [0.0, 0.0, 9.81]),
        (EulerAngles(np.pi / 2.0, 0.0, 0.0), [0.0, 9.81, 0.0]),
    ],
)
def test_simulate_accel_noise_free(e, expected):
    rng = np.random.default_rng(0)
    assert_allclose(simulate_accel(e, WorldConstants(), SILENT, rng), expected, atol=1e-12)


def test_simulate_mag_quarter_yaw():
    w = WorldConstants(h_inertial=[1.0, 0.0, 0.5])
    rng = np.random.default_rng(0)
    m = simulate_mag(EulerAngles(0.0, 0.0, np.pi / 2.0), w, SILENT, rng)
    assert_allclose(m, [0.0, -1.0, 0.5], atol=1e-12)


def test_norm_preservation_over_random_attitudes():
    rng = np.random.default_rng(9)
    w = WorldConstants()
    for _ in range(50):
        e = EulerAngles(
            rng.uniform(-np.pi, np.pi), rng.uniform(-1.4, 1.4), rng.uniform(-np.pi, np.pi)
        )
        assert np.linalg.norm(simulate_accel(e, w, SILENT, rng)) == pytest.approx(
            np.linalg.norm(w.g_inertial), abs=1e-10
        )
        assert np.linalg.norm(simulate_mag(e, w, SILENT, rng)) == pytest.approx(
            np.linalg.norm(w.h_inertial), abs=1e-10
        )


def test_noise_covariances():
    p = NoiseParams(n_w=0.1, n_b=0.01, n_a=2.0, n_m=3.0)
    assert_allclose(process_noise_cov(p), np.diag([0.01] * 3 + [1e-4] * 3))
    assert_allclose(measurement_noise_cov(p), np.diag([4.0] * 3 + [9.0] * 3))
    assert_allclose(process_noise_cov(NoiseParams(1.0, 1.0, 0.0, 0.0)), np.eye(6))


def test_imu_sample_stacks_measurement():
    s = ImuSample(t=0.0, omega_m=[1, 2, 3], a_m=[4, 5, 6], m_m=[7, 8, 9])
    assert_allclose(s.stacked_measurement(), [4, 5, 6, 7, 8, 9])


class TestImuStream:
    def make_truth(self, n=201, dt=0.01):
        t = np.arange(n) * dt
        angles = 0.3 * np.sin(np.column_stack([t, 0.7 * t, 1.3 * t]))
        rates = np.full((n, 3), 0.1)
        return t, angles, rates

    def test_zero_noise_stream_is_deterministic_truth(self):
        t, angles, rates = self.make_truth()
        w = WorldConstants()
        stream = simulate_imu_stream(t, angles, rates, w, SILENT, np.random.default_rng(0))
        assert len(stream) == len(t)
        assert_allclose(stream.omega_m, rates)
        assert_allclose(stream.bias_true, 0.0)
        for k in (0, 57, len(t) - 1):
            R = dcm_body_from_inertial(EulerAngles.from_array(angles[k]))
            assert_allclose(stream.a_m[k], R @ w.g_inertial, atol=1e-12)
            assert_allclose(stream.m_m[k], R @ w.h_inertial, atol=1e-12)

    def test_same_seed_bit_identical(self):
        t, angles, rates = self.make_truth()
        w, p = WorldConstants(), NoiseParams()
        s1 = simulate_imu_stream(t, angles, rates, w, p, np.random.default_rng((42, 0)))
        s2 = simulate_imu_stream(t, angles, rates, w, p, np.random.default_rng((42, 0)))
        for field in ("omega_m", "a_m", "m_m", "bias_true"):
            assert np.array_equal(getattr(s1, field), getattr(s2, field))

    def test_different_trials_differ(self):
        t, angles, rates = self.make_truth()
        w, p = WorldConstants(), NoiseParams()
        s1 = simulate_imu_stream(t, angles, rates, w, p, np.random.default_rng((42, 0)))
        s2 = simulate_imu_stream(t, angles, rates, w, p, np.random.default_rng((42, 1)))
        assert not np.array_equal(s1.omega_m, s2.omega_m)

    def test_bias_walk_starts_at_zero_and_accumulates(self):
        t, angles, rates = self.make_truth()
        p = NoiseParams(n_w=0.0, n_b=0.02, n_a=0.0, n_m=0.0)
        stream = simulate_imu_stream(t, angles, rates, WorldConstants(), p, np.random.default_rng(5))
        assert_allclose(stream.bias_true[0], 0.0)
        increments = np.diff(stream.bias_true, axis=0)
        dt = t[1] - t[0]
        assert increments.std() == pytest.approx(np.sqrt(dt) * p.n_b, rel=0.2)
        assert_allclose(stream.omega_m, rates + stream.bias_true)

    def test_sample_accessor_matches_arrays(self):
        t, angles, rates = self.make_truth()
        stream = simulate_imu_stream(
            t, angles, rates, WorldConstants(), NoiseParams(), np.random.default_rng(2)
        )
        s = stream.sample(3)
        assert s.t == t[3]
        assert_allclose(s.omega_m, stream.omega_m[3])
        assert_allclose(s.stacked_measurement(), np.r_[stream.a_m[3], stream.m_m[3]])

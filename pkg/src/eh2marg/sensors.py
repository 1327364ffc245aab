"""Forward simulation of MARG sensors: gyro, accelerometer, magnetometer.

Measurements are truth plus zero-mean Gaussian noise; the gyro additionally
carries a bias that evolves as a random walk.  All randomness flows through
a caller-owned :class:`numpy.random.Generator` — the module never touches
global RNG state.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .kinematics import EulerAngles, dcm_batch, dcm_body_from_inertial

__all__ = [
    "ImuSample",
    "ImuStream",
    "NoiseParams",
    "WorldConstants",
    "measurement_noise_cov",
    "process_noise_cov",
    "simulate_accel",
    "simulate_gyro",
    "simulate_imu_stream",
    "simulate_mag",
    "step_bias",
]


def _vector3(values: ArrayLike, name: str) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr!r}")
    return arr


@dataclass(frozen=True)
class NoiseParams:
    """Per-axis sensor noise standard deviations.

    Defaults are MPU-9250-like values; override via configuration.
    """

    n_w: float = 0.005  # gyro white noise, rad/s
    n_b: float = 1e-4  # bias random walk, rad/s^2
    n_a: float = 0.02  # accelerometer noise, m/s^2
    n_m: float = 0.005  # magnetometer noise, normalized units

    def __post_init__(self) -> None:
        for name in ("n_w", "n_b", "n_a", "n_m"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class WorldConstants:
    """Inertial-frame reference vectors sensed by the accelerometer and magnetometer."""

    g_inertial: NDArray[np.float64] = field(
        default_factory=lambda: np.array([0.0, 0.0, 9.81])
    )
    h_inertial: NDArray[np.float64] = field(
        default_factory=lambda: np.array([0.48, 0.0, 0.58])
    )

    def __post_init__(self) -> None:
        g = _vector3(self.g_inertial, "g_inertial")
        h = _vector3(self.h_inertial, "h_inertial")
        object.__setattr__(self, "g_inertial", g)
        object.__setattr__(self, "h_inertial", h)
        if np.linalg.norm(g) == 0.0:
            raise ValueError("g_inertial must be nonzero")
        if np.linalg.norm(h) == 0.0:
            raise ValueError("h_inertial must be nonzero")
        cross = np.linalg.norm(np.cross(g, h))
        if cross <= 1e-10 * np.linalg.norm(g) * np.linalg.norm(h):
            raise ValueError("h_inertial must not be parallel to g_inertial")


@dataclass(frozen=True)
class ImuSample:
    """One timestamped gyro/accel/mag measurement triple."""

    t: float
    omega_m: NDArray[np.float64]
    a_m: NDArray[np.float64]
    m_m: NDArray[np.float64]

    def __post_init__(self) -> None:
        t = float(self.t)
        if not np.isfinite(t):
            raise ValueError(f"t must be finite, got {t!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "omega_m", _vector3(self.omega_m, "omega_m"))
        object.__setattr__(self, "a_m", _vector3(self.a_m, "a_m"))
        object.__setattr__(self, "m_m", _vector3(self.m_m, "m_m"))

    def stacked_measurement(self) -> NDArray[np.float64]:
        """Accel and mag stacked into the 6-vector consumed by the filters."""
        return np.concatenate([self.a_m, self.m_m])


def simulate_gyro(
    omega_true: ArrayLike,
    bias: ArrayLike,
    p: NoiseParams,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Gyro measurement: true body rate plus bias plus white noise."""
    omega = _vector3(omega_true, "omega_true")
    b = _vector3(bias, "bias")
    return omega + b + p.n_w * rng.standard_normal(3)


def step_bias(
    bias: ArrayLike, p: NoiseParams, dt: float, rng: np.random.Generator
) -> NDArray[np.float64]:
    """Advance the bias random walk one step (Euler-Maruyama, sqrt(dt) scaling)."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    b = _vector3(bias, "bias")
    return b + np.sqrt(dt) * p.n_b * rng.standard_normal(3)


def simulate_accel(
    e: EulerAngles,
    w: WorldConstants,
    p: NoiseParams,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Accelerometer measurement: gravity rotated into the body frame, plus noise."""
    return dcm_body_from_inertial(e) @ w.g_inertial + p.n_a * rng.standard_normal(3)


def simulate_mag(
    e: EulerAngles,
    w: WorldConstants,
    p: NoiseParams,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Magnetometer measurement: Earth field rotated into the body frame, plus noise."""
    return dcm_body_from_inertial(e) @ w.h_inertial + p.n_m * rng.standard_normal(3)


def process_noise_cov(p: NoiseParams) -> NDArray[np.float64]:
    """Process noise covariance diag(n_w^2 I3, n_b^2 I3)."""
    return np.diag([p.n_w**2] * 3 + [p.n_b**2] * 3)


def measurement_noise_cov(p: NoiseParams) -> NDArray[np.float64]:
    """Measurement noise covariance diag(n_a^2 I3, n_m^2 I3)."""
    return np.diag([p.n_a**2] * 3 + [p.n_m**2] * 3)


@dataclass(frozen=True)
class ImuStream:
    """A dense IMU sample stream as column arrays (one row per sample)."""

    t: NDArray[np.float64]
    omega_m: NDArray[np.float64]
    a_m: NDArray[np.float64]
    m_m: NDArray[np.float64]
    bias_true: NDArray[np.float64]

    def __len__(self) -> int:
        return self.t.shape[0]

    def sample(self, k: int) -> ImuSample:
        return ImuSample(
            t=float(self.t[k]),
            omega_m=self.omega_m[k],
            a_m=self.a_m[k],
            m_m=self.m_m[k],
        )


def simulate_imu_stream(
    t: NDArray[np.float64],
    angles: NDArray[np.float64],
    body_rates: NDArray[np.float64],
    w: WorldConstants,
    p: NoiseParams,
    rng: np.random.Generator,
) -> ImuStream:
    """Simulate a full sensor stream along a true trajectory.

    Noise is drawn in four contiguous blocks (gyro white, bias-walk
    increments, accel white, mag white) so streams are reproducible for a
    given generator state.  The gyro sample at index k carries the bias
    accumulated over the preceding k steps (zero at the first sample).

    Parameters
    ----------
    t : numpy.ndarray, shape (n,)
        Sample times, uniformly spaced.
    angles : numpy.ndarray, shape (n, 3)
        True Euler angles per sample.
    body_rates : numpy.ndarray, shape (n, 3)
        True body angular velocity per sample.
    w, p : WorldConstants, NoiseParams
    rng : numpy.random.Generator
    """
    t = np.asarray(t, dtype=np.float64)
    angles = np.asarray(angles, dtype=np.float64)
    body_rates = np.asarray(body_rates, dtype=np.float64)
    n = t.shape[0]
    if n < 2:
        raise ValueError("stream needs at least two samples")
    dt = float(t[1] - t[0])

    gyro_white = rng.standard_normal((n, 3))
    walk = rng.standard_normal((n, 3))
    accel_white = rng.standard_normal((n, 3))
    mag_white = rng.standard_normal((n, 3))

    bias = np.zeros((n, 3))
    bias[1:] = np.sqrt(dt) * p.n_b * np.cumsum(walk[:-1], axis=0)

    omega_m = body_rates + bias + p.n_w * gyro_white
    R = dcm_batch(angles)
    a_m = R @ w.g_inertial + p.n_a * accel_white
    m_m = R @ w.h_inertial + p.n_m * mag_white
    return ImuStream(t=t, omega_m=omega_m, a_m=a_m, m_m=m_m, bias_true=bias)

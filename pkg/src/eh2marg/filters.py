"""The extended-H2 filter and the discrete-time EKF baseline.

The extended-H2 filter propagates the full nonlinear models with a fixed,
precomputed gain: ``xhat_dot = f(xhat, u, 0) + L0 (h(xhat, 0) - y)``.  The
EKF baseline re-linearizes per step and propagates a covariance.  Both
filters consume one :class:`~eh2marg.sensors.ImuSample` per step: the
sample's gyro drives the propagation over dt and the same sample's
accel/mag form the innovation — for the extended-H2 filter the measurement
is held constant over the RK4 step, for the EKF it is applied to the
predicted state.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .dynamics import EulerState
from .errors import DegenerateSample, GimbalLockError, InnovationCovSingular
from .kinematics import EPS_GIMBAL, EulerAngles, dcm_body_from_inertial, wrap_angle
from .sensors import ImuSample, NoiseParams, WorldConstants

__all__ = [
    "DEFAULT_P0",
    "EH2FilterState",
    "EKFState",
    "eh2_step",
    "ekf_step",
    "initialize_from_first_sample",
]

#: Default initial EKF covariance: 0.1 rad attitude std, 0.01 rad/s bias std.
DEFAULT_P0 = np.diag([0.1**2] * 3 + [0.01**2] * 3)


@dataclass(frozen=True)
class EH2FilterState:
    """Extended-H2 filter state: the estimate plus the fixed gain L0.

    L0 should come from a :class:`~eh2marg.synthesis.GainCertificate` with
    ``lmi_feasible`` true (or from a gain file exported from one).
    """

    xhat: EulerState
    L0: NDArray[np.float64]

    def __post_init__(self) -> None:
        L0 = np.asarray(self.L0, dtype=np.float64)
        if L0.shape != (6, 6) or not np.all(np.isfinite(L0)):
            raise ValueError("L0 must be a finite 6x6 matrix")
        object.__setattr__(self, "L0", L0)


@dataclass(frozen=True)
class EKFState:
    """EKF state: the estimate plus its covariance (symmetrized every step)."""

    xhat: EulerState
    P: NDArray[np.float64] = field(default_factory=lambda: DEFAULT_P0.copy())

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=np.float64)
        if P.shape != (6, 6) or not np.all(np.isfinite(P)):
            raise ValueError("P must be a finite 6x6 matrix")
        object.__setattr__(self, "P", P)


def eh2_step(
    s: EH2FilterState, sample: ImuSample, w: WorldConstants, dt: float
) -> EH2FilterState:
    """Advance the extended-H2 filter one RK4 step.

    Raises
    ------
    GimbalLockError
        If the estimate enters the gimbal guard band during the step.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    x_out = np.empty(6)
    status = _kernels.eh2_step_kernel(
        s.xhat.as_vector(),
        sample.omega_m,
        sample.stacked_measurement(),
        s.L0,
        w.g_inertial,
        w.h_inertial,
        dt,
        EPS_GIMBAL,
        x_out,
    )
    if status == 1:
        raise GimbalLockError("estimate entered the gimbal guard band")
    if status != 0:
        raise ArithmeticError("filter state became non-finite")
    return EH2FilterState(xhat=EulerState.from_vector(x_out), L0=s.L0)


def ekf_step(
    s: EKFState,
    sample: ImuSample,
    w: WorldConstants,
    q: NoiseParams,
    dt: float,
) -> EKFState:
    """Advance the EKF one predict+update cycle.

    Predict: RK4 mean propagation with the sample's gyro, first-order
    covariance discretization with F and Qd re-linearized at the current
    estimate.  Update: Kalman gain from the innovation covariance, H
    re-linearized at the prediction, covariance symmetrized.

    Raises
    ------
    GimbalLockError
        If the estimate enters the gimbal guard band.
    InnovationCovSingular
        If H P- H^T + R is numerically singular.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    x_out = np.empty(6)
    P_out = np.empty((6, 6))
    try:
        status = _kernels.ekf_step_kernel(
            s.xhat.as_vector(),
            s.P,
            sample.omega_m,
            sample.stacked_measurement(),
            q.n_w,
            q.n_b,
            q.n_a,
            q.n_m,
            w.g_inertial,
            w.h_inertial,
            dt,
            EPS_GIMBAL,
            x_out,
            P_out,
        )
    except np.linalg.LinAlgError as exc:
        raise InnovationCovSingular(f"innovation covariance solve failed: {exc}") from exc
    if status == 1:
        raise GimbalLockError("estimate entered the gimbal guard band")
    if status != 0:
        raise InnovationCovSingular("update produced a non-finite state")
    return EKFState(xhat=EulerState.from_vector(x_out), P=P_out)


def initialize_from_first_sample(sample: ImuSample, w: WorldConstants) -> EulerState:
    """Static attitude initialization from one accel/mag sample; bias starts at 0.

    Roll and pitch come from the accelerometer (gravity direction), yaw from
    the tilt-compensated magnetometer.  The construction assumes gravity
    points along the inertial z axis, as in the default world constants.

    Raises
    ------
    DegenerateSample
        If the accelerometer magnitude is below half of |g| (free-fall-like,
        attitude unobservable from the accelerometer).
    """
    g_norm = float(np.linalg.norm(w.g_inertial))
    a = sample.a_m
    if np.linalg.norm(a) < 0.5 * g_norm:
        raise DegenerateSample(
            f"|a_m| = {np.linalg.norm(a):.3g} < 0.5 |g| = {0.5 * g_norm:.3g}"
        )
    phi = float(np.arctan2(a[1], a[2]))
    theta = float(-np.arcsin(np.clip(a[0] / g_norm, -1.0, 1.0)))
    # Saturate just inside the gimbal guard so a vertical sample still yields
    # a usable (if degraded) initial state instead of an invalid one.
    theta_max = np.pi / 2.0 - EPS_GIMBAL
    theta = float(np.clip(theta, -theta_max, theta_max))
    tilt = dcm_body_from_inertial(EulerAngles(wrap_angle(phi), theta, 0.0))
    m_level = tilt.T @ sample.m_m
    h = w.h_inertial
    psi = float(np.arctan2(h[1], h[0]) - np.arctan2(m_level[1], m_level[0]))
    return EulerState(
        attitude=EulerAngles(wrap_angle(phi), theta, wrap_angle(psi)),
        bias=np.zeros(3),
    )

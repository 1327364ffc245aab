"""Nonlinear process and measurement models of the attitude/bias state.

State ``x = [Phi; b]`` stacks the 3-2-1 Euler angles and the gyro bias.  The
noise-free process model is ``Phi_dot = T(Phi) (omega_m - b)``, ``b_dot = 0``;
the measurement model maps gravity and the Earth magnetic vector into the
body frame.  Integration is fixed-step classical RK4 with the gyro sample
held constant across the step.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels
from .errors import Eh2MargError, GimbalLockError
from .kinematics import EPS_GIMBAL, EulerAngles, dcm_body_from_inertial, euler_rates
from .sensors import WorldConstants, _vector3

__all__ = ["EulerState", "Measurement6", "integrate_step", "measurement", "state_derivative"]


@dataclass(frozen=True)
class EulerState:
    """Filter state: attitude plus gyro bias."""

    attitude: EulerAngles = field(default_factory=EulerAngles.zero)
    bias: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "bias", _vector3(self.bias, "bias"))

    @classmethod
    def from_vector(cls, x: ArrayLike) -> "EulerState":
        arr = np.asarray(x, dtype=np.float64).reshape(6)
        return cls(attitude=EulerAngles.from_array(arr[:3]), bias=arr[3:])

    def as_vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.attitude.as_array(), self.bias])


@dataclass(frozen=True)
class Measurement6:
    """Stacked accelerometer/magnetometer output y in R^6."""

    accel: NDArray[np.float64]
    mag: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "accel", _vector3(self.accel, "accel"))
        object.__setattr__(self, "mag", _vector3(self.mag, "mag"))

    def stacked(self) -> NDArray[np.float64]:
        return np.concatenate([self.accel, self.mag])


def state_derivative(x: EulerState, omega_m: ArrayLike) -> NDArray[np.float64]:
    """Noise-free state derivative, stacked as ``[Phi_dot; b_dot]`` with b_dot = 0.

    Raises
    ------
    GimbalLockError
        Propagated from the rate transformation.
    """
    omega = _vector3(omega_m, "omega_m")
    phi_dot = euler_rates(x.attitude, omega - x.bias)
    return np.concatenate([phi_dot, np.zeros(3)])


def measurement(x: EulerState, w: WorldConstants) -> Measurement6:
    """Noise-free measurement h(x): gravity and magnetic vector in the body frame.

    The gyro bias does not enter h.
    """
    R = dcm_body_from_inertial(x.attitude)
    return Measurement6(accel=R @ w.g_inertial, mag=R @ w.h_inertial)


def integrate_step(x: EulerState, omega_m: ArrayLike, dt: float) -> EulerState:
    """One classical RK4 step of the process model; attitude re-wrapped after.

    Parameters
    ----------
    x : EulerState
        State at the start of the step.
    omega_m : array_like, shape (3,)
        Gyro sample, held constant over the step (zero-order hold).
    dt : float
        Step length in seconds, > 0.

    Raises
    ------
    GimbalLockError
        If any internal RK4 stage enters the gimbal guard band.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    omega = _vector3(omega_m, "omega_m")
    x_out = np.empty(6)
    status = _kernels.integrate_step_kernel(x.as_vector(), omega, dt, EPS_GIMBAL, x_out)
    if status == 1:
        raise GimbalLockError("RK4 stage entered the gimbal guard band")
    if status != 0:
        raise Eh2MargError("integration produced a non-finite state")
    return EulerState.from_vector(x_out)

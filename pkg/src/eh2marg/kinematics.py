"""3-2-1 Euler-angle attitude kinematics.

Provides the Euler-rate transformation matrix ``T`` mapping body angular
rates to Euler-angle rates, the body-from-inertial direction cosine matrix
of the 3-2-1 (yaw-pitch-roll) sequence, and angle-wrapping utilities.  The
rate transformation is singular at pitch +/- 90 degrees ("gimbal lock"); all
operations that evaluate it fail loudly inside a guard band of
``EPS_GIMBAL`` radians around the singularity instead of returning huge
``tan``/``sec`` values.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import GimbalLockError

__all__ = [
    "EPS_GIMBAL",
    "EulerAngles",
    "angle_error",
    "dcm_batch",
    "dcm_body_from_inertial",
    "euler_rates",
    "body_rates_batch",
    "kinematic_matrix",
    "kinematic_matrix_inverse",
    "wrap_angle",
]

#: Half-width (rad) of the exclusion band around theta = +/- pi/2.
EPS_GIMBAL = 1e-6


def wrap_angle(angle: ArrayLike) -> NDArray[np.float64] | float:
    """Wrap angle(s) to the interval (-pi, pi].

    Parameters
    ----------
    angle : array_like
        Angle or array of angles in radians.

    Returns
    -------
    numpy.ndarray or float
        Wrapped angle(s), same shape as the input.
    """
    wrapped = np.pi - (np.pi - np.asarray(angle, dtype=np.float64)) % (2.0 * np.pi)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class EulerAngles:
    """Attitude as 3-2-1 Euler angles (roll, pitch, yaw), in radians.

    Attributes
    ----------
    phi : float
        Roll angle, wrapped to (-pi, pi].
    theta : float
        Pitch angle, strictly inside (-pi/2, pi/2).
    psi : float
        Yaw angle, wrapped to (-pi, pi].
    """

    phi: float
    theta: float
    psi: float

    def __post_init__(self) -> None:
        for name in ("phi", "theta", "psi"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        for name in ("phi", "psi"):
            value = getattr(self, name)
            if not (-np.pi < value <= np.pi):
                raise ValueError(
                    f"{name} must lie in (-pi, pi], got {value!r}; use wrap_angle"
                )
        if not (-np.pi / 2.0 < self.theta < np.pi / 2.0):
            raise ValueError(
                f"theta must lie strictly inside (-pi/2, pi/2), got {self.theta!r}"
            )

    @classmethod
    def zero(cls) -> "EulerAngles":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "EulerAngles":
        arr = np.asarray(values, dtype=np.float64).reshape(3)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.phi, self.theta, self.psi])


def _check_gimbal(theta: float) -> None:
    if abs(wrap_angle(theta)) >= np.pi / 2.0 - EPS_GIMBAL:
        raise GimbalLockError(
            f"pitch {theta!r} rad is within {EPS_GIMBAL} rad of the +/- pi/2 singularity"
        )


def kinematic_matrix(e: EulerAngles) -> NDArray[np.float64]:
    """Rate transformation matrix ``T`` with Euler rates = T @ body rates.

    Parameters
    ----------
    e : EulerAngles
        Current attitude.

    Returns
    -------
    numpy.ndarray, shape (3, 3)

    Raises
    ------
    GimbalLockError
        If ``|e.theta|`` is within ``EPS_GIMBAL`` of pi/2.
    """
    _check_gimbal(e.theta)
    sp, cp = np.sin(e.phi), np.cos(e.phi)
    tt = np.tan(e.theta)
    sec = 1.0 / np.cos(e.theta)
    return np.array(
        [
            [1.0, tt * sp, tt * cp],
            [0.0, cp, -sp],
            [0.0, sec * sp, sec * cp],
        ]
    )


def kinematic_matrix_inverse(e: EulerAngles) -> NDArray[np.float64]:
    """Inverse of :func:`kinematic_matrix`, mapping Euler rates to body rates.

    Unlike ``T`` itself this map is defined for all attitudes; no gimbal
    guard is needed.
    """
    sp, cp = np.sin(e.phi), np.cos(e.phi)
    st, ct = np.sin(e.theta), np.cos(e.theta)
    return np.array(
        [
            [1.0, 0.0, -st],
            [0.0, cp, sp * ct],
            [0.0, -sp, cp * ct],
        ]
    )


def dcm_body_from_inertial(e: EulerAngles) -> NDArray[np.float64]:
    """Direction cosine matrix of the 3-2-1 sequence, R = R1(phi) R2(theta) R3(psi).

    Maps inertial-frame vectors into the body frame: ``v_body = R @ v_inertial``.

    Parameters
    ----------
    e : EulerAngles
        Attitude of the body frame.

    Returns
    -------
    numpy.ndarray, shape (3, 3)
        Orthonormal rotation matrix with determinant +1.
    """
    sp, cp = np.sin(e.phi), np.cos(e.phi)
    st, ct = np.sin(e.theta), np.cos(e.theta)
    ss, cs = np.sin(e.psi), np.cos(e.psi)
    return np.array(
        [
            [ct * cs, ct * ss, -st],
            [sp * st * cs - cp * ss, sp * st * ss + cp * cs, sp * ct],
            [cp * st * cs + sp * ss, cp * st * ss - sp * cs, cp * ct],
        ]
    )


def euler_rates(e: EulerAngles, omega_body: ArrayLike) -> NDArray[np.float64]:
    """Euler-angle rates for the given body angular velocity.

    Raises
    ------
    GimbalLockError
        Propagated from :func:`kinematic_matrix`.
    """
    omega = np.asarray(omega_body, dtype=np.float64).reshape(3)
    return kinematic_matrix(e) @ omega


def angle_error(a: EulerAngles, b: EulerAngles) -> NDArray[np.float64]:
    """Component-wise wrapped difference a - b, each component in (-pi, pi]."""
    return wrap_angle(a.as_array() - b.as_array())


def dcm_batch(angles: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vectorized :func:`dcm_body_from_inertial` for an (n, 3) angle array."""
    angles = np.asarray(angles, dtype=np.float64)
    sp, cp = np.sin(angles[:, 0]), np.cos(angles[:, 0])
    st, ct = np.sin(angles[:, 1]), np.cos(angles[:, 1])
    ss, cs = np.sin(angles[:, 2]), np.cos(angles[:, 2])
    out = np.empty((angles.shape[0], 3, 3))
    out[:, 0, 0] = ct * cs
    out[:, 0, 1] = ct * ss
    out[:, 0, 2] = -st
    out[:, 1, 0] = sp * st * cs - cp * ss
    out[:, 1, 1] = sp * st * ss + cp * cs
    out[:, 1, 2] = sp * ct
    out[:, 2, 0] = cp * st * cs + sp * ss
    out[:, 2, 1] = cp * st * ss - sp * cs
    out[:, 2, 2] = cp * ct
    return out


def body_rates_batch(
    angles: NDArray[np.float64], rates: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Vectorized inverse rate map: body angular velocity from Euler-angle rates.

    Parameters
    ----------
    angles : numpy.ndarray, shape (n, 3)
        Euler angle time series.
    rates : numpy.ndarray, shape (n, 3)
        Euler angle rate time series.
    """
    angles = np.asarray(angles, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    sp, cp = np.sin(angles[:, 0]), np.cos(angles[:, 0])
    st, ct = np.sin(angles[:, 1]), np.cos(angles[:, 1])
    out = np.empty_like(rates)
    out[:, 0] = rates[:, 0] - st * rates[:, 2]
    out[:, 1] = cp * rates[:, 1] + sp * ct * rates[:, 2]
    out[:, 2] = -sp * rates[:, 1] + cp * ct * rates[:, 2]
    return out

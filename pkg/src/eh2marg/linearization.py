"""Jacobians of the process/measurement models and linear-model assembly.

The gain is designed once from the linearization at the nominal operating
point (zero attitude, zero bias, zero input).  Closed-form Jacobians are
provided for arbitrary operating points — the EKF baseline re-linearizes at
the current estimate — together with a central finite-difference oracle used
to cross-check them.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .dynamics import EulerState
from .kinematics import EulerAngles, kinematic_matrix
from .sensors import NoiseParams, WorldConstants, _vector3

__all__ = [
    "LinearModel",
    "assemble_model",
    "finite_difference_jacobian",
    "jacobians_measurement",
    "jacobians_process",
    "nominal_model",
]

_CZ_DEFAULT = np.hstack([np.eye(3), np.zeros((3, 3))])


@dataclass(frozen=True)
class LinearModel:
    """Matrices of the linearized plant x_dot = A x + Bu u + Bw w, y = Cy x + Dw w.

    Noise enters through a single stacked channel w = [n_w; n_b; n_a; n_m]
    in R^12; process and measurement noise occupy disjoint column blocks of
    Bw and Dw.  z = Cz x is the output whose H2 error norm the synthesis
    minimizes.
    """

    A: NDArray[np.float64]
    Bu: NDArray[np.float64]
    Bw: NDArray[np.float64]
    Cy: NDArray[np.float64]
    Du: NDArray[np.float64]
    Dw: NDArray[np.float64]
    Cz: NDArray[np.float64]

    def __post_init__(self) -> None:
        shapes = {
            "A": (6, 6),
            "Bu": (6, 3),
            "Bw": (6, 12),
            "Cy": (6, 6),
            "Du": (6, 3),
            "Dw": (6, 12),
            "Cz": (3, 6),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)
        if np.any(self.Bw[:, 6:] != 0.0) or np.any(self.Dw[:, :6] != 0.0):
            raise ValueError(
                "noise channels must be disjoint: Bw = [Bw_process | 0], Dw = [0 | Dw_meas]"
            )


def _dT_omega_dPhi(e: EulerAngles, omega: NDArray[np.float64]) -> NDArray[np.float64]:
    """d(T(Phi) omega)/dPhi for fixed omega; columns ordered (phi, theta, psi)."""
    sp, cp = np.sin(e.phi), np.cos(e.phi)
    tt = np.tan(e.theta)
    sec = 1.0 / np.cos(e.theta)
    d_phi = np.array(
        [
            [0.0, tt * cp, -tt * sp],
            [0.0, -sp, -cp],
            [0.0, sec * cp, -sec * sp],
        ]
    )
    d_theta = np.array(
        [
            [0.0, sec * sec * sp, sec * sec * cp],
            [0.0, 0.0, 0.0],
            [0.0, sec * tt * sp, sec * tt * cp],
        ]
    )
    out = np.zeros((3, 3))
    out[:, 0] = d_phi @ omega
    out[:, 1] = d_theta @ omega
    return out


def _rotation_factor_derivatives(
    e: EulerAngles,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """dR/dphi, dR/dtheta, dR/dpsi of the 3-2-1 DCM R = R1 R2 R3."""
    sp, cp = np.sin(e.phi), np.cos(e.phi)
    st, ct = np.sin(e.theta), np.cos(e.theta)
    ss, cs = np.sin(e.psi), np.cos(e.psi)
    R1 = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    R2 = np.array([[ct, 0.0, -st], [0.0, 1.0, 0.0], [st, 0.0, ct]])
    R3 = np.array([[cs, ss, 0.0], [-ss, cs, 0.0], [0.0, 0.0, 1.0]])
    dR1 = np.array([[0.0, 0.0, 0.0], [0.0, -sp, cp], [0.0, -cp, -sp]])
    dR2 = np.array([[-st, 0.0, -ct], [0.0, 0.0, 0.0], [ct, 0.0, -st]])
    dR3 = np.array([[-ss, cs, 0.0], [-cs, -ss, 0.0], [0.0, 0.0, 0.0]])
    return dR1 @ R2 @ R3, R1 @ dR2 @ R3, R1 @ R2 @ dR3


def jacobians_process(
    nominal: EulerState | None = None, u0: NDArray[np.float64] | None = None
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Closed-form A, Bu, Bw_process of the process model at an operating point.

    Parameters
    ----------
    nominal : EulerState, optional
        Operating state; defaults to the zero nominal point.
    u0 : array_like, optional
        Operating gyro input; defaults to zero.

    Returns
    -------
    A : numpy.ndarray, shape (6, 6)
    Bu : numpy.ndarray, shape (6, 3)
    Bw_process : numpy.ndarray, shape (6, 6)
        Jacobian w.r.t. the physical process noise [n_w; n_b] (unit intensity;
        scaling by the noise stds happens in :func:`assemble_model`).

    Raises
    ------
    GimbalLockError
        If the nominal attitude sits in the gimbal guard band.
    """
    if nominal is None:
        nominal = EulerState()
    u = np.zeros(3) if u0 is None else _vector3(u0, "u0")
    T = kinematic_matrix(nominal.attitude)
    A = np.zeros((6, 6))
    A[:3, :3] = _dT_omega_dPhi(nominal.attitude, u - nominal.bias)
    A[:3, 3:] = -T
    Bu = np.vstack([T, np.zeros((3, 3))])
    Bw_process = np.zeros((6, 6))
    Bw_process[:3, :3] = -T
    Bw_process[3:, 3:] = np.eye(3)
    return A, Bu, Bw_process


def jacobians_measurement(
    nominal: EulerState | None = None, w: WorldConstants | None = None
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Closed-form Cy and Dw_meas of the measurement model at an operating point.

    The bias columns of Cy are identically zero (h does not depend on b);
    Dw_meas is the identity on the stacked [n_a; n_m] channel.
    """
    if nominal is None:
        nominal = EulerState()
    if w is None:
        w = WorldConstants()
    dR_phi, dR_theta, dR_psi = _rotation_factor_derivatives(nominal.attitude)
    Cy = np.zeros((6, 6))
    for j, dR in enumerate((dR_phi, dR_theta, dR_psi)):
        Cy[:3, j] = dR @ w.g_inertial
        Cy[3:, j] = dR @ w.h_inertial
    return Cy, np.eye(6)


def finite_difference_jacobian(
    func: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    x0: NDArray[np.float64],
    eps: float = 1e-6,
) -> NDArray[np.float64]:
    """Central-difference Jacobian of ``func`` at ``x0``.

    Column j is ``(func(x0 + eps e_j) - func(x0 - eps e_j)) / (2 eps)``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    f0 = np.asarray(func(x0), dtype=np.float64)
    jac = np.empty((f0.shape[0], x0.shape[0]))
    for j in range(x0.shape[0]):
        step = np.zeros_like(x0)
        step[j] = eps
        jac[:, j] = (np.asarray(func(x0 + step)) - np.asarray(func(x0 - step))) / (2.0 * eps)
    return jac


def assemble_model(
    process: tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]],
    measurement: tuple[NDArray[np.float64], NDArray[np.float64]],
    noise: NoiseParams,
    cz: NDArray[np.float64] | None = None,
) -> LinearModel:
    """Assemble the LinearModel, folding noise stds into the Bw/Dw columns.

    The synthesis consumes unit-intensity white noise, so the covariances
    enter by scaling: the n_w/n_b columns of Bw_process and the n_a/n_m
    columns of Dw_meas are multiplied by their standard deviations.

    Parameters
    ----------
    process : tuple
        (A, Bu, Bw_process) from :func:`jacobians_process`.
    measurement : tuple
        (Cy, Dw_meas) from :func:`jacobians_measurement`.
    noise : NoiseParams
    cz : numpy.ndarray, optional
        Performance output map; defaults to attitude-only, [I3 03].
    """
    A, Bu, Bw_process = (np.asarray(m, dtype=np.float64) for m in process)
    Cy, Dw_meas = (np.asarray(m, dtype=np.float64) for m in measurement)
    scale_proc = np.diag([noise.n_w] * 3 + [noise.n_b] * 3)
    scale_meas = np.diag([noise.n_a] * 3 + [noise.n_m] * 3)
    Bw = np.hstack([Bw_process @ scale_proc, np.zeros((6, 6))])
    Dw = np.hstack([np.zeros((6, 6)), Dw_meas @ scale_meas])
    return LinearModel(
        A=A,
        Bu=Bu,
        Bw=Bw,
        Cy=Cy,
        Du=np.zeros((6, 3)),
        Dw=Dw,
        Cz=_CZ_DEFAULT.copy() if cz is None else np.asarray(cz, dtype=np.float64),
    )


def nominal_model(
    noise: NoiseParams | None = None, world: WorldConstants | None = None
) -> LinearModel:
    """LinearModel at the zero nominal point with the given noise and world."""
    noise = NoiseParams() if noise is None else noise
    world = WorldConstants() if world is None else world
    return assemble_model(
        jacobians_process(), jacobians_measurement(w=world), noise
    )

"""Per-step numerical kernels shared by the filters and the benchmark harness.

Every kernel is written so that numba compiles it in nopython mode; the
decorator applied here is :func:`eh2marg._backend.njit`, which is either
``numba.njit(cache=True)`` or a no-op depending on the selected backend.

Kernels communicate failure through integer status codes instead of
exceptions so the compiled and interpreted paths behave identically:

* 0 - success
* 1 - pitch entered the gimbal guard band
* 2 - non-finite result (numerical blow-up, near-singular update)

State vectors are ``[phi, theta, psi, bx, by, bz]``; measurement vectors are
``[ax, ay, az, mx, my, mz]``.
"""

import math

import numpy as np

from ._backend import njit

HALF_PI = math.pi / 2.0


@njit
def wrap_scalar(a):
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


@njit
def _xdot_eh2(xs, omega, y, L, g, h, eps, out):
    # xdot = [T(Phi)(omega - b); 0] + L (h(Phi) - y)
    phi = xs[0]
    theta = xs[1]
    psi = xs[2]
    if abs(wrap_scalar(theta)) >= HALF_PI - eps:
        return 1
    sp = math.sin(phi)
    cp = math.cos(phi)
    st = math.sin(theta)
    ct = math.cos(theta)
    ss = math.sin(psi)
    cs = math.cos(psi)
    tt = st / ct
    sec = 1.0 / ct
    w0 = omega[0] - xs[3]
    w1 = omega[1] - xs[4]
    w2 = omega[2] - xs[5]
    f0 = w0 + tt * sp * w1 + tt * cp * w2
    f1 = cp * w1 - sp * w2
    f2 = sec * sp * w1 + sec * cp * w2
    r00 = ct * cs
    r01 = ct * ss
    r02 = -st
    r10 = sp * st * cs - cp * ss
    r11 = sp * st * ss + cp * cs
    r12 = sp * ct
    r20 = cp * st * cs + sp * ss
    r21 = cp * st * ss - sp * cs
    r22 = cp * ct
    e0 = r00 * g[0] + r01 * g[1] + r02 * g[2] - y[0]
    e1 = r10 * g[0] + r11 * g[1] + r12 * g[2] - y[1]
    e2 = r20 * g[0] + r21 * g[1] + r22 * g[2] - y[2]
    e3 = r00 * h[0] + r01 * h[1] + r02 * h[2] - y[3]
    e4 = r10 * h[0] + r11 * h[1] + r12 * h[2] - y[4]
    e5 = r20 * h[0] + r21 * h[1] + r22 * h[2] - y[5]
    out[0] = f0 + L[0, 0] * e0 + L[0, 1] * e1 + L[0, 2] * e2 + L[0, 3] * e3 + L[0, 4] * e4 + L[0, 5] * e5
    out[1] = f1 + L[1, 0] * e0 + L[1, 1] * e1 + L[1, 2] * e2 + L[1, 3] * e3 + L[1, 4] * e4 + L[1, 5] * e5
    out[2] = f2 + L[2, 0] * e0 + L[2, 1] * e1 + L[2, 2] * e2 + L[2, 3] * e3 + L[2, 4] * e4 + L[2, 5] * e5
    out[3] = L[3, 0] * e0 + L[3, 1] * e1 + L[3, 2] * e2 + L[3, 3] * e3 + L[3, 4] * e4 + L[3, 5] * e5
    out[4] = L[4, 0] * e0 + L[4, 1] * e1 + L[4, 2] * e2 + L[4, 3] * e3 + L[4, 4] * e4 + L[4, 5] * e5
    out[5] = L[5, 0] * e0 + L[5, 1] * e1 + L[5, 2] * e2 + L[5, 3] * e3 + L[5, 4] * e4 + L[5, 5] * e5
    return 0


@njit
def _xdot_dead(xs, omega, eps, out):
    # xdot = [T(Phi)(omega - b); 0] -- dead reckoning, no innovation
    phi = xs[0]
    theta = xs[1]
    if abs(wrap_scalar(theta)) >= HALF_PI - eps:
        return 1
    sp = math.sin(phi)
    cp = math.cos(phi)
    st = math.sin(theta)
    ct = math.cos(theta)
    tt = st / ct
    sec = 1.0 / ct
    w0 = omega[0] - xs[3]
    w1 = omega[1] - xs[4]
    w2 = omega[2] - xs[5]
    out[0] = w0 + tt * sp * w1 + tt * cp * w2
    out[1] = cp * w1 - sp * w2
    out[2] = sec * sp * w1 + sec * cp * w2
    out[3] = 0.0
    out[4] = 0.0
    out[5] = 0.0
    return 0


@njit
def eh2_step_kernel(x, omega, y, L, g, h, dt, eps, x_out):
    """One RK4 step of the extended-H2 filter; measurement held over the step."""
    k = np.empty((4, 6))
    xs = np.empty(6)
    for i in range(6):
        xs[i] = x[i]
    st = _xdot_eh2(xs, omega, y, L, g, h, eps, k[0])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + 0.5 * dt * k[0, i]
    st = _xdot_eh2(xs, omega, y, L, g, h, eps, k[1])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + 0.5 * dt * k[1, i]
    st = _xdot_eh2(xs, omega, y, L, g, h, eps, k[2])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + dt * k[2, i]
    st = _xdot_eh2(xs, omega, y, L, g, h, eps, k[3])
    if st != 0:
        return st
    for i in range(6):
        x_out[i] = x[i] + dt / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
    for i in range(3):
        x_out[i] = wrap_scalar(x_out[i])
    if abs(x_out[1]) >= HALF_PI - eps:
        return 1
    for i in range(6):
        if not math.isfinite(x_out[i]):
            return 2
    return 0


@njit
def integrate_step_kernel(x, omega, dt, eps, x_out):
    """One RK4 dead-reckoning step of the process model."""
    k = np.empty((4, 6))
    xs = np.empty(6)
    for i in range(6):
        xs[i] = x[i]
    st = _xdot_dead(xs, omega, eps, k[0])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + 0.5 * dt * k[0, i]
    st = _xdot_dead(xs, omega, eps, k[1])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + 0.5 * dt * k[1, i]
    st = _xdot_dead(xs, omega, eps, k[2])
    if st != 0:
        return st
    for i in range(6):
        xs[i] = x[i] + dt * k[2, i]
    st = _xdot_dead(xs, omega, eps, k[3])
    if st != 0:
        return st
    for i in range(6):
        x_out[i] = x[i] + dt / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
    for i in range(3):
        x_out[i] = wrap_scalar(x_out[i])
    if abs(x_out[1]) >= HALF_PI - eps:
        return 1
    for i in range(6):
        if not math.isfinite(x_out[i]):
            return 2
    return 0


@njit
def ekf_step_kernel(x, P, omega, y, nw, nb, na, nm, g, h, dt, eps, x_out, P_out):
    """One EKF predict+update cycle consuming a single IMU sample.

    The sample's gyro drives the RK4 mean prediction over dt; the same
    sample's accel/mag form the innovation applied to the predicted state.
    """
    phi = x[0]
    theta = x[1]
    if abs(wrap_scalar(theta)) >= HALF_PI - eps:
        return 1
    sp = math.sin(phi)
    cp = math.cos(phi)
    st = math.sin(theta)
    ct = math.cos(theta)
    tt = st / ct
    sec = 1.0 / ct
    w1 = omega[1] - x[4]
    w2 = omega[2] - x[5]
    Tm = np.empty((3, 3))
    Tm[0, 0] = 1.0
    Tm[0, 1] = tt * sp
    Tm[0, 2] = tt * cp
    Tm[1, 0] = 0.0
    Tm[1, 1] = cp
    Tm[1, 2] = -sp
    Tm[2, 0] = 0.0
    Tm[2, 1] = sec * sp
    Tm[2, 2] = sec * cp
    # F = I + A(xhat) dt, A = [d(T(Phi)(omega-b))/dPhi, -T(Phi); 0, 0]
    F = np.eye(6)
    F[0, 0] += dt * (tt * cp * w1 - tt * sp * w2)
    F[1, 0] += dt * (-sp * w1 - cp * w2)
    F[2, 0] += dt * (sec * cp * w1 - sec * sp * w2)
    F[0, 1] += dt * (sec * sec * sp * w1 + sec * sec * cp * w2)
    F[2, 1] += dt * (sec * tt * sp * w1 + sec * tt * cp * w2)
    for i in range(3):
        for j in range(3):
            F[i, 3 + j] = -dt * Tm[i, j]
    xp = np.empty(6)
    status = integrate_step_kernel(x, omega, dt, eps, xp)
    if status != 0:
        return status
    Qd = np.zeros((6, 6))
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for m in range(3):
                acc += Tm[i, m] * Tm[j, m]
            Qd[i, j] = nw * nw * acc * dt
        Qd[3 + i, 3 + i] = nb * nb * dt
    Pp = F @ P @ F.T + Qd
    # measurement jacobian H = [d(Rg)/dPhi, 0; d(Rh)/dPhi, 0] at the prediction
    phi = xp[0]
    theta = xp[1]
    psi = xp[2]
    sp = math.sin(phi)
    cp = math.cos(phi)
    st = math.sin(theta)
    ct = math.cos(theta)
    ss = math.sin(psi)
    cs = math.cos(psi)
    R1 = np.zeros((3, 3))
    R2 = np.zeros((3, 3))
    R3 = np.zeros((3, 3))
    dR1 = np.zeros((3, 3))
    dR2 = np.zeros((3, 3))
    dR3 = np.zeros((3, 3))
    R1[0, 0] = 1.0
    R1[1, 1] = cp
    R1[1, 2] = sp
    R1[2, 1] = -sp
    R1[2, 2] = cp
    R2[0, 0] = ct
    R2[0, 2] = -st
    R2[1, 1] = 1.0
    R2[2, 0] = st
    R2[2, 2] = ct
    R3[0, 0] = cs
    R3[0, 1] = ss
    R3[1, 0] = -ss
    R3[1, 1] = cs
    R3[2, 2] = 1.0
    dR1[1, 1] = -sp
    dR1[1, 2] = cp
    dR1[2, 1] = -cp
    dR1[2, 2] = -sp
    dR2[0, 0] = -st
    dR2[0, 2] = -ct
    dR2[2, 0] = ct
    dR2[2, 2] = -st
    dR3[0, 0] = -ss
    dR3[0, 1] = cs
    dR3[1, 0] = -cs
    dR3[1, 1] = -ss
    R23 = R2 @ R3
    Rf = R1 @ R23
    Ja = dR1 @ R23
    Jb = R1 @ (dR2 @ R3)
    Jc = (R1 @ R2) @ dR3
    H = np.zeros((6, 6))
    for i in range(3):
        H[i, 0] = Ja[i, 0] * g[0] + Ja[i, 1] * g[1] + Ja[i, 2] * g[2]
        H[i, 1] = Jb[i, 0] * g[0] + Jb[i, 1] * g[1] + Jb[i, 2] * g[2]
        H[i, 2] = Jc[i, 0] * g[0] + Jc[i, 1] * g[1] + Jc[i, 2] * g[2]
        H[3 + i, 0] = Ja[i, 0] * h[0] + Ja[i, 1] * h[1] + Ja[i, 2] * h[2]
        H[3 + i, 1] = Jb[i, 0] * h[0] + Jb[i, 1] * h[1] + Jb[i, 2] * h[2]
        H[3 + i, 2] = Jc[i, 0] * h[0] + Jc[i, 1] * h[1] + Jc[i, 2] * h[2]
    S = H @ Pp @ H.T
    for i in range(3):
        S[i, i] += na * na
        S[3 + i, 3 + i] += nm * nm
    PHt = Pp @ H.T
    K = np.linalg.solve(S, PHt.T).T
    yhat = np.empty(6)
    yhat[0] = Rf[0, 0] * g[0] + Rf[0, 1] * g[1] + Rf[0, 2] * g[2]
    yhat[1] = Rf[1, 0] * g[0] + Rf[1, 1] * g[1] + Rf[1, 2] * g[2]
    yhat[2] = Rf[2, 0] * g[0] + Rf[2, 1] * g[1] + Rf[2, 2] * g[2]
    yhat[3] = Rf[0, 0] * h[0] + Rf[0, 1] * h[1] + Rf[0, 2] * h[2]
    yhat[4] = Rf[1, 0] * h[0] + Rf[1, 1] * h[1] + Rf[1, 2] * h[2]
    yhat[5] = Rf[2, 0] * h[0] + Rf[2, 1] * h[1] + Rf[2, 2] * h[2]
    for i in range(6):
        acc = 0.0
        for j in range(6):
            acc += K[i, j] * (y[j] - yhat[j])
        x_out[i] = xp[i] + acc
    for i in range(3):
        x_out[i] = wrap_scalar(x_out[i])
    if abs(x_out[1]) >= HALF_PI - eps:
        return 1
    IKH = -K @ H
    for i in range(6):
        IKH[i, i] += 1.0
    Pn = IKH @ Pp
    for i in range(6):
        for j in range(6):
            P_out[i, j] = 0.5 * (Pn[i, j] + Pn[j, i])
    for i in range(6):
        if not math.isfinite(x_out[i]):
            return 2
    return 0

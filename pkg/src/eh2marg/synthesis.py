"""H2-optimal estimator gain synthesis and LMI certification.

The gain is computed through the Riccati dual of the H2 estimation problem
(a filter CARE driven by the noise intensities embedded in Bw/Dw) and then
certified against the synthesis LMI, which is evaluated constructively: a
Lyapunov certificate X is built from the closed-loop error system's
controllability Gramian plus a small inflation that turns the non-strict
numerical inequalities into strict ones.  The LMI check is therefore an
independent route to the same feasibility statement and serves as the
acceptance oracle for the CARE result.

The gain matrix can be exported to and loaded from a plain-text format
(row-major, whitespace-delimited, 17 significant digits) so a precomputed
gain can be shipped to an embedded target.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import NonConvergence, SynthesisFailure, UnstableClosedLoop
from .linearization import LinearModel

__all__ = [
    "GainCertificate",
    "LmiReport",
    "h2_norm_of_error_system",
    "load_gain_text",
    "save_gain_text",
    "solve_care",
    "solve_lyapunov",
    "synthesize_gain",
    "verify_lmi",
]

#: Strictness margin for the "< 0" LMI blocks, applied to the equilibrated blocks.
LMI_EIG_TOL = -1e-9


@dataclass(frozen=True)
class GainCertificate:
    """A synthesized estimator gain with its optimality and stability evidence."""

    L: NDArray[np.float64]
    gamma: float
    max_closedloop_real_eig: float
    lmi_feasible: bool
    h2_norm: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "L", np.asarray(self.L, dtype=np.float64))
        if not np.all(np.isfinite(self.L)):
            raise ValueError("gain matrix contains non-finite entries")
        if not self.max_closedloop_real_eig < 0.0:
            raise ValueError("certificate requires a Hurwitz closed loop")
        if not self.h2_norm <= self.gamma * (1.0 + 1e-6):
            raise ValueError("h2_norm exceeds the certified gamma bound")


@dataclass(frozen=True)
class LmiReport:
    """Outcome of an LMI feasibility check, with eigenvalue margins."""

    feasible: bool
    block1_max_eig: float
    block2_max_eig: float
    trace_q: float
    gamma_sq: float
    max_closedloop_real_eig: float
    reason: str = ""

    def __bool__(self) -> bool:
        return self.feasible


def solve_lyapunov(F: NDArray[np.float64], Q: NDArray[np.float64]) -> NDArray[np.float64]:
    """Solve the continuous Lyapunov equation F P + P F^T + Q = 0.

    Raises
    ------
    NonConvergence
        If the solve fails or the residual exceeds 1e-8 * ||Q||.
    """
    F = np.asarray(F, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    try:
        P = scipy.linalg.solve_continuous_lyapunov(F, -Q)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"Lyapunov solve failed: {exc}") from exc
    residual = np.linalg.norm(F @ P + P @ F.T + Q)
    bound = 1e-8 * max(np.linalg.norm(Q), 1e-300)
    if not residual <= bound:
        raise NonConvergence(
            f"Lyapunov residual {residual:.3e} exceeds tolerance {bound:.3e}"
        )
    return P


def solve_care(
    A: NDArray[np.float64],
    B: NDArray[np.float64],
    Q: NDArray[np.float64],
    R: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Solve the CARE A^T P + P A - P B R^-1 B^T P + Q = 0 for P.

    Raises
    ------
    NonConvergence
        If the solver fails or the relative residual exceeds 1e-8.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    try:
        P = scipy.linalg.solve_continuous_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"CARE solve failed: {exc}") from exc
    residual = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    scale = max(np.linalg.norm(Q), np.linalg.norm(P), 1.0)
    rel = np.linalg.norm(residual) / scale
    if not rel <= 1e-8:
        raise NonConvergence(f"CARE relative residual {rel:.3e} exceeds 1e-8")
    return P


def h2_norm_of_error_system(m: LinearModel, L: NDArray[np.float64]) -> float:
    """H2 norm of the error system Cz [sI - (A + L Cy)]^-1 (Bw + L Dw).

    Raises
    ------
    UnstableClosedLoop
        If A + L Cy is not Hurwitz.
    """
    L = np.asarray(L, dtype=np.float64)
    F = m.A + L @ m.Cy
    max_real = float(np.max(np.real(np.linalg.eigvals(F))))
    if not max_real < 0.0:
        raise UnstableClosedLoop(
            f"A + L Cy has max real eigenvalue {max_real:.3e} >= 0"
        )
    G = m.Bw + L @ m.Dw
    P = solve_lyapunov(F, G @ G.T)
    return float(np.sqrt(max(np.trace(m.Cz @ P @ m.Cz.T), 0.0)))


def _pbh_detectable(A: NDArray[np.float64], Cy: NDArray[np.float64]) -> tuple[bool, complex]:
    """PBH test: every eigenvalue of A with Re >= 0 must be observable."""
    scale = max(np.linalg.norm(A), np.linalg.norm(Cy), 1.0)
    for lam in np.linalg.eigvals(A):
        if lam.real < -1e-12 * scale:
            continue
        stacked = np.vstack([A - lam * np.eye(A.shape[0]), Cy])
        smin = np.linalg.svd(stacked, compute_uv=False)[-1]
        if smin <= 1e-9 * scale:
            return False, lam
    return True, 0j


def synthesize_gain(m: LinearModel) -> GainCertificate:
    """Compute the H2-optimal estimator gain for the linearized plant.

    Solves the filter CARE for the stationary error covariance, recovers the
    gain, re-computes the achieved H2 norm through the independent Lyapunov
    route, and certifies the result against the LMI at a relative slack of
    1e-6.

    Raises
    ------
    SynthesisFailure
        If (A, Cy) is not detectable, Dw Dw^T is singular, or the Riccati
        solve does not converge.
    """
    V = m.Dw @ m.Dw.T
    v_min = float(np.min(np.linalg.eigvalsh(V)))
    if v_min <= 0.0:
        raise SynthesisFailure(
            f"Dw Dw^T is singular (min eigenvalue {v_min:.3e}); every measurement "
            "channel needs nonzero noise"
        )
    detectable, bad_eig = _pbh_detectable(m.A, m.Cy)
    if not detectable:
        raise SynthesisFailure(f"(A, Cy) is not detectable: eigenvalue {bad_eig} unobservable")

    if np.all(m.Cy == 0.0):
        # No information in y; the optimal gain is zero (A must already be stable).
        max_real = float(np.max(np.real(np.linalg.eigvals(m.A))))
        if not max_real < 0.0:
            raise SynthesisFailure("Cy = 0 with unstable A: no stabilizing estimator exists")
        L = np.zeros((m.A.shape[0], m.Cy.shape[0]))
    else:
        W = m.Bw @ m.Bw.T
        S = m.Bw @ m.Dw.T
        V_inv_S_T = np.linalg.solve(V, S.T)
        A_tilde = m.A - S @ np.linalg.solve(V, m.Cy)
        W_tilde = W - S @ V_inv_S_T
        W_tilde = 0.5 * (W_tilde + W_tilde.T)
        try:
            P = solve_care(A_tilde.T, m.Cy.T, W_tilde, V)
        except NonConvergence as exc:
            raise SynthesisFailure(f"filter CARE did not converge: {exc}") from exc
        K = np.linalg.solve(V.T, (P @ m.Cy.T + S).T).T
        L = -K

    F = m.A + L @ m.Cy
    max_real = float(np.max(np.real(np.linalg.eigvals(F))))
    if not max_real < 0.0:
        raise SynthesisFailure(
            f"synthesized closed loop is not Hurwitz (max real eig {max_real:.3e})"
        )
    h2 = h2_norm_of_error_system(m, L)
    gamma = h2 * (1.0 + 1e-9)
    report = verify_lmi(m, L, gamma * (1.0 + 1e-6))
    return GainCertificate(
        L=L,
        gamma=gamma,
        max_closedloop_real_eig=max_real,
        lmi_feasible=report.feasible,
        h2_norm=h2,
    )


def verify_lmi(m: LinearModel, L: NDArray[np.float64], gamma: float) -> LmiReport:
    """Check the synthesis LMI for a given gain and H2 bound gamma.

    A candidate certificate (X, W, Q) is constructed explicitly: X is the
    inverse of the error system's controllability Gramian inflated along the
    identity direction, W = X L, and the slack matrix Q is a scaled copy of
    the achieved output covariance.  With that choice the two matrix blocks
    are negative definite and trace(Q) < gamma^2 exactly when gamma exceeds
    the achieved H2 norm, so the check is constructive rather than an SDP
    search.  Block definiteness is evaluated on congruence-equilibrated
    copies of the blocks (which preserves sign) because the raw blocks mix
    scales of order 1e5 and 1e-10 and would drown the strictness tolerance
    in float rounding.

    Returns an :class:`LmiReport`; never raises for an infeasible pair.
    """
    L = np.asarray(L, dtype=np.float64)
    F = m.A + L @ m.Cy
    max_real = float(np.max(np.real(np.linalg.eigvals(F))))
    gamma_sq = float(gamma) ** 2
    if not max_real < 0.0:
        return LmiReport(
            feasible=False,
            block1_max_eig=np.inf,
            block2_max_eig=np.inf,
            trace_q=np.inf,
            gamma_sq=gamma_sq,
            max_closedloop_real_eig=max_real,
            reason=f"closed loop not Hurwitz: max real eigenvalue {max_real:.3e}",
        )
    G = m.Bw + L @ m.Dw
    try:
        Y0 = solve_lyapunov(F, G @ G.T)
        P_I = solve_lyapunov(F, np.eye(F.shape[0]))
    except NonConvergence as exc:
        return LmiReport(False, np.inf, np.inf, np.inf, gamma_sq, max_real, str(exc))
    trace0 = float(np.trace(m.Cz @ Y0 @ m.Cz.T))
    trace_pi = float(np.trace(m.Cz @ P_I @ m.Cz.T))
    budget = gamma_sq - trace0
    if budget <= 0.0:
        return LmiReport(
            feasible=False,
            block1_max_eig=np.inf,
            block2_max_eig=np.inf,
            trace_q=trace0,
            gamma_sq=gamma_sq,
            max_closedloop_real_eig=max_real,
            reason=f"trace bound violated: achieved {trace0:.6e} >= gamma^2 {gamma_sq:.6e}",
        )
    # Y = Y0 + delta P_I satisfies F Y + Y F^T + G G^T = -delta I exactly;
    # a third of the trace budget buys the inflation, a third the Q margin.
    if trace_pi > 0.0:
        delta = budget / (3.0 * trace_pi)
        rho = min(budget / (3.0 * trace0), 0.5) if trace0 > 0.0 else 0.5
    else:  # Cz = 0: the trace bound is vacuous, any inflation works
        delta = 1.0
        rho = 0.0
    Y = 0.5 * ((Y0 + delta * P_I) + (Y0 + delta * P_I).T)
    try:
        Y_half = np.linalg.cholesky(Y)
        X = np.linalg.inv(Y)
    except np.linalg.LinAlgError as exc:
        return LmiReport(False, np.inf, np.inf, np.inf, gamma_sq, max_real, f"certificate not PD: {exc}")
    X = 0.5 * (X + X.T)
    W_lmi = X @ L
    n = F.shape[0]
    nw = G.shape[1]
    nz = m.Cz.shape[0]

    # Block 1: [X A + W Cy + (.)^T, X Bw + W Dw; *, -I] with X A + W Cy = X F.
    XF = X @ m.A + W_lmi @ m.Cy
    XG = X @ m.Bw + W_lmi @ m.Dw
    block1 = np.zeros((n + nw, n + nw))
    block1[:n, :n] = XF + XF.T
    block1[:n, n:] = XG
    block1[n:, :n] = XG.T
    block1[n:, n:] = -np.eye(nw)
    scale1 = np.zeros_like(block1)
    scale1[:n, :n] = Y_half
    scale1[n:, n:] = np.eye(nw)
    block1_eq = scale1.T @ block1 @ scale1
    eig1 = float(np.max(np.linalg.eigvalsh(0.5 * (block1_eq + block1_eq.T))))

    # Block 2: [-Q, Cz; Cz^T, -X] with slack Q = (1 + rho) Cz Y Cz^T,
    # padded to strict definiteness by part of the budget when Cz = 0.
    Q_slack = (1.0 + rho) * (m.Cz @ Y @ m.Cz.T)
    if trace_pi <= 0.0:
        Q_slack = Q_slack + (budget / (2.0 * nz)) * np.eye(nz)
    trace_q = float(np.trace(Q_slack))
    block2 = np.zeros((nz + n, nz + n))
    block2[:nz, :nz] = -Q_slack
    block2[:nz, nz:] = m.Cz
    block2[nz:, :nz] = m.Cz.T
    block2[nz:, nz:] = -X
    q_bar = np.sqrt(trace_q / nz)
    scale2 = np.zeros_like(block2)
    scale2[:nz, :nz] = np.eye(nz) / q_bar
    scale2[nz:, nz:] = Y_half
    block2_eq = scale2.T @ block2 @ scale2
    eig2 = float(np.max(np.linalg.eigvalsh(0.5 * (block2_eq + block2_eq.T))))

    trace_ok = trace_q < gamma_sq
    feasible = eig1 < LMI_EIG_TOL and eig2 < LMI_EIG_TOL and trace_ok
    reason = ""
    if not feasible:
        parts = []
        if not eig1 < LMI_EIG_TOL:
            parts.append(f"block1 max eigenvalue {eig1:.3e}")
        if not eig2 < LMI_EIG_TOL:
            parts.append(f"block2 max eigenvalue {eig2:.3e}")
        if not trace_ok:
            parts.append(f"trace(Q) {trace_q:.6e} >= gamma^2 {gamma_sq:.6e}")
        reason = "; ".join(parts)
    return LmiReport(
        feasible=feasible,
        block1_max_eig=eig1,
        block2_max_eig=eig2,
        trace_q=trace_q,
        gamma_sq=gamma_sq,
        max_closedloop_real_eig=max_real,
        reason=reason,
    )


def save_gain_text(L: NDArray[np.float64], path: str | os.PathLike) -> None:
    """Write a matrix in the plain-text gain format.

    First data line holds ``rows cols``; each following line is one row,
    whitespace-delimited, 17 significant digits.  Lines starting with ``#``
    are comments.
    """
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2:
        raise ValueError("gain must be a 2-D matrix")
    rows, cols = L.shape
    lines = ["# eh2marg gain matrix", f"{rows} {cols}"]
    for i in range(rows):
        lines.append(" ".join(format(v, ".17g") for v in L[i]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gain_text(path: str | os.PathLike) -> NDArray[np.float64]:
    """Read a matrix written by :func:`save_gain_text`."""
    with open(path, "r", encoding="ascii") as fh:
        data_lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not data_lines:
        raise ValueError(f"{path}: no data lines")
    header = data_lines[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: first data line must be 'rows cols'")
    rows, cols = int(header[0]), int(header[1])
    if len(data_lines) - 1 != rows:
        raise ValueError(f"{path}: expected {rows} rows, found {len(data_lines) - 1}")
    out = np.empty((rows, cols))
    for i, line in enumerate(data_lines[1:]):
        values = line.split()
        if len(values) != cols:
            raise ValueError(f"{path}: row {i} has {len(values)} values, expected {cols}")
        out[i] = [float(v) for v in values]
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{path}: non-finite entries")
    return out

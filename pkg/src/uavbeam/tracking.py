"""Extended Kalman filter for beam prediction and tracking.

Measurement channels are laid out as ``[tau, mu, Re c~, Im c~]``. Which of
them an update consumes is chosen by a channel index list: the full echo in
connected mode, ``[tau, mu, Re c~]`` for the real-part convention, and
``[tau, mu]`` for camera slots.

All functions accept a leading batch dimension over UAVs so one slot of a
K-UAV scene is processed with a handful of array operations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .array_channel import UpaGeometry, element_phases
from .scenario import SPEED_OF_LIGHT, angles_of, transition_matrix

ECHO_COMPLEX = (0, 1, 2, 3)
ECHO_REAL = (0, 1, 2)
RANGE_DOPPLER = (0, 1)

JACOBIAN_MODES = ("full", "elevation-only", "shared-gradient")


class TrackingError(RuntimeError):
    pass


class SingularGeometry(TrackingError):
    """Target on the array's vertical axis, where azimuth is undefined."""


@dataclass
class EkfBelief:
    x: np.ndarray  # (9,)
    M: np.ndarray  # (9, 9)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(9)
        self.M = np.asarray(self.M, dtype=float).reshape(9, 9)


@dataclass(frozen=True)
class MeasurementConstants:
    f_c: float
    tx_geom: UpaGeometry
    n_rb: int
    beta: float = 1.0  # real reflection coefficient estimate, treated as known


def process_covariance(sigma_p=0.02, sigma_v=0.2, sigma_a=0.01) -> np.ndarray:
    stds = np.concatenate([np.broadcast_to(np.asarray(s, dtype=float), (3,))
                           for s in (sigma_p, sigma_v, sigma_a)])
    return np.diag(stds ** 2)


def initial_covariance(pos_std=5.0, vel_std=2.0, acc_std=1.0) -> np.ndarray:
    return process_covariance(pos_std, vel_std, acc_std)


def _check_positions(P: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(P, axis=-1)
    if np.any(d == 0):
        raise TrackingError("measurement model undefined at the BS position")
    return d


def _eta_terms(phi, theta, beam_phi, beam_theta, geom: UpaGeometry):
    """Per-element phasors of a^H(phi,theta) a(beam) and their angle factors."""
    ix, iy = geom.index_grids()
    ph = element_phases(beam_phi, beam_theta, geom) - element_phases(phi, theta, geom)
    e = np.exp(1j * ph) / geom.n
    phi = np.asarray(phi)[..., None]
    theta = np.asarray(theta)[..., None]
    g = ix * np.cos(phi) + iy * np.sin(phi)
    g_prime = -ix * np.sin(phi) + iy * np.cos(phi)
    return e, g, g_prime, theta


def measurement_batch(X: np.ndarray, beam_phi, beam_theta, consts: MeasurementConstants,
                      beta=None) -> np.ndarray:
    """H(x) for every row of ``X`` (K, 9) -> (K, 4)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P, V = X[:, 0:3], X[:, 3:6]
    d = _check_positions(P)
    beta = consts.beta if beta is None else np.asarray(beta, dtype=float)
    phi, theta = angles_of(P)
    e, _, _, _ = _eta_terms(phi, theta, beam_phi, beam_theta, consts.tx_geom)
    eta = np.sqrt(consts.tx_geom.n * consts.n_rb) * beta * e.sum(axis=-1)
    out = np.empty((X.shape[0], 4))
    out[:, 0] = 2.0 * d / SPEED_OF_LIGHT
    out[:, 1] = 2.0 * np.sum(V * P, axis=1) * consts.f_c / (SPEED_OF_LIGHT * d)
    out[:, 2] = eta.real
    out[:, 3] = eta.imag
    return out


def jacobian_batch(X: np.ndarray, beam_phi, beam_theta, consts: MeasurementConstants,
                   mode: str = "full", beta=None) -> np.ndarray:
    """Analytic dH/dx for every row of ``X`` -> (K, 4, 9); acceleration columns are zero.

    ``full`` differentiates c~ through both elevation and azimuth with the exact
    gradient of theta = arcsin(p3/|p|). ``elevation-only`` drops the azimuth
    term. ``shared-gradient`` also drops it and uses p(i)p(3)/(|p|^2 rho) as
    dtheta/dp(i) for all three axes.
    """
    if mode not in JACOBIAN_MODES:
        raise ValueError(f"unknown jacobian mode {mode!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P, V = X[:, 0:3], X[:, 3:6]
    d = _check_positions(P)
    rho2 = P[:, 0] ** 2 + P[:, 1] ** 2
    if np.any(rho2 == 0):
        raise SingularGeometry("elevation gradient is singular for a target on the vertical axis")
    rho = np.sqrt(rho2)
    d2 = d ** 2
    beta = consts.beta if beta is None else np.asarray(beta, dtype=float)
    c, f_c = SPEED_OF_LIGHT, consts.f_c
    K = X.shape[0]
    J = np.zeros((K, 4, 9))

    m = 2.0 * P / (c * d[:, None])
    J[:, 0, 0:3] = m
    pv = np.sum(P * V, axis=1)
    J[:, 1, 0:3] = 2.0 * f_c * (V * d2[:, None] - P * pv[:, None]) / (c * d[:, None] ** 3)
    J[:, 1, 3:6] = f_c * m

    phi, theta = angles_of(P)
    e, g, g_prime, th = _eta_terms(phi, theta, beam_phi, beam_theta, consts.tx_geom)
    scale = np.sqrt(consts.tx_geom.n * consts.n_rb) * np.asarray(beta)
    scale = np.broadcast_to(scale, (K,))
    deta_dtheta = scale * np.sum(-1j * np.pi * np.cos(th) * g * e, axis=-1)
    deta_dphi = scale * np.sum(-1j * np.pi * np.sin(th) * g_prime * e, axis=-1)

    if mode == "shared-gradient":
        dtheta = P * P[:, 2:3] / (d2[:, None] * rho[:, None])
    else:
        dtheta = np.empty((K, 3))
        dtheta[:, 0:2] = -P[:, 0:2] * P[:, 2:3] / (d2[:, None] * rho[:, None])
        dtheta[:, 2] = rho / d2
    q = deta_dtheta[:, None] * dtheta
    if mode == "full":
        dphi = np.zeros((K, 3))
        dphi[:, 0] = -P[:, 1] / rho2
        dphi[:, 1] = P[:, 0] / rho2
        q = q + deta_dphi[:, None] * dphi
    J[:, 2, 0:3] = q.real
    J[:, 3, 0:3] = q.imag
    return J


def _select(channels: Sequence[int], arr: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.take(arr, list(channels), axis=axis)


def measurement_fn(x, beam_angles: Tuple[float, float], consts: MeasurementConstants,
                   channels: Sequence[int] = ECHO_COMPLEX) -> np.ndarray:
    return _select(channels, measurement_batch(np.asarray(x)[None, :], beam_angles[0],
                                               beam_angles[1], consts)[0])


def jacobian(x, beam_angles: Tuple[float, float], consts: MeasurementConstants,
             mode: str = "full", channels: Sequence[int] = ECHO_COMPLEX) -> np.ndarray:
    J = jacobian_batch(np.asarray(x)[None, :], beam_angles[0], beam_angles[1], consts, mode)[0]
    return J[list(channels)]


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def predict_batch(X: np.ndarray, M: np.ndarray, dt: float, Qs: np.ndarray):
    G = transition_matrix(dt)
    Xp = X @ G.T
    Mp = symmetrize(G @ M @ G.T + Qs)
    return Xp, Mp


def update_batch(Xp: np.ndarray, Mp: np.ndarray, Y: np.ndarray, Qm: np.ndarray,
                 H: np.ndarray, Y_pred: np.ndarray, joseph: bool = False):
    """Kalman update for K beliefs at once.

    ``Y``/``Y_pred`` are (K, c), ``H`` is (K, c, 9) and ``Qm`` is (K, c, c) or
    (K, c) for a diagonal covariance. The innovation covariance is
    equilibrated before solving since delay and amplitude channels differ by
    ~20 orders of magnitude.
    """
    if Qm.ndim == 2:
        Qm = np.einsum("ki,ij->kij", Qm, np.eye(Qm.shape[1]))
    MHt = Mp @ np.swapaxes(H, -1, -2)  # (K, 9, c)
    S = Qm + H @ MHt
    s = np.sqrt(np.abs(np.einsum("kii->ki", S)))
    if np.any(~np.isfinite(s)) or np.any(s == 0):
        raise TrackingError("innovation covariance has a zero or non-finite diagonal")
    S_eq = S / (s[:, :, None] * s[:, None, :])
    try:
        # K_gain = MHt S^-1, solved through the equilibrated system.
        rhs = np.swapaxes(MHt, -1, -2) / s[:, :, None]
        Kt = np.linalg.solve(S_eq, rhs) / s[:, :, None]
    except np.linalg.LinAlgError as exc:
        raise TrackingError("innovation covariance is not invertible") from exc
    Kg = np.swapaxes(Kt, -1, -2)  # (K, 9, c)
    innov = Y - Y_pred
    Xn = Xp + np.einsum("kic,kc->ki", Kg, innov)
    I = np.eye(Xp.shape[1])
    A = I - Kg @ H
    if joseph:
        Mn = A @ Mp @ np.swapaxes(A, -1, -2) + Kg @ Qm @ np.swapaxes(Kg, -1, -2)
    else:
        Mn = A @ Mp
    return Xn, symmetrize(Mn)


def predict(belief: EkfBelief, dt: float, Qs: np.ndarray) -> EkfBelief:
    Xp, Mp = predict_batch(belief.x[None, :], belief.M[None], dt, Qs)
    return EkfBelief(Xp[0], Mp[0])


def update(predicted: EkfBelief, y: np.ndarray, Qm: np.ndarray, H: np.ndarray,
           y_pred: np.ndarray, joseph: bool = False) -> EkfBelief:
    Qm = np.asarray(Qm, dtype=float)
    if Qm.ndim == 1:
        Qm = np.diag(Qm)
    Xn, Mn = update_batch(predicted.x[None, :], predicted.M[None],
                          np.asarray(y, dtype=float)[None, :], Qm[None],
                          np.asarray(H, dtype=float)[None], np.asarray(y_pred, dtype=float)[None],
                          joseph=joseph)
    return EkfBelief(Xn[0], Mn[0])


def predicted_beam_angles(predicted: EkfBelief) -> Tuple[float, float]:
    p = predicted.x[0:3]
    if np.linalg.norm(p) == 0:
        raise TrackingError("predicted position coincides with the BS")
    if p[0] == 0 and p[1] == 0:
        raise SingularGeometry("azimuth undefined for a predicted position on the vertical axis")
    phi, theta = angles_of(p)
    return float(phi), float(theta)


def echo_measurement_covariance(var_tau, var_mu, var_c, channels: Sequence[int]) -> np.ndarray:
    """Diagonal Qm rows (K, c); the complex echo noise splits evenly over Re/Im."""
    var_tau = np.atleast_1d(var_tau)
    full = np.stack([var_tau, np.broadcast_to(var_mu, var_tau.shape),
                     np.broadcast_to(var_c / 2.0, var_tau.shape),
                     np.broadcast_to(var_c / 2.0, var_tau.shape)], axis=1)
    if tuple(channels) == ECHO_REAL:
        full[:, 2] = np.broadcast_to(var_c, var_tau.shape)
    return _select(channels, full)


def echo_vector(tau_hat, mu_hat, c_tilde, channels: Sequence[int]) -> np.ndarray:
    tau_hat = np.atleast_1d(tau_hat)
    c_tilde = np.broadcast_to(np.asarray(c_tilde, dtype=complex), tau_hat.shape)
    full = np.stack([tau_hat, np.broadcast_to(mu_hat, tau_hat.shape),
                     c_tilde.real, c_tilde.imag], axis=1)
    return _select(channels, full)


class EkfBank:
    """Independent EKFs for K UAVs stored as stacked arrays."""

    def __init__(self, X0: np.ndarray, M0: np.ndarray):
        self.X = np.array(X0, dtype=float)
        K = self.X.shape[0]
        M0 = np.asarray(M0, dtype=float)
        self.M = np.broadcast_to(M0, (K, 9, 9)).copy() if M0.ndim == 2 else M0.copy()

    @property
    def K(self) -> int:
        return self.X.shape[0]

    def predict(self, dt: float, Qs: np.ndarray) -> None:
        self.X, self.M = predict_batch(self.X, self.M, dt, Qs)

    def beam_angles(self) -> Tuple[np.ndarray, np.ndarray]:
        return angles_of(self.X[:, 0:3])

    def update(self, Y, Qm, H, Y_pred, joseph: bool = False, rows: Optional[np.ndarray] = None) -> None:
        if rows is None:
            self.X, self.M = update_batch(self.X, self.M, Y, Qm, H, Y_pred, joseph)
            return
        if rows.size:
            Xn, Mn = update_batch(self.X[rows], self.M[rows], Y, Qm, H, Y_pred, joseph)
            self.X[rows], self.M[rows] = Xn, Mn

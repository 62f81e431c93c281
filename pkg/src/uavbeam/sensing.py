"""Parameter-level radar (ISAC echo) and binocular-camera measurements.

Echoes are never synthesised as waveforms. Matched and spatial filtering are
folded into the post-processing noise model, whose variances are inversely
proportional to the echo SNR.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .scenario import SPEED_OF_LIGHT, TrueObservables


class MeasurementDropout(RuntimeError):
    """Raised when a radar return has zero SNR (infinite noise variance)."""


class SensingMode(enum.Enum):
    RADAR = "radar"
    VISION = "vision"


@dataclass(frozen=True)
class MeasurementVector:
    tau_hat: float
    mu_hat: float
    c_tilde: Optional[complex] = None  # absent in idle-mode (vision) slots

    @property
    def has_echo(self) -> bool:
        return self.c_tilde is not None


@dataclass(frozen=True)
class RadarNoiseModel:
    a1: float = 6.7e-7
    a2: float = 2e4
    a3: float = 1.0
    sigma2: float = 1.0
    G: float = 10.0
    # 200 m^2 puts beta = xi / (tau c) at 1 for a UAV 100 m away.
    xi: float = 200.0
    # Cross-range quality of the P-ID extracted from an echo.
    aoa_std: float = 0.005  # rad, per angle
    tangential_velocity_std: float = 0.5  # m/s, per tangent axis

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "sigma2", "G", "xi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"radar noise parameter {name} must be positive")

    def with_gain(self, G: float) -> "RadarNoiseModel":
        return RadarNoiseModel(self.a1, self.a2, self.a3, self.sigma2, G, self.xi,
                               self.aoa_std, self.tangential_velocity_std)


@dataclass(frozen=True)
class VisionErrorModel:
    distance_mean: float = 0.0
    distance_std: float = 0.5
    velocity_mean: float = 0.0
    velocity_std: float = 0.3
    angle_std: float = 0.01  # rad, bearing error of the detection box centre
    tangential_velocity_std: float = 0.5
    baseline: float = 0.5  # B, m
    focal_length: float = 0.0045  # f_l, m

    def __post_init__(self):
        for name in ("distance_std", "velocity_std", "angle_std", "tangential_velocity_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class DrxSchedule:
    """Alternating connected-mode / idle-mode windows, in slots."""

    cm_slots: int = 1
    im_slots: int = 0

    def __post_init__(self):
        if self.cm_slots < 0 or self.im_slots < 0 or self.cm_slots + self.im_slots == 0:
            raise ValueError("DRX schedule needs a positive period")


def reflection_coefficient(tau: float, xi: float) -> float:
    """beta = xi / (tau c)."""
    return xi / (tau * SPEED_OF_LIGHT)


def radar_noise_variances(beta, beam_gain, p_tx, model: RadarNoiseModel, n_t: int, n_rb: int,
                          G=None):
    """Variances of (z_tau, z_f, z_c) for the given echo conditions.

    Vectorised over array arguments; ``G`` overrides the model's matched-filter
    gain (scalar or per row). Zero SNR raises :class:`MeasurementDropout`.
    """
    beta = np.asarray(beta)
    beam_gain = np.asarray(beam_gain, dtype=float)
    p_tx = np.asarray(p_tx, dtype=float)
    G = model.G if G is None else np.asarray(G, dtype=float)
    snr = G * n_t * n_rb * np.abs(beta) ** 2 * beam_gain * p_tx
    if np.any(snr <= 0) or np.any(p_tx <= 0):
        raise MeasurementDropout("echo SNR is zero; delay/Doppler variance is unbounded")
    var_tau = model.a1 ** 2 * model.sigma2 / snr
    var_mu = model.a2 ** 2 * model.sigma2 / snr
    var_c = model.a3 ** 2 * model.sigma2 / (G * p_tx) * np.ones_like(var_tau)
    return var_tau, var_mu, var_c


def radar_measure(truth: TrueObservables, response: complex, p_tx: float, model: RadarNoiseModel,
                  n_t: int, n_rb: int, rng: np.random.Generator) -> MeasurementVector:
    """Noisy (tau, mu, c~) for one UAV illuminated by a beam with response ``a^H f``.

    ``|response|**2`` is the beam-mismatch gain entering the variance law.
    """
    gain = float(np.abs(response) ** 2)
    if not 0.0 <= gain <= 1.0 + 1e-9:
        raise ValueError("beam gain |a^H f|^2 must lie in [0, 1]")
    beta = reflection_coefficient(truth.tau, model.xi)
    var_tau, var_mu, var_c = radar_noise_variances(beta, gain, p_tx, model, n_t, n_rb)
    z_tau = np.sqrt(var_tau) * rng.standard_normal()
    z_f = np.sqrt(var_mu) * rng.standard_normal()
    z_c = np.sqrt(var_c / 2.0) * (rng.standard_normal() + 1j * rng.standard_normal())
    c = np.sqrt(n_t * n_rb) * beta * response + z_c
    return MeasurementVector(float(truth.tau + z_tau), float(truth.mu + z_f), complex(c))


def binocular_depth(x_left: float, x_right: float, B: float, f_l: float) -> float:
    """Stereo depth d = B f_l / (X_L - X_R)."""
    disparity = x_left - x_right
    if disparity <= 0:
        raise ValueError(f"disparity must be positive, got {disparity}")
    return B * f_l / disparity


def vision_measure(truth: TrueObservables, model: VisionErrorModel,
                   rng: np.random.Generator) -> Tuple[float, float]:
    """Camera estimate of (distance, range rate) with the fitted Gaussian errors."""
    d_hat = truth.d + model.distance_mean + model.distance_std * rng.standard_normal()
    v_hat = truth.range_rate + model.velocity_mean + model.velocity_std * rng.standard_normal()
    return float(d_hat), float(v_hat)


def vision_to_measurement(d_hat: float, v_hat: float, f_c: float) -> MeasurementVector:
    return MeasurementVector(2.0 * d_hat / SPEED_OF_LIGHT, 2.0 * v_hat * f_c / SPEED_OF_LIGHT, None)


def vision_noise_variances(model: VisionErrorModel, f_c: float) -> Tuple[float, float]:
    """(var_tau, var_mu) of a vision measurement mapped into the radar domain."""
    s_tau = 2.0 * model.distance_std / SPEED_OF_LIGHT
    s_mu = 2.0 * model.velocity_std * f_c / SPEED_OF_LIGHT
    return s_tau ** 2, s_mu ** 2


def sensing_source(slot_index: int, schedule: DrxSchedule) -> SensingMode:
    period = schedule.cm_slots + schedule.im_slots
    if slot_index % period < schedule.cm_slots:
        return SensingMode.RADAR
    return SensingMode.VISION


def _tangent_basis(r_hat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to each row of ``r_hat`` (K, 3)."""
    ref = np.where(np.abs(r_hat[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    t1 = np.cross(r_hat, ref)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(r_hat, t1)
    return t1, t2


def observe_pid(P: np.ndarray, V: np.ndarray, d_hat: np.ndarray, range_rate_hat: np.ndarray,
                angle_std: float, tangential_velocity_std: float,
                rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Position and velocity characteristics recovered from one sensing snapshot.

    Radial components come from the measured range and range rate, so they
    share the noise realisation of the (tau, mu) measurement. Cross-range
    position is perturbed through the bearing error, and the tangential
    velocity through an isotropic error in the tangent plane.
    """
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    d = np.linalg.norm(P, axis=1)
    r_hat = P / d[:, None]
    t1, t2 = _tangent_basis(r_hat)
    K = P.shape[0]
    e = rng.standard_normal((K, 4))
    # Small-angle bearing perturbation of the unit direction.
    direction = r_hat + angle_std * (e[:, 0:1] * t1 + e[:, 1:2] * t2)
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    pos = np.asarray(d_hat)[:, None] * direction

    v_tan = V - np.sum(V * r_hat, axis=1, keepdims=True) * r_hat
    v_tan = v_tan + tangential_velocity_std * (e[:, 2:3] * t1 + e[:, 3:4] * t2)
    vel = np.asarray(range_rate_hat)[:, None] * r_hat + v_tan
    return pos, vel

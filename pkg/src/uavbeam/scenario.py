"""Ground-truth UAV kinematics in BS-centric coordinates.

The BS antenna sits at the origin, ``p[2]`` is altitude. States evolve under
the constant-acceleration model with Gaussian excitation on all nine
components.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

SPEED_OF_LIGHT = 3.0e8

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class UavState:
    """Position (m), velocity (m/s) and acceleration (m/s^2) of one UAV."""

    p: np.ndarray
    v: np.ndarray
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("p", "v", "a"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(3)
            object.__setattr__(self, name, arr)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.a])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "UavState":
        x = np.asarray(x, dtype=float)
        return cls(p=x[0:3], v=x[3:6], a=x[6:9])


@dataclass(frozen=True)
class ProcessNoise:
    """Per-axis standard deviations of the state excitation."""

    sigma_p: ArrayLike = 0.02
    sigma_v: ArrayLike = 0.2
    sigma_a: ArrayLike = 0.01

    def std_vector(self) -> np.ndarray:
        parts = [np.broadcast_to(np.asarray(s, dtype=float), (3,))
                 for s in (self.sigma_p, self.sigma_v, self.sigma_a)]
        return np.concatenate(parts)

    def covariance(self) -> np.ndarray:
        return np.diag(self.std_vector() ** 2)


@dataclass
class ScenarioConfig:
    K: int = 10
    radius: float = 100.0
    speed_min: float = 18.0
    speed_max: float = 20.0
    heading_azimuth_jitter: float = 20.0  # degrees, uniform in +-jitter
    heading_elevation_jitter: float = 10.0  # degrees
    slot: float = 0.02
    horizon: int = 500
    process_noise: ProcessNoise = field(default_factory=ProcessNoise)
    # None places UAVs uniformly on the whole upper hemisphere.
    altitude_band: Optional[Tuple[float, float]] = (20.0, 30.0)
    altitude_floor: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")
        if self.slot <= 0:
            raise ValueError("slot duration must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.altitude_band is not None:
            lo, hi = self.altitude_band
            if not 0 < lo <= hi < self.radius:
                raise ValueError("altitude band must satisfy 0 < lo <= hi < radius")


@dataclass(frozen=True)
class TrueObservables:
    tau: float  # two-way delay, s
    mu: float  # two-way Doppler, Hz
    gamma: float  # one-way Doppler, Hz
    phi: float  # azimuth, rad
    theta: float  # elevation, rad
    d: float  # range, m
    range_rate: float  # m/s, positive when receding


def transition_matrix(dt: float) -> np.ndarray:
    """9x9 constant-acceleration transition.

    The position/acceleration coupling is ``dt/2`` (not ``dt**2/2``),
    kept as the reference model defines it.
    """
    return _transition_matrix(float(dt)).copy()


@functools.lru_cache(maxsize=16)
def _transition_matrix(dt: float) -> np.ndarray:
    eye = np.eye(3)
    zero = np.zeros((3, 3))
    return np.block([
        [eye, dt * eye, (dt / 2.0) * eye],
        [zero, eye, dt * eye],
        [zero, zero, eye],
    ])


def heading_toward_bs(p: np.ndarray, speed: float, azimuth_offset: float = 0.0,
                      elevation: float = 0.0) -> np.ndarray:
    """Velocity pointing horizontally at the BS, rotated by the given angles (rad)."""
    az = np.arctan2(-p[1], -p[0]) + azimuth_offset
    return speed * np.array([np.cos(elevation) * np.cos(az),
                             np.cos(elevation) * np.sin(az),
                             np.sin(elevation)])


def generate_initial_states(config: ScenarioConfig, rng: np.random.Generator) -> list[UavState]:
    config.validate()
    K, r = config.K, config.radius
    if config.altitude_band is None:
        lo, hi = min(config.altitude_floor, r / 2), r
    else:
        lo, hi = config.altitude_band
    # Archimedes: uniform altitude gives uniform area on the sphere.
    z = rng.uniform(lo, hi, size=K)
    az = rng.uniform(-np.pi, np.pi, size=K)
    rho = np.sqrt(r ** 2 - z ** 2)
    az_jit = np.deg2rad(config.heading_azimuth_jitter)
    el_jit = np.deg2rad(config.heading_elevation_jitter)
    offsets = rng.uniform(-az_jit, az_jit, size=K)
    elevations = rng.uniform(-el_jit, el_jit, size=K)
    speeds = rng.uniform(config.speed_min, config.speed_max, size=K)

    states = []
    for k in range(K):
        p = np.array([rho[k] * np.cos(az[k]), rho[k] * np.sin(az[k]), z[k]])
        v = heading_toward_bs(p, speeds[k], offsets[k], elevations[k])
        states.append(UavState(p=p, v=v))
    return states


def evolve_state(x: UavState, dt: float, q: Optional[ProcessNoise],
                 rng: Optional[np.random.Generator] = None) -> UavState:
    """One step of x' = G x + u; ``q=None`` disables the excitation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xv = transition_matrix(dt) @ x.to_vector()
    if q is not None:
        if rng is None:
            raise ValueError("an rng is required when process noise is enabled")
        xv = xv + rng.standard_normal(9) * q.std_vector()
    return UavState.from_vector(xv)


def evolve_states(X: np.ndarray, dt: float, q: Optional[ProcessNoise],
                  rng: Optional[np.random.Generator], altitude_floor: Optional[float] = 1.0) -> np.ndarray:
    """Batch version of :func:`evolve_state` over a (K, 9) array.

    Rows whose altitude drops to ``altitude_floor`` are mirrored above it and
    their vertical velocity is made upward.
    """
    X = np.asarray(X, dtype=float) @ transition_matrix(dt).T
    if q is not None:
        X = X + rng.standard_normal(X.shape) * q.std_vector()
    if altitude_floor is not None:
        low = X[:, 2] <= altitude_floor
        if np.any(low):
            X[low, 2] = 2.0 * altitude_floor - X[low, 2]
            X[low, 5] = np.abs(X[low, 5])
    return X


def angles_of(p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Azimuth and elevation of position(s) ``p`` (..., 3)."""
    p = np.asarray(p, dtype=float)
    d = np.linalg.norm(p, axis=-1)
    phi = np.arctan2(p[..., 1], p[..., 0])
    # arctan2 returns -pi for (negative) zero ordinates; keep azimuth in (-pi, pi].
    phi = np.where(phi <= -np.pi, np.pi, phi)
    theta = np.arcsin(np.clip(p[..., 2] / d, -1.0, 1.0))
    return phi, theta


def true_observables(x: UavState, f_c: float) -> TrueObservables:
    d = float(np.linalg.norm(x.p))
    if d == 0.0:
        raise ValueError("observables undefined for a UAV at the BS position")
    range_rate = float(x.v @ x.p) / d
    gamma = range_rate * f_c / SPEED_OF_LIGHT
    phi, theta = angles_of(x.p)
    return TrueObservables(tau=2.0 * d / SPEED_OF_LIGHT, mu=2.0 * gamma, gamma=gamma,
                           phi=float(phi), theta=float(theta), d=d, range_rate=range_rate)


def states_to_array(states: Sequence[UavState]) -> np.ndarray:
    return np.stack([s.to_vector() for s in states])

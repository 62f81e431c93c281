"""UPA steering vectors, air-to-ground channel statistics and link metrics."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class UpaGeometry:
    nx: int
    ny: int
    role: str = "bs_tx"  # bs_tx, bs_rx or uav_rx

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"UPA needs nx, ny >= 1, got {self.nx}x{self.ny}")

    @property
    def n(self) -> int:
        return self.nx * self.ny

    def index_grids(self):
        """(n_x - 1) and (n_y - 1) for every element in (n_y-1)*N_x + n_x order."""
        return _index_grids(self.nx, self.ny)

    @classmethod
    def square(cls, n: int, role: str = "bs_tx") -> "UpaGeometry":
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ValueError(f"{n} antennas do not form a square array")
        return cls(side, side, role)


@functools.lru_cache(maxsize=32)
def _index_grids(nx: int, ny: int):
    ix = np.tile(np.arange(nx), ny).astype(float)
    iy = np.repeat(np.arange(ny), nx).astype(float)
    ix.flags.writeable = False
    iy.flags.writeable = False
    return ix, iy


def element_phases(phi, theta, geom: UpaGeometry) -> np.ndarray:
    """Phase argument pi*sin(theta)*[(n_x-1)cos(phi) + (n_y-1)sin(phi)], shape (..., N)."""
    ix, iy = geom.index_grids()
    phi = np.asarray(phi, dtype=float)[..., None]
    theta = np.asarray(theta, dtype=float)[..., None]
    return np.pi * np.sin(theta) * (ix * np.cos(phi) + iy * np.sin(phi))


def steering_vector(phi, theta, geom: UpaGeometry) -> np.ndarray:
    """Unit-norm UPA response; broadcasts over leading angle dimensions."""
    return np.exp(1j * element_phases(phi, theta, geom)) / np.sqrt(geom.n)


def beam_response(phi, theta, beam_phi, beam_theta, geom: UpaGeometry) -> np.ndarray:
    """a^H(phi, theta) a(beam_phi, beam_theta), vectorised over leading dims."""
    a = steering_vector(phi, theta, geom)
    f = steering_vector(beam_phi, beam_theta, geom)
    return np.sum(np.conj(a) * f, axis=-1)


@dataclass(frozen=True)
class ChannelParams:
    A1: float = -0.4568
    A2: float = 0.0470
    A3: float = -0.63
    A4: float = 1.63
    KR_min_db: float = 0.0
    KR_max_db: float = 30.0
    sigma_beta: float = 1.0
    f_c: float = 28e9
    clusters: int = 3
    paths_per_cluster: int = 4
    # Draw a per-link LoS/NLoS state once per trial; False keeps every link LoS.
    blockage: bool = True

    def __post_init__(self):
        if self.A2 <= 0:
            raise ValueError("A2 must be positive")
        if self.KR_max_db < self.KR_min_db:
            raise ValueError("KR_max_db must be >= KR_min_db")

    @property
    def B1(self) -> float:
        return 10.0 ** (self.KR_min_db / 10.0)

    @property
    def B2(self) -> float:
        return (2.0 / np.pi) * np.log(10.0 ** ((self.KR_max_db - self.KR_min_db) / 10.0))


def los_probability(theta_deg, params: ChannelParams, clamp: bool = True):
    """Generalised logistic LoS probability of the elevation angle in degrees."""
    theta_deg = np.asarray(theta_deg, dtype=float)
    p = params.A3 + params.A4 / (1.0 + np.exp(-params.A1 - params.A2 * (90.0 - theta_deg)))
    if clamp:
        p = np.clip(p, 0.0, 1.0)
    return p if p.ndim else float(p)


def rician_factor(theta, params: ChannelParams):
    """Linear K-factor B1*exp(B2*(pi/2 - theta)) for elevation ``theta`` in radians."""
    k = params.B1 * np.exp(params.B2 * (np.pi / 2.0 - np.asarray(theta, dtype=float)))
    return k if np.ndim(k) else float(k)


@dataclass
class ChannelRealization:
    """One fading draw of a BS->UAV link, reusable across beam probes.

    The UAV-side response is evaluated with the UAV's own steering vector;
    ``uav_geom=None`` treats the UAV receive beam as perfectly aligned on the
    LoS path and ignores its NLoS pickup beyond the path amplitude.
    """

    phi: float
    theta: float
    uav_phi: float
    uav_theta: float
    rician_k: float
    beta: complex
    nlos_gain: np.ndarray  # (C*P,) complex
    nlos_phi: np.ndarray
    nlos_theta: np.ndarray
    nlos_uav_phi: np.ndarray
    nlos_uav_theta: np.ndarray
    tx_geom: UpaGeometry
    uav_geom: Optional[UpaGeometry] = None

    def gain(self, beam_phi: float, beam_theta: float,
             uav_beam_phi: Optional[float] = None, uav_beam_theta: Optional[float] = None) -> complex:
        K = self.rician_k
        if np.isinf(K):
            los_w, nlos_w = 1.0, 0.0
        else:
            los_w, nlos_w = np.sqrt(K / (K + 1.0)), np.sqrt(1.0 / (K + 1.0))

        los = self.beta * beam_response(self.phi, self.theta, beam_phi, beam_theta, self.tx_geom)
        uav_aligned = uav_beam_phi is None or self.uav_geom is None
        if not uav_aligned:
            los = los * np.conj(beam_response(self.uav_phi, self.uav_theta,
                                              uav_beam_phi, uav_beam_theta, self.uav_geom))
        if nlos_w == 0.0 or self.nlos_gain.size == 0:
            return complex(los_w * los)

        tx = beam_response(self.nlos_phi, self.nlos_theta, beam_phi, beam_theta, self.tx_geom)
        if self.uav_geom is not None:
            if uav_aligned:
                w_phi, w_theta = self.uav_phi, self.uav_theta
            else:
                w_phi, w_theta = uav_beam_phi, uav_beam_theta
            rx = np.conj(beam_response(self.nlos_uav_phi, self.nlos_uav_theta,
                                       w_phi, w_theta, self.uav_geom))
        else:
            rx = 1.0
        nlos = np.sum(self.nlos_gain * rx * tx)
        return complex(los_w * los + nlos_w * nlos)

    def gain_matrix(self, bs_beams: np.ndarray, uav_beams: np.ndarray) -> np.ndarray:
        """Gains for every (BS beam, UAV beam) pair; beams are (B, 2) / (U, 2) angle rows."""
        if self.uav_geom is None:
            raise ValueError("gain_matrix needs the UAV array geometry")
        K = self.rician_k
        if np.isinf(K):
            los_w, nlos_w = 1.0, 0.0
        else:
            los_w, nlos_w = np.sqrt(K / (K + 1.0)), np.sqrt(1.0 / (K + 1.0))
        bs_beams = np.asarray(bs_beams, dtype=float)
        uav_beams = np.asarray(uav_beams, dtype=float)
        a = steering_vector(self.phi, self.theta, self.tx_geom)
        u = steering_vector(self.uav_phi, self.uav_theta, self.uav_geom)
        F = steering_vector(bs_beams[:, 0], bs_beams[:, 1], self.tx_geom)  # (B, N)
        W = steering_vector(uav_beams[:, 0], uav_beams[:, 1], self.uav_geom)  # (U, Nu)
        tx = F @ np.conj(a)  # a^H f per BS beam
        rx = np.conj(W @ np.conj(u))  # w^H u per UAV beam
        G = los_w * self.beta * np.outer(tx, rx)
        if nlos_w > 0 and self.nlos_gain.size:
            An = steering_vector(self.nlos_phi, self.nlos_theta, self.tx_geom)  # (P, N)
            Un = steering_vector(self.nlos_uav_phi, self.nlos_uav_theta, self.uav_geom)
            tx_n = F @ np.conj(An).T  # (B, P)
            rx_n = np.conj(W @ np.conj(Un).T)  # (U, P)
            G = G + nlos_w * (tx_n * self.nlos_gain) @ rx_n.T
        return G


def _hemisphere_angles(rng: np.random.Generator, n: int):
    phi = rng.uniform(-np.pi, np.pi, size=n)
    theta = np.arcsin(rng.uniform(0.0, 1.0, size=n))
    return phi, theta


def complex_gaussian(rng: np.random.Generator, std: float, size=None):
    """Zero-mean circular complex Gaussian with E|x|^2 = std**2."""
    scale = std / np.sqrt(2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw_channel(phi: float, theta: float, tx_geom: UpaGeometry, rician_k: float,
                 params: ChannelParams, rng: np.random.Generator,
                 uav_geom: Optional[UpaGeometry] = None, beta: Optional[complex] = None,
                 uav_phi: Optional[float] = None, uav_theta: Optional[float] = None) -> ChannelRealization:
    n_paths = params.clusters * params.paths_per_cluster
    if beta is None:
        beta = complex(complex_gaussian(rng, params.sigma_beta))
    # Total NLoS power normalised to one across all C*P paths.
    gains = complex_gaussian(rng, 1.0 / np.sqrt(max(n_paths, 1)), size=n_paths)
    n_phi, n_theta = _hemisphere_angles(rng, n_paths)
    u_phi, u_theta = _hemisphere_angles(rng, n_paths)
    if uav_phi is None:
        uav_phi = float(np.angle(-np.exp(1j * phi)))
    if uav_theta is None:
        uav_theta = theta
    return ChannelRealization(phi=phi, theta=theta, uav_phi=uav_phi, uav_theta=uav_theta,
                              rician_k=rician_k, beta=beta, nlos_gain=gains,
                              nlos_phi=n_phi, nlos_theta=n_theta,
                              nlos_uav_phi=u_phi, nlos_uav_theta=u_theta,
                              tx_geom=tx_geom, uav_geom=uav_geom)


def channel_gain(true_angles, beamformer_angles, tx_geom: UpaGeometry, rician_k: float,
                 rng: np.random.Generator, params: Optional[ChannelParams] = None,
                 uav_geom: Optional[UpaGeometry] = None, beta: Optional[complex] = None) -> complex:
    """Composite gain sqrt(K/(K+1)) beta a^H f + sqrt(1/(K+1)) * NLoS aggregate."""
    params = params or ChannelParams()
    phi, theta = true_angles
    chan = draw_channel(phi, theta, tx_geom, rician_k, params, rng, uav_geom=uav_geom, beta=beta)
    return chan.gain(*beamformer_angles)


def receive_snr(p_tx, gain_chain, kappa, sigma_r):
    if sigma_r <= 0:
        raise ValueError("noise std must be positive")
    if np.any(np.asarray(p_tx) < 0):
        raise ValueError("transmit power must be non-negative")
    return p_tx * np.abs(kappa * np.asarray(gain_chain)) ** 2 / sigma_r ** 2


def achievable_rate(snrs) -> float:
    """Average log2(1 + SNR) in bits/s/Hz over the K links."""
    snrs = np.asarray(snrs, dtype=float)
    if snrs.size == 0:
        raise ValueError("achievable_rate needs at least one link")
    if np.any(snrs < 0):
        raise ValueError("SNR must be non-negative")
    return float(np.mean(np.log2(1.0 + snrs)))


def cross_gain(phis, thetas, beam_phis, beam_thetas, geom: UpaGeometry) -> np.ndarray:
    """Residual inter-beam leakage sum_{k' != k} |a_k^H f_k'| per UAV (diagnostic)."""
    a = steering_vector(phis, thetas, geom)  # (K, N)
    f = steering_vector(beam_phis, beam_thetas, geom)
    g = np.abs(np.conj(a) @ f.T)
    return g.sum(axis=1) - np.diag(g)

"""Beam codebooks, vision-guided potential beam sets and IA delay models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .array_channel import ChannelRealization

SCHEMES = ("proposed", "exhaustive", "iterative", "pi_bs", "pi_uav")


@dataclass(frozen=True)
class Codebook:
    """Quantised (azimuth, elevation) grid; entries are elevation-major.

    Entry ``it * L + ip`` holds ``(phis[ip], thetas[it])`` with ``L = 2**(Q/2)``.
    """

    Q: int
    phis: np.ndarray
    thetas: np.ndarray

    @property
    def per_axis(self) -> int:
        return len(self.phis)

    @property
    def size(self) -> int:
        return self.per_axis ** 2

    @property
    def spacing(self) -> float:
        return math.pi / self.per_axis

    def entry(self, index: int) -> Tuple[float, float]:
        it, ip = divmod(int(index), self.per_axis)
        return float(self.phis[ip]), float(self.thetas[it])

    def entries(self) -> np.ndarray:
        """(2**Q, 2) array of (phi, theta)."""
        P, T = np.meshgrid(self.phis, self.thetas)
        return np.stack([P.ravel(), T.ravel()], axis=1)


def build_codebook(Q: int) -> Codebook:
    if Q < 2 or Q % 2:
        raise ValueError(f"phase-control bits must be even and >= 2, got {Q}")
    L = 2 ** (Q // 2)
    grid = np.arange(L) * math.pi / L
    return Codebook(Q, grid.copy(), grid.copy())


@dataclass(frozen=True)
class PotentialBeamSet:
    indices: Tuple[int, ...]
    nearest: int

    @property
    def S(self) -> int:
        return len(self.indices)


def nearest_entry(codebook: Codebook, phi: float, theta: float) -> int:
    L = codebook.per_axis
    ip = int(np.clip(np.rint(phi / codebook.spacing), 0, L - 1))
    it = int(np.clip(np.rint(theta / codebook.spacing), 0, L - 1))
    return it * L + ip


def potential_set(codebook: Codebook, sensed_phi: float, sensed_theta: float, S: int) -> PotentialBeamSet:
    """Nearest grid entry plus ceil((S-1)/2) successors and the rest predecessors.

    At the ends of the index range the window slides so exactly S entries
    are returned.
    """
    total = codebook.size
    if not 1 <= S <= total:
        raise ValueError(f"cardinality must be in [1, {total}], got {S}")
    g = nearest_entry(codebook, sensed_phi, sensed_theta)
    up = math.ceil((S - 1) / 2)
    down = S - up - 1
    if g + up > total - 1:
        shift = g + up - (total - 1)
        up -= shift
        down += shift
    if g - down < 0:
        shift = down - g
        down -= shift
        up += shift
    indices = [g] + [g + k for k in range(1, up + 1)] + [g - k for k in range(1, down + 1)]
    return PotentialBeamSet(tuple(indices), g)


def ia_delay(scheme: str, Q_B: int, Q_U: int, S1: int = 2, S2: int = 2, T_p: float = 5.0,
             proposed_variant: str = "with-ra") -> float:
    """Closed-form worst-case IA delay in ms.

    ``proposed_variant="scan-only"`` counts S1*S2 probe slots without the
    random-access sweep.
    """
    if min(Q_B, Q_U, S1, S2) <= 0 or T_p <= 0:
        raise ValueError("IA delay parameters must be positive")
    n_b, n_u = 2 ** Q_B, 2 ** Q_U
    if scheme == "proposed":
        if proposed_variant == "scan-only":
            return float(S1 * S2 * T_p)
        return float(S1 * (S2 + 1) * T_p)
    if scheme == "exhaustive":
        return float((n_b + 1) * n_u * T_p)
    if scheme == "iterative":
        return float((n_b + 1) * n_u * T_p / 4.0)
    if scheme == "pi_bs":
        return float(n_b * T_p)
    if scheme == "pi_uav":
        return float(n_u * T_p)
    raise ValueError(f"unknown IA scheme {scheme!r}")


@dataclass(frozen=True)
class IaConfig:
    Q_B: int = 4
    Q_U: int = 4
    S1: int = 2
    S2: int = 2
    T_p: float = 5.0  # ms
    threshold_db: float = 10.0
    proposed_variant: str = "with-ra"


@dataclass(frozen=True)
class IaOutcome:
    scheme: str
    delay: float  # ms
    success: bool
    bs_beam: Optional[int] = None
    uav_beam: Optional[int] = None
    best_snr: float = 0.0
    probes: int = 0


def _pair_snr(channel: ChannelRealization, cb_b: Codebook, cb_u: Codebook, bs_idx, uav_idx,
              p_tx: float, kappa: float, sigma_r: float) -> np.ndarray:
    bs_beams = cb_b.entries()[list(bs_idx)]
    uav_beams = cb_u.entries()[list(uav_idx)]
    g = channel.gain_matrix(bs_beams, uav_beams)
    return p_tx * np.abs(kappa * g) ** 2 / sigma_r ** 2


def simulate_ia(scheme: str, channel: ChannelRealization, config: IaConfig,
                sensed_bs_angles: Tuple[float, float], sensed_uav_angles: Tuple[float, float],
                p_tx: float = 1.0, sigma_r: float = 1.0) -> IaOutcome:
    """Walk the PSS/RA probe sequence of one scheme on a fixed channel draw.

    ``sensed_bs_angles`` is the UAV direction as seen by the BS (camera or
    position prior); ``sensed_uav_angles`` the BS direction as seen by the UAV.
    Every scheme sweeps its full probe set, so the delay is its analytic
    worst case; success means the best probed SNR clears the threshold.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown IA scheme {scheme!r}")
    cb_b = build_codebook(config.Q_B)
    cb_u = build_codebook(config.Q_U)
    all_b = range(cb_b.size)
    all_u = range(cb_u.size)
    near_b = nearest_entry(cb_b, *sensed_bs_angles)
    near_u = nearest_entry(cb_u, *sensed_uav_angles)

    if scheme == "proposed":
        bs_idx = potential_set(cb_b, *sensed_bs_angles, config.S1).indices
        uav_idx = potential_set(cb_u, *sensed_uav_angles, config.S2).indices
    elif scheme in ("exhaustive",):
        bs_idx, uav_idx = tuple(all_b), tuple(all_u)
    elif scheme == "pi_bs":
        # UAV knows where the BS is; the BS sweeps its codebook.
        bs_idx, uav_idx = tuple(all_b), (near_u,)
    elif scheme == "pi_uav":
        bs_idx, uav_idx = (near_b,), tuple(all_u)
    else:
        # Iterative search runs on the UAV side only; the BS holds its prior beam.
        bs_idx, uav_idx = (near_b,), tuple(all_u)

    kappa = math.sqrt(channel.tx_geom.n * (channel.uav_geom.n if channel.uav_geom else 1))
    snr = _pair_snr(channel, cb_b, cb_u, bs_idx, uav_idx, p_tx, kappa, sigma_r)
    a, b = np.unravel_index(int(np.argmax(snr)), snr.shape)
    best = float(snr[a, b])
    delay = ia_delay(scheme, config.Q_B, config.Q_U, config.S1, config.S2, config.T_p,
                     config.proposed_variant)
    success = best >= 10.0 ** (config.threshold_db / 10.0)
    return IaOutcome(scheme=scheme, delay=delay, success=success,
                     bs_beam=int(bs_idx[a]) if success else None,
                     uav_beam=int(uav_idx[b]) if success else None,
                     best_snr=best, probes=int(round(delay / config.T_p)))

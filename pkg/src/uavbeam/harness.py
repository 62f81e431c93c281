"""Per-slot sense/associate/track/beamform loop and the Monte Carlo runner.

One :class:`World` owns every piece of mutable state of a trial: the true
UAV states, the EKF banks, the covariance window and the RNG. Trials are
independent, and results are always reduced in trial-index order.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .array_channel import (UpaGeometry, complex_gaussian, draw_channel, los_probability,
                            rician_factor, steering_vector)
from .association import (CovarianceWindow, FeatureSet, WeightVector, characteristic_distances,
                          cost_from_distances, dynamic_weights_from_distances, fixed_weights,
                          solve_assignment)
from .config import SimConfig, Variant
from .initial_access import SCHEMES, simulate_ia
from .scenario import SPEED_OF_LIGHT, angles_of, evolve_states, generate_initial_states, states_to_array
from .sensing import (SensingMode, observe_pid, radar_noise_variances, reflection_coefficient,
                      sensing_source, vision_noise_variances)
from .tracking import (ECHO_COMPLEX, ECHO_REAL, RANGE_DOPPLER, EkfBank, MeasurementConstants,
                       echo_measurement_covariance, initial_covariance, jacobian_batch,
                       measurement_batch, process_covariance)

BASE_SCHEMES = ("perfect", "oracle", "feedback")
_TINY_GAIN = 1e-12


def wrap_angle(x):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), 2.0 * np.pi)


def scheme_names(variants: Sequence[Variant]) -> Tuple[str, ...]:
    return BASE_SCHEMES + tuple(f"dia:{v.label}" for v in variants)


@dataclass
class SlotRecord:
    slot: int
    mode: SensingMode
    accuracy: np.ndarray  # (V,)
    rates: np.ndarray  # (S,) bits/s/Hz
    weights: np.ndarray  # (M,) normalised dynamic weights of the primary metric
    sq_err: np.ndarray  # (2 banks, 2 angles, K) squared beam-angle errors
    distance: np.ndarray  # (K,) true ranges
    solver_ns: np.ndarray  # (V,)
    track_of_uav: np.ndarray  # (V, K) track index given to each UAV's echo


@dataclass
class TrialMetrics:
    n_t: int
    variants: Tuple[str, ...]
    schemes: Tuple[str, ...]
    accuracy: np.ndarray  # (V, N)
    rates: np.ndarray  # (S, N)
    weights: np.ndarray  # (N, M)
    angle_sq: np.ndarray  # (2, 2, N) UAV-averaged squared errors [isac|feedback][phi|theta]
    window_sq: np.ndarray  # (2, 2) squared errors inside each UAV's closest-approach window
    closest_slot: float  # mean closest-approach slot
    solver_seconds: np.ndarray  # (V,) mean time per solve
    ia_delay: Dict[str, float]
    ia_success: Dict[str, float]

    def __post_init__(self):
        if np.any(self.accuracy < 0) or np.any(self.accuracy > 1):
            raise ValueError("accuracy must lie in [0, 1]")
        if np.any(self.rates < 0):
            raise ValueError("rates must be non-negative")


class _SlotChannel:
    """Fading draw shared by every rate scheme within one slot (UAV beam on LoS)."""

    def __init__(self, phi, theta, cfg: SimConfig, tx_geom: UpaGeometry, uav_geom: UpaGeometry,
                 rng: np.random.Generator, los: np.ndarray):
        K = phi.shape[0]
        params = cfg.channel
        n_paths = params.clusters * params.paths_per_cluster
        Kr = rician_factor(theta, params)
        # Blocked links keep only the scattered paths.
        self.los_w = np.where(los, np.sqrt(Kr / (Kr + 1.0)), 0.0)
        self.nlos_w = np.where(los, np.sqrt(1.0 / (Kr + 1.0)), 1.0)
        self.beta = complex_gaussian(rng, params.sigma_beta, size=K)
        self.a = steering_vector(phi, theta, tx_geom)  # (K, N)
        self.tx_geom = tx_geom
        if n_paths:
            g = complex_gaussian(rng, 1.0 / np.sqrt(n_paths), size=(K, n_paths))
            n_phi = rng.uniform(-np.pi, np.pi, size=(K, n_paths))
            n_theta = np.arcsin(rng.uniform(0.0, 1.0, size=(K, n_paths)))
            u_phi = rng.uniform(-np.pi, np.pi, size=(K, n_paths))
            u_theta = np.arcsin(rng.uniform(0.0, 1.0, size=(K, n_paths)))
            # UAV receive beam on the LoS direction of arrival.
            w = steering_vector(wrap_angle(phi + np.pi), theta, uav_geom)  # (K, Nu)
            un = steering_vector(u_phi, u_theta, uav_geom)  # (K, P, Nu)
            rx = np.einsum("kn,kpn->kp", np.conj(w), un)
            self.an = steering_vector(n_phi, n_theta, tx_geom)  # (K, P, N)
            self.nlos_coef = g * rx
        else:
            self.an = None
        self.kappa2 = tx_geom.n * uav_geom.n

    def gains_diag_rows(self, F: np.ndarray) -> np.ndarray:
        """Gain of UAV (r mod K) under beam row r of ``F``."""
        K = self.a.shape[0]
        reps = F.shape[0] // K
        Fr = F.reshape(reps, K, -1)
        g = (self.los_w * self.beta) * np.einsum("kn,rkn->rk", np.conj(self.a), Fr)
        if self.an is not None:
            tx = np.einsum("kpn,rkn->rkp", np.conj(self.an), Fr)
            g = g + self.nlos_w * np.einsum("kp,rkp->rk", self.nlos_coef, tx)
        return g.reshape(-1)

    def gains_full_rows(self, F: np.ndarray) -> np.ndarray:
        """(K, J) gain of UAV k under beam j."""
        g = (self.los_w * self.beta)[:, None] * (np.conj(self.a) @ F.T)
        if self.an is not None:
            tx = np.einsum("kpn,jn->kpj", np.conj(self.an), F)
            g = g + self.nlos_w[:, None] * np.einsum("kp,kpj->kj", self.nlos_coef, tx)
        return g

    def snr(self, gain, p_tx: float, sigma_r: float) -> np.ndarray:
        return p_tx * self.kappa2 * np.abs(gain) ** 2 / sigma_r ** 2


def _rate(snr) -> float:
    return float(np.mean(np.log2(1.0 + snr)))


class World:
    """State of one trial at one N_t.

    All filters live in one stacked bank: rows ``[0, K)`` are the ISAC
    tracks, ``[K, 2K)`` the feedback baseline and, in closed-loop mode,
    ``[2K, 3K)`` the tracks driven by the primary association.
    """

    def __init__(self, cfg: SimConfig, n_t: int, rng: np.random.Generator,
                 oracle_association: bool = False,
                 forced: Optional[Dict[int, np.ndarray]] = None):
        self.cfg = cfg
        self.rng = rng
        sc = cfg.scenario
        K = self.K = sc.K
        self.n_t = n_t
        self.tx_geom = cfg.antennas.tx_geometry(n_t)
        self.uav_geom = cfg.antennas.uav_geometry()
        self.n_rb = cfg.antennas.n_rb(n_t)
        self.consts = MeasurementConstants(cfg.f_c, self.tx_geom, self.n_rb)
        self.variants = cfg.association.all_variants
        self.schemes = scheme_names(self.variants)
        self.oracle_association = oracle_association
        # forced[slot] = track index handed to each UAV's echo, primary variant only.
        self.forced = forced or {}
        self.slot = 0

        self.X = states_to_array(generate_initial_states(sc, rng))
        self.Qs = process_covariance(sc.process_noise.sigma_p, sc.process_noise.sigma_v,
                                     sc.process_noise.sigma_a)
        phi0, theta0 = angles_of(self.X[:, 0:3])
        if cfg.channel.blockage:
            p_los = los_probability(np.degrees(theta0), cfg.channel)
            self.los = rng.random(K) < p_los
        else:
            self.los = np.ones(K, dtype=bool)
        self.ia_outcomes = self._initial_access() if cfg.ia.enabled else {}

        tc = cfg.tracking
        self.closed_loop = cfg.association.tracking_driver == "closed_loop"
        n_banks = 3 if self.closed_loop else 2
        X0 = self._vision_prior()
        M0 = initial_covariance(tc.init_pos_std, tc.init_vel_std, tc.init_acc_std)
        self.bank = EkfBank(np.tile(X0, (n_banks, 1)), M0)
        self._post_angles = angles_of(self.bank.X[:, 0:3])
        self.G_rows = np.repeat([cfg.radar.G, tc.feedback_gain, cfg.radar.G][:n_banks], K)
        self._fb_beams = deque(maxlen=tc.feedback_staleness + 1)
        self.cov_window = CovarianceWindow(cfg.association.covariance_window)
        self.channels = ECHO_COMPLEX if tc.echo_channels == "complex" else ECHO_REAL

    @property
    def isac_X(self) -> np.ndarray:
        return self.bank.X[:self.K]

    # -- trial start --------------------------------------------------------

    def _vision_prior(self) -> np.ndarray:
        v = self.cfg.vision
        P, V = self.X[:, 0:3], self.X[:, 3:6]
        d = np.linalg.norm(P, axis=1)
        rr = np.sum(P * V, axis=1) / d
        d_hat = d + v.distance_mean + v.distance_std * self.rng.standard_normal(self.K)
        rr_hat = rr + v.velocity_mean + v.velocity_std * self.rng.standard_normal(self.K)
        pos, vel = observe_pid(P, V, d_hat, rr_hat, v.angle_std, v.tangential_velocity_std, self.rng)
        return np.concatenate([pos, vel, np.zeros((self.K, 3))], axis=1)

    def _initial_access(self) -> Dict[str, List]:
        cfg = self.cfg
        phi, theta = angles_of(self.X[:, 0:3])
        s = cfg.vision.angle_std
        out: Dict[str, List] = {name: [] for name in SCHEMES}
        for k in range(self.K):
            Kr = rician_factor(theta[k], cfg.channel) if self.los[k] else 0.0
            chan = draw_channel(float(phi[k]), float(theta[k]), self.tx_geom, Kr, cfg.channel,
                                self.rng, uav_geom=self.uav_geom)
            e = s * self.rng.standard_normal(4)
            bs_view = (float(phi[k] + e[0]), float(theta[k] + e[1]))
            uav_view = (float(chan.uav_phi + e[2]), float(chan.uav_theta + e[3]))
            for name in SCHEMES:
                out[name].append(simulate_ia(name, chan, cfg.ia.config, bs_view, uav_view,
                                             cfg.p_tx, cfg.sigma_r))
        return out

    # -- sensing ------------------------------------------------------------

    def _radar(self, A_true, F, d, rr):
        """Echo parameters for every row: UAV direction ``A_true``, beam ``F``."""
        resp = np.sum(np.conj(A_true) * F, axis=1)
        gain = np.abs(resp) ** 2
        valid = gain > _TINY_GAIN
        tau = 2.0 * d / SPEED_OF_LIGHT
        mu = 2.0 * rr * self.cfg.f_c / SPEED_OF_LIGHT
        beta = reflection_coefficient(tau, self.cfg.radar.xi)
        var_tau, var_mu, var_c = radar_noise_variances(beta, np.where(valid, gain, 1.0), self.cfg.p_tx,
                                                       self.cfg.radar, self.n_t, self.n_rb,
                                                       G=self.G_rows)
        z = self.rng.standard_normal((d.shape[0], 4))
        tau_hat = tau + np.sqrt(var_tau) * z[:, 0]
        mu_hat = mu + np.sqrt(var_mu) * z[:, 1]
        c = (np.sqrt(self.n_t * self.n_rb) * beta * resp
             + np.sqrt(var_c / 2.0) * (z[:, 2] + 1j * z[:, 3]))
        return tau_hat, mu_hat, c, valid

    def _vision(self, d, rr):
        v = self.cfg.vision
        n = d.shape[0]
        d_hat = d + v.distance_mean + v.distance_std * self.rng.standard_normal(n)
        rr_hat = rr + v.velocity_mean + v.velocity_std * self.rng.standard_normal(n)
        return 2.0 * d_hat / SPEED_OF_LIGHT, 2.0 * rr_hat * self.cfg.f_c / SPEED_OF_LIGHT

    def _update(self, bphi, btheta, tau_hat, mu_hat, c, valid, mode: SensingMode):
        """EKF update of every row of the stacked bank with its own measurement."""
        X = self.bank.X
        rows = np.flatnonzero(valid & (X[:, 0] ** 2 + X[:, 1] ** 2 > 1e-12) & (tau_hat > 0))
        if rows.size == 0:
            return
        Xr = X[rows]
        bphi, btheta = bphi[rows], btheta[rows]
        if mode is SensingMode.RADAR:
            ch = list(self.channels)
            beta_hat = reflection_coefficient(tau_hat[rows], self.cfg.radar.xi)
            if self.cfg.tracking.qm_gain == "echo":
                # Beam gain read off the echo amplitude itself.
                g_est = np.abs(c[rows]) ** 2 / (self.n_t * self.n_rb * beta_hat ** 2)
            else:
                # Previous posterior direction seen through the current beam.
                pphi, ptheta = self._post_angles
                a_post = steering_vector(pphi[rows], ptheta[rows], self.tx_geom)
                F = steering_vector(bphi, btheta, self.tx_geom)
                g_est = np.abs(np.sum(np.conj(a_post) * F, axis=1)) ** 2
            g_est = np.clip(g_est, self.cfg.tracking.gain_floor, 1.0)
            var_tau, var_mu, var_c = radar_noise_variances(beta_hat, g_est, self.cfg.p_tx,
                                                           self.cfg.radar, self.n_t, self.n_rb,
                                                           G=self.G_rows[rows])
            Qm = echo_measurement_covariance(var_tau, var_mu, var_c, ch)
            Y = np.stack([tau_hat[rows], mu_hat[rows], c[rows].real, c[rows].imag], axis=1)[:, ch]
        else:
            ch = list(RANGE_DOPPLER)
            beta_hat = None
            vt, vm = vision_noise_variances(self.cfg.vision, self.cfg.f_c)
            Qm = np.tile([vt, vm], (rows.size, 1))
            Y = np.stack([tau_hat[rows], mu_hat[rows]], axis=1)
        Y_pred = measurement_batch(Xr, bphi, btheta, self.consts, beta=beta_hat)[:, ch]
        H = jacobian_batch(Xr, bphi, btheta, self.consts, self.cfg.tracking.jacobian_mode,
                           beta=beta_hat)[:, ch, :]
        self.bank.update(Y, Qm, H, Y_pred, joseph=self.cfg.tracking.joseph, rows=rows)
        self._post_angles = angles_of(self.bank.X[:, 0:3])

    # -- association --------------------------------------------------------

    def _associate(self, pid_pos, pid_vel, pred_X):
        """Shadow-score every variant; returns accuracies, maps, weights and timings."""
        ac = self.cfg.association
        K = self.K
        order = self.rng.permutation(K) if ac.shuffle else np.arange(K)
        meas = FeatureSet((pid_pos[order], pid_vel[order]))
        pred = FeatureSet((pred_X[:, 0:3], pred_X[:, 3:6]))
        metrics = {v.metric for v in self.variants}
        sigmas = self.cov_window.push(meas) if "md" in metrics else None
        dists, dyn = {}, {}
        for m in sorted(metrics):
            s = sigmas if m == "md" else None
            dists[m] = characteristic_distances(meas, pred, m, s)
            if K >= 2:
                within = characteristic_distances(meas, meas, m, s)
                dyn[m] = dynamic_weights_from_distances(within, ac.distinguishability)
            else:
                dyn[m] = fixed_weights("static", meas.M)
        V = len(self.variants)
        acc = np.empty(V)
        maps = np.empty((V, K), dtype=int)
        solver_ns = np.empty(V)
        for i, var in enumerate(self.variants):
            w: WeightVector = dyn[var.metric] if var.weights == "dynamic" else fixed_weights(var.weights, meas.M)
            D = np.asarray(cost_from_distances(dists[var.metric], w, ac.cost_mode), dtype=float)
            t0 = time.perf_counter_ns()
            A = solve_assignment(D, var.solver, ac.auction_epsilon)
            solver_ns[i] = time.perf_counter_ns() - t0
            track_of_uav = np.empty(K, dtype=int)
            track_of_uav[order] = A.cols
            if i == 0 and self.oracle_association:
                track_of_uav = np.arange(K)
            if i == 0 and self.slot in self.forced:
                track_of_uav = np.asarray(self.forced[self.slot], dtype=int)
            maps[i] = track_of_uav
            acc[i] = np.mean(track_of_uav == np.arange(K))
        return acc, maps, dyn[self.variants[0].metric].normalized, solver_ns

    # -- one slot -----------------------------------------------------------

    def step(self) -> SlotRecord:
        cfg = self.cfg
        sc = cfg.scenario
        K = self.K
        ar = np.arange(K)
        # (1) truth and predictions
        self.X = evolve_states(self.X, sc.slot, sc.process_noise, self.rng, sc.altitude_floor)
        self.bank.predict(sc.slot, self.Qs)
        P, V = self.X[:, 0:3], self.X[:, 3:6]
        d = np.linalg.norm(P, axis=1)
        rr = np.sum(P * V, axis=1) / d
        phi, theta = angles_of(P)
        bphi, btheta = self.bank.beam_angles()
        self._fb_beams.append((bphi[K:2 * K].copy(), btheta[K:2 * K].copy()))
        # The feedback rows steer along the stale angles.
        bphi[K:2 * K], btheta[K:2 * K] = self._fb_beams[0]
        n_rows = self.bank.K
        F = steering_vector(bphi, btheta, self.tx_geom)  # (rows, N)
        A = steering_vector(phi, theta, self.tx_geom)  # (K, N)
        banks = n_rows // K

        # (2) sensing; every bank illuminates the UAV its track is named after
        mode = sensing_source(self.slot, cfg.drx)
        d_rows, rr_rows = np.tile(d, banks), np.tile(rr, banks)
        if mode is SensingMode.RADAR:
            tau_hat, mu_hat, c, valid = self._radar(np.tile(A, (banks, 1)), F, d_rows, rr_rows)
            angle_std, tan_std = cfg.radar.aoa_std, cfg.radar.tangential_velocity_std
        else:
            tau_hat, mu_hat = self._vision(d, rr)
            tau_hat, mu_hat = np.tile(tau_hat, banks), np.tile(mu_hat, banks)
            c, valid = None, np.ones(n_rows, dtype=bool)
            angle_std, tan_std = cfg.vision.angle_std, cfg.vision.tangential_velocity_std

        # (3)-(4) P-ID features and association on the ISAC echoes
        main = slice(2 * K, 3 * K) if self.closed_loop else slice(0, K)
        d_hat = tau_hat[main] * SPEED_OF_LIGHT / 2.0
        rr_hat = mu_hat[main] * SPEED_OF_LIGHT / (2.0 * cfg.f_c)
        pid_pos, pid_vel = observe_pid(P, V, d_hat, rr_hat, angle_std, tan_std, self.rng)
        acc, maps, weights, solver_ns = self._associate(pid_pos, pid_vel, self.bank.X[main])

        # (6) rates on one shared fading draw, from the beams formed before the update
        chan = _SlotChannel(phi, theta, cfg, self.tx_geom, self.uav_geom, self.rng, self.los)
        p, sr = cfg.p_tx, cfg.sigma_r
        rates = np.empty(len(self.schemes))
        snr_rows = chan.snr(chan.gains_diag_rows(F), p, sr)
        rates[0] = _rate(chan.snr(chan.gains_diag_rows(A), p, sr))
        oracle_snr = snr_rows[:K]
        rates[1] = _rate(oracle_snr)
        rates[2] = _rate(snr_rows[K:2 * K])
        physical = cfg.association.mismatch == "physical"
        full_snr = None
        for i in range(len(self.variants)):
            uav_of_track = np.argsort(maps[i])
            ok = uav_of_track == ar
            if i == 0 and self.closed_loop:
                link = snr_rows[2 * K:3 * K]
                rates[3] = _rate(link if physical else np.where(ok, link, 0.0))
            elif physical:
                if full_snr is None:
                    full_snr = chan.snr(chan.gains_full_rows(F[:K]), p, sr)
                # GUTI k's data goes out along the direction of the echo it was matched to.
                rates[3 + i] = _rate(full_snr[ar, uav_of_track])
            else:
                rates[3 + i] = _rate(np.where(ok, oracle_snr, 0.0))

        # (5) EKF updates; closed-loop tracks take the echo the association gave them
        if self.closed_loop:
            origin = np.argsort(maps[0])
            sel = np.concatenate([ar, ar + K, origin + 2 * K])
            tau_u, mu_u = tau_hat[sel], mu_hat[sel]
            c_u = None if c is None else c[sel]
            valid_u = valid[sel]
        else:
            tau_u, mu_u, c_u, valid_u = tau_hat, mu_hat, c, valid
        self._update(bphi, btheta, tau_u, mu_u, c_u, valid_u, mode)

        # (7) record
        sq = np.empty((2, 2, K))
        sq[0, 0] = wrap_angle(bphi[:K] - phi) ** 2
        sq[0, 1] = (btheta[:K] - theta) ** 2
        sq[1, 0] = wrap_angle(bphi[K:2 * K] - phi) ** 2
        sq[1, 1] = (btheta[K:2 * K] - theta) ** 2
        rec = SlotRecord(self.slot, mode, acc, rates, np.asarray(weights, dtype=float), sq, d,
                         solver_ns, maps)
        self.slot += 1
        return rec


def run_slot(world: World, config: Optional[SimConfig] = None) -> Tuple[World, SlotRecord]:
    if config is not None and config is not world.cfg:
        raise ValueError("world was built from a different config")
    rec = world.step()
    return world, rec


def _window_sq(sq: np.ndarray, distance: np.ndarray, half_width: int) -> np.ndarray:
    """Mean squared error inside each UAV's window around its closest approach."""
    N = sq.shape[0]
    closest = np.argmin(distance, axis=0)  # (K,)
    idx = np.arange(N)[:, None]
    mask = np.abs(idx - closest[None, :]) <= half_width  # (N, K)
    # sq: (N, 2, 2, K)
    return (sq * mask[:, None, None, :]).sum(axis=(0, 3)) / mask.sum()


def run_trial(cfg: SimConfig, n_t: int, seed, oracle_association: bool = False,
              forced: Optional[Dict[int, np.ndarray]] = None) -> TrialMetrics:
    rng = np.random.default_rng(seed)
    world = World(cfg, n_t, rng, oracle_association=oracle_association, forced=forced)
    N = cfg.scenario.horizon
    recs = [world.step() for _ in range(N)]
    accuracy = np.stack([r.accuracy for r in recs], axis=1)
    rates = np.stack([r.rates for r in recs], axis=1)
    weights = np.stack([r.weights for r in recs], axis=0)
    sq = np.stack([r.sq_err for r in recs], axis=0)  # (N, 2, 2, K)
    dist = np.stack([r.distance for r in recs], axis=0)  # (N, K)
    half = max(int(round(0.1 * N)), 1)
    solver = np.mean(np.stack([r.solver_ns for r in recs]), axis=0) * 1e-9
    ia_delay = {k: float(np.mean([o.delay for o in v])) for k, v in world.ia_outcomes.items()}
    ia_success = {k: float(np.mean([o.success for o in v])) for k, v in world.ia_outcomes.items()}
    return TrialMetrics(
        n_t=n_t, variants=tuple(v.label for v in world.variants), schemes=world.schemes,
        accuracy=accuracy, rates=rates, weights=weights,
        angle_sq=sq.mean(axis=3).transpose(1, 2, 0), window_sq=_window_sq(sq, dist, half),
        closest_slot=float(np.mean(np.argmin(dist, axis=0))), solver_seconds=solver,
        ia_delay=ia_delay, ia_success=ia_success)


# -- aggregation ---------------------------------------------------------------

def _mean_se(stack: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])


@dataclass
class Aggregate:
    """Trial-averaged metrics for one transmit array size."""

    n_t: int
    trials: int
    variants: Tuple[str, ...]
    schemes: Tuple[str, ...]
    accuracy: np.ndarray  # (V, N)
    accuracy_se: np.ndarray
    rates: np.ndarray  # (S, N)
    rates_se: np.ndarray
    weights: np.ndarray  # (N, M)
    weights_se: np.ndarray
    angle_rmse: np.ndarray  # (2, 2, N)
    window_rmse: np.ndarray  # (2, 2)
    closest_slot: float
    solver_seconds: np.ndarray  # (V,)
    solver_seconds_se: np.ndarray
    trial_accuracy: np.ndarray  # (T, V)
    trial_rate: np.ndarray  # (T, S)
    ia_delay: Dict[str, float]
    ia_success: Dict[str, float]

    def variant_index(self, label: str) -> int:
        return self.variants.index(label)

    def scheme_index(self, name: str) -> int:
        return self.schemes.index(name)

    def mean_accuracy(self, label: str) -> float:
        return float(self.trial_accuracy[:, self.variant_index(label)].mean())

    def mean_rate(self, name: str) -> float:
        return float(self.trial_rate[:, self.scheme_index(name)].mean())


def aggregate(trials: Sequence[TrialMetrics]) -> Aggregate:
    if not trials:
        raise ValueError("need at least one trial to aggregate")
    t0 = trials[0]
    acc = np.stack([t.accuracy for t in trials])
    rates = np.stack([t.rates for t in trials])
    w = np.stack([t.weights for t in trials])
    sq = np.stack([t.angle_sq for t in trials])
    win = np.stack([t.window_sq for t in trials])
    solver = np.stack([t.solver_seconds for t in trials])
    a_m, a_se = _mean_se(acc)
    r_m, r_se = _mean_se(rates)
    w_m, w_se = _mean_se(w)
    s_m, s_se = _mean_se(solver)
    return Aggregate(
        n_t=t0.n_t, trials=len(trials), variants=t0.variants, schemes=t0.schemes,
        accuracy=a_m, accuracy_se=a_se, rates=r_m, rates_se=r_se, weights=w_m, weights_se=w_se,
        angle_rmse=np.sqrt(sq.mean(axis=0)), window_rmse=np.sqrt(win.mean(axis=0)),
        closest_slot=float(np.mean([t.closest_slot for t in trials])),
        solver_seconds=s_m, solver_seconds_se=s_se,
        trial_accuracy=acc.mean(axis=2), trial_rate=rates.mean(axis=2),
        ia_delay={k: float(np.mean([t.ia_delay[k] for t in trials])) for k in t0.ia_delay},
        ia_success={k: float(np.mean([t.ia_success[k] for t in trials])) for k in t0.ia_success})


@dataclass
class MonteCarloResult:
    config: SimConfig
    by_nt: Dict[int, Aggregate] = field(default_factory=dict)

    @property
    def primary(self) -> Aggregate:
        return self.by_nt[self.config.antennas.tx_sizes[0]]


def trial_seeds(master_seed: int, trials: int) -> List[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(trials)


def _run_one(args) -> TrialMetrics:
    cfg, n_t, seed = args
    return run_trial(cfg, n_t, seed)


def run_monte_carlo(cfg: SimConfig, progress=None) -> MonteCarloResult:
    """Independent seeded trials per array size, reduced in trial-index order.

    Every array size reuses the same trial seeds, so geometries match across
    the sweep.
    """
    cfg.validate()
    seeds = trial_seeds(cfg.seed, cfg.trials)
    result = MonteCarloResult(cfg)
    for n_t in cfg.antennas.tx_sizes:
        jobs = [(cfg, n_t, s) for s in seeds]
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                trials = list(pool.map(_run_one, jobs))
        else:
            trials = []
            for i, job in enumerate(jobs):
                trials.append(_run_one(job))
                if progress is not None:
                    progress(n_t, i + 1, cfg.trials)
        result.by_nt[n_t] = aggregate(trials)
    return result

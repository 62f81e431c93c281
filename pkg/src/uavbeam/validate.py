"""Invariant suite behind the ``validate`` subcommand."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .array_channel import ChannelParams, UpaGeometry, los_probability, steering_vector
from .association import SOLVERS, FeatureSet, dynamic_weights, sameness_score, solve_assignment
from .config import SimConfig
from .harness import run_monte_carlo, run_trial
from .scenario import ScenarioConfig
from .sensing import RadarNoiseModel, radar_noise_variances, reflection_coefficient
from .tracking import (EkfBank, MeasurementConstants, echo_measurement_covariance, initial_covariance,
                       jacobian_batch, measurement_batch, process_covariance)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f} s)"


def check_steering_norm(n_angles: int = 10_000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    phi = rng.uniform(-np.pi, np.pi, n_angles)
    theta = rng.uniform(-np.pi / 2, np.pi, n_angles)
    worst = 0.0
    for geom in (UpaGeometry(2, 2), UpaGeometry.square(16), UpaGeometry.square(64), UpaGeometry(3, 5)):
        norms = np.linalg.norm(steering_vector(phi, theta, geom), axis=-1)
        worst = max(worst, float(np.max(np.abs(norms - 1.0))))
    return CheckResult("steering vector unit norm", worst < 1e-12, f"max |norm - 1| = {worst:.2e}")


def check_covariance_psd(steps: int = 10_000, K: int = 4, seed: int = 0) -> CheckResult:
    """Closed-loop EKF on circular orbits; every posterior covariance must stay PSD."""
    rng = np.random.default_rng(seed)
    geom = UpaGeometry.square(16)
    model = RadarNoiseModel()
    f_c = ChannelParams().f_c
    consts = MeasurementConstants(f_c, geom, geom.n)
    dt = 0.02
    radius = rng.uniform(60.0, 120.0, K)
    height = rng.uniform(20.0, 60.0, K)
    omega = rng.uniform(0.1, 0.25, K) * rng.choice([-1.0, 1.0], K)
    phase0 = rng.uniform(-np.pi, np.pi, K)

    def truth(t):
        a = phase0 + omega * t
        c, s = np.cos(a), np.sin(a)
        X = np.zeros((K, 9))
        X[:, 0], X[:, 1], X[:, 2] = radius * c, radius * s, height
        X[:, 3], X[:, 4] = -radius * omega * s, radius * omega * c
        X[:, 6], X[:, 7] = -radius * omega ** 2 * c, -radius * omega ** 2 * s
        return X

    M0 = initial_covariance()
    bank = EkfBank(truth(0.0) + rng.standard_normal((K, 9)) * np.sqrt(np.diag(M0)), M0)
    Qs = process_covariance(0.05, 0.5, 0.5)
    worst = np.inf
    for n in range(1, steps + 1):
        Xt = truth(n * dt)
        bank.predict(dt, Qs)
        bphi, btheta = bank.beam_angles()
        d = np.linalg.norm(Xt[:, 0:3], axis=1)
        tau = 2.0 * d / 3.0e8
        beta = reflection_coefficient(tau, model.xi)
        y_true = measurement_batch(Xt, bphi, btheta, consts, beta=beta)
        gain = np.abs((y_true[:, 2] + 1j * y_true[:, 3]) / (np.sqrt(geom.n * geom.n) * beta)) ** 2
        gain = np.clip(gain, 1e-3, 1.0)
        var_tau, var_mu, var_c = radar_noise_variances(beta, gain, 1.0, model, geom.n, geom.n)
        Qm = echo_measurement_covariance(var_tau, var_mu, var_c, (0, 1, 2, 3))
        Y = y_true + np.sqrt(Qm) * rng.standard_normal(Qm.shape)
        beta_hat = reflection_coefficient(Y[:, 0], model.xi)
        Y_pred = measurement_batch(bank.X, bphi, btheta, consts, beta=beta_hat)
        H = jacobian_batch(bank.X, bphi, btheta, consts, beta=beta_hat)
        bank.update(Y, Qm, H, Y_pred)
        eig = np.linalg.eigvalsh(bank.M)
        # Relative to each filter's largest eigenvalue.
        rel = eig[:, 0] / np.maximum(eig[:, -1], 1e-300)
        worst = min(worst, float(rel.min()))
        if not np.all(np.isfinite(bank.M)):
            return CheckResult("EKF covariance PSD", False, f"non-finite covariance at step {n}")
    ok = worst >= -1e-9
    return CheckResult("EKF covariance PSD", ok,
                       f"{steps} steps x {K} filters, min eig / max eig = {worst:.2e}")


def check_assignment_bijective(n_mats: int = 300, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = []
    for i in range(n_mats):
        K = int(rng.integers(1, 9))
        D = rng.uniform(0.0, 10.0, (K, K))
        if i % 5 == 0:
            D = np.round(D)  # ties
        for algo in SOLVERS:
            if algo == "bruteforce" and K > 7:
                continue
            cols = solve_assignment(D, algo).cols
            if sorted(cols.tolist()) != list(range(K)):
                bad.append((algo, K))
    return CheckResult("assignment bijectivity", not bad,
                       f"{n_mats} matrices x {len(SOLVERS)} solvers, {len(bad)} non-permutations")


def check_probability_clamping(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    theta = np.linspace(-90.0, 180.0, 2701)
    p = los_probability(theta, ChannelParams())
    in_range = bool(np.all((p >= 0.0) & (p <= 1.0)))
    # Weights and sameness scores are probabilities too.
    for _ in range(200):
        K = int(rng.integers(2, 12))
        scale = 10.0 ** rng.uniform(-3, 3)
        fs = FeatureSet((rng.standard_normal((K, 3)) * scale, rng.standard_normal((K, 3))))
        w = dynamic_weights(fs, metric="md").normalized
        in_range &= bool(np.all((w >= 0) & (w <= 1)) and abs(w.sum() - 1.0) < 1e-12)
        c = sameness_score(rng.exponential(scale, (K, K)))
        in_range &= bool(np.all((c > 0) & (c <= 1)))
    return CheckResult("probability clamping", in_range,
                       "LoS probability, weights and sameness scores within [0, 1]")


def _small_config() -> SimConfig:
    return SimConfig(scenario=ScenarioConfig(K=3, horizon=40), trials=2, seed=11)


def check_determinism() -> CheckResult:
    cfg = _small_config()
    a = run_trial(cfg, 16, np.random.SeedSequence(5))
    b = run_trial(cfg, 16, np.random.SeedSequence(5))
    same = all(np.array_equal(getattr(a, f), getattr(b, f))
               for f in ("accuracy", "rates", "weights", "angle_sq", "window_sq"))
    r1 = run_monte_carlo(cfg).primary
    r2 = run_monte_carlo(cfg).primary
    same &= np.array_equal(r1.rates, r2.rates) and np.array_equal(r1.accuracy, r2.accuracy)
    return CheckResult("determinism under fixed seeds", bool(same),
                       "repeated trial and Monte Carlo runs are bit-identical" if same
                       else "outputs differ between identical runs")


CHECKS: List[Callable[[], CheckResult]] = [
    check_steering_norm,
    check_covariance_psd,
    check_assignment_bijective,
    check_probability_clamping,
    check_determinism,
]


def run_validation(report: Optional[Callable[[CheckResult], None]] = None) -> List[CheckResult]:
    results = []
    for check in CHECKS:
        t0 = time.perf_counter()
        try:
            res = check()
        except Exception as exc:  # a crash is a failed invariant, not a crashed suite
            res = CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if report is not None:
            report(res)
    return results

"""Vision-aided ISAC beam management for multi-UAV networks: a link-level simulator."""

from .array_channel import (ChannelParams, ChannelRealization, UpaGeometry, achievable_rate, channel_gain,
                            los_probability, receive_snr, rician_factor, steering_vector)
from .association import (FeatureSet, WeightVector, characteristic_distance, cost_matrix, dynamic_weights,
                          mahalanobis_covariance, sameness_score, solve_assignment)
from .config import SimConfig, Variant
from .harness import Aggregate, MonteCarloResult, TrialMetrics, World, run_monte_carlo, run_slot, run_trial
from .initial_access import build_codebook, ia_delay, potential_set, simulate_ia
from .report import emit_report
from .scenario import ScenarioConfig, UavState, evolve_state, generate_initial_states, true_observables
from .sensing import radar_measure, sensing_source, vision_measure
from .tracking import EkfBank, EkfBelief, jacobian, measurement_fn, predict, update

__version__ = "0.1.0"

__all__ = [
    "Aggregate", "ChannelParams", "ChannelRealization", "EkfBank", "EkfBelief", "FeatureSet",
    "MonteCarloResult", "ScenarioConfig", "SimConfig", "TrialMetrics", "UavState", "UpaGeometry",
    "Variant", "WeightVector", "World", "achievable_rate", "build_codebook", "channel_gain",
    "characteristic_distance", "cost_matrix", "dynamic_weights", "emit_report", "evolve_state",
    "generate_initial_states", "ia_delay", "jacobian", "los_probability", "mahalanobis_covariance",
    "measurement_fn", "potential_set", "predict", "radar_measure", "receive_snr", "rician_factor",
    "run_monte_carlo", "run_slot", "run_trial", "sameness_score", "sensing_source", "simulate_ia",
    "solve_assignment", "steering_vector", "true_observables", "update", "vision_measure",
]

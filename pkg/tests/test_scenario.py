import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavbeam.scenario import (SPEED_OF_LIGHT, ProcessNoise, ScenarioConfig, UavState, angles_of,
                              evolve_state, evolve_states, generate_initial_states, transition_matrix,
                              true_observables)

finite = st.floats(-200, 200, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_generated_states_sit_on_hemisphere_with_speed_band():
    cfg = ScenarioConfig(K=10, radius=100.0, speed_min=18.0, speed_max=20.0)
    states = generate_initial_states(cfg, np.random.default_rng(0))
    assert len(states) == 10
    for s in states:
        assert abs(np.linalg.norm(s.p) - 100.0) < 1e-9
        assert 18.0 <= np.linalg.norm(s.v) <= 20.0
        assert s.p[2] > 0
        assert np.all(s.a == 0)


def test_whole_hemisphere_placement():
    cfg = ScenarioConfig(K=400, altitude_band=None)
    states = generate_initial_states(cfg, np.random.default_rng(1))
    z = np.array([s.p[2] for s in states])
    assert z.min() > 0 and z.max() > 60.0


def test_zero_jitter_heads_straight_at_bs():
    cfg = ScenarioConfig(K=1, heading_azimuth_jitter=0.0, heading_elevation_jitter=0.0,
                         speed_min=20.0, speed_max=20.0)
    from uavbeam.scenario import heading_toward_bs
    np.testing.assert_allclose(heading_toward_bs(np.array([100.0, 0, 0]), 20.0), [-20.0, 0, 0], atol=1e-12)
    s = generate_initial_states(cfg, np.random.default_rng(3))[0]
    horiz = -s.p[:2] / np.linalg.norm(s.p[:2])
    np.testing.assert_allclose(s.v[:2] / np.linalg.norm(s.v[:2]), horiz, atol=1e-12)
    assert s.v[2] == pytest.approx(0.0, abs=1e-12)


def test_seeded_generation_is_deterministic():
    cfg = ScenarioConfig()
    a = generate_initial_states(cfg, np.random.default_rng(42))
    b = generate_initial_states(cfg, np.random.default_rng(42))
    for x, y in zip(a, b):
        assert np.array_equal(x.to_vector(), y.to_vector())


@pytest.mark.parametrize("kwargs", [{"K": 0}, {"radius": 0.0}, {"radius": -1.0},
                                    {"speed_min": 0.0}, {"speed_min": 25.0}])
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ValueError):
        generate_initial_states(ScenarioConfig(**kwargs), np.random.default_rng(0))


def test_evolve_zero_acceleration():
    x = UavState(p=np.array([0, 0, 10.0]), v=np.array([1.0, 0, 0]))
    y = evolve_state(x, 1.0, None)
    np.testing.assert_allclose(y.p, [1, 0, 10])
    np.testing.assert_allclose(y.v, [1, 0, 0])


def test_evolve_uses_half_dt_acceleration_coupling():
    x = UavState(p=np.zeros(3), v=np.zeros(3), a=np.array([2.0, 0, 0]))
    y = evolve_state(x, 1.0, None)
    np.testing.assert_allclose(y.p, [1, 0, 0])
    np.testing.assert_allclose(y.v, [2, 0, 0])


def test_process_noise_std():
    rng = np.random.default_rng(7)
    q = ProcessNoise(sigma_p=0.3, sigma_v=0.2, sigma_a=0.01)
    x = UavState(p=np.array([50.0, 20, 30]), v=np.array([-1.0, 2, 0]))
    X = np.tile(x.to_vector(), (10_000, 1))
    out = evolve_states(X, 0.02, q, rng, altitude_floor=None)
    assert abs(out[:, 0].std() / 0.3 - 1) < 0.05


def test_altitude_floor_reflects():
    X = np.zeros((1, 9))
    X[0, 0:3] = [50, 0, 1.05]
    X[0, 5] = -10.0
    out = evolve_states(X, 0.02, None, None, altitude_floor=1.0)
    assert out[0, 2] > 1.0 and out[0, 5] > 0


@given(vec3, vec3, vec3, vec3, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_noiseless_evolution_is_linear(p1, v1, p2, v2, a, b):
    x1 = UavState(p=p1, v=v1, a=v2 / 10)
    x2 = UavState(p=p2, v=v2, a=v1 / 10)
    lhs = evolve_state(UavState.from_vector(a * x1.to_vector() + b * x2.to_vector()), 0.02, None)
    rhs = a * evolve_state(x1, 0.02, None).to_vector() + b * evolve_state(x2, 0.02, None).to_vector()
    np.testing.assert_allclose(lhs.to_vector(), rhs, atol=1e-9)


def test_transition_matrix_is_a_copy():
    G = transition_matrix(0.02)
    G[0, 0] = 99
    assert transition_matrix(0.02)[0, 0] == 1.0


def test_observables_examples():
    obs = true_observables(UavState(p=np.array([150.0, 0, 0]), v=np.zeros(3)), 28e9)
    assert obs.tau == pytest.approx(1.0e-6, rel=1e-12)
    obs = true_observables(UavState(p=np.array([100.0, 0, 0]), v=np.array([30.0, 0, 0])), 28e9)
    assert obs.gamma == pytest.approx(2800.0, rel=1e-12)
    assert obs.mu == pytest.approx(5600.0, rel=1e-12)
    obs = true_observables(UavState(p=np.array([30.0, 40, 50]), v=np.array([-40.0, 30, 0])), 28e9)
    assert obs.gamma == pytest.approx(0.0, abs=1e-9)


def test_observables_reject_origin():
    with pytest.raises(ValueError):
        true_observables(UavState(p=np.zeros(3), v=np.ones(3)), 28e9)


@given(vec3.filter(lambda p: np.linalg.norm(p[:2]) > 1e-3), st.floats(0.1, 200))
@settings(max_examples=100, deadline=None)
def test_observable_invariants(p, z):
    p = p.copy()
    p[2] = z
    obs = true_observables(UavState(p=p, v=np.ones(3)), 28e9)
    assert obs.tau * SPEED_OF_LIGHT / 2 == pytest.approx(obs.d, rel=1e-14)
    assert obs.d == np.linalg.norm(p)
    assert 0 < obs.theta <= np.pi / 2
    assert -np.pi < obs.phi <= np.pi


def test_angles_of_broadcasts():
    phi, theta = angles_of(np.array([[1.0, 1.0, np.sqrt(2)], [0.0, 1.0, 0.0]]))
    np.testing.assert_allclose(phi, [np.pi / 4, np.pi / 2])
    np.testing.assert_allclose(theta, [np.pi / 4, 0.0])

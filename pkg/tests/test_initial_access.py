import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavbeam.array_channel import ChannelParams, UpaGeometry, draw_channel
from uavbeam.initial_access import (SCHEMES, IaConfig, build_codebook, ia_delay, nearest_entry, potential_set,
                                    simulate_ia)


def test_codebook_shapes():
    cb = build_codebook(2)
    assert cb.size == 4
    np.testing.assert_allclose(cb.entries(), [[0, 0], [np.pi / 2, 0], [0, np.pi / 2], [np.pi / 2, np.pi / 2]])
    cb4 = build_codebook(4)
    assert cb4.size == 16 and cb4.spacing == pytest.approx(np.pi / 4)
    np.testing.assert_allclose(np.diff(cb4.phis), np.pi / 4)
    for q in (2, 4, 6, 8):
        assert build_codebook(q).entry(0) == (0.0, 0.0)
    for bad in (3, 0):
        with pytest.raises(ValueError):
            build_codebook(bad)


def test_potential_set_examples():
    cb = build_codebook(4)
    single = potential_set(cb, 0.8, 0.3, 1)
    assert single.indices == (nearest_entry(cb, 0.8, 0.3),)
    g = 1 * 4 + 2  # theta index 1, phi index 2
    two = potential_set(cb, 2 * np.pi / 4, np.pi / 4, 2)
    assert two.indices == (g, g + 1)
    edge = potential_set(cb, 10.0, 10.0, 5)
    assert edge.S == 5 and edge.nearest == 15 and 15 in edge.indices
    low = potential_set(cb, -3.0, -3.0, 4)
    assert low.S == 4 and sorted(low.indices) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        potential_set(cb, 0.0, 0.0, 17)


@given(st.floats(-1, 4), st.floats(-1, 4), st.integers(1, 16))
def test_potential_set_invariants(phi, theta, S):
    cb = build_codebook(4)
    ps = potential_set(cb, phi, theta, S)
    assert ps.S == S == len(set(ps.indices))
    assert nearest_entry(cb, phi, theta) in ps.indices
    assert all(0 <= i < cb.size for i in ps.indices)


def test_closed_form_delays():
    assert ia_delay("proposed", 4, 4, 2, 2, 5.0) == 30.0
    assert ia_delay("exhaustive", 4, 4, 2, 2, 5.0) == 17 * 16 * 5
    assert ia_delay("pi_uav", 4, 4, 2, 2, 5.0) == 80.0
    assert ia_delay("pi_bs", 4, 4, 2, 2, 5.0) == 80.0
    assert ia_delay("iterative", 4, 4, 2, 2, 5.0) == 340.0
    assert ia_delay("proposed", 4, 4, 2, 2, 5.0, proposed_variant="scan-only") == 20.0
    with pytest.raises(ValueError):
        ia_delay("random", 4, 4)
    with pytest.raises(ValueError):
        ia_delay("proposed", 4, 4, T_p=0.0)


@given(st.sampled_from([2, 4, 6, 8]), st.sampled_from([2, 4, 6, 8]), st.integers(1, 4), st.integers(1, 4))
def test_delay_ordering(qb, qu, s1, s2):
    if s1 > 2 ** qb or s2 > 2 ** qu:
        return
    p = ia_delay("proposed", qb, qu, s1, s2)
    ex = ia_delay("exhaustive", qb, qu, s1, s2)
    assert ia_delay("pi_bs", qb, qu) <= ex and ia_delay("pi_uav", qb, qu) <= ex
    assert p <= ex


def _grid_channel(bs_idx, uav_idx, K=np.inf, seed=0):
    cb = build_codebook(4)
    phi, theta = cb.entry(bs_idx)
    uphi, utheta = cb.entry(uav_idx)
    return draw_channel(phi, theta, UpaGeometry.square(16), K, ChannelParams(), np.random.default_rng(seed),
                        uav_geom=UpaGeometry(2, 2), beta=1.0, uav_phi=uphi, uav_theta=utheta)


def test_on_grid_direction_is_found():
    chan = _grid_channel(6, 9)
    out = simulate_ia("proposed", chan, IaConfig(), (chan.phi, chan.theta), (chan.uav_phi, chan.uav_theta))
    assert out.success and out.bs_beam == 6
    assert out.best_snr == pytest.approx(64.0)


def test_unreachable_threshold_fails_at_worst_case_delay():
    chan = _grid_channel(6, 9)
    cfg = IaConfig(threshold_db=40.0)
    for scheme in SCHEMES:
        out = simulate_ia(scheme, chan, cfg, (chan.phi, chan.theta), (chan.uav_phi, chan.uav_theta))
        assert not out.success and out.bs_beam is None
        assert out.delay == ia_delay(scheme, cfg.Q_B, cfg.Q_U, cfg.S1, cfg.S2, cfg.T_p)


def test_simulated_delay_never_exceeds_closed_form():
    rng = np.random.default_rng(1)
    cfg = IaConfig()
    for _ in range(20):
        chan = draw_channel(rng.uniform(0, np.pi), rng.uniform(0.2, 1.4), UpaGeometry.square(16), 5.0,
                            ChannelParams(), rng, uav_geom=UpaGeometry(2, 2))
        for scheme in SCHEMES:
            out = simulate_ia(scheme, chan, cfg, (chan.phi, chan.theta), (chan.uav_phi, chan.uav_theta))
            assert 0 <= out.delay <= ia_delay(scheme, cfg.Q_B, cfg.Q_U, cfg.S1, cfg.S2, cfg.T_p)


def test_perfect_vision_matches_exhaustive_selection():
    # Pure LoS on grid directions: the vision-guided set contains the optimum.
    agree = 0
    pairs = [(b, u) for b in range(1, 15) for u in (5, 6, 9, 10)]
    for b, u in pairs:
        chan = _grid_channel(b, u)
        view = ((chan.phi, chan.theta), (chan.uav_phi, chan.uav_theta))
        p = simulate_ia("proposed", chan, IaConfig(), *view)
        e = simulate_ia("exhaustive", chan, IaConfig(), *view)
        agree += (p.bs_beam, p.uav_beam) == (e.bs_beam, e.uav_beam) or math.isclose(p.best_snr, e.best_snr)
    assert agree == len(pairs)


def test_unknown_scheme():
    chan = _grid_channel(6, 9)
    with pytest.raises(ValueError):
        simulate_ia("random", chan, IaConfig(), (0, 0), (0, 0))

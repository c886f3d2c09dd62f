import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridris.channel import (LOS_MODEL, NLOS_MODEL, PathLossModel, SceneConfig, Scenario,
                               dbm_to_watts, distance, path_loss, realize_channels,
                               sample_rician, watts_to_dbm)


def test_distance_examples():
    assert distance((0, -45), (180, 20)) == pytest.approx(math.sqrt(36625))
    assert round(distance((0, -45), (180, 20)), 2) == 191.38
    assert distance((0, -45), (200, 0)) == 205.0
    assert distance((3.5, -2), (3.5, -2)) == 0.0


@given(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
       st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)))
def test_distance_symmetric(a, b):
    assert distance(a, b) == distance(b, a) >= 0


def test_path_loss_examples():
    assert path_loss(NLOS_MODEL, 1.0) == 13.54
    assert path_loss(LOS_MODEL, 205.0) == pytest.approx(37.3 + 22.0 * math.log10(205), abs=1e-12)
    assert round(path_loss(LOS_MODEL, 205.0), 2) == 88.16
    assert round(path_loss(NLOS_MODEL, 205.0), 2) == 103.88


def test_path_loss_domain():
    with pytest.raises(ValueError):
        path_loss(LOS_MODEL, 0.5)
    with pytest.raises(ValueError):
        PathLossModel(10.0, 0.0)


@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4))
def test_path_loss_monotone(d1, d2):
    lo, hi = sorted((d1, d2))
    assert path_loss(LOS_MODEL, lo) <= path_loss(LOS_MODEL, hi)


def test_rician_pure_los_has_constant_magnitude():
    x = sample_rician(20.0, math.inf, 1000, np.random.default_rng(0))
    np.testing.assert_allclose(np.abs(x), math.sqrt(10 ** -2), rtol=1e-12)


@pytest.mark.parametrize("k_db", [-math.inf, 0.0, 3.0, 10.0])
def test_rician_mean_power_unit(k_db):
    # mean power averaged over independent calls, since each call shares one LoS phase
    rng = np.random.default_rng(1)
    x = np.concatenate([sample_rician(0.0, k_db, 100, rng) for _ in range(1000)])
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.01)


def test_rayleigh_mean_power_matches_path_gain():
    x = sample_rician(30.0, -math.inf, 100_000, np.random.default_rng(2))
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1e-3, rel=0.01)


def test_realize_default_shapes_and_disk():
    scene = SceneConfig()
    ch = realize_channels(scene, 7)
    assert ch.direct.shape == (5, 5)
    assert ch.bs_ris.shape == (400, 5)
    assert ch.ris_user.shape == (5, 400)
    r = np.hypot(ch.user_positions[:, 0] - 200, ch.user_positions[:, 1])
    assert np.all(r <= 6.0)


def test_realize_deterministic():
    scene = SceneConfig(num_ris_elements=16)
    assert realize_channels(scene, 3).same_as(realize_channels(scene, 3))
    assert not realize_channels(scene, 3).same_as(realize_channels(scene, 4))


def test_scenarios_share_all_but_direct_power():
    a = realize_channels(SceneConfig(num_ris_elements=8), 5)
    b = realize_channels(SceneConfig(num_ris_elements=8, scenario=Scenario.WEAK_DIRECT), 5)
    np.testing.assert_array_equal(a.bs_ris, b.bs_ris)
    np.testing.assert_array_equal(a.ris_user, b.ris_user)
    assert np.linalg.norm(b.direct) < np.linalg.norm(a.direct)


@pytest.mark.parametrize("kwargs", [{"num_users": 0}, {"num_ris_elements": 2.5},
                                    {"user_radius": -1.0}, {"noise_power_receiver": math.nan}])
def test_scene_validation(kwargs):
    with pytest.raises(ValueError):
        SceneConfig(**kwargs)


def test_dbm_roundtrip():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert watts_to_dbm(2.0) == pytest.approx(10 * math.log10(2000))

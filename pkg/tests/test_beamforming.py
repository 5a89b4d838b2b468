import math

import numpy as np
import pytest

from uavrelay.channel import ArrayGeometry, ClusterAngleSpec, PathLossParams, steering_vector
from uavrelay.beamforming import (
    HbfConfig,
    RfStages,
    rf_stage,
    spread_cluster_angles,
    effective_channel_link1,
    bb_stages_link1,
    bb_stage_link2,
    bb_stage_link2_batch,
    build_beamformer_set,
    check_beamformer_invariants,
)


def test_rf_stage_broadside_column():
    geom = ArrayGeometry(4, 4)
    f = rf_stage(geom, [(0.0, 0.0)], 1)
    assert f.shape == (16, 1)
    assert np.allclose(f, 1 / 4.0)


def test_rf_stage_constant_modulus():
    geom = ArrayGeometry(3, 4)
    f = rf_stage(geom, [(0.7, 1.1), (0.9, -0.4)], 5)
    assert np.max(np.abs(np.abs(f) - 1 / np.sqrt(12))) < 1e-12


def test_rf_stage_gain_at_design_angle():
    # coherent combining of N unit phasors: |a^T f| = sqrt(N)
    geom = ArrayGeometry(12, 12)
    el, az = math.radians(60), math.radians(120)
    f = rf_stage(geom, [(el, az)], 1)
    a = steering_vector(geom, el, az)
    assert abs(a @ f[:, 0]) == pytest.approx(np.sqrt(144), rel=1e-12)


def test_rf_stage_cross_gain_well_separated():
    # azimuths 21 and 141 degrees at the same elevation: far below peak gain
    geom = ArrayGeometry(12, 12)
    el = math.radians(60)
    f = rf_stage(geom, [(el, math.radians(21)), (el, math.radians(141))], 2)
    a1 = steering_vector(geom, el, math.radians(21))
    cross = abs(a1 @ f[:, 1])
    assert cross < 0.15 * np.sqrt(144)


def test_rf_stage_cycles_angles():
    geom = ArrayGeometry(2, 2)
    f = rf_stage(geom, [(0.3, 0.1), (0.7, 0.9)], 4)
    assert np.allclose(f[:, 0], f[:, 2])
    assert np.allclose(f[:, 1], f[:, 3])
    with pytest.raises(ValueError):
        rf_stage(geom, [(0.3, 0.1)], 0)


def test_spread_cluster_angles():
    angles = spread_cluster_angles(1.0, 2.0, 0.2, 3)
    assert angles[0] == (1.0, pytest.approx(1.8))
    assert angles[1] == (1.0, pytest.approx(2.0))
    assert angles[2] == (1.0, pytest.approx(2.2))
    assert spread_cluster_angles(1.0, 2.0, 0.0, 2) == [(1.0, 2.0)] * 2


def test_effective_channel_shapes_and_identity():
    rng = np.random.default_rng(0)
    h1 = rng.standard_normal((144, 144)) + 1j * rng.standard_normal((144, 144))
    f_b = rng.standard_normal((144, 4)) + 0j
    f_ur = rng.standard_normal((4, 144)) + 0j
    h_eff = effective_channel_link1(h1, f_b, f_ur)
    assert h_eff.shape == (4, 4)
    # identity-like stages scaled by 1/N recover h1 / N
    n = 6
    h_small = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    eye = np.eye(n) / np.sqrt(n)
    assert np.allclose(effective_channel_link1(h_small, eye, eye), h_small / n)
    # associativity of the product
    left = (f_ur @ h1) @ f_b
    right = f_ur @ (h1 @ f_b)
    assert np.max(np.abs(left - right)) < 1e-10 * np.max(np.abs(left))
    with pytest.raises(ValueError):
        effective_channel_link1(h1, f_b[:10], f_ur)


def test_bb_link1_svd_selects_dominant_directions():
    h_eff = np.diag([3.0, 2.0, 1.0]).astype(complex)
    f_b = np.eye(3, dtype=complex)
    bs_bb, relay_bb = bb_stages_link1(h_eff, 2, f_b, bs_power=1.0)
    # product is diagonal with the top singular values (before power scaling)
    prod = relay_bb @ h_eff @ bs_bb
    scale = np.linalg.norm(f_b @ bs_bb) ** 2
    assert scale == pytest.approx(1.0, rel=1e-9)
    off = prod - np.diag(np.diag(prod))
    assert np.max(np.abs(off)) < 1e-12
    mags = np.sort(np.abs(np.diag(prod)))[::-1]
    assert mags[0] / mags[1] == pytest.approx(3.0 / 2.0, rel=1e-9)


def test_bb_link1_rank_error():
    h_eff = np.zeros((3, 3), dtype=complex)
    h_eff[0, 0] = 1.0
    with pytest.raises(ValueError):
        bb_stages_link1(h_eff, 2, np.eye(3, dtype=complex), 1.0)
    with pytest.raises(ValueError):
        bb_stages_link1(h_eff, 4, np.eye(3, dtype=complex), 1.0)


def test_bb_link2_single_user_matched_filter():
    rng = np.random.default_rng(1)
    h = rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))
    f_ut = np.eye(3, dtype=complex)
    b = bb_stage_link2(h, 2.0, f_ut, noise_power=1e-3)
    # matched direction: the cascaded gain meets the Cauchy-Schwarz bound
    corr = abs(h @ b)[0, 0] / (np.linalg.norm(h) * np.linalg.norm(b))
    assert corr == pytest.approx(1.0, rel=1e-9)
    assert np.linalg.norm(f_ut @ b) ** 2 == pytest.approx(2.0, rel=1e-9)


def test_bb_link2_zero_forcing_limit():
    rng = np.random.default_rng(2)
    k, n_rf = 3, 5
    h = rng.standard_normal((k, n_rf)) + 1j * rng.standard_normal((k, n_rf))
    f_ut = rng.standard_normal((8, n_rf)) + 1j * rng.standard_normal((8, n_rf))
    # tiny regularizer: huge power relative to noise
    b = bb_stage_link2(h, 1.0, f_ut, noise_power=1e-15)
    prod = h @ b
    off = prod - np.diag(np.diag(prod))
    assert np.max(np.abs(off)) < 1e-8 * np.min(np.abs(np.diag(prod)))


def test_bb_link2_rank_deficiency_raises():
    h = np.ones((2, 4), dtype=complex)  # identical user rows
    with pytest.raises(ValueError, match="rank deficient"):
        bb_stage_link2(h, 1.0, np.eye(4, dtype=complex), 1e-3)


def test_bb_link2_batch_matches_single():
    rng = np.random.default_rng(3)
    k, n_rf = 2, 4
    h = rng.standard_normal((5, k, n_rf)) + 1j * rng.standard_normal((5, k, n_rf))
    f_ut = rng.standard_normal((6, n_rf)) + 1j * rng.standard_normal((6, n_rf))
    batch = bb_stage_link2_batch(h, 1.5, f_ut, 1e-4)
    for i in range(5):
        single = bb_stage_link2(h[i], 1.5, f_ut, 1e-4)
        assert np.allclose(batch[i], single, atol=1e-12)


def _small_system():
    from uavrelay.geometry import ScenarioConfig, Position3D
    from uavrelay.simulator import ChannelConfig, build_system

    scenario = ScenarioConfig(num_users=2, users_per_group=2, rng_seed=5)
    return build_system(
        scenario,
        ArrayGeometry(4, 4),
        ArrayGeometry(4, 4),
        ArrayGeometry(4, 4),
        ChannelConfig(paths_link1=4, paths_link2=4),
        HbfConfig(n_rf_bs=2, n_rf_uav=2, bs_power=3.0, uav_power=2.0),
    )


def test_full_set_invariants():
    system = _small_system()
    rng = np.random.default_rng(7)
    pos = system.scenario.uav_initial
    rf = system.rf_stages(pos)
    h1 = system.draw_first_hop(pos, rng)
    h2 = system.draw_second_hop_batch(pos, 1, rng)[0]
    bset = build_beamformer_set(rf, h1, h2, 2, system.hbf, system.noise)
    check_beamformer_invariants(bset, 3.0, 2.0)


def test_rf_depends_only_on_mean_angles():
    # redrawing fading gains must not change the analog stages at all
    system = _small_system()
    pos = system.scenario.uav_initial
    rf1 = system.rf_stages(pos)
    system._cached_rf = None
    for _ in range(3):
        system.draw_first_hop(pos, np.random.default_rng())
        system.draw_second_hop_batch(pos, 2, np.random.default_rng())
    rf2 = system.rf_stages(pos)
    assert np.array_equal(rf1.bs_tx, rf2.bs_tx)
    assert np.array_equal(rf1.relay_rx, rf2.relay_rx)
    assert np.array_equal(rf1.relay_tx, rf2.relay_tx)


def test_hbf_config_validation():
    with pytest.raises(ValueError):
        HbfConfig(n_rf_bs=0)
    with pytest.raises(ValueError):
        HbfConfig(bs_power=0.0)
    cfg = HbfConfig(n_rf_bs=2, n_rf_uav=2)
    with pytest.raises(ValueError):
        cfg.validate_against(num_users=3, n_bs=16, n_relay_rx=16, n_relay_tx=16)
    with pytest.raises(ValueError):
        cfg.validate_against(num_users=2, n_bs=1, n_relay_rx=16, n_relay_tx=16)
    cfg.validate_against(num_users=2, n_bs=16, n_relay_rx=16, n_relay_tx=16)

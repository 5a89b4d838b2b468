import json

import numpy as np
import pytest

from uavrelay.channel import (
    ArrayGeometry,
    ClusterAngleSpec,
    PathLossParams,
    steering_vector,
    path_amplitude,
    first_hop_channel,
    second_hop_channels,
    second_hop_channels_batch,
)


def test_steering_broadside_is_all_ones():
    geom = ArrayGeometry(4, 4, 0.5)
    v = steering_vector(geom, 0.0, 1.2345)
    assert np.allclose(v, np.ones(16))


def test_steering_single_element():
    v = steering_vector(ArrayGeometry(1, 1), 0.7, 0.3)
    assert v.shape == (1,)
    assert v[0] == pytest.approx(1.0)


def test_steering_two_element_endfire():
    # kx = 2*pi*0.5*sin(pi/2)*cos(0) = pi -> entries (1, e^{-j*pi})
    v = steering_vector(ArrayGeometry(2, 1, 0.5), np.pi / 2, 0.0)
    assert v[0] == pytest.approx(1.0)
    assert v[1] == pytest.approx(np.exp(-1j * np.pi))


def test_steering_unit_modulus():
    geom = ArrayGeometry(3, 5, 0.5)
    rng = np.random.default_rng(0)
    for _ in range(50):
        el, az = rng.uniform(0, np.pi), rng.uniform(-np.pi, np.pi)
        v = steering_vector(geom, el, az)
        assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12


def test_steering_degenerates_to_ula():
    # with n_y = 1 only the x-axis progression remains
    el, az = 0.9, 0.4
    v = steering_vector(ArrayGeometry(6, 1, 0.5), el, az)
    kx = 2 * np.pi * 0.5 * np.sin(el) * np.cos(az)
    assert np.allclose(v, np.exp(-1j * kx * np.arange(6)))


def test_path_amplitude_variance():
    # raw gains are CN(0, 1/num_paths): with tau=1, alpha=0 the squared
    # magnitude averages 1/num_paths
    params = PathLossParams(exponent=3.6, reference_loss_db=0.0)
    rng = np.random.default_rng(5)
    n, paths = 100_000, 10
    samples = np.array([path_amplitude(1.0, params, rng, paths) for _ in range(n)])
    mean_sq = np.mean(np.abs(samples) ** 2)
    # |z|^2 has std 1/paths per draw; allow 5 sigma
    assert abs(mean_sq - 1.0 / paths) < 5 / (paths * np.sqrt(n))


def test_path_amplitude_distance_law():
    # doubling the distance scales mean squared gain by 2^{-2 eta}
    params = PathLossParams(exponent=2.0, reference_loss_db=0.0)
    rng = np.random.default_rng(6)
    n = 100_000
    a1 = np.array([path_amplitude(1.0, params, rng, 1) for _ in range(n)])
    a2 = np.array([path_amplitude(2.0, params, rng, 1) for _ in range(n)])
    ratio = np.mean(np.abs(a2) ** 2) / np.mean(np.abs(a1) ** 2)
    assert ratio == pytest.approx(2.0 ** (-2 * params.exponent), rel=0.05)


def test_path_amplitude_rejects_zero_distance():
    with pytest.raises(ValueError):
        path_amplitude(0.0, PathLossParams(), np.random.default_rng(0), 4)


def _one_path_spec(el, az):
    return ClusterAngleSpec(el, az, el, az, 0.0, 0.0)


def test_first_hop_single_path_is_rank_one():
    bs = ArrayGeometry(4, 4)
    relay = ArrayGeometry(3, 3)
    spec = _one_path_spec(1.0, 2.1)
    h = first_hop_channel(bs, relay, spec, 30.0, PathLossParams(), 1, 1, np.random.default_rng(2))
    s = np.linalg.svd(h, compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    # and equals gain * a_r a_t^T up to the drawn gain
    assert h.shape == (9, 16)


def test_first_hop_full_scale_shape():
    bs = ArrayGeometry(12, 12)
    relay = ArrayGeometry(12, 12)
    spec = ClusterAngleSpec(1.0, 2.1, 1.0, 2.1, 0.17, 0.17)
    h = first_hop_channel(bs, relay, spec, 70.0, PathLossParams(), 10, 1, np.random.default_rng(3))
    assert h.shape == (144, 144)
    assert np.all(np.isfinite(h.real)) and np.all(np.isfinite(h.imag))


def test_first_hop_frobenius_scaling():
    # E||H||_F^2 = tau^{-2 eta} * 10^{-alpha/10} * N_r * N_T
    bs = ArrayGeometry(3, 3)
    relay = ArrayGeometry(2, 2)
    spec = ClusterAngleSpec(1.0, 2.0, 0.8, 1.5, 0.17, 0.17)
    params = PathLossParams(exponent=1.2, reference_loss_db=20.0)
    tau = 3.0
    rng = np.random.default_rng(8)
    n = 1000
    sq = [
        np.linalg.norm(first_hop_channel(bs, relay, spec, tau, params, 8, 1, rng)) ** 2
        for _ in range(n)
    ]
    expected = tau ** (-2 * params.exponent) * 10 ** (-params.reference_loss_db / 10) * 4 * 9
    assert np.mean(sq) == pytest.approx(expected, rel=0.1)


def test_first_hop_angles_stay_in_spread():
    bs = ArrayGeometry(2, 2)
    relay = ArrayGeometry(2, 2)
    spec = ClusterAngleSpec(1.0, 2.0, 0.8, 1.5, 0.1, 0.2)
    rng = np.random.default_rng(9)
    for _ in range(50):
        _, _, angles = first_hop_channel(
            bs, relay, spec, 10.0, PathLossParams(), 40, 1, rng, return_parts=True
        )
        eaod, aaod, eaoa, aaoa = angles.T
        assert np.all(np.abs(eaod - spec.mean_eaod) <= spec.spread_elevation + 1e-12)
        assert np.all(np.abs(aaod - spec.mean_aaod) <= spec.spread_azimuth + 1e-12)
        assert np.all(np.abs(eaoa - spec.mean_eaoa) <= spec.spread_elevation + 1e-12)
        assert np.all(np.abs(aaoa - spec.mean_aaoa) <= spec.spread_azimuth + 1e-12)


def test_first_hop_validates_inputs():
    bs = relay = ArrayGeometry(2, 2)
    spec = _one_path_spec(1.0, 1.0)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        first_hop_channel(bs, relay, spec, 0.0, PathLossParams(), 4, 1, rng)
    with pytest.raises(ValueError):
        first_hop_channel(bs, relay, spec, 10.0, PathLossParams(), 5, 2, rng)


def test_second_hop_single_path_row_is_steering():
    relay = ArrayGeometry(4, 4)
    spec = _one_path_spec(0.9, 0.4)
    h, gains, _ = second_hop_channels(
        relay, [spec], [25.0], PathLossParams(), 1, np.random.default_rng(4), return_parts=True
    )
    v = steering_vector(relay, 0.9, 0.4)
    assert np.allclose(h[0], gains[0, 0] * v)


def test_second_hop_shapes():
    relay = ArrayGeometry(12, 12)
    specs = [_one_path_spec(1.0, 0.4)] * 4
    h = second_hop_channels(relay, specs, [20, 25, 30, 35], PathLossParams(), 10, np.random.default_rng(5))
    assert h.shape == (4, 144)
    batch = second_hop_channels_batch(
        relay, specs, [20, 25, 30, 35], PathLossParams(), 10, 7, np.random.default_rng(5)
    )
    assert batch.shape == (7, 4, 144)


def test_second_hop_distance_law():
    # halving the distance scales E||row||^2 by 2^{2 eta}
    relay = ArrayGeometry(4, 4)
    spec = ClusterAngleSpec(1.0, 0.4, 0.0, 0.0, 0.15, 0.15)
    params = PathLossParams(exponent=1.5, reference_loss_db=0.0)
    rng = np.random.default_rng(6)
    h = second_hop_channels_batch(relay, [spec, spec], [40.0, 20.0], params, 4, 4000, rng)
    e_far = np.mean(np.sum(np.abs(h[:, 0, :]) ** 2, axis=1))
    e_near = np.mean(np.sum(np.abs(h[:, 1, :]) ** 2, axis=1))
    assert e_near / e_far == pytest.approx(2.0 ** (2 * params.exponent), rel=0.1)


def test_second_hop_requires_positive_distances():
    relay = ArrayGeometry(2, 2)
    with pytest.raises(ValueError):
        second_hop_channels(
            relay, [_one_path_spec(1, 1)], [0.0], PathLossParams(), 2, np.random.default_rng(0)
        )


def test_channel_determinism():
    relay = ArrayGeometry(3, 3)
    specs = [ClusterAngleSpec(1.0, 0.4, 0.0, 0.0, 0.1, 0.1)] * 2
    a = second_hop_channels(relay, specs, [20, 30], PathLossParams(), 5, np.random.default_rng(77))
    b = second_hop_channels(relay, specs, [20, 30], PathLossParams(), 5, np.random.default_rng(77))
    assert np.array_equal(a, b)


def test_realization_json_dump():
    from uavrelay.simulator import ChannelConfig, build_system
    from uavrelay.geometry import ScenarioConfig
    from uavrelay.beamforming import HbfConfig

    scenario = ScenarioConfig(num_users=2, users_per_group=2)
    system = build_system(
        scenario,
        ArrayGeometry(2, 2),
        ArrayGeometry(2, 2),
        ArrayGeometry(2, 2),
        ChannelConfig(paths_link1=2, paths_link2=2),
        HbfConfig(n_rf_bs=2, n_rf_uav=2),
    )
    real = system.draw_realization(system.scenario.uav_initial, np.random.default_rng(0))
    doc = json.loads(real.to_json())
    assert np.array(doc["first_hop"]["real"]).shape == (4, 4)
    assert np.array(doc["second_hop"]["imag"]).shape == (2, 4)

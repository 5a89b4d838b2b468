"""End-to-end system wiring: geometry in, achievable rates out.

`RelaySystem` owns one scenario instance (fixed base station, fixed user
draw, antenna arrays, channel statistics) and evaluates rates at arbitrary
relay positions. Two angle modes are supported:

* ``group``: cluster/group mean angles are fixed configuration values, so
  the relay position influences rates only through path-gain distances.
* ``geometric``: mean angles are recomputed from the actual transmitter and
  receiver positions; RF stages then depend on the relay position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import Position3D, ScenarioConfig, distance_3d, geometric_angles, sample_users
from .channel import (
    ArrayGeometry,
    ClusterAngleSpec,
    PathLossParams,
    ChannelRealization,
    first_hop_channel,
    second_hop_channels_batch,
)
from .beamforming import (
    HbfConfig,
    RfStages,
    rf_stage,
    spread_cluster_angles,
    build_beamformer_set,
    bb_stages_link1,
)
from .rates import (
    noise_power,
    RateReport,
    ergodic_second_hop_rate,
    overall_rate,
)

__all__ = [
    "ChannelConfig",
    "RelaySystem",
    "build_system",
    "make_rate_objective",
]

ANGLE_MODES = ("group", "geometric")


@dataclass
class ChannelConfig:
    """Channel statistics shared by every realization. Angles in degrees here;
    they are converted to radians where the math happens."""

    paths_link1: int = 10
    clusters_link1: int = 1
    paths_link2: int = 10
    link1_mean_azimuth_deg: float = 120.0
    link1_mean_elevation_deg: float = 60.0
    link2_azimuth_base_deg: float = 21.0
    link2_azimuth_step_deg: float = 120.0
    link2_mean_elevation_deg: float = 60.0
    azimuth_spread_deg: float = 10.0
    elevation_spread_deg: float = 10.0
    angle_mode: str = "group"
    path_loss: PathLossParams = field(default_factory=PathLossParams)

    def __post_init__(self):
        if self.angle_mode not in ANGLE_MODES:
            raise ValueError(f"angle_mode must be one of {ANGLE_MODES}")

    def group_azimuth_deg(self, group: int) -> float:
        return self.link2_azimuth_base_deg + self.link2_azimuth_step_deg * group

    def to_dict(self) -> dict:
        d = asdict(self)
        d["path_loss"] = asdict(self.path_loss)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelConfig":
        d = dict(d)
        d["path_loss"] = PathLossParams(**d["path_loss"])
        return cls(**d)


class RelaySystem:
    """One scenario instance with rate evaluation at arbitrary relay positions."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        users: list[Position3D],
        bs_array: ArrayGeometry,
        relay_rx_array: ArrayGeometry,
        relay_tx_array: ArrayGeometry,
        channel_cfg: ChannelConfig,
        hbf: HbfConfig,
    ):
        if len(users) != scenario.num_users:
            raise ValueError(f"expected {scenario.num_users} users, got {len(users)}")
        hbf.validate_against(
            scenario.num_users, bs_array.size, relay_rx_array.size, relay_tx_array.size
        )
        self.scenario = scenario
        self.users = list(users)
        self.bs_array = bs_array
        self.relay_rx_array = relay_rx_array
        self.relay_tx_array = relay_tx_array
        self.channel_cfg = channel_cfg
        self.hbf = hbf
        self.noise = noise_power(
            channel_cfg.path_loss.noise_psd_dbm_hz, channel_cfg.path_loss.bandwidth_hz
        )
        self._cached_rf: RfStages | None = None

    # -- geometry ------------------------------------------------------------

    @property
    def num_users(self) -> int:
        return self.scenario.num_users

    def relay_position(self, xy) -> Position3D:
        x, y = float(xy[0]), float(xy[1])
        return Position3D(x, y, self.scenario.uav_height)

    def backhaul_distance(self, relay_pos: Position3D) -> float:
        return distance_3d(self.scenario.bs_position, relay_pos)

    def user_distances(self, relay_pos: Position3D) -> np.ndarray:
        return np.array([distance_3d(relay_pos, u) for u in self.users])

    # -- angle statistics ----------------------------------------------------

    def _link1_spec(self, relay_pos: Position3D) -> ClusterAngleSpec:
        cfg = self.channel_cfg
        spr_el = math.radians(cfg.elevation_spread_deg)
        spr_az = math.radians(cfg.azimuth_spread_deg)
        if cfg.angle_mode == "group":
            el = math.radians(cfg.link1_mean_elevation_deg)
            az = math.radians(cfg.link1_mean_azimuth_deg)
            return ClusterAngleSpec(el, az, el, az, spr_el, spr_az)
        el_d, az_d = geometric_angles(self.scenario.bs_position, relay_pos)
        el_a, az_a = geometric_angles(relay_pos, self.scenario.bs_position)
        return ClusterAngleSpec(el_d, az_d, el_a, az_a, spr_el, spr_az)

    def _link2_specs(self, relay_pos: Position3D) -> list[ClusterAngleSpec]:
        cfg = self.channel_cfg
        spr_el = math.radians(cfg.elevation_spread_deg)
        spr_az = math.radians(cfg.azimuth_spread_deg)
        specs = []
        for k, user in enumerate(self.users):
            if cfg.angle_mode == "group":
                g = self.scenario.group_of_user(k)
                el = math.radians(cfg.link2_mean_elevation_deg)
                az = math.radians(cfg.group_azimuth_deg(g))
            else:
                el, az = geometric_angles(relay_pos, user)
            specs.append(ClusterAngleSpec(el, az, 0.0, 0.0, spr_el, spr_az))
        return specs

    # -- RF stages -----------------------------------------------------------

    def rf_stages(self, relay_pos: Position3D) -> RfStages:
        """Analog stages from the slow time-varying angle statistics.

        In ``group`` mode these never change, so they are cached. Design
        azimuths fan across each cluster/group spread interval so that the
        columns stay linearly independent even with a single cluster.
        """
        if self.channel_cfg.angle_mode == "group" and self._cached_rf is not None:
            return self._cached_rf
        cfg = self.channel_cfg
        spr_az = math.radians(cfg.azimuth_spread_deg)
        link1 = self._link1_spec(relay_pos)

        tx_angles = spread_cluster_angles(
            link1.mean_eaod, link1.mean_aaod, spr_az, self.hbf.n_rf_bs
        )
        rx_angles = spread_cluster_angles(
            link1.mean_eaoa, link1.mean_aaoa, spr_az, self.hbf.n_rf_uav
        )
        bs_tx = rf_stage(self.bs_array, tx_angles, self.hbf.n_rf_bs)
        relay_rx = rf_stage(self.relay_rx_array, rx_angles, self.hbf.n_rf_uav).T

        down_angles = self._downlink_design_angles(relay_pos, spr_az)
        # The downlink channel combines through its conjugate, so the matched
        # constant-modulus columns are the un-conjugated steering vectors.
        relay_tx = np.conj(rf_stage(self.relay_tx_array, down_angles, self.hbf.n_rf_uav))

        rf = RfStages(bs_tx=bs_tx, relay_rx=relay_rx, relay_tx=relay_tx)
        if cfg.angle_mode == "group":
            self._cached_rf = rf
        return rf

    def _downlink_design_angles(self, relay_pos: Position3D, spread_az: float):
        cfg = self.channel_cfg
        n_rf = self.hbf.n_rf_uav
        if cfg.angle_mode == "geometric":
            return [geometric_angles(relay_pos, u) for u in self.users]
        groups = self.scenario.num_groups
        counts = [n_rf // groups + (1 if g < n_rf % groups else 0) for g in range(groups)]
        angles = []
        for g, count in enumerate(counts):
            if count == 0:
                continue
            el = math.radians(cfg.link2_mean_elevation_deg)
            az = math.radians(cfg.group_azimuth_deg(g))
            angles.extend(spread_cluster_angles(el, az, spread_az, count))
        return angles

    # -- channel draws -------------------------------------------------------

    def draw_first_hop(self, relay_pos: Position3D, rng: np.random.Generator):
        cfg = self.channel_cfg
        return first_hop_channel(
            self.bs_array,
            self.relay_rx_array,
            self._link1_spec(relay_pos),
            self.backhaul_distance(relay_pos),
            cfg.path_loss,
            cfg.paths_link1,
            cfg.clusters_link1,
            rng,
        )

    def draw_second_hop_batch(self, relay_pos: Position3D, n: int, rng: np.random.Generator):
        cfg = self.channel_cfg
        return second_hop_channels_batch(
            self.relay_tx_array,
            self._link2_specs(relay_pos),
            self.user_distances(relay_pos),
            cfg.path_loss,
            cfg.paths_link2,
            n,
            rng,
        )

    def draw_realization(self, relay_pos: Position3D, rng: np.random.Generator) -> ChannelRealization:
        """One joint draw of both hops with all bookkeeping, e.g. for debugging."""
        cfg = self.channel_cfg
        h1, g1, a1 = first_hop_channel(
            self.bs_array,
            self.relay_rx_array,
            self._link1_spec(relay_pos),
            self.backhaul_distance(relay_pos),
            cfg.path_loss,
            cfg.paths_link1,
            cfg.clusters_link1,
            rng,
            return_parts=True,
        )
        from .channel import second_hop_channels

        h2, g2, a2 = second_hop_channels(
            self.relay_tx_array,
            self._link2_specs(relay_pos),
            self.user_distances(relay_pos),
            cfg.path_loss,
            cfg.paths_link2,
            rng,
            return_parts=True,
        )
        return ChannelRealization(h1, h2, g1, g2, a1, a2)

    # -- rates ---------------------------------------------------------------

    def second_hop_rate(
        self,
        xy,
        num_realizations: int,
        rng: np.random.Generator,
        return_user_sinr: bool = False,
    ):
        """Ergodic downlink sum rate at relay position ``xy``, bps/Hz."""
        pos = self.relay_position(xy)
        rf = self.rf_stages(pos)
        return ergodic_second_hop_rate(
            lambda n, r: self.draw_second_hop_batch(pos, n, r),
            rf.relay_tx,
            self.hbf.uav_power,
            self.noise,
            num_realizations,
            rng,
            return_user_sinr=return_user_sinr,
        )

    def first_hop_rate(self, xy, num_realizations: int, rng: np.random.Generator) -> float:
        """Ergodic backhaul rate at relay position ``xy``, bps/Hz."""
        from .rates import first_hop_rate as instantaneous

        pos = self.relay_position(xy)
        rf = self.rf_stages(pos)
        total = np.empty(num_realizations)
        for i in range(num_realizations):
            h1 = self.draw_first_hop(pos, rng)
            bset = self._first_hop_set(rf, h1)
            total[i] = instantaneous(bset, h1, self.noise)
        return float(np.mean(total))

    def _first_hop_set(self, rf: RfStages, h1: np.ndarray):
        from .beamforming import BeamformerSet, effective_channel_link1

        h_eff = effective_channel_link1(h1, rf.bs_tx, rf.relay_rx)
        bs_bb, relay_rx_bb = bb_stages_link1(h_eff, self.num_users, rf.bs_tx, self.hbf.bs_power)
        return BeamformerSet(
            bs_rf=rf.bs_tx,
            bs_bb=bs_bb,
            relay_rx_rf=rf.relay_rx,
            relay_rx_bb=relay_rx_bb,
            relay_tx_rf=rf.relay_tx,
            relay_tx_bb=np.zeros((self.hbf.n_rf_uav, self.num_users), dtype=complex),
        )

    def beamformers_for(
        self, relay_pos: Position3D, h1: np.ndarray, h2: np.ndarray
    ):
        """Full six-stage set for one realization of both hops."""
        rf = self.rf_stages(relay_pos)
        return build_beamformer_set(rf, h1, h2, self.num_users, self.hbf, self.noise)

    def rate_report(self, xy, num_realizations: int, rng: np.random.Generator) -> RateReport:
        """Ergodic rates for both hops plus the end-to-end relay rate."""
        r2, sinr = self.second_hop_rate(xy, num_realizations, rng, return_user_sinr=True)
        r1 = self.first_hop_rate(xy, num_realizations, rng)
        return RateReport(
            first_hop=r1,
            second_hop=r2,
            per_user_sinr=[float(s) for s in sinr],
            num_realizations=num_realizations,
        )


def build_system(
    scenario: ScenarioConfig,
    bs_array: ArrayGeometry,
    relay_rx_array: ArrayGeometry,
    relay_tx_array: ArrayGeometry,
    channel_cfg: ChannelConfig,
    hbf: HbfConfig,
    users: list[Position3D] | None = None,
    distribution_index: int | None = None,
    rng: np.random.Generator | None = None,
) -> RelaySystem:
    """Sample the scenario's users (once) and assemble a RelaySystem.

    User positions are drawn a single time per system instance; channel
    fading is redrawn per realization but the placement stays fixed.
    """
    if users is None:
        rng = np.random.default_rng(scenario.rng_seed) if rng is None else rng
        users = sample_users(scenario, rng, distribution_index)
    return RelaySystem(
        scenario, users, bs_array, relay_rx_array, relay_tx_array, channel_cfg, hbf
    )


def make_rate_objective(system: RelaySystem, num_realizations: int, seed: int):
    """Deterministic placement objective with common random numbers.

    Every call re-seeds its own generator, so all candidate positions are
    scored against identical fading draws and comparisons between optimizers
    are free of Monte Carlo bias.
    """

    def objective(xy) -> float:
        rng = np.random.default_rng(seed)
        return system.second_hop_rate(xy, num_realizations, rng)

    return objective

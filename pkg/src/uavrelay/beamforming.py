"""Two-stage beamformer construction for both hops.

The analog (RF) stages are constant-modulus steering matrices built from the
slow time-varying cluster/group mean angles only, so they stay fixed while
path gains fade. The digital baseband stages are rebuilt per channel
realization: an SVD along the backhaul hop and regularized zero-forcing
toward the users.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, steering_vector

__all__ = [
    "HbfConfig",
    "RfStages",
    "BeamformerSet",
    "rf_stage",
    "spread_cluster_angles",
    "effective_channel_link1",
    "bb_stages_link1",
    "bb_stage_link2",
    "bb_stage_link2_batch",
    "build_beamformer_set",
    "check_beamformer_invariants",
]


@dataclass(frozen=True)
class HbfConfig:
    """RF-chain counts and transmit power budgets for the two hops."""

    n_rf_bs: int = 4
    n_rf_uav: int = 4
    bs_power: float = 1.0
    uav_power: float = 1.0

    def __post_init__(self):
        if self.n_rf_bs < 1 or self.n_rf_uav < 1:
            raise ValueError("RF chain counts must be at least 1")
        if self.bs_power <= 0 or self.uav_power <= 0:
            raise ValueError("transmit powers must be positive")

    def validate_against(self, num_users: int, n_bs: int, n_relay_rx: int, n_relay_tx: int):
        """Check the chain-count sandwich K <= N_RF <= N for both ends."""
        if not (num_users <= self.n_rf_bs <= n_bs):
            raise ValueError(
                f"need K <= n_rf_bs <= N_T, got K={num_users}, "
                f"n_rf_bs={self.n_rf_bs}, N_T={n_bs}"
            )
        if not (num_users <= self.n_rf_uav <= min(n_relay_rx, n_relay_tx)):
            raise ValueError(
                f"need K <= n_rf_uav <= min(N_r, N_t), got K={num_users}, "
                f"n_rf_uav={self.n_rf_uav}, N_r={n_relay_rx}, N_t={n_relay_tx}"
            )


@dataclass
class RfStages:
    """The three analog stages: BS transmit, relay receive, relay transmit."""

    bs_tx: np.ndarray  # (N_T, n_rf_bs), columns conj-steering / sqrt(N_T)
    relay_rx: np.ndarray  # (n_rf_uav, N_r), rows steering^H / sqrt(N_r)
    relay_tx: np.ndarray  # (N_t, n_rf_uav), columns steering / sqrt(N_t)


@dataclass
class BeamformerSet:
    """All six stages of one end-to-end configuration."""

    bs_rf: np.ndarray  # (N_T, n_rf_bs)
    bs_bb: np.ndarray  # (n_rf_bs, K)
    relay_rx_rf: np.ndarray  # (n_rf_uav, N_r)
    relay_rx_bb: np.ndarray  # (K, n_rf_uav)
    relay_tx_rf: np.ndarray  # (N_t, n_rf_uav)
    relay_tx_bb: np.ndarray  # (n_rf_uav, K)

    def to_json(self) -> str:
        def split(a):
            return {"real": np.asarray(a).real.tolist(), "imag": np.asarray(a).imag.tolist()}

        names = ["bs_rf", "bs_bb", "relay_rx_rf", "relay_rx_bb", "relay_tx_rf", "relay_tx_bb"]
        return json.dumps({n: split(getattr(self, n)) for n in names})


def rf_stage(geom: ArrayGeometry, mean_angles, n_rf: int) -> np.ndarray:
    """Analog stage with one conjugate-steering column per design angle.

    ``mean_angles`` is a sequence of (elevation, azimuth) pairs; columns cycle
    through it when ``n_rf`` exceeds its length. Every entry has modulus
    ``1/sqrt(N)`` so the stage is realizable with phase shifters.
    """
    if n_rf < 1:
        raise ValueError("n_rf must be at least 1")
    angles = list(mean_angles)
    if not angles:
        raise ValueError("need at least one design angle")
    n = geom.size
    cols = []
    for j in range(n_rf):
        el, az = angles[j % len(angles)]
        cols.append(np.conj(steering_vector(geom, el, az)) / np.sqrt(n))
    return np.stack(cols, axis=1)


def spread_cluster_angles(
    mean_elevation: float,
    mean_azimuth: float,
    spread_azimuth: float,
    n: int,
) -> list[tuple[float, float]]:
    """Fan ``n`` design angles across a cluster's azimuth support.

    A single cluster served by several RF chains needs distinct columns, so
    the design azimuths are spaced evenly over
    ``[mean - spread, mean + spread]`` at the mean elevation. With ``n == 1``
    or zero spread this degenerates to the mean angle itself.
    """
    if n < 1:
        raise ValueError("need at least one angle")
    if n == 1 or spread_azimuth == 0.0:
        return [(mean_elevation, mean_azimuth)] * n
    az = np.linspace(mean_azimuth - spread_azimuth, mean_azimuth + spread_azimuth, n)
    return [(mean_elevation, float(a)) for a in az]


def effective_channel_link1(h1: np.ndarray, f_b: np.ndarray, f_ur: np.ndarray) -> np.ndarray:
    """Reduced-dimensional backhaul channel seen by the baseband stages."""
    if f_ur.shape[1] != h1.shape[0] or h1.shape[1] != f_b.shape[0]:
        raise ValueError(
            f"dimension mismatch: relay_rx {f_ur.shape}, channel {h1.shape}, bs {f_b.shape}"
        )
    return f_ur @ h1 @ f_b


def bb_stages_link1(
    h_eff: np.ndarray,
    num_streams: int,
    f_b: np.ndarray,
    bs_power: float,
    rank_rtol: float = 1e-10,
):
    """SVD baseband pair for the backhaul hop.

    Returns ``(bs_bb, relay_rx_bb)``: the top-``num_streams`` right singular
    vectors as the transmit baseband (scaled so the cascaded transmit power is
    ``bs_power``) and the Hermitian transpose of the matching left singular
    vectors as the receive combiner.
    """
    if num_streams > min(h_eff.shape):
        raise ValueError(f"cannot carve {num_streams} streams out of shape {h_eff.shape}")
    u, s, vh = np.linalg.svd(h_eff)
    if s[num_streams - 1] <= rank_rtol * s[0]:
        raise ValueError(
            f"effective channel rank below {num_streams}: singular values {s[:num_streams]}"
        )
    bs_bb = vh.conj().T[:, :num_streams]
    relay_rx_bb = u[:, :num_streams].conj().T
    scale = np.sqrt(bs_power) / np.linalg.norm(f_b @ bs_bb)
    return bs_bb * scale, relay_rx_bb


def bb_stage_link2(
    h2_eff: np.ndarray,
    uav_power: float,
    f_ut: np.ndarray,
    noise_power: float,
    rank_rtol: float = 1e-12,
) -> np.ndarray:
    """Regularized zero-forcing baseband toward the users.

    ``h2_eff`` is the (K, n_rf) effective downlink channel (rows are user
    channels after the RF stage). The regularizer is ``K * noise/power``; the
    result is scaled globally so the cascaded transmit power is ``uav_power``.
    """
    k = h2_eff.shape[0]
    svals = np.linalg.svd(h2_eff, compute_uv=False)
    if svals[-1] <= rank_rtol * svals[0] or svals[0] == 0.0:
        raise ValueError(
            "effective downlink channel is rank deficient "
            f"(singular values {svals}); users are not separable with these RF beams"
        )
    eps = k * noise_power / uav_power
    gram = h2_eff @ h2_eff.conj().T + eps * np.eye(k)
    b = h2_eff.conj().T @ np.linalg.inv(gram)
    scale = np.sqrt(uav_power) / np.linalg.norm(f_ut @ b)
    return b * scale


def bb_stage_link2_batch(
    h2_eff: np.ndarray,
    uav_power: float,
    f_ut: np.ndarray,
    noise_power: float,
) -> np.ndarray:
    """Vectorized regularized ZF over a stack of effective channels.

    ``h2_eff`` has shape (n, K, n_rf); returns (n, n_rf, K). Rank problems
    surface as LinAlgError from the batched solve.
    """
    n, k, _ = h2_eff.shape
    eps = k * noise_power / uav_power
    gram = h2_eff @ h2_eff.conj().transpose(0, 2, 1) + eps * np.eye(k)
    # b = h^H gram^{-1}; use (gram^{-1} h)^H since gram is Hermitian.
    b = np.linalg.solve(gram, h2_eff).conj().transpose(0, 2, 1)
    cascaded = f_ut[None, :, :] @ b
    norms = np.sqrt(np.sum(np.abs(cascaded) ** 2, axis=(1, 2)))
    return b * (np.sqrt(uav_power) / norms)[:, None, None]


def build_beamformer_set(
    rf: RfStages,
    h1: np.ndarray,
    h2: np.ndarray,
    num_users: int,
    hbf: HbfConfig,
    noise_power: float,
) -> BeamformerSet:
    """Assemble all six stages for one channel realization."""
    h_eff1 = effective_channel_link1(h1, rf.bs_tx, rf.relay_rx)
    bs_bb, relay_rx_bb = bb_stages_link1(h_eff1, num_users, rf.bs_tx, hbf.bs_power)
    # Rows of h2 are channel transposes; the downlink combines via h^H, so the
    # effective channel conjugates h2 before applying the RF stage.
    h2_eff = np.conj(h2) @ rf.relay_tx
    relay_tx_bb = bb_stage_link2(h2_eff, hbf.uav_power, rf.relay_tx, noise_power)
    return BeamformerSet(
        bs_rf=rf.bs_tx,
        bs_bb=bs_bb,
        relay_rx_rf=rf.relay_rx,
        relay_rx_bb=relay_rx_bb,
        relay_tx_rf=rf.relay_tx,
        relay_tx_bb=relay_tx_bb,
    )


def check_beamformer_invariants(
    bset: BeamformerSet,
    bs_power: float,
    uav_power: float,
    modulus_atol: float = 1e-12,
    power_rtol: float = 1e-9,
):
    """Raise AssertionError unless the constant-modulus and power constraints hold."""
    for name, rf, n in (
        ("bs_rf", bset.bs_rf, bset.bs_rf.shape[0]),
        ("relay_rx_rf", bset.relay_rx_rf, bset.relay_rx_rf.shape[1]),
        ("relay_tx_rf", bset.relay_tx_rf, bset.relay_tx_rf.shape[0]),
    ):
        expected = 1.0 / np.sqrt(n)
        dev = np.max(np.abs(np.abs(rf) - expected))
        assert dev <= modulus_atol, f"{name} modulus off by {dev}"
    p1 = np.linalg.norm(bset.bs_rf @ bset.bs_bb) ** 2
    assert abs(p1 - bs_power) <= power_rtol * bs_power, f"bs power {p1} != {bs_power}"
    p2 = np.linalg.norm(bset.relay_tx_rf @ bset.relay_tx_bb) ** 2
    assert abs(p2 - uav_power) <= power_rtol * uav_power, f"relay power {p2} != {uav_power}"

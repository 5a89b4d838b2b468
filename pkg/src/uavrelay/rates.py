"""Achievable-rate metrics: backhaul log-det rate, per-user SINR, ergodic
downlink sum rate, and the half-duplex decode-and-forward combination."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .beamforming import BeamformerSet, bb_stage_link2_batch

__all__ = [
    "noise_power",
    "NoiseModel",
    "RateReport",
    "first_hop_rate",
    "user_sinrs",
    "sinr_user",
    "second_hop_sum_rate",
    "ergodic_second_hop_rate",
    "overall_rate",
]


def noise_power(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts from a PSD in dBm/Hz and a bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return 10.0 ** ((psd_dbm_hz - 30.0) / 10.0) * bandwidth_hz


@dataclass(frozen=True)
class NoiseModel:
    psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 100e6

    @property
    def power(self) -> float:
        return noise_power(self.psd_dbm_hz, self.bandwidth_hz)


@dataclass
class RateReport:
    """Rates in bps/Hz; ``overall`` is the half-duplex relay rate
    ``0.5 * min(first_hop, second_hop)``."""

    first_hop: float
    second_hop: float
    per_user_sinr: list = field(default_factory=list)
    overall: float = 0.0
    num_realizations: int = 0

    def __post_init__(self):
        self.overall = overall_rate(self.first_hop, self.second_hop)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def first_hop_rate(bset: BeamformerSet, h1: np.ndarray, noise: float) -> float:
    """Log-det achievable rate of the backhaul hop, bps/Hz.

    The combined-noise covariance after the receive stages is
    ``noise * (B H_rf)(B H_rf)^H``; the rate is evaluated as
    ``logdet(Q + S S^H) - logdet(Q)`` with both matrices Hermitian positive
    definite, which keeps the computation real and stable.
    """
    h_eff = bset.relay_rx_rf @ h1 @ bset.bs_rf
    s = bset.relay_rx_bb @ h_eff @ bset.bs_bb
    signal = s @ s.conj().T
    combiner = bset.relay_rx_bb @ bset.relay_rx_rf
    q = noise * (combiner @ combiner.conj().T)
    sign_q, logdet_q = np.linalg.slogdet(q)
    if sign_q == 0 or not np.isfinite(logdet_q):
        raise np.linalg.LinAlgError(
            "combined-noise covariance is singular; receive combiner rows are "
            "linearly dependent"
        )
    _, logdet_total = np.linalg.slogdet(q + signal)
    rate = (logdet_total - logdet_q) / np.log(2.0)
    return max(float(np.real(rate)), 0.0)


def user_sinrs(
    relay_tx_rf: np.ndarray,
    relay_tx_bb: np.ndarray,
    h2: np.ndarray,
    noise: float,
) -> np.ndarray:
    """All K downlink SINRs for one realization.

    Row k of ``h2`` is the transpose of user k's channel, so the combining
    row is its conjugate. Beam j (column j of the baseband stage) carries
    user j's stream; everything off the diagonal of the cross-gain matrix is
    interference regardless of group membership.
    """
    cross = np.conj(h2) @ relay_tx_rf @ relay_tx_bb  # (K, K): user k x beam j
    power = np.abs(cross) ** 2
    sig = np.diag(power)
    interference = power.sum(axis=1) - sig
    return sig / (interference + noise)


def sinr_user(bset: BeamformerSet, h2: np.ndarray, user_index: int, noise: float) -> float:
    """SINR of a single user under the given beamformer set."""
    k = h2.shape[0]
    if not 0 <= user_index < k:
        raise IndexError(f"user index {user_index} out of range for {k} users")
    return float(user_sinrs(bset.relay_tx_rf, bset.relay_tx_bb, h2, noise)[user_index])


def second_hop_sum_rate(
    relay_tx_rf: np.ndarray, relay_tx_bb: np.ndarray, h2: np.ndarray, noise: float
) -> float:
    """Instantaneous downlink sum rate, bps/Hz."""
    return float(np.sum(np.log2(1.0 + user_sinrs(relay_tx_rf, relay_tx_bb, h2, noise))))


def ergodic_second_hop_rate(
    draw_h2_batch,
    relay_tx_rf: np.ndarray,
    uav_power: float,
    noise: float,
    num_realizations: int,
    rng: np.random.Generator,
    chunk_size: int = 512,
    return_user_sinr: bool = False,
):
    """Monte Carlo estimate of the ergodic downlink sum rate, bps/Hz.

    ``draw_h2_batch(n, rng)`` must return n fresh (K, N_t) channel draws.
    The RF stage stays fixed across realizations; the regularized-ZF baseband
    is rebuilt for every draw. The estimate is bit-reproducible for a fixed
    generator state and ``chunk_size`` (chunking determines the draw
    sequence); accumulation itself uses numpy's pairwise reductions.
    """
    if num_realizations < 1:
        raise ValueError("need at least one realization")
    rates = np.empty(num_realizations)
    sinr_rows = [] if return_user_sinr else None
    done = 0
    while done < num_realizations:
        n = min(chunk_size, num_realizations - done)
        h2 = draw_h2_batch(n, rng)  # (n, K, N_t)
        h_eff = np.conj(h2) @ relay_tx_rf  # (n, K, n_rf)
        bb = bb_stage_link2_batch(h_eff, uav_power, relay_tx_rf, noise)
        cross = h_eff @ bb  # (n, K, K)
        power = np.abs(cross) ** 2
        sig = np.diagonal(power, axis1=1, axis2=2)
        interference = power.sum(axis=2) - sig
        sinr = sig / (interference + noise)
        rates[done : done + n] = np.sum(np.log2(1.0 + sinr), axis=1)
        if return_user_sinr:
            sinr_rows.append(sinr)
        done += n
    mean_rate = float(np.mean(rates))
    if return_user_sinr:
        return mean_rate, np.concatenate(sinr_rows, axis=0).mean(axis=0)
    return mean_rate


def overall_rate(first_hop: float, second_hop: float) -> float:
    """Half-duplex decode-and-forward end-to-end rate, bps/Hz."""
    if first_hop < 0 or second_hop < 0:
        raise ValueError("rates must be non-negative")
    return 0.5 * min(first_hop, second_hop)

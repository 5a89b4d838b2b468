"""Clustered mmWave channel generation for both hops of the relay link.

Each hop follows a Saleh-Valenzuela style model: a small number of paths,
each with a complex Gaussian gain scaled by a distance power law and a
uniform rectangular array (URA) phase response drawn around cluster mean
angles. Gains are fast time-varying; path angles are slow time-varying.

Angle conventions: elevation is measured from the downward vertical (so the
horizon is at pi/2) and azimuth from the x-axis; both in radians. Antenna
spacing is in wavelengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "ClusterAngleSpec",
    "PathLossParams",
    "ChannelRealization",
    "steering_vector",
    "path_amplitude",
    "first_hop_channel",
    "second_hop_channels",
    "second_hop_channels_batch",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """URA layout: ``n_x * n_y`` elements spaced ``spacing`` wavelengths apart."""

    n_x: int
    n_y: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"array needs at least one element per axis, got {self}")
        if self.spacing <= 0:
            raise ValueError(f"element spacing must be positive, got {self.spacing}")

    @property
    def size(self) -> int:
        return self.n_x * self.n_y


@dataclass(frozen=True)
class ClusterAngleSpec:
    """Mean departure/arrival angles of one cluster and the uniform spread
    around them, radians. Per-path angles are drawn i.i.d. uniform in
    ``[mean - spread, mean + spread]``.
    """

    mean_eaod: float
    mean_aaod: float
    mean_eaoa: float = 0.0
    mean_aaoa: float = 0.0
    spread_elevation: float = 0.0
    spread_azimuth: float = 0.0

    def __post_init__(self):
        if self.spread_elevation < 0 or self.spread_azimuth < 0:
            raise ValueError("angle spreads must be non-negative")


@dataclass(frozen=True)
class PathLossParams:
    """Distance power law and noise figures of the link budget.

    The per-path amplitude is ``tau**-exponent * 10**(-reference_loss_db/20)``
    times a complex Gaussian gain, i.e. the reference loss enters once as a
    deterministic amplitude factor common to every path.
    """

    exponent: float = 3.6
    reference_loss_db: float = 61.34
    noise_psd_dbm_hz: float = -174.0
    bandwidth_hz: float = 100e6

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("path loss exponent must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def reference_amplitude(self) -> float:
        return 10.0 ** (-self.reference_loss_db / 20.0)


@dataclass
class ChannelRealization:
    """One joint draw of both hops.

    ``first_hop`` is (N_r, N_T); ``second_hop`` is (K, N_t) with row k equal to
    the transpose of user k's channel vector. ``first_hop_gains`` holds the L
    diagonal path gains, ``second_hop_gains`` the (K, Q) per-user path gains;
    angle arrays are (L, 4) [eaod, aaod, eaoa, aaoa] and (K, Q, 2) [eaod, aaod].
    """

    first_hop: np.ndarray
    second_hop: np.ndarray
    first_hop_gains: np.ndarray
    second_hop_gains: np.ndarray
    first_hop_angles: np.ndarray
    second_hop_angles: np.ndarray

    def to_json(self) -> str:
        def split(z):
            arr = np.asarray(z)
            return {"real": arr.real.tolist(), "imag": arr.imag.tolist()}

        return json.dumps(
            {
                "first_hop": split(self.first_hop),
                "second_hop": split(self.second_hop),
                "first_hop_gains": split(self.first_hop_gains),
                "second_hop_gains": split(self.second_hop_gains),
                "first_hop_angles": np.asarray(self.first_hop_angles).tolist(),
                "second_hop_angles": np.asarray(self.second_hop_angles).tolist(),
            }
        )


def steering_vector(geom: ArrayGeometry, elevation: float, azimuth: float) -> np.ndarray:
    """URA phase response at the given direction; every entry has unit modulus.

    The response factors as the Kronecker product of the x-axis progression
    (spatial frequency sin(el)cos(az)) and the y-axis progression
    (sin(el)sin(az)), x-axis index varying slowest.
    """
    kx = 2.0 * np.pi * geom.spacing * np.sin(elevation) * np.cos(azimuth)
    ky = 2.0 * np.pi * geom.spacing * np.sin(elevation) * np.sin(azimuth)
    ax = np.exp(-1j * kx * np.arange(geom.n_x))
    ay = np.exp(-1j * ky * np.arange(geom.n_y))
    return np.kron(ax, ay)


def _steering_batch(geom: ArrayGeometry, elevation: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Vectorized steering vectors: output shape ``elevation.shape + (size,)``."""
    el = np.asarray(elevation, dtype=float)
    az = np.asarray(azimuth, dtype=float)
    kx = 2.0 * np.pi * geom.spacing * np.sin(el) * np.cos(az)
    ky = 2.0 * np.pi * geom.spacing * np.sin(el) * np.sin(az)
    ax = np.exp(-1j * kx[..., None] * np.arange(geom.n_x))
    ay = np.exp(-1j * ky[..., None] * np.arange(geom.n_y))
    # Same element order as np.kron(ax, ay): x-axis index varies slowest.
    out = ax[..., :, None] * ay[..., None, :]
    return out.reshape(el.shape + (geom.size,))


def _complex_gains(rng: np.random.Generator, num_paths: int, size) -> np.ndarray:
    """CN(0, 1/num_paths) draws of the requested shape."""
    scale = np.sqrt(1.0 / (2.0 * num_paths))
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def path_amplitude(
    tau: float, params: PathLossParams, rng: np.random.Generator, num_paths: int
) -> complex:
    """One complex path gain: CN(0, 1/num_paths) scaled by the link budget.

    ``tau`` is the path length in meters and must be positive.
    """
    if tau <= 0:
        raise ValueError(f"path length must be positive, got {tau}")
    z = _complex_gains(rng, num_paths, ())
    return complex(z * tau ** (-params.exponent) * params.reference_amplitude)


def _draw_angles(mean: float, spread: float, size, rng: np.random.Generator) -> np.ndarray:
    if spread == 0.0:
        return np.full(size, mean, dtype=float)
    return rng.uniform(mean - spread, mean + spread, size=size)


def first_hop_channel(
    bs_geom: ArrayGeometry,
    relay_geom: ArrayGeometry,
    angles: ClusterAngleSpec,
    tau: float,
    params: PathLossParams,
    num_paths: int,
    num_clusters: int = 1,
    rng: np.random.Generator | None = None,
    return_parts: bool = False,
):
    """Draw the (N_r, N_T) channel from the base station to the relay.

    ``num_paths`` is the total path count; it must be divisible by
    ``num_clusters``. All clusters share ``angles`` (a single cluster is the
    common configuration), so the cluster split only affects bookkeeping.
    """
    if tau <= 0:
        raise ValueError(f"link distance must be positive, got {tau}")
    if num_paths < 1:
        raise ValueError("need at least one path")
    if num_paths % num_clusters != 0:
        raise ValueError(f"num_paths={num_paths} not divisible by num_clusters={num_clusters}")
    rng = np.random.default_rng() if rng is None else rng

    eaod = _draw_angles(angles.mean_eaod, angles.spread_elevation, num_paths, rng)
    aaod = _draw_angles(angles.mean_aaod, angles.spread_azimuth, num_paths, rng)
    eaoa = _draw_angles(angles.mean_eaoa, angles.spread_elevation, num_paths, rng)
    aaoa = _draw_angles(angles.mean_aaoa, angles.spread_azimuth, num_paths, rng)
    gains = _complex_gains(rng, num_paths, num_paths)
    gains = gains * tau ** (-params.exponent) * params.reference_amplitude

    a_rx = _steering_batch(relay_geom, eaoa, aaoa)  # (L, N_r)
    a_tx = _steering_batch(bs_geom, eaod, aaod)  # (L, N_T)
    h = (a_rx * gains[:, None]).T @ a_tx  # sum_l g_l a_rx a_tx^T

    if return_parts:
        angle_table = np.stack([eaod, aaod, eaoa, aaoa], axis=1)
        return h, gains, angle_table
    return h


def second_hop_channels_batch(
    relay_geom: ArrayGeometry,
    user_angle_specs: list[ClusterAngleSpec],
    distances,
    params: PathLossParams,
    paths_per_user: int,
    num_realizations: int,
    rng: np.random.Generator,
    return_parts: bool = False,
):
    """Draw ``num_realizations`` independent (K, N_t) second-hop channels.

    Row k of each realization is the transpose of user k's channel vector:
    the sum over that user's paths of gain times steering vector. All paths
    of user k share the single geometric distance ``distances[k]``.
    """
    tau = np.asarray(distances, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("all user distances must be positive")
    k = len(user_angle_specs)
    if tau.shape != (k,):
        raise ValueError(f"distances shape {tau.shape} does not match {k} users")
    if paths_per_user < 1:
        raise ValueError("need at least one path per user")

    mean_el = np.array([s.mean_eaod for s in user_angle_specs])
    mean_az = np.array([s.mean_aaod for s in user_angle_specs])
    spr_el = np.array([s.spread_elevation for s in user_angle_specs])
    spr_az = np.array([s.spread_azimuth for s in user_angle_specs])

    shape = (num_realizations, k, paths_per_user)
    u = rng.uniform(-1.0, 1.0, size=shape)
    el = mean_el[None, :, None] + u * spr_el[None, :, None]
    u = rng.uniform(-1.0, 1.0, size=shape)
    az = mean_az[None, :, None] + u * spr_az[None, :, None]
    z = _complex_gains(rng, paths_per_user, shape)
    gains = z * (tau[None, :, None] ** (-params.exponent)) * params.reference_amplitude

    a = _steering_batch(relay_geom, el, az)  # (n, K, Q, N_t)
    h = np.einsum("nkq,nkqt->nkt", gains, a)

    if return_parts:
        return h, gains, np.stack([el, az], axis=-1)
    return h


def second_hop_channels(
    relay_geom: ArrayGeometry,
    user_angle_specs: list[ClusterAngleSpec],
    distances,
    params: PathLossParams,
    paths_per_user: int,
    rng: np.random.Generator,
    return_parts: bool = False,
):
    """Single-realization convenience wrapper around the batch generator."""
    out = second_hop_channels_batch(
        relay_geom,
        user_angle_specs,
        distances,
        params,
        paths_per_user,
        1,
        rng,
        return_parts=return_parts,
    )
    if return_parts:
        h, gains, angs = out
        return h[0], gains[0], angs[0]
    return out[0]

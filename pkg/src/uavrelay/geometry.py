"""Geometry primitives and user-placement sampling for the dual-hop relay scenario.

Coordinates are meters in a right-handed frame with z pointing up. Served
users sit on the ground (z = 0); the base station and the relay hover at
fixed heights. Every sampler takes an explicit numpy Generator, so runs are
reproducible and can be parallelized by giving each worker its own stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field

import numpy as np

__all__ = [
    "Position3D",
    "AreaBounds",
    "ScenarioConfig",
    "distance_3d",
    "geometric_angles",
    "sample_static_users",
    "sample_dynamic_users",
    "sample_users",
    "STATIC_USER_RANGES",
    "DYNAMIC_USER_RANGES",
    "DISTRIBUTION_KINDS",
]

DISTRIBUTION_KINDS = ("static_narrow", "static_wide", "dynamic_sequence", "explicit")

# (x-range, y-range) squares the static scenarios draw users from, meters.
STATIC_USER_RANGES = {
    "static_narrow": ((90.0, 100.0), (90.0, 100.0)),
    "static_wide": ((50.0, 100.0), (50.0, 100.0)),
}

# Six waypoint rectangles for the moving-user scenario, indexed 1..6.
DYNAMIC_USER_RANGES = {
    1: ((60.0, 70.0), (60.0, 70.0)),
    2: ((60.0, 70.0), (70.0, 80.0)),
    3: ((70.0, 80.0), (80.0, 90.0)),
    4: ((80.0, 90.0), (80.0, 90.0)),
    5: ((80.0, 90.0), (70.0, 80.0)),
    6: ((80.0, 90.0), (60.0, 70.0)),
}


@dataclass(frozen=True)
class Position3D:
    """A point in meters; z is height above ground and must be non-negative."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite coordinate in ({self.x}, {self.y}, {self.z})")
        if self.z < 0:
            raise ValueError(f"height must be non-negative, got z={self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class AreaBounds:
    """Axis-aligned rectangle the relay may occupy, meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate bounds {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return (
            min(max(x, self.x_min), self.x_max),
            min(max(y, self.y_min), self.y_max),
        )

    @property
    def x_span(self) -> float:
        return self.x_max - self.x_min

    @property
    def y_span(self) -> float:
        return self.y_max - self.y_min


@dataclass
class ScenarioConfig:
    """Placement geometry plus the user-distribution generator settings.

    ``num_users`` must equal ``num_groups * users_per_group``. For the
    ``explicit`` distribution kind, ``explicit_user_ranges`` holds
    ``((x_lo, x_hi), (y_lo, y_hi))``; all ranges must lie inside ``bounds``.
    """

    bs_position: Position3D = Position3D(0.0, 0.0, 10.0)
    uav_initial: Position3D = Position3D(50.0, 50.0, 20.0)
    uav_height: float = 20.0
    bounds: AreaBounds = field(default_factory=lambda: AreaBounds(0.0, 100.0, 0.0, 100.0))
    num_users: int = 4
    num_groups: int = 1
    users_per_group: int = 4
    distribution_kind: str = "static_narrow"
    explicit_user_ranges: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_users != self.num_groups * self.users_per_group:
            raise ValueError(
                f"num_users={self.num_users} != num_groups*users_per_group="
                f"{self.num_groups * self.users_per_group}"
            )
        if self.distribution_kind not in DISTRIBUTION_KINDS:
            raise ValueError(f"unknown distribution_kind {self.distribution_kind!r}")
        if self.distribution_kind == "explicit":
            if self.explicit_user_ranges is None:
                raise ValueError("explicit distribution requires explicit_user_ranges")
            (x_lo, x_hi), (y_lo, y_hi) = self.explicit_user_ranges
            if not (
                self.bounds.x_min <= x_lo < x_hi <= self.bounds.x_max
                and self.bounds.y_min <= y_lo < y_hi <= self.bounds.y_max
            ):
                raise ValueError("explicit_user_ranges must lie inside bounds")

    def group_of_user(self, k: int) -> int:
        return k // self.users_per_group

    # -- JSON round trip -----------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bs_position"] = asdict(self.bs_position)
        d["uav_initial"] = asdict(self.uav_initial)
        d["bounds"] = asdict(self.bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        d["bs_position"] = Position3D(**d["bs_position"])
        d["uav_initial"] = Position3D(**d["uav_initial"])
        d["bounds"] = AreaBounds(**d["bounds"])
        if d.get("explicit_user_ranges") is not None:
            (xr, yr) = d["explicit_user_ranges"]
            d["explicit_user_ranges"] = (tuple(xr), tuple(yr))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


def distance_3d(p: Position3D, q: Position3D) -> float:
    """Euclidean distance between two points, meters."""
    return math.sqrt((p.x - q.x) ** 2 + (p.y - q.y) ** 2 + (p.z - q.z) ** 2)


def geometric_angles(frm: Position3D, to: Position3D) -> tuple[float, float]:
    """Elevation and azimuth of the ray ``frm -> to``, radians.

    Elevation is measured from the downward vertical at ``frm``: a target
    directly below gives 0, a horizontal target pi/2. Azimuth is
    ``atan2(dy, dx)``. Raises ValueError for coincident points.
    """
    dx, dy, dz = to.x - frm.x, to.y - frm.y, to.z - frm.z
    r = math.sqrt(dx * dx + dy * dy + dz * dz)
    if r == 0.0:
        raise ValueError("coincident points have no direction")
    elevation = math.acos(min(1.0, max(-1.0, -dz / r)))
    azimuth = math.atan2(dy, dx)
    return elevation, azimuth


def _sample_in_ranges(x_range, y_range, num_users: int, rng: np.random.Generator):
    (x_lo, x_hi), (y_lo, y_hi) = x_range, y_range
    pts = rng.uniform([x_lo, y_lo], [x_hi, y_hi], size=(num_users, 2))
    return [Position3D(float(x), float(y), 0.0) for x, y in pts]


def sample_static_users(cfg: ScenarioConfig, rng: np.random.Generator) -> list[Position3D]:
    """Draw ``cfg.num_users`` ground users i.i.d. uniform in the configured square."""
    if cfg.distribution_kind in STATIC_USER_RANGES:
        x_range, y_range = STATIC_USER_RANGES[cfg.distribution_kind]
    elif cfg.distribution_kind == "explicit":
        x_range, y_range = cfg.explicit_user_ranges
    else:
        raise ValueError(
            f"sample_static_users expects a static kind, got {cfg.distribution_kind!r}"
        )
    return _sample_in_ranges(x_range, y_range, cfg.num_users, rng)


def sample_dynamic_users(
    distribution_index: int, num_users: int, rng: np.random.Generator
) -> list[Position3D]:
    """Draw users uniform in waypoint rectangle ``distribution_index`` (1..6)."""
    if distribution_index not in DYNAMIC_USER_RANGES:
        raise ValueError(f"distribution index must be 1..6, got {distribution_index}")
    x_range, y_range = DYNAMIC_USER_RANGES[distribution_index]
    return _sample_in_ranges(x_range, y_range, num_users, rng)


def sample_users(
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    distribution_index: int | None = None,
) -> list[Position3D]:
    """Dispatch to the static or dynamic sampler based on the scenario kind."""
    if cfg.distribution_kind == "dynamic_sequence":
        if distribution_index is None:
            raise ValueError("dynamic_sequence needs a distribution_index")
        return sample_dynamic_users(distribution_index, cfg.num_users, rng)
    return sample_static_users(cfg, rng)

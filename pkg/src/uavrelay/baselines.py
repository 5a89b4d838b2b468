"""Placement baselines: particle swarm search, exhaustive grid search, and
the no-optimization fixed deployment. All maximize a scalar objective over
the allowed rectangle."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import AreaBounds

__all__ = ["SwarmConfig", "PsoResult", "pso_optimize", "grid_search", "fixed_deployment"]


@dataclass
class SwarmConfig:
    num_particles: int = 30
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    max_iters: int = 50
    bounds: AreaBounds = field(default_factory=lambda: AreaBounds(0.0, 100.0, 0.0, 100.0))
    seed: int = 0

    def __post_init__(self):
        if self.num_particles < 2:
            raise ValueError("need at least two particles")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError("inertia must lie in (0, 1)")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("acceleration coefficients must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = asdict(self.bounds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SwarmConfig":
        d = dict(d)
        d["bounds"] = AreaBounds(**d["bounds"])
        return cls(**d)


@dataclass
class PsoResult:
    position: np.ndarray
    value: float
    wall_time_s: float
    incumbent_history: np.ndarray  # best value after each iteration (iter 0 = init)
    evaluations: int


def pso_optimize(objective, cfg: SwarmConfig) -> PsoResult:
    """Standard inertia-weight particle swarm maximization over the bounds.

    Particle positions are clamped to the rectangle after every velocity
    update; the returned incumbent is the best (position, value) ever
    evaluated. Fully deterministic under ``cfg.seed``.
    """
    rng = np.random.default_rng(cfg.seed)
    b = cfg.bounds
    lo = np.array([b.x_min, b.y_min])
    hi = np.array([b.x_max, b.y_max])

    x = rng.uniform(lo, hi, size=(cfg.num_particles, 2))
    v = np.zeros_like(x)
    values = np.array([objective(p) for p in x])
    evaluations = cfg.num_particles

    pbest_x = x.copy()
    pbest_v = values.copy()
    g = int(np.argmax(pbest_v))
    gbest_x = pbest_x[g].copy()
    gbest_v = float(pbest_v[g])
    history = [gbest_v]

    t0 = time.perf_counter()
    for _ in range(cfg.max_iters):
        r1 = rng.uniform(size=x.shape)
        r2 = rng.uniform(size=x.shape)
        v = cfg.inertia * v + cfg.cognitive * r1 * (pbest_x - x) + cfg.social * r2 * (gbest_x - x)
        x = np.clip(x + v, lo, hi)
        values = np.array([objective(p) for p in x])
        evaluations += cfg.num_particles

        improved = values > pbest_v
        pbest_x[improved] = x[improved]
        pbest_v[improved] = values[improved]
        g = int(np.argmax(pbest_v))
        if pbest_v[g] > gbest_v:
            gbest_v = float(pbest_v[g])
            gbest_x = pbest_x[g].copy()
        history.append(gbest_v)

    return PsoResult(
        position=gbest_x,
        value=gbest_v,
        wall_time_s=time.perf_counter() - t0,
        incumbent_history=np.asarray(history),
        evaluations=evaluations,
    )


def grid_search(objective, bounds: AreaBounds, resolution: float):
    """Evaluate every lattice point and return the argmax.

    The lattice includes both boundary edges; ties break toward the smallest
    x, then smallest y. Intended as the brute-force reference other
    optimizers are judged against.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    xs = np.arange(bounds.x_min, bounds.x_max + resolution / 2, resolution)
    ys = np.arange(bounds.y_min, bounds.y_max + resolution / 2, resolution)
    best_pos = None
    best_val = -np.inf
    for x in xs:
        for y in ys:
            val = objective(np.array([x, y]))
            if val > best_val:
                best_val = float(val)
                best_pos = np.array([x, y])
    return best_pos, best_val


def fixed_deployment(objective, initial_xy) -> tuple[np.ndarray, float]:
    """Score the do-nothing baseline: the relay stays at its initial hover point."""
    pos = np.asarray(initial_xy, dtype=float)
    return pos, float(objective(pos))

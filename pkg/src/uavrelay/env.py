"""MDP wrapper around the relay placement problem.

States are the relay's 2D position normalized to [0, 1]^2; actions are
bounded east/north displacements in meters. The reward is the estimated
downlink sum rate when it clears a threshold, a small penalty below it, and
a larger penalty when the attempted move leaves the allowed area (the
position is clamped to the boundary and the episode continues).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AreaBounds, Position3D
from .simulator import RelaySystem

__all__ = ["EnvState", "EnvAction", "RewardParams", "StepResult", "RelayPlacementEnv"]


@dataclass(frozen=True)
class EnvState:
    """Normalized relay location; both components in [0, 1]."""

    x_norm: float
    y_norm: float

    def __post_init__(self):
        if not (0.0 <= self.x_norm <= 1.0 and 0.0 <= self.y_norm <= 1.0):
            raise ValueError(f"state outside unit box: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x_norm, self.y_norm])


@dataclass(frozen=True)
class EnvAction:
    """Relay displacement in meters: +dx east, +dy north."""

    dx: float
    dy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy])


@dataclass(frozen=True)
class RewardParams:
    """Piecewise reward settings.

    ``rate_threshold`` separates useful positions (reward = estimated rate)
    from poor ones (constant ``below_threshold_penalty``); attempted moves
    outside the area earn ``out_of_bounds_penalty``. ``train_realizations``
    sets the Monte Carlo budget per reward evaluation.
    """

    rate_threshold: float = 1.0
    below_threshold_penalty: float = -1.0
    out_of_bounds_penalty: float = -5.0
    train_realizations: int = 10

    def __post_init__(self):
        if self.rate_threshold < 0:
            raise ValueError("rate threshold must be non-negative")
        if self.train_realizations < 1:
            raise ValueError("need at least one realization per reward evaluation")


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float
    out_of_bounds: bool
    rate: float  # estimated downlink rate, NaN when the move was out of bounds


class RelayPlacementEnv:
    """Single-agent placement environment over a RelaySystem.

    Not thread safe; run one instance per worker with its own seed.
    """

    def __init__(
        self,
        system: RelaySystem,
        reward_params: RewardParams,
        action_limit: tuple[float, float] = (1.0, 1.0),
        uav_initial: Position3D | None = None,
        seed: int | None = None,
    ):
        self.system = system
        self.bounds: AreaBounds = system.scenario.bounds
        self.reward_params = reward_params
        self.action_limit = np.asarray(action_limit, dtype=float)
        initial = uav_initial if uav_initial is not None else system.scenario.uav_initial
        if not self.bounds.contains(initial.x, initial.y):
            raise ValueError(f"initial position {initial} outside bounds {self.bounds}")
        self.uav_initial = initial
        self.rng = np.random.default_rng(seed)
        self._pos = np.array([initial.x, initial.y])
        self.trace: list[tuple] = []
        self.record_trace = False
        self._t = 0

    # -- helpers ---------------------------------------------------------------

    @property
    def position(self) -> np.ndarray:
        """Current relay position in meters (copy)."""
        return self._pos.copy()

    def _normalize(self, pos: np.ndarray) -> EnvState:
        b = self.bounds
        return EnvState(
            float((pos[0] - b.x_min) / b.x_span),
            float((pos[1] - b.y_min) / b.y_span),
        )

    def set_initial(self, position: Position3D):
        """Re-anchor where future episodes start (used by warm-started runs)."""
        if not self.bounds.contains(position.x, position.y):
            raise ValueError(f"initial position {position} outside bounds {self.bounds}")
        self.uav_initial = position

    # -- MDP interface -----------------------------------------------------------

    def reset(self) -> EnvState:
        self._pos = np.array([self.uav_initial.x, self.uav_initial.y])
        self._t = 0
        return self._normalize(self._pos)

    def step(self, action) -> StepResult:
        if isinstance(action, EnvAction):
            action = action.as_array()
        action = np.asarray(action, dtype=float)
        if np.any(np.abs(action) > self.action_limit + 1e-12):
            raise ValueError(f"action {action} exceeds limits {self.action_limit}")

        candidate = self._pos + action
        out = not self.bounds.contains(candidate[0], candidate[1])
        if out:
            reward = self.reward_params.out_of_bounds_penalty
            rate = float("nan")
            self._pos = np.array(self.bounds.clamp(candidate[0], candidate[1]))
        else:
            self._pos = candidate
            rate = self.system.second_hop_rate(
                self._pos, self.reward_params.train_realizations, self.rng
            )
            if rate >= self.reward_params.rate_threshold:
                reward = rate
            else:
                reward = self.reward_params.below_threshold_penalty

        self._t += 1
        state = self._normalize(self._pos)
        if self.record_trace:
            self.trace.append(
                (self._t, self._pos[0], self._pos[1], action[0], action[1], reward, rate)
            )
        return StepResult(next_state=state, reward=float(reward), out_of_bounds=out, rate=rate)

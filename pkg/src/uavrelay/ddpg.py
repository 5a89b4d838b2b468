"""Deterministic policy-gradient learner for continuous 2D relay placement.

Everything runs on the numpy networks from :mod:`uavrelay.nn`: an actor
mapping normalized positions to bounded moves, a critic scoring
(state, action) pairs, slow-tracking target copies of both, a FIFO replay
buffer with uniform sampling, and Gaussian exploration noise. The training
loop is strictly sequential and bit-reproducible under a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict, field
from typing import NamedTuple

import numpy as np

from .nn import Mlp, Adam, soft_update

__all__ = [
    "Transition",
    "ReplayBuffer",
    "DdpgHyper",
    "EarlyStopConfig",
    "DdpgAgent",
    "TrainResult",
    "train",
    "greedy_rollout",
    "trailing_mean",
    "episodes_to_fraction",
]


class Transition(NamedTuple):
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO ring over (s, a, r, s') tuples."""

    def __init__(self, capacity: int = 60000, state_dim: int = 2, action_dim: int = 2):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros((capacity, action_dim))
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._head = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, reward: float, next_state):
        i = self._head
        self._states[i] = state
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        """Uniform sample with replacement."""
        idx = rng.integers(0, self._size, size=n)
        return Batch(
            self._states[idx].copy(),
            self._actions[idx].copy(),
            self._rewards[idx].copy(),
            self._next_states[idx].copy(),
        )

    def contents(self) -> list[Transition]:
        """Transitions currently stored, oldest first (test/debug helper)."""
        if self._size < self.capacity:
            order = range(self._size)
        else:
            order = [(self._head + i) % self.capacity for i in range(self.capacity)]
        return [
            Transition(
                self._states[i].copy(),
                self._actions[i].copy(),
                float(self._rewards[i]),
                self._next_states[i].copy(),
            )
            for i in order
        ]


@dataclass
class DdpgHyper:
    """Learner hyper-parameters; the defaults fit the placement task."""

    discount: float = 0.99
    target_tau: float = 0.01
    actor_lr: float = 0.001
    critic_lr: float = 0.002
    batch_size: int = 64
    noise_sigma: float = 0.5  # action units (meters)
    warmup_steps: int = 1000
    critic_weight_decay: float = 1e-2
    episodes: int = 300
    steps_per_episode: int = 100
    buffer_capacity: int = 60000
    actor_hidden: tuple = (20, 20)
    critic_hidden: tuple = (20, 20)
    avg_window: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if not 0.0 < self.target_tau <= 1.0:
            raise ValueError("target_tau must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        self.actor_hidden = tuple(self.actor_hidden)
        self.critic_hidden = tuple(self.critic_hidden)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EarlyStopConfig:
    """Stop when the trailing-average reward has plateaued or degraded.

    Plateau: the trailing average has risen by less than
    ``rel_tol * max(1, |avg|)`` over the last ``patience`` episodes (the
    trailing window already smooths per-episode noise); only armed when
    ``plateau_enabled``. Collapse: the average has fallen ``collapse_drop``
    below the best seen, which off-policy runs rarely recover from within
    budget; the best-episode snapshot is already in hand, so stopping is
    free. Neither trigger fires before ``min_episodes``.

    Cold-started runs should disable the plateau trigger: their learning
    curves routinely stall before climbing, which a plateau test cannot
    distinguish from convergence. Warm-started runs begin near their final
    performance, so a flat stretch there really does mean "done".
    """

    min_episodes: int = 40
    patience: int = 15
    rel_tol: float = 0.03
    collapse_drop: float = 0.3
    plateau_enabled: bool = True


class DdpgAgent:
    """Actor/critic pair with target copies and their optimizers."""

    def __init__(
        self,
        hyper: DdpgHyper,
        action_limit=(1.0, 1.0),
        rng: np.random.Generator | None = None,
        actor: Mlp | None = None,
        critic: Mlp | None = None,
    ):
        self.hyper = hyper
        self.action_limit = np.asarray(action_limit, dtype=float)
        rng = np.random.default_rng() if rng is None else rng
        state_dim, action_dim = 2, 2
        if actor is None:
            actor = Mlp.initialize(
                [state_dim, *hyper.actor_hidden, action_dim],
                output="tanh",
                rng=rng,
                output_scale=self.action_limit,
            )
        if critic is None:
            critic = Mlp.initialize(
                [state_dim + action_dim, *hyper.critic_hidden, 1],
                output="linear",
                rng=rng,
            )
        self.actor = actor
        self.critic = critic
        self.target_actor = actor.copy()
        self.target_critic = critic.copy()
        self.actor_opt = Adam(self.actor.parameters(), lr=hyper.actor_lr)
        self.critic_opt = Adam(
            self.critic.parameters(),
            lr=hyper.critic_lr,
            weight_decay=hyper.critic_weight_decay,
        )

    # -- inference ---------------------------------------------------------------

    def _critic_input(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        # Actions are normalized by their limits so critic inputs share scale.
        return np.concatenate([states, actions / self.action_limit], axis=1)

    def policy(self, states: np.ndarray) -> np.ndarray:
        return self.actor.forward(np.atleast_2d(states))

    def q_values(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.critic.forward(self._critic_input(states, actions))[:, 0]

    def select_action(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Exploratory action: policy output plus Gaussian noise, clipped to the box."""
        a = self.policy(state[None])[0]
        if self.hyper.noise_sigma > 0:
            a = a + rng.normal(0.0, self.hyper.noise_sigma, size=a.shape)
        return np.clip(a, -self.action_limit, self.action_limit)

    # -- updates -------------------------------------------------------------------

    def critic_update(self, batch: Batch) -> float:
        """One squared-TD-error minimization step on the critic. Returns the loss."""
        n = len(batch.rewards)
        next_actions = self.target_actor.forward(batch.next_states)
        next_q = self.target_critic.forward(
            self._critic_input(batch.next_states, next_actions)
        )[:, 0]
        targets = batch.rewards + self.hyper.discount * next_q

        q, cache = self.critic.forward_cache(self._critic_input(batch.states, batch.actions))
        err = q[:, 0] - targets
        loss = float(np.mean(err**2))
        grads = self.critic.gradients(cache, (2.0 / n) * err[:, None])
        self.critic_opt.step(grads)
        return loss

    def actor_update(self, states: np.ndarray) -> float:
        """One policy-gradient ascent step on mean Q(s, policy(s)). Returns that mean."""
        n = states.shape[0]
        actions, actor_cache = self.actor.forward_cache(states)
        q, critic_cache = self.critic.forward_cache(self._critic_input(states, actions))
        mean_q = float(np.mean(q))
        _, _, grad_in = self.critic.backward(critic_cache, np.full((n, 1), 1.0 / n))
        grad_actions = grad_in[:, states.shape[1]:] / self.action_limit
        # Adam minimizes, so feed the negated ascent direction.
        grads = self.actor.gradients(actor_cache, -grad_actions)
        self.actor_opt.step(grads)
        return mean_q

    def update_targets(self):
        soft_update(self.target_actor, self.actor, self.hyper.target_tau)
        soft_update(self.target_critic, self.critic, self.hyper.target_tau)

    # -- persistence ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "action_limit": self.action_limit.tolist(),
            "actor": self.actor.to_dict(),
            "critic": self.critic.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, hyper: DdpgHyper) -> "DdpgAgent":
        return cls(
            hyper,
            action_limit=np.array(d["action_limit"]),
            actor=Mlp.from_dict(d["actor"]),
            critic=Mlp.from_dict(d["critic"]),
        )


@dataclass
class TrainResult:
    """Networks are the snapshot from the best trailing-average episode, not
    necessarily the final parameters; off-policy training can degrade after
    converging and the snapshot is the policy one would deploy."""

    actor: Mlp
    critic: Mlp
    episode_rewards: np.ndarray
    avg_rewards: np.ndarray
    episodes_run: int
    stopped_early: bool
    wall_time_s: float
    best_avg_reward: float = float("-inf")
    best_episode: int = 0


def trailing_mean(values, window: int) -> float:
    tail = values[-window:] if len(values) > window else values
    return float(np.mean(tail))


def episodes_to_fraction(avg_rewards, fraction: float = 0.9, window: int = 20) -> int:
    """1-based episode index where the trailing average first reaches
    ``fraction`` of its final value.

    Indices before the averaging window has filled are partial averages of
    very few episodes; they are too noisy to count as crossings, so the scan
    starts at the first full window (or at the end for shorter traces).
    """
    avg = np.asarray(avg_rewards, dtype=float)
    threshold = fraction * avg[-1]
    start = min(window, len(avg)) - 1
    hits = np.nonzero(avg[start:] >= threshold)[0]
    return int(hits[0]) + start + 1 if hits.size else len(avg)


def train(
    env,
    hyper: DdpgHyper,
    episodes: int | None = None,
    steps: int | None = None,
    warm_start: DdpgAgent | dict | None = None,
    early_stop: EarlyStopConfig | None = None,
    action_limit=(1.0, 1.0),
) -> TrainResult:
    """Run the full training loop against ``env``.

    ``env`` needs ``reset() -> state`` and ``step(action) -> result`` where
    states expose ``as_array()`` (or are arrays) and results expose
    ``.reward`` and ``.next_state``. With ``warm_start`` the networks
    continue from a previous run instead of a fresh initialization.

    Fresh runs spend their first ``hyper.warmup_steps`` environment steps on
    uniform random actions with no updates, so the critic sees the local
    reward landscape before the policy commits to a direction (the bounded
    tanh policy is hard to un-saturate once it has locked in). Warm-started
    runs skip the warmup.
    """
    episodes = hyper.episodes if episodes is None else episodes
    steps = hyper.steps_per_episode if steps is None else steps

    ss = np.random.SeedSequence(hyper.seed)
    init_rng, noise_rng, sample_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    if warm_start is None:
        agent = DdpgAgent(hyper, action_limit=action_limit, rng=init_rng)
    elif isinstance(warm_start, DdpgAgent):
        agent = DdpgAgent(
            hyper,
            action_limit=warm_start.action_limit,
            actor=warm_start.actor.copy(),
            critic=warm_start.critic.copy(),
        )
    else:
        agent = DdpgAgent.from_dict(warm_start, hyper)

    buffer = ReplayBuffer(hyper.buffer_capacity)
    episode_rewards: list[float] = []
    avg_rewards: list[float] = []
    stopped_early = False
    best_avg = -np.inf
    best_episode = 0
    snapshot = (agent.actor.copy(), agent.critic.copy())
    last_improve = 0
    warmup = hyper.warmup_steps if warm_start is None else 0
    step_count = 0
    t0 = time.perf_counter()

    for ep in range(episodes):
        state = _as_state_array(env.reset())
        total = 0.0
        for _ in range(steps):
            if step_count < warmup:
                action = noise_rng.uniform(-agent.action_limit, agent.action_limit)
            else:
                action = agent.select_action(state, noise_rng)
            step_count += 1
            result = env.step(action)
            next_state = _as_state_array(result.next_state)
            buffer.push(state, action, result.reward, next_state)
            if step_count > warmup and len(buffer) >= hyper.batch_size:
                batch = buffer.sample(hyper.batch_size, sample_rng)
                agent.critic_update(batch)
                agent.actor_update(batch.states)
                agent.update_targets()
            state = next_state
            total += result.reward
        episode_rewards.append(total)
        avg = trailing_mean(episode_rewards, hyper.avg_window)
        avg_rewards.append(avg)

        # Track the best policy only once the trailing window is full; a
        # partial window is a high-variance average and a single lucky early
        # episode must not outrank a genuinely converged stretch.
        if avg > best_avg and ep + 1 >= hyper.avg_window:
            best_avg = avg
            best_episode = ep
            snapshot = (agent.actor.copy(), agent.critic.copy())

        if early_stop is not None and ep + 1 >= max(
            early_stop.min_episodes, early_stop.patience + 1
        ):
            plateaued = False
            if early_stop.plateau_enabled:
                past = avg_rewards[-1 - early_stop.patience]
                plateaued = avg - past < early_stop.rel_tol * max(1.0, abs(avg))
            collapsed = avg < best_avg - early_stop.collapse_drop * max(1.0, abs(best_avg))
            if plateaued or collapsed:
                stopped_early = True
                break

    best_actor, best_critic = snapshot
    return TrainResult(
        actor=best_actor,
        critic=best_critic,
        episode_rewards=np.asarray(episode_rewards),
        avg_rewards=np.asarray(avg_rewards),
        episodes_run=len(episode_rewards),
        stopped_early=stopped_early,
        wall_time_s=time.perf_counter() - t0,
        best_avg_reward=float(best_avg),
        best_episode=best_episode,
    )


def greedy_rollout(env, actor: Mlp, steps: int) -> np.ndarray:
    """Noise-free policy rollout; returns the visited positions in meters,
    shape (steps + 1, 2) including the start."""
    state = _as_state_array(env.reset())
    positions = [env.position]
    for _ in range(steps):
        action = actor.forward(state[None])[0]
        result = env.step(action)
        state = _as_state_array(result.next_state)
        positions.append(env.position)
    return np.asarray(positions)


def _as_state_array(state) -> np.ndarray:
    if hasattr(state, "as_array"):
        return state.as_array()
    return np.asarray(state, dtype=float)

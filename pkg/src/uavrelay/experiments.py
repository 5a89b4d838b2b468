"""Configuration-driven experiment runners.

One JSON-serializable :class:`ExperimentConfig` describes a whole run; two
factory profiles ship with the package: ``paper`` (full-scale arrays and
Monte Carlo budgets) and ``desk`` (reduced sizes so the complete pipeline
finishes in minutes). Every runner writes a manifest with the config hash,
seeds, and library versions next to its outputs; re-running with the same
config reproduces every CSV number bit-exactly except wall-clock columns.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import Position3D, ScenarioConfig
from .channel import ArrayGeometry, PathLossParams
from .beamforming import HbfConfig
from .env import RewardParams, RelayPlacementEnv
from .simulator import ChannelConfig, RelaySystem, build_system, make_rate_objective
from .ddpg import (
    DdpgHyper,
    EarlyStopConfig,
    DdpgAgent,
    train,
    greedy_rollout,
)
from .baselines import SwarmConfig, pso_optimize, grid_search, fixed_deployment

__all__ = [
    "ArraysConfig",
    "ExperimentConfig",
    "desk_profile",
    "paper_profile",
    "profile_by_name",
    "set_master_seed",
    "apply_overrides",
    "run_rate_map",
    "run_train",
    "run_compare",
    "TrainArtifacts",
    "SegmentResult",
]

DYNAMIC_SEGMENTS = [f"l{i}" for i in range(1, 7)]


def _derived_seed(master: int, salt: int) -> int:
    """Stable child seed; avoids correlated streams between components."""
    return int(np.random.SeedSequence([master, salt]).generate_state(1)[0])


# Salt values for the independent random streams of one experiment.
_SALT_USERS = 11
_SALT_ENV = 23
_SALT_OBJECTIVE = 37
_SALT_EVAL = 53


@dataclass
class ArraysConfig:
    """Antenna panel sizes as (n_x, n_y) and the common element spacing."""

    bs: tuple = (12, 12)
    relay_rx: tuple = (12, 12)
    relay_tx: tuple = (12, 12)
    spacing: float = 0.5

    def __post_init__(self):
        self.bs = tuple(self.bs)
        self.relay_rx = tuple(self.relay_rx)
        self.relay_tx = tuple(self.relay_tx)

    def geometries(self):
        return (
            ArrayGeometry(*self.bs, spacing=self.spacing),
            ArrayGeometry(*self.relay_rx, spacing=self.spacing),
            ArrayGeometry(*self.relay_tx, spacing=self.spacing),
        )


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    arrays: ArraysConfig = field(default_factory=ArraysConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    hbf: HbfConfig = field(default_factory=HbfConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    ddpg: DdpgHyper = field(default_factory=DdpgHyper)
    pso: SwarmConfig = field(default_factory=SwarmConfig)
    early_stop: EarlyStopConfig = field(default_factory=EarlyStopConfig)
    eval_realizations: int = 2000
    grid_resolution: float = 5.0
    output_dir: str = "out"

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "arrays": asdict(self.arrays),
            "channel": self.channel.to_dict(),
            "hbf": asdict(self.hbf),
            "reward": asdict(self.reward),
            "ddpg": self.ddpg.to_dict(),
            "pso": self.pso.to_dict(),
            "early_stop": asdict(self.early_stop),
            "eval_realizations": self.eval_realizations,
            "grid_resolution": self.grid_resolution,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            scenario=ScenarioConfig.from_dict(d["scenario"]),
            arrays=ArraysConfig(**d["arrays"]),
            channel=ChannelConfig.from_dict(d["channel"]),
            hbf=HbfConfig(**d["hbf"]),
            reward=RewardParams(**d["reward"]),
            ddpg=DdpgHyper(**d["ddpg"]),
            pso=SwarmConfig.from_dict(d["pso"]),
            early_stop=EarlyStopConfig(**d["early_stop"]),
            eval_realizations=d["eval_realizations"],
            grid_resolution=d["grid_resolution"],
            output_dir=d["output_dir"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def desk_profile(seed: int = 0, scenario: str = "static_narrow") -> ExperimentConfig:
    """Reduced configuration: 4x4 panels, two users, small path counts.

    Transmit power is the free scale knob of the amplitude-domain distance
    law (see README) and is calibrated per scenario kind: the static and
    dynamic user regions sit at very different distances, and one power
    cannot place both in the informative SINR range. The calibration keeps
    downlink rates roughly between the reward threshold and ~20 bps/Hz over
    each scenario's relevant area.
    """
    uav_power = 8e4 if scenario == "dynamic_sequence" else 2e6
    cfg = ExperimentConfig(
        scenario=ScenarioConfig(
            num_users=2, users_per_group=2, distribution_kind=scenario, rng_seed=seed
        ),
        arrays=ArraysConfig(bs=(4, 4), relay_rx=(4, 4), relay_tx=(4, 4)),
        channel=ChannelConfig(paths_link1=4, paths_link2=4),
        hbf=HbfConfig(n_rf_bs=2, n_rf_uav=2, bs_power=5e8, uav_power=uav_power),
        reward=RewardParams(rate_threshold=1.0, train_realizations=10),
        ddpg=DdpgHyper(episodes=150, steps_per_episode=50, seed=_derived_seed(seed, 2)),
        pso=SwarmConfig(seed=_derived_seed(seed, 3)),
        eval_realizations=200,
        grid_resolution=5.0,
    )
    return cfg


def paper_profile(seed: int = 0, scenario: str = "static_narrow") -> ExperimentConfig:
    """Full-scale configuration: 12x12 panels, four users, ten paths per hop."""
    cfg = ExperimentConfig(
        scenario=ScenarioConfig(
            num_users=4, users_per_group=4, distribution_kind=scenario, rng_seed=seed
        ),
        arrays=ArraysConfig(bs=(12, 12), relay_rx=(12, 12), relay_tx=(12, 12)),
        channel=ChannelConfig(paths_link1=10, paths_link2=10),
        hbf=HbfConfig(n_rf_bs=4, n_rf_uav=4, bs_power=2e3, uav_power=2e3),
        reward=RewardParams(rate_threshold=1.0, train_realizations=10),
        ddpg=DdpgHyper(episodes=300, steps_per_episode=100, seed=_derived_seed(seed, 2)),
        pso=SwarmConfig(seed=_derived_seed(seed, 3)),
        eval_realizations=2000,
        grid_resolution=5.0,
    )
    return cfg


_PROFILES = {"desk": desk_profile, "paper": paper_profile}


def profile_by_name(name: str, seed: int = 0, scenario: str | None = None) -> ExperimentConfig:
    if name not in _PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(_PROFILES)}")
    if scenario is None:
        return _PROFILES[name](seed)
    return _PROFILES[name](seed, scenario=scenario)


def set_master_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Re-seed every stochastic component from one master value."""
    cfg.scenario.rng_seed = seed
    cfg.ddpg.seed = _derived_seed(seed, 2)
    cfg.pso.seed = _derived_seed(seed, 3)
    return cfg


def apply_overrides(cfg: ExperimentConfig, assignments: dict[str, str]) -> ExperimentConfig:
    """Override individual fields via dotted paths, e.g. ``ddpg.episodes=200``.

    Values are parsed as JSON when possible so numbers, booleans, and lists
    work; anything else is kept as a string.
    """
    d = cfg.to_dict()
    for path, raw in assignments.items():
        keys = path.split(".")
        node = d
        for k in keys[:-1]:
            if k not in node:
                raise KeyError(f"no config section {k!r} in path {path!r}")
            node = node[k]
        if keys[-1] not in node:
            raise KeyError(f"no config field {keys[-1]!r} in path {path!r}")
        try:
            value = json.loads(raw)
        except (json.JSONDecodeError, TypeError):
            value = raw
        node[keys[-1]] = value
    return ExperimentConfig.from_dict(d)


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def build_experiment_system(
    cfg: ExperimentConfig, distribution_index: int | None = None
) -> RelaySystem:
    bs, rx, tx = cfg.arrays.geometries()
    users_rng = np.random.default_rng(
        _derived_seed(cfg.scenario.rng_seed, _SALT_USERS + (distribution_index or 0))
    )
    return build_system(
        cfg.scenario,
        bs,
        rx,
        tx,
        cfg.channel,
        cfg.hbf,
        distribution_index=distribution_index,
        rng=users_rng,
    )


def evaluation_objective(cfg: ExperimentConfig, system: RelaySystem):
    """Common-random-number placement objective at the evaluation budget."""
    seed = _derived_seed(cfg.scenario.rng_seed, _SALT_OBJECTIVE)
    return make_rate_objective(system, cfg.eval_realizations, seed)


def _write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, extra: dict | None = None):
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.scenario.rng_seed,
        "versions": {
            "uavrelay": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "config": cfg.to_dict(),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _write_csv(path: Path, header: list[str], rows: list):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# rate-map
# ---------------------------------------------------------------------------


def run_rate_map(
    cfg: ExperimentConfig,
    resolution: float | None = None,
    out_dir: str | Path | None = None,
    distribution_index: int | None = None,
) -> dict:
    """Evaluate the downlink rate on a lattice and write ``rate_map.csv``."""
    resolution = cfg.grid_resolution if resolution is None else resolution
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.scenario.distribution_kind == "dynamic_sequence" and distribution_index is None:
        distribution_index = 1
    system = build_experiment_system(cfg, distribution_index)
    objective = evaluation_objective(cfg, system)

    b = cfg.scenario.bounds
    xs = np.arange(b.x_min, b.x_max + resolution / 2, resolution)
    ys = np.arange(b.y_min, b.y_max + resolution / 2, resolution)
    rows = []
    best = (None, -np.inf)
    for x in xs:
        for y in ys:
            r2 = objective(np.array([x, y]))
            rows.append((f"{x:.6g}", f"{y:.6g}", repr(r2)))
            if r2 > best[1]:
                best = ((float(x), float(y)), r2)

    csv_path = out / "rate_map.csv"
    _write_csv(csv_path, ["x", "y", "r2"], rows)
    manifest = _write_manifest(out, "rate_map", cfg, {"resolution": resolution})
    return {
        "csv": csv_path,
        "manifest": manifest,
        "best_position": best[0],
        "best_r2": best[1],
        "num_points": len(rows),
    }


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


@dataclass
class SegmentResult:
    segment: str
    episodes_run: int
    stopped_early: bool
    wall_time_s: float
    initial_xy: tuple
    best_xy: tuple
    best_r2: float
    final_xy: tuple
    final_r2: float
    episode_rewards: np.ndarray
    avg_rewards: np.ndarray
    weights_path: Path | None = None


@dataclass
class TrainArtifacts:
    segments: list[SegmentResult]
    episodes_csv: Path | None
    summary_path: Path | None
    manifest: Path | None


def _train_one_segment(
    cfg: ExperimentConfig,
    segment: str,
    system: RelaySystem,
    initial: Position3D,
    warm_agent_state: dict | None,
    env_seed: int,
    early_stop: EarlyStopConfig | None,
) -> tuple[SegmentResult, dict]:
    env = RelayPlacementEnv(
        system, cfg.reward, uav_initial=initial, seed=env_seed
    )
    result = train(
        env,
        cfg.ddpg,
        warm_start=warm_agent_state,
        early_stop=early_stop,
    )

    # Score the greedy policy: best rate over the positions it visits.
    rollout_env = RelayPlacementEnv(system, cfg.reward, uav_initial=initial, seed=env_seed)
    positions = greedy_rollout(rollout_env, result.actor, cfg.ddpg.steps_per_episode)
    objective = evaluation_objective(cfg, system)
    values = np.array([objective(p) for p in positions])
    best_i = int(np.argmax(values))

    agent_state = {
        "action_limit": [1.0, 1.0],
        "actor": result.actor.to_dict(),
        "critic": result.critic.to_dict(),
    }
    seg = SegmentResult(
        segment=segment,
        episodes_run=result.episodes_run,
        stopped_early=result.stopped_early,
        wall_time_s=result.wall_time_s,
        initial_xy=(initial.x, initial.y),
        best_xy=(float(positions[best_i][0]), float(positions[best_i][1])),
        best_r2=float(values[best_i]),
        final_xy=(float(positions[-1][0]), float(positions[-1][1])),
        final_r2=float(values[-1]),
        episode_rewards=result.episode_rewards,
        avg_rewards=result.avg_rewards,
    )
    return seg, agent_state


def run_train(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> TrainArtifacts:
    """Train the placement policy and persist weights plus episode traces.

    Static scenarios produce one segment. The dynamic sequence trains the six
    user distributions in order, warm-starting each from the previous
    segment's networks and best position; those warm segments use plateau
    early stopping so converged runs hand over quickly.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    dynamic = cfg.scenario.distribution_kind == "dynamic_sequence"
    segments: list[SegmentResult] = []
    env_seed = _derived_seed(cfg.scenario.rng_seed, _SALT_ENV)

    # Cold starts always get their full episode budget (a fresh learning
    # curve can stall before it climbs, so a plateau test would cut it off);
    # only the divergence guard can end them early. Warm-started segments
    # begin near their final performance and stop on plateau, which is where
    # the multi-location runtime saving comes from.
    cold_stop = replace(cfg.early_stop, plateau_enabled=False)
    warm_stop = replace(cfg.early_stop, plateau_enabled=True)

    if not dynamic:
        system = build_experiment_system(cfg)
        seg, agent_state = _train_one_segment(
            cfg, "static", system, cfg.scenario.uav_initial, None, env_seed, cold_stop
        )
        states = {"static": agent_state}
        segments.append(seg)
    else:
        warm_state = None
        initial = cfg.scenario.uav_initial
        states = {}
        for i, name in enumerate(DYNAMIC_SEGMENTS, start=1):
            system = build_experiment_system(cfg, distribution_index=i)
            seg, warm_state = _train_one_segment(
                cfg,
                name,
                system,
                initial,
                warm_state,
                _derived_seed(env_seed, i),
                early_stop=cold_stop if i == 1 else warm_stop,
            )
            states[name] = warm_state
            segments.append(seg)
            initial = Position3D(seg.best_xy[0], seg.best_xy[1], cfg.scenario.uav_height)

    # Episode traces: one row per episode, tagged by segment.
    rows = []
    for seg in segments:
        for ep, (r, avg) in enumerate(zip(seg.episode_rewards, seg.avg_rewards), start=1):
            rows.append((seg.segment, ep, repr(float(r)), repr(float(avg))))
    episodes_csv = out / "episodes.csv"
    _write_csv(
        episodes_csv, ["segment", "episode", "accumulated_reward", "avg_accumulated_reward"], rows
    )

    for seg in segments:
        path = out / f"weights_{seg.segment}.json"
        path.write_text(json.dumps(states[seg.segment]))
        seg.weights_path = path

    summary = {
        seg.segment: {
            "episodes_run": seg.episodes_run,
            "stopped_early": seg.stopped_early,
            "wall_time_s": seg.wall_time_s,
            "initial_xy": list(seg.initial_xy),
            "best_xy": list(seg.best_xy),
            "best_r2": seg.best_r2,
            "final_xy": list(seg.final_xy),
            "final_r2": seg.final_r2,
            "weights": seg.weights_path.name,
        }
        for seg in segments
    }
    summary_path = out / "train_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    manifest = _write_manifest(out, "train", cfg)
    return TrainArtifacts(
        segments=segments, episodes_csv=episodes_csv, summary_path=summary_path, manifest=manifest
    )


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

METHODS = ("ddpg", "pso", "grid", "fd")


def _load_train_artifacts(train_dir: Path) -> dict:
    summary_path = train_dir / "train_summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(
            f"no trained weights found at {summary_path}; run the `train` command "
            "with the same config (and output directory) before comparing with ddpg"
        )
    return json.loads(summary_path.read_text())


def run_compare(
    cfg: ExperimentConfig,
    methods=("ddpg", "pso", "grid", "fd"),
    out_dir: str | Path | None = None,
    train_dir: str | Path | None = None,
) -> dict:
    """Score the requested placement methods on every user distribution.

    Writes ``compare.csv`` (method, distribution, position, rate, wall time)
    and, when both ddpg and pso are present, ``runtime.csv`` with cumulative
    wall times after 1, 3, and 6 distributions. The ddpg rows reuse the
    weights and training times persisted by :func:`run_train`.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_dir = Path(train_dir) if train_dir is not None else out

    dynamic = cfg.scenario.distribution_kind == "dynamic_sequence"
    dist_names = DYNAMIC_SEGMENTS if dynamic else [cfg.scenario.distribution_kind]
    dist_indices = list(range(1, 7)) if dynamic else [None]

    summary = _load_train_artifacts(train_dir) if "ddpg" in methods else {}
    if "ddpg" in methods:
        missing = [n for n in (dist_names if dynamic else ["static"]) if n not in summary]
        if missing:
            raise FileNotFoundError(
                f"train summary at {train_dir} lacks segments {missing}; re-run `train` "
                "with the matching scenario kind"
            )

    rows = []
    per_loc_times = {"ddpg": [], "pso": []}
    for name, index in zip(dist_names, dist_indices):
        system = build_experiment_system(cfg, index)
        objective = evaluation_objective(cfg, system)

        if "fd" in methods:
            t0 = time.perf_counter()
            pos, val = fixed_deployment(
                objective, (cfg.scenario.uav_initial.x, cfg.scenario.uav_initial.y)
            )
            rows.append(_compare_row("fd", name, pos, val, time.perf_counter() - t0))
        if "grid" in methods:
            t0 = time.perf_counter()
            pos, val = grid_search(objective, cfg.scenario.bounds, cfg.grid_resolution)
            rows.append(_compare_row("grid", name, pos, val, time.perf_counter() - t0))
        if "pso" in methods:
            pso_cfg = SwarmConfig(
                **{
                    **cfg.pso.to_dict(),
                    "bounds": cfg.scenario.bounds,
                    "seed": _derived_seed(cfg.pso.seed, (index or 0)),
                }
            )
            t0 = time.perf_counter()
            res = pso_optimize(objective, pso_cfg)
            elapsed = time.perf_counter() - t0
            per_loc_times["pso"].append(elapsed)
            rows.append(_compare_row("pso", name, res.position, res.value, elapsed))
        if "ddpg" in methods:
            seg_key = name if dynamic else "static"
            seg = summary[seg_key]
            agent_state = json.loads((train_dir / seg["weights"]).read_text())
            hyper = cfg.ddpg
            agent = DdpgAgent.from_dict(agent_state, hyper)
            initial = Position3D(*seg["initial_xy"], cfg.scenario.uav_height)
            env = RelayPlacementEnv(
                system, cfg.reward, uav_initial=initial, seed=_derived_seed(cfg.scenario.rng_seed, 97)
            )
            t0 = time.perf_counter()
            positions = greedy_rollout(env, agent.actor, hyper.steps_per_episode)
            values = np.array([objective(p) for p in positions])
            eval_time = time.perf_counter() - t0
            best_i = int(np.argmax(values))
            total_time = seg["wall_time_s"] + eval_time
            per_loc_times["ddpg"].append(total_time)
            rows.append(
                _compare_row(
                    "ddpg",
                    name,
                    positions[best_i],
                    float(values[best_i]),
                    total_time,
                    final_pos=positions[-1],
                    final_r2=float(values[-1]),
                )
            )

    compare_csv = out / "compare.csv"
    _write_csv(
        compare_csv,
        ["method", "distribution", "x", "y", "r2", "wall_time_ms", "final_x", "final_y", "final_r2"],
        rows,
    )

    runtime_csv = None
    if dynamic and "ddpg" in methods and "pso" in methods:
        runtime_rows = []
        for method in ("ddpg", "pso"):
            cum = np.cumsum(per_loc_times[method])
            for n in (1, 3, 6):
                runtime_rows.append((method, n, f"{cum[n - 1] * 1e3:.3f}"))
        runtime_csv = out / "runtime.csv"
        _write_csv(runtime_csv, ["method", "num_locations", "cumulative_wall_time_ms"], runtime_rows)

    manifest = _write_manifest(out, "compare", cfg, {"methods": list(methods)})
    return {
        "csv": compare_csv,
        "runtime_csv": runtime_csv,
        "manifest": manifest,
        "rows": rows,
        "per_location_times": per_loc_times,
    }


def _compare_row(method, name, pos, value, elapsed_s, final_pos=None, final_r2=None):
    return (
        method,
        name,
        f"{pos[0]:.6f}",
        f"{pos[1]:.6f}",
        repr(float(value)),
        f"{elapsed_s * 1e3:.3f}",
        "" if final_pos is None else f"{final_pos[0]:.6f}",
        "" if final_pos is None else f"{final_pos[1]:.6f}",
        "" if final_r2 is None else repr(float(final_r2)),
    )

"""uavrelay: a desk-scale simulator for relay-assisted mmWave multi-user
systems with hybrid beamforming and learned relay placement.

The package splits into small, composable layers:

* :mod:`uavrelay.geometry` -- positions, distances, user sampling
* :mod:`uavrelay.channel` -- clustered multipath channel draws
* :mod:`uavrelay.beamforming` -- analog steering stages + digital baseband
* :mod:`uavrelay.rates` -- SINR and achievable-rate metrics
* :mod:`uavrelay.simulator` -- scenario wiring and rate evaluation
* :mod:`uavrelay.env` -- the placement MDP
* :mod:`uavrelay.nn` / :mod:`uavrelay.ddpg` -- numpy actor-critic learner
* :mod:`uavrelay.baselines` -- swarm / grid / fixed placement baselines
* :mod:`uavrelay.experiments` -- config profiles and experiment runners
"""

__version__ = "0.1.0"

from .geometry import (
    Position3D,
    AreaBounds,
    ScenarioConfig,
    distance_3d,
    geometric_angles,
    sample_static_users,
    sample_dynamic_users,
)
from .channel import (
    ArrayGeometry,
    ClusterAngleSpec,
    PathLossParams,
    ChannelRealization,
    steering_vector,
    path_amplitude,
    first_hop_channel,
    second_hop_channels,
)
from .beamforming import (
    HbfConfig,
    BeamformerSet,
    rf_stage,
    effective_channel_link1,
    bb_stages_link1,
    bb_stage_link2,
)
from .rates import noise_power, NoiseModel, RateReport, first_hop_rate, sinr_user, overall_rate
from .simulator import ChannelConfig, RelaySystem, build_system, make_rate_objective
from .env import EnvState, EnvAction, RewardParams, StepResult, RelayPlacementEnv
from .nn import Mlp, Adam, soft_update
from .ddpg import (
    Transition,
    ReplayBuffer,
    DdpgHyper,
    EarlyStopConfig,
    DdpgAgent,
    train,
    greedy_rollout,
)
from .baselines import SwarmConfig, pso_optimize, grid_search, fixed_deployment
from .experiments import ExperimentConfig, desk_profile, paper_profile

__all__ = [name for name in dir() if not name.startswith("_")]

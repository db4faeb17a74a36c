"""C-V2X highway platoon simulator with multi-agent deep Q-learning.

Platoon leaders share a small pool of sub-bands between leader-to-member
(V2V) broadcasts and leader-to-RSU (V2I) uplinks.  Three learned agents per
platoon (leader selection, V2V sub-band/power, V2I RSU/power) maximize the
probability of delivering both periodic payloads within a 5 ms budget;
centralized hill-climbing, greedy max power, and fixed-leader learning serve
as baselines.
"""

__version__ = "0.1.0"

from .channel import (
    FastFadingMap,
    LargeScaleMap,
    build_large_scale_map,
    large_scale_gain,
    noise_power,
    refresh_small_scale,
)
from .config import RunSettings, parse_config, parse_config_text, serialize_settings
from .dqn import (
    DqnHyperparams,
    EpsilonSchedule,
    QNetwork,
    ReplayMemory,
    act,
    epsilon_for_episode,
    forward,
    gradients,
    rmsprop_step,
    td_targets,
)
from .linklayer import (
    Allocation,
    EpisodeState,
    LinkBudget,
    RewardParams,
    compute_budgets,
    consume_payload,
    delivery_outcomes,
    rates,
    step_reward,
)
from .orchestrator import (
    MetricsRow,
    RngStreams,
    TrainingResult,
    load_policy,
    run_testing,
    run_training,
)
from .scenario import (
    ScenarioConfig,
    ScenarioState,
    advance_mobility,
    drop_vehicles,
    set_leader,
)

__all__ = [
    "Allocation",
    "DqnHyperparams",
    "EpisodeState",
    "EpsilonSchedule",
    "FastFadingMap",
    "LargeScaleMap",
    "LinkBudget",
    "MetricsRow",
    "QNetwork",
    "ReplayMemory",
    "RewardParams",
    "RngStreams",
    "RunSettings",
    "ScenarioConfig",
    "ScenarioState",
    "TrainingResult",
    "act",
    "advance_mobility",
    "build_large_scale_map",
    "compute_budgets",
    "consume_payload",
    "delivery_outcomes",
    "drop_vehicles",
    "epsilon_for_episode",
    "forward",
    "gradients",
    "large_scale_gain",
    "load_policy",
    "noise_power",
    "parse_config",
    "parse_config_text",
    "rates",
    "refresh_small_scale",
    "rmsprop_step",
    "run_testing",
    "run_training",
    "serialize_settings",
    "set_leader",
    "step_reward",
    "td_targets",
]

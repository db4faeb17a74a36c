"""State encoding and action decoding for the three agent kinds.

Every platoon hosts three agents: a leader-selection agent deciding which
vehicle leads (slow timescale), a V2V agent picking the broadcast sub-band
and power, and a V2I agent picking the serving RSU and uplink power.  The
encoders map simulator observables onto fixed-length, roughly unit-scale
network inputs; the decoders map flat action indices back onto allocation
fragments.

Normalization: channel gains and interference enter in dB scaled by 1/60;
payloads and time as remaining fractions; the episode index by the training
length.  That keeps every feature within a few units for stable rectifier
training.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .channel import FastFadingMap, LargeScaleMap, linear_to_db, rsu_node, vehicle_node, watt_to_dbm
from .linklayer import EpisodeState, rsu_subband
from .scenario import ScenarioConfig, ScenarioState

GAIN_DB_SCALE = 1.0 / 60.0

HIDDEN_SIZES: dict[str, tuple[int, int, int]] = {
    "pl_select": (71, 35, 17),
    "v2v": (100, 50, 24),
    "v2i": (166, 83, 40),
}

AGENT_KINDS = ("pl_select", "v2v", "v2i")

# Recorded in checkpoints so a reload can refuse silently remapped actions.
ACTION_LAYOUTS = {
    "pl_select": "leader_index",
    "v2v": "subband_major_power_minor",
    "v2i": "rsu_major_power_minor",
}


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    platoon: int
    input_dim: int
    action_dim: int
    hidden_sizes: tuple[int, int, int]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_sizes, self.action_dim)

    @property
    def agent_id(self) -> str:
        return f"{self.kind}_{self.platoon}"


def input_dim(kind: str, config: ScenarioConfig) -> int:
    n_v, n_k, n_b = config.vehicles_per_platoon, config.n_rsus, config.n_subbands
    if kind == "pl_select":
        return n_v * (n_v - 1) // 2 + n_v * n_k
    if kind == "v2v":
        return 2 * config.members_per_platoon * n_b + 2
    if kind == "v2i":
        return n_k + 4
    raise ValueError(f"unknown agent kind {kind!r}")


def action_dim(kind: str, config: ScenarioConfig) -> int:
    if kind == "pl_select":
        return config.vehicles_per_platoon
    if kind == "v2v":
        return config.n_subbands * len(config.v2v_power_levels_dbm)
    if kind == "v2i":
        return config.n_rsus * len(config.v2i_power_levels_dbm)
    raise ValueError(f"unknown agent kind {kind!r}")


def make_agent_spec(kind: str, platoon: int, config: ScenarioConfig) -> AgentSpec:
    return AgentSpec(
        kind=kind,
        platoon=platoon,
        input_dim=input_dim(kind, config),
        action_dim=action_dim(kind, config),
        hidden_sizes=HIDDEN_SIZES[kind],
    )


def _members(leader: int, config: ScenarioConfig) -> list[int]:
    return [o for o in range(config.vehicles_per_platoon) if o != leader]


def encode_pl_state(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    platoon: int,
    config: ScenarioConfig,
) -> np.ndarray:
    """Large-scale gains only: intra-platoon unordered pairs, then each
    vehicle to each RSU (vehicle-major).  Fast fading never enters."""
    L = large_scale.gains
    feats = []
    for a, b in combinations(range(config.vehicles_per_platoon), 2):
        feats.append(L[vehicle_node(config, platoon, a), vehicle_node(config, platoon, b)])
    for o in range(config.vehicles_per_platoon):
        node = vehicle_node(config, platoon, o)
        for k in range(config.n_rsus):
            feats.append(L[node, rsu_node(config, k)])
    return linear_to_db(np.array(feats)) * GAIN_DB_SCALE


def encode_v2v_state(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading: FastFadingMap,
    prev_member_interference_w: np.ndarray | None,
    episode_state: EpisodeState,
    platoon: int,
    config: ScenarioConfig,
    noise_w: float,
) -> np.ndarray:
    """Direct leader-to-member gains per sub-band, last step's interference
    per member and sub-band, remaining payload fraction, remaining time."""
    leader = int(scenario.leader_index[platoon])
    tx = vehicle_node(config, platoon, leader)
    L, g = large_scale.gains, fading.g
    members = _members(leader, config)

    direct = np.array(
        [
            L[tx, vehicle_node(config, platoon, o)] * g[tx, vehicle_node(config, platoon, o), n]
            for o in members
            for n in range(config.n_subbands)
        ]
    )
    direct_feats = linear_to_db(direct) * GAIN_DB_SCALE

    if prev_member_interference_w is None:
        interference_feats = np.zeros(len(members) * config.n_subbands)
    else:
        prev = np.array(
            [
                prev_member_interference_w[platoon, o, n]
                for o in members
                for n in range(config.n_subbands)
            ]
        )
        interference_feats = watt_to_dbm(prev + noise_w) * GAIN_DB_SCALE

    remaining = episode_state.v2v_remaining_bits[platoon][episode_state.member_mask[platoon]]
    payload_frac = float(np.clip(remaining, 0.0, None).sum()) / (
        config.v2v_payload_bits * config.members_per_platoon
    )
    time_frac = (episode_state.steps_total - episode_state.step) / episode_state.steps_total
    return np.concatenate([direct_feats, interference_feats, [payload_frac, time_frac]])


def encode_v2i_state(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading: FastFadingMap,
    episode_state: EpisodeState,
    platoon: int,
    config: ScenarioConfig,
    episode_frac: float,
    epsilon: float,
) -> np.ndarray:
    """Leader-to-RSU gains on each RSU's preassigned sub-band, remaining
    payload and time fractions, normalized episode index, and epsilon."""
    leader = int(scenario.leader_index[platoon])
    tx = vehicle_node(config, platoon, leader)
    L, g = large_scale.gains, fading.g
    gains = np.array(
        [
            L[tx, rsu_node(config, k)]
            * g[tx, rsu_node(config, k), rsu_subband(k, config.n_subbands)]
            for k in range(config.n_rsus)
        ]
    )
    payload_frac = max(0.0, float(episode_state.v2i_remaining_bits[platoon])) / (
        config.v2i_payload_bits
    )
    time_frac = (episode_state.steps_total - episode_state.step) / episode_state.steps_total
    return np.concatenate(
        [
            linear_to_db(gains) * GAIN_DB_SCALE,
            [payload_frac, time_frac, episode_frac, epsilon],
        ]
    )


def decode_action(kind: str, index: int, config: ScenarioConfig) -> tuple:
    """Map a flat action index to its allocation fragment.

    v2v -> (subband, power_dbm); v2i -> (rsu, power_dbm); pl_select ->
    (leader_index,).  Layouts are power-minor as recorded in ACTION_LAYOUTS.
    """
    dim = action_dim(kind, config)
    if not 0 <= index < dim:
        raise ValueError(f"action index {index} out of range for {kind} (dim {dim})")
    if kind == "pl_select":
        return (index,)
    if kind == "v2v":
        levels = config.v2v_power_levels_dbm
        return (index // len(levels), levels[index % len(levels)])
    levels = config.v2i_power_levels_dbm
    return (index // len(levels), levels[index % len(levels)])


def v2v_action_index(subband: int, power_level: int, config: ScenarioConfig) -> int:
    return subband * len(config.v2v_power_levels_dbm) + power_level


def v2i_action_index(rsu: int, power_level: int, config: ScenarioConfig) -> int:
    return rsu * len(config.v2i_power_levels_dbm) + power_level

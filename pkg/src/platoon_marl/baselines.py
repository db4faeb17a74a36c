"""Comparison methods: centralized hill-climbing, greedy max power, fixed leaders.

Hill-climbing is the centralized genie: it sees the episode's full channel
realizations up front, holds one joint decision vector (per platoon: leader,
V2V sub-band, V2V power, V2I RSU, V2I power) fixed for the whole episode,
and steepest-ascends over single-coordinate changes.  Greedy picks the
strongest direct link at maximum power every step.  The fixed-leader variant
is the full learning stack with leader selection disabled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    FastFadingMap,
    LargeScaleMap,
    noise_power,
    refresh_small_scale,
    rsu_node,
    vehicle_node,
)
from .dqn import DqnHyperparams
from .linklayer import (
    Allocation,
    DeliveryOutcome,
    EpisodeState,
    RewardParams,
    compute_budgets,
    consume_payload,
    delivery_outcomes,
    rates,
    rsu_subband,
)
from .orchestrator import (
    EpisodePolicy,
    StepObservation,
    TrainingResult,
    run_training,
    run_training_with_restarts,
)
from .scenario import ScenarioConfig, ScenarioState, set_all_leaders

# Joint-vector coordinate columns: leader, v2v sub-band, v2v power level,
# v2i RSU, v2i power level (levels as indices into the config lists).
COORD_LEADER, COORD_V2V_SB, COORD_V2V_PW, COORD_V2I_RSU, COORD_V2I_PW = range(5)


def _coordinate_domains(config: ScenarioConfig) -> tuple[int, ...]:
    return (
        config.vehicles_per_platoon,
        config.n_subbands,
        len(config.v2v_power_levels_dbm),
        config.n_rsus,
        len(config.v2i_power_levels_dbm),
    )


def _vector_to_allocation(vector: np.ndarray, config: ScenarioConfig) -> Allocation:
    v2v_levels = np.asarray(config.v2v_power_levels_dbm)
    v2i_levels = np.asarray(config.v2i_power_levels_dbm)
    return Allocation(
        v2v_subband=vector[:, COORD_V2V_SB].astype(np.int64),
        v2v_power_dbm=v2v_levels[vector[:, COORD_V2V_PW]],
        v2i_rsu=vector[:, COORD_V2I_RSU].astype(np.int64),
        v2i_power_dbm=v2i_levels[vector[:, COORD_V2I_PW]],
    )


def simulate_fixed_episode(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading_steps: list[FastFadingMap],
    vector: np.ndarray,
    config: ScenarioConfig,
    noise_w: float,
) -> tuple[DeliveryOutcome, float]:
    """Run one episode under a frozen joint vector and frozen channels.

    Returns the delivery outcome and the summed rates in Mbps (the
    hill-climbing tie-breaker).  Deterministic: no randomness is consumed.
    """
    scenario = set_all_leaders(scenario, vector[:, COORD_LEADER])
    allocation = _vector_to_allocation(vector, config)
    episode_state = EpisodeState.fresh(config, scenario.leader_index)
    sum_rates_mbps = 0.0
    for fading in fading_steps:
        budget = rates(
            compute_budgets(
                scenario, large_scale, fading, allocation, episode_state, config, noise_w
            ),
            config,
        )
        sum_rates_mbps += (
            float(budget.v2v_rate_bps[episode_state.member_mask].sum())
            + float(budget.v2i_rate_bps.sum())
        ) / 1e6
        episode_state = consume_payload(episode_state, budget, config)
    return delivery_outcomes(episode_state), sum_rates_mbps


def delivered_score(outcome: DeliveryOutcome, params: RewardParams) -> float:
    """Weighted delivered-payload count mirroring the reward bonuses."""
    return params.v2v_weight * params.v2v_bonus * float(
        outcome.v2v_delivered.sum()
    ) + params.v2i_weight * params.v2i_bonus * float(outcome.v2i_delivered.sum())


@dataclass
class HillClimbResult:
    vector: np.ndarray  # (n_platoons, 5)
    outcome: DeliveryOutcome
    objective_trace: list[float]
    evaluations: int


def hill_climb(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading_steps: list[FastFadingMap],
    config: ScenarioConfig,
    params: RewardParams,
    rng: np.random.Generator,
    max_iters: int = 200,
) -> HillClimbResult:
    """Steepest-ascent local search over the joint decision vector.

    Starts uniformly at random; each iteration evaluates every vector that
    differs in exactly one coordinate and moves to the best strictly
    improving one (delivered score first, summed rate as tie-breaker).
    Stops at a local optimum or after max_iters accepted moves.
    """
    domains = _coordinate_domains(config)
    n_p = config.n_platoons
    noise_w = noise_power(config)
    vector = np.stack(
        [rng.integers(0, d, size=n_p) for d in domains], axis=1
    ).astype(np.int64)

    def evaluate(vec: np.ndarray) -> tuple[float, float, DeliveryOutcome]:
        outcome, tie = simulate_fixed_episode(
            scenario, large_scale, fading_steps, vec, config, noise_w
        )
        return delivered_score(outcome, params), tie, outcome

    score, tie, outcome = evaluate(vector)
    trace = [score]
    evaluations = 1
    for _ in range(max_iters):
        best = None
        for m in range(n_p):
            for coord, domain in enumerate(domains):
                current = vector[m, coord]
                for value in range(domain):
                    if value == current:
                        continue
                    candidate = vector.copy()
                    candidate[m, coord] = value
                    c_score, c_tie, c_outcome = evaluate(candidate)
                    evaluations += 1
                    if (c_score, c_tie) > (score, tie) and (
                        best is None or (c_score, c_tie) > (best[0], best[1])
                    ):
                        best = (c_score, c_tie, c_outcome, candidate)
        if best is None:
            break
        score, tie, outcome, vector = best
        trace.append(score)
    return HillClimbResult(
        vector=vector, outcome=outcome, objective_trace=trace, evaluations=evaluations
    )


def greedy_actions(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading: FastFadingMap,
    config: ScenarioConfig,
) -> Allocation:
    """Best direct link at maximum power, per platoon.

    V2I: the RSU with the largest leader-to-RSU gain on its preassigned
    sub-band.  V2V: the sub-band with the largest summed leader-to-member
    gain.  Ties break toward the lowest index; maximum power is the first
    entry of each level list.
    """
    L, g = large_scale.gains, fading.g
    n_p = config.n_platoons
    v2v_sb = np.zeros(n_p, dtype=np.int64)
    v2i_rsu = np.zeros(n_p, dtype=np.int64)
    for m in range(n_p):
        leader = int(scenario.leader_index[m])
        tx = vehicle_node(config, m, leader)
        rsu_gain = np.array(
            [
                L[tx, rsu_node(config, k)]
                * g[tx, rsu_node(config, k), rsu_subband(k, config.n_subbands)]
                for k in range(config.n_rsus)
            ]
        )
        v2i_rsu[m] = int(np.argmax(rsu_gain))
        members = [o for o in range(config.vehicles_per_platoon) if o != leader]
        band_gain = np.array(
            [
                sum(
                    L[tx, vehicle_node(config, m, o)] * g[tx, vehicle_node(config, m, o), n]
                    for o in members
                )
                for n in range(config.n_subbands)
            ]
        )
        v2v_sb[m] = int(np.argmax(band_gain))
    max_v2v = max(config.v2v_power_levels_dbm)
    max_v2i = max(config.v2i_power_levels_dbm)
    return Allocation(
        v2v_subband=v2v_sb,
        v2v_power_dbm=np.full(n_p, max_v2v),
        v2i_rsu=v2i_rsu,
        v2i_power_dbm=np.full(n_p, max_v2i),
    )


class GreedyPolicy(EpisodePolicy):
    """Fixed front leaders; strongest link at maximum power every step."""

    def select_leaders(self, scenario, large_scale, config) -> np.ndarray:
        return np.zeros(config.n_platoons, dtype=np.int64)

    def select_allocation(self, obs: StepObservation) -> Allocation:
        return greedy_actions(obs.scenario, obs.large_scale, obs.fading, obs.config)


class HillClimbPolicy(EpisodePolicy):
    """Per-episode centralized hill-climbing over frozen channel draws."""

    def __init__(self, params: RewardParams, rng: np.random.Generator, max_iters: int = 200):
        self.params = params
        self.rng = rng
        self.max_iters = max_iters

    def select_leaders(self, scenario, large_scale, config) -> np.ndarray:
        # Leaders are part of the per-episode joint vector.
        return np.zeros(config.n_platoons, dtype=np.int64)

    def run_episode(self, scenario, large_scale, config, channel_rng, noise_w, carried_interference=None):
        fading_steps = [
            refresh_small_scale(config.n_nodes, config.n_subbands, channel_rng)
            for _ in range(config.steps_per_episode)
        ]
        result = hill_climb(
            scenario,
            large_scale,
            fading_steps,
            config,
            self.params,
            self.rng,
            max_iters=self.max_iters,
        )
        return result.outcome, None


def fixed_pl_policy(
    config: ScenarioConfig,
    hyper: DqnHyperparams,
    reward_params: RewardParams,
    seed: int,
    episodes: int,
    restarts: int = 1,
    processes: int | None = None,
) -> TrainingResult:
    """The full learning run with leader selection disabled (leader 0)."""
    if restarts > 1:
        return run_training_with_restarts(
            config,
            hyper,
            reward_params,
            seed,
            episodes=episodes,
            pl_selection=False,
            restarts=restarts,
            processes=processes,
        )
    return run_training(
        config, hyper, reward_params, seed, episodes=episodes, pl_selection=False
    )

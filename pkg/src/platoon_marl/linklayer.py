"""Interference, SINR, rates, payload bookkeeping, reward, delivery stats.

Every platoon runs two simultaneous transmissions from its leader: a V2V
broadcast to its members on one chosen sub-band, and a V2I uplink to one
chosen RSU on that RSU's preassigned sub-band (RSU k uses sub-band k mod N).
All links share the spectrum, so on a given sub-band a receiver sees the sum
of every other active transmission as interference:

  * at RSU k (serving platoon m): other platoons' V2I uplinks on that
    sub-band, plus every platoon's V2V broadcast on it (including platoon
    m's own leader);
  * at member o of platoon m: every platoon's V2I uplink on the V2V
    sub-band (again including its own leader's), plus the other platoons'
    V2V broadcasts.

A transmitter whose payload is fully delivered stops transmitting: it
contributes no interference and its own links carry zero rate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import FastFadingMap, LargeScaleMap, dbm_to_watt, rsu_node, vehicle_node
from .errors import EpisodeStateError
from .scenario import ScenarioConfig, ScenarioState

MBPS = 1e6


def rsu_subband(rsu: int, n_subbands: int) -> int:
    """Preassigned sub-band of an RSU; adjacent RSUs alternate."""
    return rsu % n_subbands


@dataclass(frozen=True)
class Allocation:
    """One step's joint decision: per platoon, the V2V sub-band and power,
    and the V2I target RSU and power."""

    v2v_subband: np.ndarray  # (n_platoons,) int
    v2v_power_dbm: np.ndarray  # (n_platoons,) float
    v2i_rsu: np.ndarray  # (n_platoons,) int
    v2i_power_dbm: np.ndarray  # (n_platoons,) float

    def validate(self, config: ScenarioConfig) -> "Allocation":
        if np.any(self.v2v_subband < 0) or np.any(self.v2v_subband >= config.n_subbands):
            raise ValueError("v2v sub-band index out of range")
        if np.any(self.v2i_rsu < 0) or np.any(self.v2i_rsu >= config.n_rsus):
            raise ValueError("v2i RSU index out of range")
        return self


@dataclass(frozen=True)
class EpisodeState:
    """Remaining payloads and step counter for one episode.

    v2v_remaining_bits[m, o] tracks the leader-to-member-o payload; the
    leader's own slot is fixed at zero and masked out of member_mask.
    Payloads only ever decrease; delivered means remaining <= 0.
    """

    v2i_remaining_bits: np.ndarray  # (n_platoons,)
    v2v_remaining_bits: np.ndarray  # (n_platoons, vehicles_per_platoon)
    member_mask: np.ndarray  # (n_platoons, vehicles_per_platoon) bool
    step: int
    steps_total: int

    @classmethod
    def fresh(cls, config: ScenarioConfig, leader_index: np.ndarray) -> "EpisodeState":
        n_p, n_v = config.n_platoons, config.vehicles_per_platoon
        mask = np.ones((n_p, n_v), dtype=bool)
        mask[np.arange(n_p), leader_index] = False
        v2v = np.where(mask, float(config.v2v_payload_bits), 0.0)
        return cls(
            v2i_remaining_bits=np.full(n_p, float(config.v2i_payload_bits)),
            v2v_remaining_bits=v2v,
            member_mask=mask,
            step=0,
            steps_total=config.steps_per_episode,
        )

    @property
    def v2i_delivered(self) -> np.ndarray:
        return self.v2i_remaining_bits <= 0.0

    @property
    def v2v_delivered(self) -> np.ndarray:
        """Per (platoon, member); False on non-member slots."""
        return (self.v2v_remaining_bits <= 0.0) & self.member_mask

    @property
    def v2v_transmitter_active(self) -> np.ndarray:
        """A leader keeps broadcasting until every member has its payload."""
        return np.any((self.v2v_remaining_bits > 0.0) & self.member_mask, axis=1)

    @property
    def v2i_transmitter_active(self) -> np.ndarray:
        return ~self.v2i_delivered

    @property
    def finished(self) -> bool:
        all_delivered = bool(
            np.all(self.v2i_delivered) and np.all(self.v2v_delivered == self.member_mask)
        )
        return self.step >= self.steps_total or all_delivered


@dataclass(frozen=True)
class LinkBudget:
    """Per-link interference, SINR, and rate for one step.

    member_interference_w carries the interference power each member would
    see on every sub-band, which the V2V agents observe on the next step.
    """

    v2i_interference_w: np.ndarray  # (n_platoons,)
    v2i_sinr: np.ndarray  # (n_platoons,)
    v2i_rate_bps: np.ndarray  # (n_platoons,)
    v2v_interference_w: np.ndarray  # (n_platoons, vehicles_per_platoon)
    v2v_sinr: np.ndarray  # (n_platoons, vehicles_per_platoon)
    v2v_rate_bps: np.ndarray  # (n_platoons, vehicles_per_platoon)
    member_interference_w: np.ndarray  # (n_platoons, vehicles_per_platoon, n_subbands)


@dataclass(frozen=True)
class RewardParams:
    """Weights and delivery bonuses of the common step reward."""

    v2v_weight: float = 0.3
    v2i_weight: float = 0.7
    v2v_bonus: float = 25.0
    v2i_bonus: float = 15.0
    rate_unit_bps: float = MBPS  # rates enter the reward in Mbps


def compute_budgets(
    scenario: ScenarioState,
    large_scale: LargeScaleMap,
    fading: FastFadingMap,
    allocation: Allocation,
    episode_state: EpisodeState,
    config: ScenarioConfig,
    noise_w: float,
) -> LinkBudget:
    """Signal and interference accounting for every V2I and V2V link.

    Delivered transmitters enter with zero power, which removes both their
    interference and their own rate in one stroke.  A -100 dBm level is a
    literal 1e-13 W transmission, not a special case.
    """
    allocation.validate(config)
    n_p, n_v = config.n_platoons, config.vehicles_per_platoon
    n_bands = config.n_subbands
    L, g = large_scale.gains, fading.g
    leaders = np.array(
        [vehicle_node(config, m, int(scenario.leader_index[m])) for m in range(n_p)]
    )

    v2i_power_w = dbm_to_watt(allocation.v2i_power_dbm) * episode_state.v2i_transmitter_active
    v2v_power_w = dbm_to_watt(allocation.v2v_power_dbm) * episode_state.v2v_transmitter_active
    v2i_band = np.array(
        [rsu_subband(int(k), n_bands) for k in allocation.v2i_rsu], dtype=np.int64
    )
    v2v_band = allocation.v2v_subband.astype(np.int64)

    def incident_power(rx: int, band: int, skip_v2i: int, skip_v2v: int) -> float:
        """Sum of transmissions received at node rx on one sub-band,
        optionally skipping one platoon's V2I or V2V transmitter."""
        total = 0.0
        for a in range(n_p):
            tx = leaders[a]
            if a != skip_v2i and v2i_band[a] == band:
                total += v2i_power_w[a] * L[tx, rx] * g[tx, rx, band]
            if a != skip_v2v and v2v_band[a] == band:
                total += v2v_power_w[a] * L[tx, rx] * g[tx, rx, band]
        return total

    v2i_interference = np.zeros(n_p)
    v2i_sinr = np.zeros(n_p)
    for m in range(n_p):
        k = int(allocation.v2i_rsu[m])
        band = int(v2i_band[m])
        rx = rsu_node(config, k)
        signal = v2i_power_w[m] * L[leaders[m], rx] * g[leaders[m], rx, band]
        # Own V2V broadcast still interferes; only the V2I link itself is excluded.
        interference = incident_power(rx, band, skip_v2i=m, skip_v2v=-1)
        v2i_interference[m] = interference
        v2i_sinr[m] = signal / (interference + noise_w)

    member_interference = np.zeros((n_p, n_v, n_bands))
    v2v_interference = np.zeros((n_p, n_v))
    v2v_sinr = np.zeros((n_p, n_v))
    for m in range(n_p):
        band = int(v2v_band[m])
        for o in range(n_v):
            if not episode_state.member_mask[m, o]:
                continue
            rx = vehicle_node(config, m, o)
            for n in range(n_bands):
                # All V2I uplinks count, own platoon's included; V2V from
                # other platoons only.
                member_interference[m, o, n] = incident_power(
                    rx, n, skip_v2i=-1, skip_v2v=m
                )
            signal = v2v_power_w[m] * L[leaders[m], rx] * g[leaders[m], rx, band]
            v2v_interference[m, o] = member_interference[m, o, band]
            v2v_sinr[m, o] = signal / (v2v_interference[m, o] + noise_w)

    zeros_p = np.zeros(n_p)
    zeros_pv = np.zeros((n_p, n_v))
    return LinkBudget(
        v2i_interference_w=v2i_interference,
        v2i_sinr=v2i_sinr,
        v2i_rate_bps=zeros_p,
        v2v_interference_w=v2v_interference,
        v2v_sinr=v2v_sinr,
        v2v_rate_bps=zeros_pv,
        member_interference_w=member_interference,
    )


def rates(budget: LinkBudget, config: ScenarioConfig) -> LinkBudget:
    """Shannon rates: V2I gets the full sub-band, V2V splits it over the
    members."""
    w = config.subband_bandwidth_hz
    v2i_rate = w * np.log2(1.0 + budget.v2i_sinr)
    v2v_rate = (w / config.members_per_platoon) * np.log2(1.0 + budget.v2v_sinr)
    return replace(budget, v2i_rate_bps=v2i_rate, v2v_rate_bps=v2v_rate)


def consume_payload(
    episode_state: EpisodeState, budget: LinkBudget, config: ScenarioConfig
) -> EpisodeState:
    """Drain payloads by one step worth of rate; delivered links freeze."""
    if episode_state.step >= episode_state.steps_total:
        raise EpisodeStateError("episode already finished")
    dt = config.step_duration_s
    v2i = episode_state.v2i_remaining_bits.copy()
    active_i = v2i > 0.0
    v2i[active_i] -= dt * budget.v2i_rate_bps[active_i]
    v2v = episode_state.v2v_remaining_bits.copy()
    active_v = (v2v > 0.0) & episode_state.member_mask
    v2v[active_v] -= dt * budget.v2v_rate_bps[active_v]
    return replace(
        episode_state,
        v2i_remaining_bits=v2i,
        v2v_remaining_bits=v2v,
        step=episode_state.step + 1,
    )


def step_reward(
    episode_state: EpisodeState, budget: LinkBudget, params: RewardParams
) -> float:
    """Common scalar reward for the step the budget belongs to.

    Links still carrying payload at the start of the step contribute their
    achieved rate (in Mbps); links already delivered contribute the fixed
    bonus instead.  episode_state must be the pre-consumption state.
    """
    v2v_term = np.where(
        episode_state.v2v_delivered,
        params.v2v_bonus,
        budget.v2v_rate_bps / params.rate_unit_bps,
    )
    v2v_sum = float(v2v_term[episode_state.member_mask].sum())
    v2i_term = np.where(
        episode_state.v2i_delivered,
        params.v2i_bonus,
        budget.v2i_rate_bps / params.rate_unit_bps,
    )
    v2i_sum = float(v2i_term.sum())
    return params.v2v_weight * v2v_sum + params.v2i_weight * v2i_sum


@dataclass(frozen=True)
class DeliveryOutcome:
    v2v_delivered: np.ndarray  # (n_platoons, vehicles_per_platoon) bool, masked
    v2i_delivered: np.ndarray  # (n_platoons,) bool
    v2v_fraction: float
    v2i_fraction: float


def delivery_outcomes(episode_state: EpisodeState) -> DeliveryOutcome:
    """Per-link success flags once the episode is over."""
    if not episode_state.finished:
        raise EpisodeStateError("delivery outcomes requested mid-episode")
    v2v = episode_state.v2v_delivered
    v2i = episode_state.v2i_delivered
    n_members = int(episode_state.member_mask.sum())
    return DeliveryOutcome(
        v2v_delivered=v2v,
        v2i_delivered=v2i,
        v2v_fraction=float(v2v.sum()) / n_members,
        v2i_fraction=float(v2i.mean()),
    )

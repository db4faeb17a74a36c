"""Highway geometry: vehicle drop, platoon structure, RSU placement, mobility.

The highway is modeled as a ring (wrap-around in x) so that vehicle density
stays constant over long runs.  Coordinates are 2-D: x along the road in
[0, highway_length_m), y the signed lateral offset from the road median.
RSUs sit on the median (y = 0); lanes of the two driving directions mirror
each other around it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, PlacementError

KMH_140_IN_MPS = 140.0 / 3.6

# Byte defaults for the two periodic payloads.
DEFAULT_V2I_PAYLOAD_BYTES = 624
DEFAULT_V2V_PAYLOAD_BYTES = 2400

MAX_DROP_ATTEMPTS = 200


@dataclass(frozen=True)
class ScenarioConfig:
    """Static parameters of the highway, spectrum, and traffic model."""

    highway_length_m: float = 1000.0
    lanes_per_direction: int = 3
    lane_width_m: float = 4.0
    n_rsus: int = 11
    rsu_spacing_m: float = 100.0
    n_platoons: int = 4
    vehicles_per_platoon: int = 3
    vehicle_length_m: float = 13.0
    intra_platoon_gap_m: float = 2.0
    velocity_mps: float = KMH_140_IN_MPS
    n_subbands: int = 2
    subband_bandwidth_hz: float = 1e6
    episode_duration_s: float = 5e-3
    step_duration_s: float = 1e-3
    v2i_payload_bits: int = DEFAULT_V2I_PAYLOAD_BYTES * 8
    v2v_payload_bits: int = DEFAULT_V2V_PAYLOAD_BYTES * 8
    v2v_power_levels_dbm: tuple[float, ...] = (23.0, 15.0, 5.0, -100.0)
    v2i_power_levels_dbm: tuple[float, ...] = (23.0, -100.0)
    carrier_freq_ghz: float = 6.0
    vehicle_antenna_gain_dbi: float = 3.0
    noise_figure_db: float = 9.0
    noise_psd_dbm_hz: float = -169.0
    leader_update_interval_s: float = 100e-3

    def validate(self) -> "ScenarioConfig":
        """Check the cross-field invariants; returns self for chaining."""
        if self.vehicles_per_platoon < 2:
            raise ConfigError("vehicles_per_platoon must be >= 2")
        if self.n_platoons < 1:
            raise ConfigError("n_platoons must be >= 1")
        if self.subband_bandwidth_hz <= 0:
            raise ConfigError("subband_bandwidth_hz must be > 0")
        if self.n_subbands < 1:
            raise ConfigError("n_subbands must be >= 1")
        if not self.v2v_power_levels_dbm or not self.v2i_power_levels_dbm:
            raise ConfigError("power level lists must be non-empty")
        if self.n_rsus * self.rsu_spacing_m > self.highway_length_m + self.rsu_spacing_m:
            raise ConfigError("RSUs do not fit the highway segment")
        steps = self.episode_duration_s / self.step_duration_s
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ConfigError("episode_duration_s must be an integer multiple of step_duration_s")
        blocks = self.leader_update_interval_s / self.episode_duration_s
        if abs(blocks - round(blocks)) > 1e-9 or round(blocks) < 1:
            raise ConfigError(
                "leader_update_interval_s must be an integer multiple of episode_duration_s"
            )
        if self.v2i_payload_bits <= 0 or self.v2v_payload_bits <= 0:
            raise ConfigError("payload sizes must be positive")
        if self.velocity_mps < 0:
            raise ConfigError("velocity_mps must be >= 0")
        return self

    @property
    def steps_per_episode(self) -> int:
        return round(self.episode_duration_s / self.step_duration_s)

    @property
    def episodes_per_leader_update(self) -> int:
        return round(self.leader_update_interval_s / self.episode_duration_s)

    @property
    def members_per_platoon(self) -> int:
        return self.vehicles_per_platoon - 1

    @property
    def vehicle_spacing_m(self) -> float:
        """Center-to-center spacing of consecutive platoon vehicles."""
        return self.vehicle_length_m + self.intra_platoon_gap_m

    @property
    def n_vehicles(self) -> int:
        return self.n_platoons * self.vehicles_per_platoon

    @property
    def n_nodes(self) -> int:
        """Vehicles plus RSUs; the channel maps cover all ordered node pairs."""
        return self.n_vehicles + self.n_rsus


@dataclass(frozen=True)
class ScenarioState:
    """Positions and platoon bookkeeping at one instant.

    vehicles[m, i] is the antenna (vehicle-center) coordinate of the i-th
    vehicle of platoon m, ordered front to back.  Exactly one leader per
    platoon, given by leader_index[m].
    """

    rsu_positions: np.ndarray  # (n_rsus, 2)
    vehicles: np.ndarray  # (n_platoons, vehicles_per_platoon, 2)
    platoon_lane: np.ndarray  # (n_platoons,) int, 0-based within direction
    direction: np.ndarray  # (n_platoons,) +1 / -1
    leader_index: np.ndarray  # (n_platoons,) int in [0, vehicles_per_platoon)

    def leader_positions(self) -> np.ndarray:
        """(n_platoons, 2) coordinates of the current leaders."""
        m = np.arange(self.vehicles.shape[0])
        return self.vehicles[m, self.leader_index]


def wrap_x_distance(x1: float | np.ndarray, x2: float | np.ndarray, length: float) -> np.ndarray:
    """Shortest distance along the ring between two x coordinates."""
    d = np.abs(np.asarray(x1) - np.asarray(x2))
    return np.minimum(d, length - d)


def _lane_y(lane: int, direction: int, config: ScenarioConfig) -> float:
    return direction * (lane + 0.5) * config.lane_width_m


def _platoon_coordinates(
    front_x: float, lane: int, direction: int, config: ScenarioConfig
) -> np.ndarray:
    """Vehicle centers front to back, wrapped into [0, highway_length)."""
    offsets = np.arange(config.vehicles_per_platoon) * config.vehicle_spacing_m
    xs = np.mod(front_x - direction * offsets, config.highway_length_m)
    ys = np.full_like(xs, _lane_y(lane, direction, config))
    return np.stack([xs, ys], axis=1)


def _platoon_midpoint_x(front_x: float, direction: int, config: ScenarioConfig) -> float:
    half_span = (config.vehicles_per_platoon - 1) * config.vehicle_spacing_m / 2.0
    return float(np.mod(front_x - direction * half_span, config.highway_length_m))


def drop_vehicles(config: ScenarioConfig, rng: np.random.Generator) -> ScenarioState:
    """Place platoons uniformly on random lanes, rejection-resampling overlaps.

    Each platoon gets a uniform direction, a uniform lane within that
    direction, and a uniform front-x.  Two platoons sharing a physical lane
    must keep their occupied spans (vehicle length included) disjoint on the
    ring.  RSUs go on the median at x = 0, rsu_spacing, 2*rsu_spacing, ...
    """
    config.validate()
    length = config.highway_length_m
    span = (config.vehicles_per_platoon - 1) * config.vehicle_spacing_m + config.vehicle_length_m
    if span >= length:
        raise ConfigError("platoon longer than the highway ring")

    placed: list[tuple[int, int, float]] = []  # (lane, direction, midpoint x)
    lanes = np.empty(config.n_platoons, dtype=np.int64)
    directions = np.empty(config.n_platoons, dtype=np.int64)
    fronts = np.empty(config.n_platoons, dtype=np.float64)
    for m in range(config.n_platoons):
        for attempt in range(MAX_DROP_ATTEMPTS):
            direction = 1 if rng.integers(0, 2) == 0 else -1
            lane = int(rng.integers(0, config.lanes_per_direction))
            front_x = float(rng.uniform(0.0, length))
            mid = _platoon_midpoint_x(front_x, direction, config)
            clear = all(
                not (lane == pl and direction == pd and wrap_x_distance(mid, pm, length) < span)
                for pl, pd, pm in placed
            )
            if clear:
                placed.append((lane, direction, mid))
                lanes[m] = lane
                directions[m] = direction
                fronts[m] = front_x
                break
        else:
            raise PlacementError(
                f"could not place platoon {m} after {MAX_DROP_ATTEMPTS} attempts (lanes overcrowded)"
            )

    vehicles = np.stack(
        [
            _platoon_coordinates(fronts[m], int(lanes[m]), int(directions[m]), config)
            for m in range(config.n_platoons)
        ]
    )
    rsu_x = np.arange(config.n_rsus) * config.rsu_spacing_m
    rsu_positions = np.stack([rsu_x, np.zeros_like(rsu_x)], axis=1)
    return ScenarioState(
        rsu_positions=rsu_positions,
        vehicles=vehicles,
        platoon_lane=lanes,
        direction=directions,
        leader_index=np.zeros(config.n_platoons, dtype=np.int64),
    )


def advance_mobility(state: ScenarioState, config: ScenarioConfig, dt: float) -> ScenarioState:
    """Shift every vehicle by direction * v * dt, wrapped around the ring."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    shift = config.velocity_mps * dt * state.direction[:, None]
    vehicles = state.vehicles.copy()
    vehicles[:, :, 0] = np.mod(vehicles[:, :, 0] + shift, config.highway_length_m)
    return replace(state, vehicles=vehicles)


def set_leader(state: ScenarioState, platoon_id: int, leader_index: int) -> ScenarioState:
    """Return a state with platoon_id's leader changed; geometry untouched."""
    n_platoons, per_platoon = state.vehicles.shape[:2]
    if not 0 <= platoon_id < n_platoons:
        raise ValueError(f"platoon_id {platoon_id} out of range")
    if not 0 <= leader_index < per_platoon:
        raise ValueError(f"leader_index {leader_index} out of range 0..{per_platoon - 1}")
    leaders = state.leader_index.copy()
    leaders[platoon_id] = leader_index
    return replace(state, leader_index=leaders)


def set_all_leaders(state: ScenarioState, leader_indices: np.ndarray) -> ScenarioState:
    """Vectorized set_leader across every platoon."""
    leaders = np.asarray(leader_indices, dtype=np.int64)
    per_platoon = state.vehicles.shape[1]
    if leaders.shape != state.leader_index.shape:
        raise ValueError("leader_indices has the wrong shape")
    if np.any(leaders < 0) or np.any(leaders >= per_platoon):
        raise ValueError("leader index out of range")
    return replace(state, leader_index=leaders.copy())

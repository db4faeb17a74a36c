import numpy as np
import pytest

from platoon_marl import ScenarioConfig
from platoon_marl.channel import FastFadingMap, LargeScaleMap
from platoon_marl.linklayer import Allocation, EpisodeState
from platoon_marl.scenario import drop_vehicles


@pytest.fixture
def config():
    return ScenarioConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_random_setup(config: ScenarioConfig, rng: np.random.Generator, fraction_delivered=0.3):
    """Random scenario, channel maps, allocation, and episode state for
    cross-checking the link-budget math."""
    scenario = drop_vehicles(config, rng)
    leaders = rng.integers(0, config.vehicles_per_platoon, size=config.n_platoons)
    scenario = scenario.__class__(
        rsu_positions=scenario.rsu_positions,
        vehicles=scenario.vehicles,
        platoon_lane=scenario.platoon_lane,
        direction=scenario.direction,
        leader_index=leaders,
    )
    n = config.n_nodes
    log_gain = rng.uniform(-14.0, -6.0, size=(n, n))  # linear 1e-14 .. 1e-6
    gains = 10.0 ** ((log_gain + log_gain.T) / 2.0)
    np.fill_diagonal(gains, 0.0)
    large_scale = LargeScaleMap(gains=gains)
    fading = FastFadingMap(g=rng.exponential(1.0, size=(n, n, config.n_subbands)))

    allocation = Allocation(
        v2v_subband=rng.integers(0, config.n_subbands, size=config.n_platoons),
        v2v_power_dbm=rng.choice(config.v2v_power_levels_dbm, size=config.n_platoons),
        v2i_rsu=rng.integers(0, config.n_rsus, size=config.n_platoons),
        v2i_power_dbm=rng.choice(config.v2i_power_levels_dbm, size=config.n_platoons),
    )

    episode_state = EpisodeState.fresh(config, leaders)
    v2i_rem = episode_state.v2i_remaining_bits.copy()
    v2v_rem = episode_state.v2v_remaining_bits.copy()
    v2i_rem[rng.random(config.n_platoons) < fraction_delivered] = 0.0
    delivered_members = (rng.random(v2v_rem.shape) < fraction_delivered) & episode_state.member_mask
    v2v_rem[delivered_members] = 0.0
    episode_state = EpisodeState(
        v2i_remaining_bits=v2i_rem,
        v2v_remaining_bits=v2v_rem,
        member_mask=episode_state.member_mask,
        step=int(rng.integers(0, config.steps_per_episode)),
        steps_total=config.steps_per_episode,
    )
    return scenario, large_scale, fading, allocation, episode_state

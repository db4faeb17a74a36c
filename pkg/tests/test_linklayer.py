import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoon_marl import ScenarioConfig
from platoon_marl.channel import FastFadingMap, LargeScaleMap
from platoon_marl.errors import EpisodeStateError
from platoon_marl.linklayer import (
    Allocation,
    EpisodeState,
    RewardParams,
    compute_budgets,
    consume_payload,
    delivery_outcomes,
    rates,
    rsu_subband,
    step_reward,
)
from platoon_marl.scenario import drop_vehicles

from .conftest import make_random_setup
from .oracles import brute_force_budgets

NOISE_W = 1e-13


def single_platoon_setup(l_times_g=1e-10, power_dbm=23.0, rsu=0):
    """One platoon, one RSU in use, every channel entry pinned to l_times_g."""
    config = ScenarioConfig(n_platoons=1)
    scenario = drop_vehicles(config, np.random.default_rng(0))
    n = config.n_nodes
    gains = np.full((n, n), l_times_g)
    np.fill_diagonal(gains, 0.0)
    large_scale = LargeScaleMap(gains=gains)
    fading = FastFadingMap(g=np.ones((n, n, config.n_subbands)))
    allocation = Allocation(
        v2v_subband=np.array([1]),
        v2v_power_dbm=np.array([-100.0]),
        v2i_rsu=np.array([rsu]),
        v2i_power_dbm=np.array([power_dbm]),
    )
    episode_state = EpisodeState.fresh(config, scenario.leader_index)
    return config, scenario, large_scale, fading, allocation, episode_state


def test_single_v2i_link_sinr():
    # 23 dBm is 0.1995 W; with L*g = 1e-10 and noise 1e-13 the SINR is 199.5
    config, scenario, ls, ff, alloc, ep = single_platoon_setup()
    # Park the V2V transmission on the other sub-band at -100 dBm; RSU 0
    # serves on sub-band 0, so the only denominator term there is noise.
    budget = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    expected = 10 ** ((23.0 - 30.0) / 10.0) * 1e-10 / 1e-13
    assert budget.v2i_sinr[0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(199.52623149688795, rel=1e-12)
    assert 10 * np.log10(expected) == pytest.approx(23.0, abs=1e-9)


def test_interferer_scales_denominator():
    config, scenario, ls, ff, alloc, ep = single_platoon_setup()
    base = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W).v2i_sinr[0]
    # Move the V2V broadcast onto sub-band 0 with received power 10x noise.
    p_v2v_dbm = 10 * np.log10(10 * NOISE_W / 1e-10) + 30.0
    alloc2 = Allocation(
        v2v_subband=np.array([0]),
        v2v_power_dbm=np.array([p_v2v_dbm]),
        v2i_rsu=alloc.v2i_rsu,
        v2i_power_dbm=alloc.v2i_power_dbm,
    )
    bumped = compute_budgets(scenario, ls, ff, alloc2, ep, config, NOISE_W).v2i_sinr[0]
    assert bumped == pytest.approx(base / 11.0, rel=1e-9)


def test_all_minimum_power_sinr_at_most_one():
    # At -100 dBm (1e-13 W) with L*g <= 1, SINR can never exceed 1 (0 dB).
    config, scenario, ls, ff, alloc, ep = single_platoon_setup(l_times_g=1.0, power_dbm=-100.0)
    budget = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    assert budget.v2i_sinr[0] <= 1.0 + 1e-12


def test_invalid_allocation_rejected():
    config, scenario, ls, ff, alloc, ep = single_platoon_setup()
    bad = Allocation(
        v2v_subband=np.array([5]),
        v2v_power_dbm=alloc.v2v_power_dbm,
        v2i_rsu=alloc.v2i_rsu,
        v2i_power_dbm=alloc.v2i_power_dbm,
    )
    with pytest.raises(ValueError):
        compute_budgets(scenario, ls, ff, bad, ep, config, NOISE_W)
    bad_rsu = Allocation(
        v2v_subband=alloc.v2v_subband,
        v2v_power_dbm=alloc.v2v_power_dbm,
        v2i_rsu=np.array([11]),
        v2i_power_dbm=alloc.v2i_power_dbm,
    )
    with pytest.raises(ValueError):
        compute_budgets(scenario, ls, ff, bad_rsu, ep, config, NOISE_W)


def test_rates_from_sinr():
    config, scenario, ls, ff, alloc, ep = single_platoon_setup()
    budget = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    object.__setattr__(budget, "v2i_sinr", np.array([1995.26]))
    done = rates(budget, config)
    assert done.v2i_rate_bps[0] == pytest.approx(10963083.919306371, rel=1e-12)
    # V2V splits the band across the two members.
    object.__setattr__(budget, "v2v_sinr", np.where(ep.member_mask, 1995.26, 0.0))
    done = rates(budget, config)
    member = np.argmax(ep.member_mask[0])
    assert done.v2v_rate_bps[0, member] == pytest.approx(10963083.919306371 / 2, rel=1e-12)
    zero = rates(
        compute_budgets(
            scenario,
            ls,
            ff,
            alloc,
            ep,
            config,
            NOISE_W,
        ),
        config,
    )
    assert np.all(zero.v2v_rate_bps >= 0.0)


def test_rate_zero_at_zero_sinr():
    config = ScenarioConfig(n_platoons=1)
    from platoon_marl.linklayer import LinkBudget

    budget = LinkBudget(
        v2i_interference_w=np.zeros(1),
        v2i_sinr=np.zeros(1),
        v2i_rate_bps=np.zeros(1),
        v2v_interference_w=np.zeros((1, 3)),
        v2v_sinr=np.zeros((1, 3)),
        v2v_rate_bps=np.zeros((1, 3)),
        member_interference_w=np.zeros((1, 3, 2)),
    )
    done = rates(budget, config)
    assert np.all(done.v2i_rate_bps == 0.0)
    assert np.all(done.v2v_rate_bps == 0.0)


def brute_vs_production(config, seed, fraction_delivered=0.3):
    rng = np.random.default_rng(seed)
    scenario, ls, ff, alloc, ep = make_random_setup(config, rng, fraction_delivered)
    budget = rates(compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W), config)
    o_sinr_i, o_rate_i, o_sinr_v, o_rate_v = brute_force_budgets(
        scenario, ls, ff, alloc, ep, config, NOISE_W
    )
    np.testing.assert_allclose(budget.v2i_sinr, o_sinr_i, rtol=1e-12, atol=0)
    np.testing.assert_allclose(budget.v2i_rate_bps, o_rate_i, rtol=1e-12, atol=0)
    np.testing.assert_allclose(budget.v2v_sinr, o_sinr_v, rtol=1e-12, atol=0)
    np.testing.assert_allclose(budget.v2v_rate_bps, o_rate_v, rtol=1e-12, atol=0)


def test_budget_matches_brute_force_sample():
    for seed in range(25):
        config = ScenarioConfig(n_platoons=1 + seed % 6)
        brute_vs_production(config, seed)


def test_delivered_transmitter_is_silent():
    # Removing a transmitter never decreases any other link's SINR.
    config = ScenarioConfig(n_platoons=2)
    rng = np.random.default_rng(42)
    scenario, ls, ff, alloc, ep = make_random_setup(config, rng, fraction_delivered=0.0)
    alloc = Allocation(
        v2v_subband=np.zeros(2, dtype=np.int64),
        v2v_power_dbm=np.array([23.0, 23.0]),
        v2i_rsu=np.zeros(2, dtype=np.int64),
        v2i_power_dbm=np.array([23.0, 23.0]),
    )
    before = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    silenced = EpisodeState(
        v2i_remaining_bits=np.array([ep.v2i_remaining_bits[0], 0.0]),
        v2v_remaining_bits=np.where(
            np.arange(2)[:, None] == 1, 0.0, ep.v2v_remaining_bits
        ),
        member_mask=ep.member_mask,
        step=ep.step,
        steps_total=ep.steps_total,
    )
    after = compute_budgets(scenario, ls, ff, alloc, silenced, config, NOISE_W)
    assert after.v2i_sinr[0] >= before.v2i_sinr[0]
    members0 = ep.member_mask[0]
    assert np.all(after.v2v_sinr[0][members0] >= before.v2v_sinr[0][members0])
    # and the silenced platoon's own links carry zero rate
    assert after.v2i_sinr[1] == 0.0
    assert np.all(after.v2v_sinr[1] == 0.0)


def test_subband_orthogonality():
    # Platoons on disjoint sub-bands do not interfere at all.
    config = ScenarioConfig(n_platoons=2)
    rng = np.random.default_rng(43)
    scenario, ls, ff, _, ep = make_random_setup(config, rng, fraction_delivered=0.0)
    alloc = Allocation(
        v2v_subband=np.array([0, 1]),
        v2v_power_dbm=np.array([23.0, 23.0]),
        v2i_rsu=np.array([0, 1]),  # preassigned sub-bands 0 and 1
        v2i_power_dbm=np.array([23.0, 23.0]),
    )
    budget = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    # Each receiver on sub-band 0 hears only platoon 0; interference at the
    # RSU serving platoon 0 is exactly platoon 0's own V2V broadcast.
    from platoon_marl.channel import rsu_node, vehicle_node

    leader0 = vehicle_node(config, 0, int(scenario.leader_index[0]))
    rx = rsu_node(config, 0)
    own_v2v = 10 ** ((23.0 - 30.0) / 10.0) * ls.gains[leader0, rx] * ff.g[leader0, rx, 0]
    assert budget.v2i_interference_w[0] == pytest.approx(own_v2v, rel=1e-12)


def test_interference_bookkeeping_conservation():
    # signal + interference equals the total incident power at the receiver.
    config = ScenarioConfig(n_platoons=3)
    rng = np.random.default_rng(44)
    scenario, ls, ff, alloc, ep = make_random_setup(config, rng, fraction_delivered=0.0)
    budget = compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W)
    from platoon_marl.channel import dbm_to_watt, rsu_node, vehicle_node

    for m in range(3):
        k = int(alloc.v2i_rsu[m])
        band = rsu_subband(k, config.n_subbands)
        rx = rsu_node(config, k)
        total = 0.0
        for a in range(3):
            tx = vehicle_node(config, a, int(scenario.leader_index[a]))
            if rsu_subband(int(alloc.v2i_rsu[a]), config.n_subbands) == band:
                total += dbm_to_watt(alloc.v2i_power_dbm[a]) * ls.gains[tx, rx] * ff.g[tx, rx, band]
            if int(alloc.v2v_subband[a]) == band:
                total += dbm_to_watt(alloc.v2v_power_dbm[a]) * ls.gains[tx, rx] * ff.g[tx, rx, band]
        tx_m = vehicle_node(config, m, int(scenario.leader_index[m]))
        signal = dbm_to_watt(alloc.v2i_power_dbm[m]) * ls.gains[tx_m, rx] * ff.g[tx_m, rx, band]
        assert signal + budget.v2i_interference_w[m] == pytest.approx(total, rel=1e-12)


def test_consume_payload_examples(config):
    scenario = drop_vehicles(config, np.random.default_rng(1))
    ep = EpisodeState.fresh(config, scenario.leader_index)
    from platoon_marl.linklayer import LinkBudget

    n_p, n_v = 4, 3
    budget = LinkBudget(
        v2i_interference_w=np.zeros(n_p),
        v2i_sinr=np.zeros(n_p),
        v2i_rate_bps=np.full(n_p, 10.963e6),
        v2v_interference_w=np.zeros((n_p, n_v)),
        v2v_sinr=np.zeros((n_p, n_v)),
        v2v_rate_bps=np.where(ep.member_mask, 3e6, 0.0),
        member_interference_w=np.zeros((n_p, n_v, 2)),
    )
    # 624 bytes at 10.963 Mbps: one 1 ms step carries 10963 bits >= 4992.
    after = consume_payload(ep, budget, config)
    assert np.all(after.v2i_delivered)
    assert after.step == 1
    # 2400 bytes at a constant 3 Mbps: five steps deliver 15000 < 19200.
    state = ep
    for _ in range(5):
        state = consume_payload(state, budget, config)
    assert not np.any(state.v2v_delivered)
    assert state.step == 5
    with pytest.raises(EpisodeStateError):
        consume_payload(state, budget, config)


def test_delivered_links_freeze():
    config = ScenarioConfig(n_platoons=1)
    scenario = drop_vehicles(config, np.random.default_rng(1))
    ep = EpisodeState.fresh(config, scenario.leader_index)
    from platoon_marl.linklayer import LinkBudget

    budget = LinkBudget(
        v2i_interference_w=np.zeros(1),
        v2i_sinr=np.zeros(1),
        v2i_rate_bps=np.array([10e6]),
        v2v_interference_w=np.zeros((1, 3)),
        v2v_sinr=np.zeros((1, 3)),
        v2v_rate_bps=np.zeros((1, 3)),
        member_interference_w=np.zeros((1, 3, 2)),
    )
    once = consume_payload(ep, budget, config)
    assert once.v2i_delivered[0]
    remaining = once.v2i_remaining_bits[0]
    twice = consume_payload(once, budget, config)
    assert twice.v2i_remaining_bits[0] == remaining


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_payload_monotone_never_increases(seed):
    config = ScenarioConfig(n_platoons=2)
    rng = np.random.default_rng(seed)
    scenario, ls, ff, alloc, _ = make_random_setup(config, rng, fraction_delivered=0.0)
    ep = EpisodeState.fresh(config, scenario.leader_index)
    for _ in range(config.steps_per_episode):
        budget = rates(compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W), config)
        nxt = consume_payload(ep, budget, config)
        assert np.all(nxt.v2i_remaining_bits <= ep.v2i_remaining_bits)
        assert np.all(nxt.v2v_remaining_bits <= ep.v2v_remaining_bits)
        assert np.all(nxt.v2v_delivered >= ep.v2v_delivered)
        ep = nxt


def delivered_state(config):
    leaders = np.zeros(config.n_platoons, dtype=np.int64)
    ep = EpisodeState.fresh(config, leaders)
    return EpisodeState(
        v2i_remaining_bits=np.zeros_like(ep.v2i_remaining_bits),
        v2v_remaining_bits=np.zeros_like(ep.v2v_remaining_bits),
        member_mask=ep.member_mask,
        step=ep.step,
        steps_total=ep.steps_total,
    )


def zero_budget(config):
    from platoon_marl.linklayer import LinkBudget

    n_p, n_v = config.n_platoons, config.vehicles_per_platoon
    return LinkBudget(
        v2i_interference_w=np.zeros(n_p),
        v2i_sinr=np.zeros(n_p),
        v2i_rate_bps=np.zeros(n_p),
        v2v_interference_w=np.zeros((n_p, n_v)),
        v2v_sinr=np.zeros((n_p, n_v)),
        v2v_rate_bps=np.zeros((n_p, n_v)),
        member_interference_w=np.zeros((n_p, n_v, config.n_subbands)),
    )


def test_reward_all_delivered_identity(config):
    # 0.3 * (8 * 25) + 0.7 * (4 * 15) is exactly 102.0
    r = step_reward(delivered_state(config), zero_budget(config), RewardParams())
    assert r == 102.0


def test_reward_zero_case(config):
    scenario = drop_vehicles(config, np.random.default_rng(1))
    ep = EpisodeState.fresh(config, scenario.leader_index)
    assert step_reward(ep, zero_budget(config), RewardParams()) == 0.0


def test_reward_mixed_hand_case():
    config = ScenarioConfig(n_platoons=1, vehicles_per_platoon=2)
    leaders = np.zeros(1, dtype=np.int64)
    ep = EpisodeState.fresh(config, leaders)
    delivered_v2v = EpisodeState(
        v2i_remaining_bits=ep.v2i_remaining_bits.copy(),
        v2v_remaining_bits=np.zeros_like(ep.v2v_remaining_bits),
        member_mask=ep.member_mask,
        step=0,
        steps_total=ep.steps_total,
    )
    budget = zero_budget(config)
    object.__setattr__(budget, "v2i_rate_bps", np.array([10e6]))
    r = step_reward(delivered_v2v, budget, RewardParams())
    assert r == pytest.approx(0.3 * 25.0 + 0.7 * 10.0)


def test_reward_nonnegative_random(config):
    for seed in range(10):
        rng = np.random.default_rng(seed)
        scenario, ls, ff, alloc, ep = make_random_setup(config, rng)
        budget = rates(compute_budgets(scenario, ls, ff, alloc, ep, config, NOISE_W), config)
        assert step_reward(ep, budget, RewardParams()) >= 0.0


def test_delivery_outcomes(config):
    done = delivered_state(config)
    out = delivery_outcomes(done)
    assert out.v2v_fraction == 1.0
    assert out.v2i_fraction == 1.0

    leaders = np.zeros(config.n_platoons, dtype=np.int64)
    ep = EpisodeState.fresh(config, leaders)
    with pytest.raises(EpisodeStateError):
        delivery_outcomes(ep)

    # 7 of 8 member links delivered
    v2v = np.zeros_like(ep.v2v_remaining_bits)
    v2v[0, 1] = 100.0
    partial = EpisodeState(
        v2i_remaining_bits=np.zeros_like(ep.v2i_remaining_bits),
        v2v_remaining_bits=v2v,
        member_mask=ep.member_mask,
        step=5,
        steps_total=5,
    )
    assert delivery_outcomes(partial).v2v_fraction == pytest.approx(7 / 8)

    # zero-length episode with payload left is all failures
    zero_len = EpisodeState(
        v2i_remaining_bits=ep.v2i_remaining_bits,
        v2v_remaining_bits=ep.v2v_remaining_bits,
        member_mask=ep.member_mask,
        step=0,
        steps_total=0,
    )
    out = delivery_outcomes(zero_len)
    assert out.v2v_fraction == 0.0
    assert out.v2i_fraction == 0.0

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoon_marl.dqn import (
    EpsilonSchedule,
    Gradients,
    QNetwork,
    ReplayMemory,
    RmspropState,
    act,
    epsilon_for_episode,
    forward,
    gradients,
    init_network,
    load_checkpoint,
    rmsprop_step,
    save_checkpoint,
    td_targets,
)
from platoon_marl.errors import CheckpointError

from .oracles import finite_difference_gradients, max_relative_gradient_error


def test_forward_zero_net_outputs_zero():
    net = QNetwork(
        layer_sizes=(4, 3, 2),
        weights=[np.zeros((3, 4)), np.zeros((2, 3))],
        biases=[np.zeros(3), np.zeros(2)],
    )
    assert np.array_equal(forward(net, np.ones(4)), np.zeros(2))


def test_forward_identity_chain_passes_positive_input():
    net = QNetwork(
        layer_sizes=(1, 1, 1, 1, 1),
        weights=[np.ones((1, 1))] * 4,
        biases=[np.zeros(1)] * 4,
    )
    assert forward(net, np.array([2.0]))[0] == 2.0


def test_forward_deterministic_and_shape_checked():
    net = init_network((5, 8, 8, 3), np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=5)
    assert np.array_equal(forward(net, x), forward(net, x))
    with pytest.raises(ValueError):
        forward(net, np.zeros(4))


def test_gradient_zero_at_exact_targets():
    net = init_network((4, 6, 3), np.random.default_rng(2))
    states = np.random.default_rng(3).normal(size=(5, 4))
    actions = np.array([0, 1, 2, 0, 1])
    q = forward(net, states)
    targets = q[np.arange(5), actions]
    grads = gradients(net, states, actions, targets)
    for dw in grads.d_weights:
        assert np.allclose(dw, 0.0)
    for db in grads.d_biases:
        assert np.allclose(db, 0.0)


def test_gradient_linear_single_layer_analytic():
    # Loss (target - w.x)^2 has gradient 2*(q - target)*x.
    w = np.array([[0.5, -1.0, 2.0]])
    net = QNetwork(layer_sizes=(3, 1), weights=[w.copy()], biases=[np.zeros(1)])
    x = np.array([[1.0, 2.0, 3.0]])
    target = np.array([1.0])
    q = float(forward(net, x[0])[0])
    grads = gradients(net, x, np.array([0]), target)
    np.testing.assert_allclose(grads.d_weights[0], 2.0 * (q - target[0]) * x)
    np.testing.assert_allclose(grads.d_biases[0], [2.0 * (q - target[0])])


@pytest.mark.parametrize("layer_sizes", [(6, 10, 8, 4), (5, 7, 7, 7, 3)])
def test_gradient_matches_finite_differences(layer_sizes):
    rng = np.random.default_rng(7)
    net = init_network(layer_sizes, rng)
    states = rng.normal(size=(6, layer_sizes[0]))
    actions = rng.integers(0, layer_sizes[-1], size=6)
    targets = rng.normal(size=6)
    grads = gradients(net, states, actions, targets)
    fd_w, fd_b = finite_difference_gradients(net, states, actions, targets)
    assert max_relative_gradient_error(grads.d_weights, fd_w) < 1e-4
    assert max_relative_gradient_error(grads.d_biases, fd_b) < 1e-4


def test_rmsprop_zero_gradient_is_identity():
    net = init_network((3, 4, 2), np.random.default_rng(0))
    before = net.copy()
    opt = RmspropState.zeros_like(net)
    grads = Gradients(
        d_weights=[np.zeros_like(w) for w in net.weights],
        d_biases=[np.zeros_like(b) for b in net.biases],
    )
    rmsprop_step(net, grads, opt, lr=0.01)
    for w0, w1 in zip(before.weights, net.weights):
        assert np.array_equal(w0, w1)


def test_rmsprop_first_step_magnitude():
    net = QNetwork(layer_sizes=(1, 1), weights=[np.zeros((1, 1))], biases=[np.zeros(1)])
    opt = RmspropState.zeros_like(net)
    grads = Gradients(d_weights=[np.ones((1, 1))], d_biases=[np.zeros(1)])
    rmsprop_step(net, grads, opt, lr=0.001, decay=0.9)
    assert abs(net.weights[0][0, 0]) == pytest.approx(0.001 / np.sqrt(0.1), rel=1e-6)


def test_rmsprop_deterministic():
    rng = np.random.default_rng(5)
    net = init_network((3, 4, 2), rng)
    grads = gradients(
        net, rng.normal(size=(4, 3)), np.array([0, 1, 0, 1]), rng.normal(size=4)
    )
    a_net, a_opt = net.copy(), RmspropState.zeros_like(net)
    b_net, b_opt = net.copy(), RmspropState.zeros_like(net)
    rmsprop_step(a_net, grads, a_opt, lr=0.01)
    rmsprop_step(b_net, grads, b_opt, lr=0.01)
    for wa, wb in zip(a_net.weights, b_net.weights):
        assert np.array_equal(wa, wb)


def test_td_targets():
    net = QNetwork(
        layer_sizes=(2, 2),
        weights=[np.array([[1.0, 0.0], [0.0, 2.0]])],
        biases=[np.zeros(2)],
    )
    next_states = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    rewards = np.array([5.0, 1.0, 1.0])
    terminal = np.array([True, False, False])
    t_g0 = td_targets(rewards, next_states, terminal, net, gamma=0.0)
    np.testing.assert_allclose(t_g0, rewards)
    t = td_targets(rewards, next_states, terminal, net, gamma=0.9)
    # max Q(s') = 2; terminal sample stays at its reward
    np.testing.assert_allclose(t, [5.0, 1.0 + 0.9 * 2.0, 2.8])


def test_epsilon_schedule_exact_points():
    sched = EpsilonSchedule()
    assert epsilon_for_episode(0, sched) == 1.0
    assert epsilon_for_episode(800, sched) == 0.51
    assert epsilon_for_episode(1600, sched) == 0.02
    assert epsilon_for_episode(1900, sched) == 0.02


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_epsilon_schedule_bounds_and_monotone(i):
    sched = EpsilonSchedule()
    e = epsilon_for_episode(i, sched)
    assert 0.02 <= e <= 1.0
    assert epsilon_for_episode(i + 1, sched) <= e


def test_act_greedy_and_tiebreak():
    net = QNetwork(
        layer_sizes=(3, 3),
        weights=[np.eye(3)],
        biases=[np.zeros(3)],
    )
    rng = np.random.default_rng(0)
    assert act(net, np.array([1.0, 3.0, 2.0]), 0.0, rng) == 1
    assert act(net, np.array([2.0, 2.0, 0.0]), 0.0, rng) == 0


def test_act_uniform_when_fully_random():
    net = init_network((2, 4, 5), np.random.default_rng(0))
    rng = np.random.default_rng(1)
    n = 100_000
    counts = np.bincount(
        [act(net, np.zeros(2), 1.0, rng) for _ in range(n)], minlength=5
    )
    expected = n / 5
    sigma = np.sqrt(n * 0.2 * 0.8)
    assert np.all(np.abs(counts - expected) < 3 * sigma)


def test_replay_fifo_eviction():
    replay = ReplayMemory(capacity=3)
    for i in range(4):
        replay.push(np.array([float(i)]), i, float(i), np.array([float(i)]), False)
    assert len(replay) == 3
    assert replay.oldest()[1] == 1  # item 0 was evicted first


def test_replay_underfilled_returns_none():
    replay = ReplayMemory(capacity=10)
    replay.push(np.zeros(2), 0, 0.0, np.zeros(2), False)
    assert replay.sample(2, np.random.default_rng(0)) is None


def test_replay_sample_bounds_and_uniformity():
    replay = ReplayMemory(capacity=100)
    for i in range(10):
        replay.push(np.array([float(i)]), i, float(i), np.array([float(i)]), False)
    rng = np.random.default_rng(9)
    states, actions, rewards, next_states, terminal = replay.sample(5, rng)
    assert states.shape == (5, 1)
    assert np.all(actions >= 0) and np.all(actions < 10)
    # chi-squared uniformity over 1e5 draws, 10 bins, 1% critical value 21.67
    draws = rng.integers(0, 10, size=100_000)
    counts = np.bincount(draws, minlength=10)
    chi2 = float(((counts - 10_000.0) ** 2 / 10_000.0).sum())
    assert chi2 < 21.666


def test_single_transition_training_converges():
    rng = np.random.default_rng(3)
    net = init_network((4, 8, 8, 3), rng)
    opt = RmspropState.zeros_like(net)
    state = rng.normal(size=(1, 4))
    action = np.array([2])
    target = np.array([1.5])
    q0 = forward(net, state[0])[2]
    loss0 = (q0 - 1.5) ** 2
    for _ in range(500):
        grads = gradients(net, state, action, target)
        rmsprop_step(net, grads, opt, lr=1e-3)
    q1 = forward(net, state[0])[2]
    assert (q1 - 1.5) ** 2 < 0.01 * loss0


def test_checkpoint_roundtrip(tmp_path):
    net = init_network((10, 7, 4), np.random.default_rng(13))
    path = tmp_path / "agent.npz"
    save_checkpoint(path, net, {"kind": "v2v", "platoon": 0})
    loaded, meta = load_checkpoint(path)
    assert loaded.layer_sizes == (10, 7, 4)
    assert meta["kind"] == "v2v"
    for w0, w1 in zip(net.weights, loaded.weights):
        assert np.array_equal(w0, w1)


def test_checkpoint_rejects_mismatched_sizes(tmp_path):
    net = init_network((10, 7, 4), np.random.default_rng(13))
    path = tmp_path / "agent.npz"
    save_checkpoint(path, net, {})
    with pytest.raises(CheckpointError):
        load_checkpoint(path, expected_layer_sizes=(10, 8, 4))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.npz")

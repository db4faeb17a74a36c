"""Minimal deep Q-learning core on numpy.

A fully connected rectifier network approximates the action-value function.
Training follows the classic recipe: uniform experience replay, epsilon-greedy
exploration with a linear schedule, TD targets bootstrapped from a periodically
refreshed target copy of the network, and RMSProp on the exact
backpropagation gradients of the mean squared TD error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError

CHECKPOINT_VERSION = 1


@dataclass
class QNetwork:
    """Weights of a fully connected net: relu on hidden layers, linear output.

    weights[i] has shape (fan_out, fan_in); biases[i] has shape (fan_out,).
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "QNetwork":
        return QNetwork(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


def init_network(layer_sizes: tuple[int, ...], rng: np.random.Generator) -> QNetwork:
    """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return QNetwork(layer_sizes=tuple(layer_sizes), weights=weights, biases=biases)


def _forward_cached(net: QNetwork, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Batch forward keeping pre-activations for backprop. x: (batch, in)."""
    pre_acts = []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        pre_acts.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return pre_acts, h


def forward(net: QNetwork, state: np.ndarray) -> np.ndarray:
    """Q-values for one state vector (1-D) or a batch (2-D)."""
    x = np.asarray(state, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.input_dim:
        raise ValueError(f"state dim {x.shape[1]} != network input {net.input_dim}")
    _, q = _forward_cached(net, x)
    return q[0] if single else q


@dataclass
class Gradients:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def gradients(
    net: QNetwork, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> Gradients:
    """Exact gradients of mean_i (target_i - Q(s_i, a_i))^2.

    Only the output unit of the taken action receives loss; everything else
    backpropagates zeros.
    """
    x = np.asarray(states, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("states must be a non-empty (batch, dim) array")
    batch = x.shape[0]
    pre_acts, q = _forward_cached(net, x)
    delta_out = np.zeros_like(q)
    idx = np.arange(batch)
    chosen = q[idx, actions]
    delta_out[idx, actions] = 2.0 * (chosen - targets) / batch

    d_weights: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    d_biases: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    delta = delta_out
    for i in range(len(net.weights) - 1, -1, -1):
        inputs = x if i == 0 else np.maximum(pre_acts[i - 1], 0.0)
        d_weights[i] = delta.T @ inputs
        d_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (pre_acts[i - 1] > 0.0)
    return Gradients(d_weights=d_weights, d_biases=d_biases)


def td_loss(net: QNetwork, states, actions, targets) -> float:
    q = forward(net, np.asarray(states, dtype=np.float64))
    chosen = q[np.arange(len(targets)), actions]
    return float(np.mean((targets - chosen) ** 2))


@dataclass
class RmspropState:
    """Second-moment accumulators, one per parameter tensor."""

    v_weights: list[np.ndarray]
    v_biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: QNetwork) -> "RmspropState":
        return cls(
            v_weights=[np.zeros_like(w) for w in net.weights],
            v_biases=[np.zeros_like(b) for b in net.biases],
        )


def rmsprop_step(
    net: QNetwork,
    grads: Gradients,
    opt: RmspropState,
    lr: float,
    decay: float = 0.9,
    eps: float = 1e-8,
) -> None:
    """In-place update: v <- decay*v + (1-decay)*g^2; p <- p - lr*g/(sqrt(v)+eps)."""
    for p, g, v in zip(net.weights, grads.d_weights, opt.v_weights):
        v *= decay
        v += (1.0 - decay) * g * g
        p -= lr * g / (np.sqrt(v) + eps)
    for p, g, v in zip(net.biases, grads.d_biases, opt.v_biases):
        v *= decay
        v += (1.0 - decay) * g * g
        p -= lr * g / (np.sqrt(v) + eps)


def td_targets(
    rewards: np.ndarray,
    next_states: np.ndarray,
    terminal: np.ndarray,
    target_net: QNetwork,
    gamma: float,
) -> np.ndarray:
    """r + gamma * max_a' Q(s', a'), truncated to r on terminal transitions."""
    q_next = forward(target_net, np.asarray(next_states, dtype=np.float64))
    bootstrap = q_next.max(axis=1)
    return rewards + gamma * np.where(terminal, 0.0, bootstrap)


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.02
    decay_episodes: int = 1600


def epsilon_for_episode(episode: int, schedule: EpsilonSchedule) -> float:
    """Linear decay from start to end over decay_episodes, then flat."""
    if episode < 0:
        raise ValueError("episode must be >= 0")
    frac = episode / schedule.decay_episodes
    if frac >= 1.0:
        return schedule.end
    return max(schedule.end, schedule.start - (schedule.start - schedule.end) * frac)


def act(
    net: QNetwork, state: np.ndarray, epsilon: float, rng: np.random.Generator
) -> int:
    """Epsilon-greedy action; greedy ties break toward the lowest index."""
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(0, net.output_dim))
    return int(np.argmax(forward(net, state)))


@dataclass
class ReplayMemory:
    """Bounded FIFO of transitions with uniform with-replacement sampling."""

    capacity: int
    _storage: list[tuple] = field(default_factory=list)
    _next_slot: int = 0

    def __len__(self) -> int:
        return len(self._storage)

    def push(
        self,
        state: np.ndarray,
        action: int,
        reward: float,
        next_state: np.ndarray,
        terminal: bool,
    ) -> None:
        item = (state, action, reward, next_state, terminal)
        if len(self._storage) < self.capacity:
            self._storage.append(item)
        else:
            # Ring overwrite keeps eviction strictly oldest-first.
            self._storage[self._next_slot] = item
            self._next_slot = (self._next_slot + 1) % self.capacity

    def oldest(self) -> tuple:
        return self._storage[self._next_slot % len(self._storage)]

    def sample(
        self, batch_size: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None:
        """None signals "skip training" while the buffer is underfilled."""
        if len(self._storage) < batch_size:
            return None
        idx = rng.integers(0, len(self._storage), size=batch_size)
        states = np.stack([self._storage[i][0] for i in idx])
        actions = np.array([self._storage[i][1] for i in idx], dtype=np.int64)
        rewards = np.array([self._storage[i][2] for i in idx])
        next_states = np.stack([self._storage[i][3] for i in idx])
        terminal = np.array([self._storage[i][4] for i in idx], dtype=bool)
        return states, actions, rewards, next_states, terminal


@dataclass(frozen=True)
class DqnHyperparams:
    """Training knobs; learning rate is per agent kind.

    updates_per_episode defaults to the per-time-step cadence (one mini-batch
    per environment step, applied after the step loop).
    """

    gamma: float = 0.9
    learning_rates: dict[str, float] = field(
        default_factory=lambda: {"pl_select": 1e-4, "v2v": 1e-4, "v2i": 1e-3}
    )
    batch_size: int = 64
    replay_capacity: int = 100_000
    epsilon: EpsilonSchedule = EpsilonSchedule()
    target_refresh_updates: int = 500
    # Mini-batch updates after each episode, per agent kind.  V2V agents get
    # one per environment step; V2I agents learn a much easier mapping with a
    # 10x learning rate, and extra updates there only overfit the
    # post-delivery steps where actions are irrelevant.
    updates_per_episode: dict[str, int] = field(
        default_factory=lambda: {"pl_select": 5, "v2v": 5, "v2i": 1}
    )
    # TD errors are clipped to +-td_error_clip before forming the regression
    # target (0 disables); bounds the damage any stale sample can do.
    td_error_clip: float = 25.0
    # Learning rates decay linearly to lr_end_scale of their initial value
    # over the run, freezing whichever joint convention the agents reach.
    lr_end_scale: float = 0.05
    # Every validation_interval episodes a frozen greedy rollout is scored on
    # a dedicated substream (common random numbers across checkpoints); the
    # best-scoring snapshot is the one exported.  0 disables selection.
    validation_interval: int = 50
    validation_episodes: int = 24
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8

    def lr_scale(self, episode: int, episodes: int) -> float:
        if episodes <= 1:
            return 1.0
        frac = min(1.0, episode / (episodes - 1))
        return 1.0 - (1.0 - self.lr_end_scale) * frac

    def validate(self) -> "DqnHyperparams":
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must hold at least one batch")
        if any(v < 1 for v in self.updates_per_episode.values()):
            raise ValueError("updates_per_episode entries must be >= 1")
        return self


def save_checkpoint(path, net: QNetwork, meta: dict) -> None:
    """Write a versioned npz with explicit little-endian float64 parameters."""
    arrays = {
        "version": np.array([CHECKPOINT_VERSION], dtype="<i8"),
        "layer_sizes": np.array(net.layer_sizes, dtype="<i8"),
        "meta_json": np.array(json.dumps(meta, sort_keys=True)),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w.astype("<f8")
        arrays[f"b{i}"] = b.astype("<f8")
    np.savez(path, **arrays)


def load_checkpoint(
    path, expected_layer_sizes: tuple[int, ...] | None = None
) -> tuple[QNetwork, dict]:
    try:
        data = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        if "version" not in data or int(data["version"][0]) != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version in {path}")
        layer_sizes = tuple(int(s) for s in data["layer_sizes"])
        if expected_layer_sizes is not None and layer_sizes != tuple(expected_layer_sizes):
            raise CheckpointError(
                f"layer sizes {layer_sizes} do not match expected {tuple(expected_layer_sizes)}"
            )
        n_layers = len(layer_sizes) - 1
        weights = [data[f"w{i}"].astype(np.float64) for i in range(n_layers)]
        biases = [data[f"b{i}"].astype(np.float64) for i in range(n_layers)]
        meta = json.loads(str(data["meta_json"]))
    for i, w in enumerate(weights):
        if w.shape != (layer_sizes[i + 1], layer_sizes[i]):
            raise CheckpointError(f"weight {i} has shape {w.shape}, inconsistent with layer sizes")
    return QNetwork(layer_sizes=layer_sizes, weights=weights, biases=biases), meta

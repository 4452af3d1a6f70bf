"""Function approximators trained from scratch: a value network for
Q-learning and an action classifier for imitation, plus the replay buffer
and exploration schedule that feed them.

Both networks are [5, 64, 64, 4] multilayer perceptrons with rectifier
hidden layers; the classifier differs only in interpreting outputs through
a softmax.  All arithmetic runs through the ``kernels`` backends.
Optimization is plain mini-batch gradient descent with a fixed step size.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .errors import NonFiniteLossError, PolicyFormatError
from .gridworld import GameKind, GameState, GridMap, enemy_cell

DEFAULT_SIZES = (5, 64, 64, 4)
N_ACTIONS = 4
FEATURE_DIM = 5


def featurize(gm: GridMap, state: GameState) -> np.ndarray:
    """[row/height, col/width, has_key, enemy_row/height, enemy_col/width];
    the enemy slots are 0 for games without one."""
    x = np.zeros(FEATURE_DIM, dtype=np.float64)
    x[0] = state.agent[0] / gm.height
    x[1] = state.agent[1] / gm.width
    x[2] = 1.0 if state.has_key else 0.0
    enemy = enemy_cell(gm, state)
    if enemy is not None:
        x[3] = enemy[0] / gm.height
        x[4] = enemy[1] / gm.width
    return x


class _Net:
    """Weights, biases, and provenance shared by both network kinds."""

    format_tag = ""

    def __init__(self, sizes, Ws, bs, map_id: str = "", game_kind: str = "",
                 variant: Optional[str] = None):
        self.sizes = tuple(int(s) for s in sizes)
        self.Ws = Ws
        self.bs = bs
        self.map_id = map_id
        self.game_kind = game_kind
        self.variant = variant

    @classmethod
    def create(cls, rng: np.random.Generator, sizes=DEFAULT_SIZES,
               map_id: str = "", game_kind: str = "", variant: Optional[str] = None):
        """Fan-in-scaled uniform weight init (bound sqrt(6/fan_in)), zero biases."""
        Ws, bs = [], []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = np.sqrt(6.0 / fan_in)
            Ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            bs.append(np.zeros(fan_out, dtype=np.float64))
        return cls(sizes, Ws, bs, map_id=map_id, game_kind=game_kind, variant=variant)

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        squeeze = X.ndim == 1
        if squeeze:
            X = X[None, :]
        Y = kernels.forward(self.Ws, self.bs, X)
        return Y[0] if squeeze else Y

    def copy(self):
        return type(self)(self.sizes, [W.copy() for W in self.Ws],
                          [b.copy() for b in self.bs], map_id=self.map_id,
                          game_kind=self.game_kind, variant=self.variant)


class QNetwork(_Net):
    format_tag = "QNET1"


class PolicyClassifier(_Net):
    format_tag = "CLF1"


def q_forward(net: QNetwork, x: np.ndarray) -> np.ndarray:
    """Action-values for one feature vector."""
    return net.forward(x)


def action_probs(model: _Net, x: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Softmax distribution over actions implied by the model's outputs."""
    logits = model.forward(x) / temperature
    logits = logits - logits.max()
    e = np.exp(logits)
    return e / e.sum()


def act(net: QNetwork, x: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy: uniform with probability eps, else the greedy action
    (ties break to the lowest action id)."""
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(net.forward(x)))


class ActMode(enum.Enum):
    GREEDY = "greedy"
    SAMPLE = "sample"


def classifier_act(clf: PolicyClassifier, x: np.ndarray, mode: ActMode,
                   rng: Optional[np.random.Generator] = None,
                   temperature: float = 1.0) -> int:
    if mode is ActMode.GREEDY:
        return int(np.argmax(clf.forward(x)))
    if rng is None:
        raise ValueError("Sample mode needs a random stream")
    return int(rng.choice(N_ACTIONS, p=action_probs(clf, x, temperature)))


def sample_action(model: _Net, x: np.ndarray, rng: np.random.Generator,
                  temperature: float = 1.0) -> int:
    """Draw an action from the softmax of the model's outputs; gives
    stochastic rollouts for either network kind."""
    return int(rng.choice(N_ACTIONS, p=action_probs(model, x, temperature)))


class ReplayBuffer:
    """Fixed-capacity FIFO transition store with uniform batch sampling
    (without replacement inside a batch)."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.size = 0
        self._next = 0
        self._X = np.zeros((capacity, FEATURE_DIM), dtype=np.float64)
        self._actions = np.zeros(capacity, dtype=np.intp)
        self._rewards = np.zeros(capacity, dtype=np.float64)
        self._X_next = np.zeros((capacity, FEATURE_DIM), dtype=np.float64)
        self._terminal = np.zeros(capacity, dtype=bool)

    def push(self, x, action: int, reward: float, x_next, terminal: bool) -> None:
        i = self._next
        self._X[i] = x
        self._actions[i] = action
        self._rewards[i] = reward
        self._X_next[i] = x_next
        self._terminal[i] = terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self.size:
            raise ValueError(f"batch of {batch_size} from buffer of {self.size}")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return (self._X[idx], self._actions[idx], self._rewards[idx],
                self._X_next[idx], self._terminal[idx])

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from eps_initial to eps_final over the first
    exploration_fraction of total_timesteps, then constant."""

    eps_initial: float
    eps_final: float
    exploration_fraction: float
    total_timesteps: int

    def __post_init__(self):
        if not 0.0 < self.exploration_fraction <= 1.0:
            raise ValueError("exploration_fraction must lie in (0, 1]")

    def value(self, step: int) -> float:
        decay_steps = self.exploration_fraction * self.total_timesteps
        if step >= decay_steps:
            return self.eps_final
        frac = step / decay_steps
        return self.eps_initial + (self.eps_final - self.eps_initial) * frac


def td_update(net: QNetwork, target_net: QNetwork, batch, gamma: float,
              lr: float) -> float:
    """One gradient step on the mean squared TD error of a batch.

    Targets: y = r + gamma * max_a' Q_target(s', a') for non-terminal
    transitions, y = r for terminal ones.  Returns the loss before the
    step; a non-finite loss aborts training."""
    X, actions, rewards, X_next, terminal = batch
    q_next = kernels.forward(target_net.Ws, target_net.bs, X_next)
    y = rewards + gamma * q_next.max(axis=1) * ~terminal
    loss, dWs, dbs = kernels.qsel_loss_grad(net.Ws, net.bs, X, actions, y)
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"TD loss diverged to {loss}")
    for W, dW in zip(net.Ws, dWs):
        W -= lr * dW
    for b, db in zip(net.bs, dbs):
        b -= lr * db
    return loss


def sync_target(net: QNetwork, target_net: QNetwork) -> None:
    """Hard-copy weights into the target network."""
    for dst, src in zip(target_net.Ws, net.Ws):
        np.copyto(dst, src)
    for dst, src in zip(target_net.bs, net.bs):
        np.copyto(dst, src)


def classifier_train(clf: PolicyClassifier, X: np.ndarray, labels: np.ndarray,
                     epochs: int, lr: float, rng: np.random.Generator,
                     batch_size: int = 64) -> float:
    """Mini-batch gradient descent on mean cross-entropy, reshuffling every
    epoch; returns the final epoch's mean loss."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    n = X.shape[0]
    if n == 0:
        raise ValueError("classifier_train needs a nonempty dataset")
    epoch_loss = 0.0
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, dWs, dbs = kernels.ce_loss_grad(clf.Ws, clf.bs, X[idx], labels[idx])
            if not np.isfinite(loss):
                raise NonFiniteLossError(f"cross-entropy diverged to {loss}")
            for W, dW in zip(clf.Ws, dWs):
                W -= lr * dW
            for b, db in zip(clf.bs, dbs):
                b -= lr * db
            total += loss * len(idx)
        epoch_loss = total / n
    return epoch_loss


_NET_KINDS = {cls.format_tag: cls for cls in (QNetwork, PolicyClassifier)}


def save_policy(net: _Net, path: Path) -> None:
    """Versioned text header, then "---\\n", then each layer's weight matrix
    (row-major) and bias vector as little-endian float64."""
    lines = [
        f"format={net.format_tag}",
        "layers=" + ",".join(str(s) for s in net.sizes),
        f"map_id={net.map_id}",
        f"game={net.game_kind}",
    ]
    if net.variant:
        lines.append(f"variant={net.variant}")
    header = "\n".join(lines) + "\n---\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for W, b in zip(net.Ws, net.bs):
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_policy(path: Path) -> _Net:
    blob = Path(path).read_bytes()
    sep = blob.find(b"\n---\n")
    if sep < 0:
        raise PolicyFormatError(f"{path}: missing header separator")
    fields = {}
    for line in blob[:sep].decode("ascii", errors="replace").splitlines():
        if "=" not in line:
            raise PolicyFormatError(f"{path}: malformed header line {line!r}")
        key, _, value = line.partition("=")
        fields[key] = value
    kind = _NET_KINDS.get(fields.get("format", ""))
    if kind is None:
        raise PolicyFormatError(f"{path}: unknown format {fields.get('format')!r}")
    try:
        sizes = tuple(int(s) for s in fields["layers"].split(","))
    except (KeyError, ValueError) as exc:
        raise PolicyFormatError(f"{path}: bad layers field") from exc
    body = blob[sep + len(b"\n---\n"):]
    expected = sum(a * b + b for a, b in zip(sizes, sizes[1:])) * 8
    if len(body) != expected:
        raise PolicyFormatError(
            f"{path}: weight payload is {len(body)} bytes, expected {expected}")
    Ws, bs, off = [], [], 0
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w_bytes = fan_in * fan_out * 8
        Ws.append(np.frombuffer(body, dtype="<f8", count=fan_in * fan_out,
                                offset=off).reshape(fan_in, fan_out).copy())
        off += w_bytes
        bs.append(np.frombuffer(body, dtype="<f8", count=fan_out, offset=off).copy())
        off += fan_out * 8
    return kind(sizes, Ws, bs, map_id=fields.get("map_id", ""),
                game_kind=fields.get("game", ""), variant=fields.get("variant"))

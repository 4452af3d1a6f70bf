"""Synthetic-trajectory creation by dataset-aggregation imitation.

Two modes differ only in how the aggregated dataset is seeded:

- WithDemos: seeded with the human demonstration pairs as-is (never
  relabeled by the expert).
- ExpertSeeded: seeded from greedy expert rollouts.

Each iteration rolls out a mixture policy (expert's greedy action with
probability beta_i, classifier sample otherwise, decided per step),
relabels every visited state — terminal included — with the expert's
greedy action, aggregates, and retrains a freshly initialized classifier
on everything collected so far.  The classifier with the highest
validation mean return (base rewards, greedy rollouts) is returned.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .distances import DistanceTable, distance_table
from .errors import ExpertNotCompetentError, InsufficientDataError
from .gridworld import GridMap
from .qpolicy import (
    ActMode,
    PolicyClassifier,
    QNetwork,
    classifier_act,
    classifier_train,
    featurize,
)
from .shaping import DemoSet
from .train import evaluate, make_actor, rollout
from .trajio import Source, Trajectory, format_float, replay_states

SEED_DEMO = "seed-demo"
EXPERT_ROLLOUT = "expert-rollout"
RELABELED = "relabeled"


class DaggerMode(enum.Enum):
    WITH_DEMOS = "with_demos"
    EXPERT_SEEDED = "expert_seeded"


# variant tag recorded in policy files and trajectory sources per mode
_MODE_SOURCE = {
    DaggerMode.WITH_DEMOS: Source.DAGGER_PLUS_E,
    DaggerMode.EXPERT_SEEDED: Source.DAGGER_E,
}


class AggDataset:
    """Monotonically growing set of (features, expert action) pairs, each
    tagged with how it entered the dataset."""

    def __init__(self):
        self._X: list[np.ndarray] = []
        self._y: list[int] = []
        self._tags: list[str] = []

    def add(self, x: np.ndarray, action: int, tag: str) -> None:
        self._X.append(np.asarray(x, dtype=np.float64))
        self._y.append(int(action))
        self._tags.append(tag)

    def __len__(self) -> int:
        return len(self._y)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.stack(self._X), np.asarray(self._y, dtype=np.intp)

    def tag_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for tag in self._tags:
            counts[tag] = counts.get(tag, 0) + 1
        return counts


@dataclass(frozen=True)
class DaggerConfig:
    mode: DaggerMode = DaggerMode.WITH_DEMOS
    n_train: int = 10
    beta0: float = 1.0
    beta_decay: float = 0.5
    rollouts_per_iter: int = 5
    # Sized so each iteration's cross-entropy reaches the low hundredths on
    # desk-scale datasets; softer fits leave the classifier's argmax looping
    # in corridors the expert exits decisively.
    epochs: int = 300
    clf_lr: float = 0.15
    k_validation: int = 20
    gamma: float = 0.95  # discount for validation returns
    horizon: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1:
            raise ValueError("n_train must be at least 1")
        if not 0.0 <= self.beta0 <= 1.0 or not 0.0 <= self.beta_decay <= 1.0:
            raise ValueError("beta0 and beta_decay must lie in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    def beta(self, iteration: int) -> float:
        """Mixing weight for 1-based iteration i: beta0 * decay^(i-1)."""
        return self.beta0 * self.beta_decay ** (iteration - 1)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    beta: float
    dataset_size: int
    classifier_loss: float
    val_mean_return: float


@dataclass
class DaggerLog:
    iterations: list[IterationRecord] = field(default_factory=list)
    best_iteration: Optional[int] = None


def mixed_action(beta: float, expert: QNetwork, clf: PolicyClassifier,
                 x: np.ndarray, rng: np.random.Generator) -> int:
    """Per-step stochastic mixture: expert's greedy action with probability
    beta, otherwise an action sampled from the classifier."""
    if rng.random() < beta:
        return int(np.argmax(expert.forward(x)))
    return classifier_act(clf, x, ActMode.SAMPLE, rng)


def _expert_greedy(expert: QNetwork, x: np.ndarray) -> int:
    return int(np.argmax(expert.forward(x)))


def _check_expert(gm: GridMap, expert: QNetwork, dist: DistanceTable,
                  horizon: Optional[int]) -> None:
    result = evaluate(gm, expert, dist, episodes=1, horizon=horizon)
    if result.successes == 0:
        raise ExpertNotCompetentError(
            "the expert's greedy rollout does not reach the goal")


def run_dagger(gm: GridMap, expert: QNetwork, demos: Optional[DemoSet],
               cfg: DaggerConfig,
               dist: Optional[DistanceTable] = None) -> tuple[PolicyClassifier, DaggerLog]:
    if dist is None:
        dist = distance_table(gm)
    horizon = cfg.horizon if cfg.horizon is not None else gm.horizon
    _check_expert(gm, expert, dist, horizon)
    rng = np.random.default_rng(cfg.seed)
    variant = _MODE_SOURCE[cfg.mode].value

    dataset = AggDataset()
    if cfg.mode is DaggerMode.WITH_DEMOS:
        if demos is None or not demos.trajectories:
            raise InsufficientDataError("WithDemos mode needs demonstrations")
        for traj in demos.trajectories:
            states = replay_states(traj, gm, dist)
            for state, rec in zip(states, traj.steps):
                dataset.add(featurize(gm, state), rec.action_id, SEED_DEMO)
    else:
        greedy = make_actor(expert)
        for _ in range(cfg.rollouts_per_iter):
            traj = rollout(gm, greedy, dist, rng, horizon=horizon, source=Source.DQN)
            states = replay_states(traj, gm, dist)
            for state, rec in zip(states, traj.steps):
                dataset.add(featurize(gm, state), rec.action_id, EXPERT_ROLLOUT)

    log = DaggerLog()
    best_clf: Optional[PolicyClassifier] = None
    best_return = -np.inf
    clf_prev = PolicyClassifier.create(rng, map_id=gm.map_id,
                                       game_kind=gm.game_kind.value, variant=variant)
    for i in range(1, cfg.n_train + 1):
        beta = cfg.beta(i)

        def mixer(state, x, step_rng, _clf=clf_prev, _beta=beta):
            return mixed_action(_beta, expert, _clf, x, step_rng)

        for _ in range(cfg.rollouts_per_iter):
            traj = rollout(gm, mixer, dist, rng, horizon=horizon, source=Source.DQN)
            for state in replay_states(traj, gm, dist):
                x = featurize(gm, state)
                dataset.add(x, _expert_greedy(expert, x), RELABELED)

        clf = PolicyClassifier.create(rng, map_id=gm.map_id,
                                      game_kind=gm.game_kind.value, variant=variant)
        X, y = dataset.arrays()
        loss = classifier_train(clf, X, y, cfg.epochs, cfg.clf_lr, rng)
        val = evaluate(gm, clf, dist, cfg.k_validation, horizon=horizon,
                       gamma=cfg.gamma)
        log.iterations.append(IterationRecord(
            iteration=i, beta=beta, dataset_size=len(dataset),
            classifier_loss=loss, val_mean_return=val.mean_return))
        if val.mean_return > best_return:
            best_return = val.mean_return
            best_clf = clf
            log.best_iteration = i
        clf_prev = clf

    assert best_clf is not None
    return best_clf, log


def generate_synthetic(gm: GridMap, policy, n: int, horizon: Optional[int],
                       rng: np.random.Generator,
                       mode: ActMode = ActMode.GREEDY,
                       temperature: float = 1.0,
                       source: Optional[Source] = None,
                       dist: Optional[DistanceTable] = None) -> list[Trajectory]:
    """n independent rollouts of a trained policy, tagged with provenance."""
    if n < 1:
        raise ValueError("need n >= 1 trajectories")
    if dist is None:
        dist = distance_table(gm)
    if source is None:
        source = _infer_source(policy)
    actor = make_actor(policy, mode=mode, temperature=temperature)
    return [rollout(gm, actor, dist, rng, horizon=horizon, source=source)
            for _ in range(n)]


def _infer_source(policy) -> Source:
    if isinstance(policy, PolicyClassifier):
        try:
            return Source(policy.variant)
        except ValueError:
            return Source.DAGGER_E
    return Source.DQN


def write_dagger_log_csv(log: DaggerLog, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "beta", "dataset_size",
                         "classifier_loss", "val_mean_return"])
        for r in log.iterations:
            writer.writerow([r.iteration, format_float(r.beta), r.dataset_size,
                             format_float(r.classifier_loss),
                             format_float(r.val_mean_return)])

"""Expert training: Q-learning with demonstration-shaped rewards.

The loop collects experience with an epsilon-greedy policy, shapes every
transition against the demonstration set at collection time, and performs
one gradient step per environment step once the replay buffer has warmed
up.  Training stops when the last ``window`` episodes all reach the goal
with mean length at most ``n_thresh`` (or at the hard step cap), and the
returned expert is the best periodic greedy-evaluation checkpoint, not
necessarily the final network.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .distances import DistanceTable, distance_table
from .errors import NoSuccessfulCheckpointError, TrajsynthError
from .gridworld import (
    ACTION_DELTAS,
    Action,
    GameKind,
    GameState,
    GridMap,
    Status,
    enemy_next,
    initial_state,
    manhattan,
    obs_id,
    step,
)
from .qpolicy import (
    ActMode,
    EpsilonSchedule,
    PolicyClassifier,
    QNetwork,
    ReplayBuffer,
    act,
    classifier_act,
    featurize,
    sample_action,
    sync_target,
    td_update,
)
from .shaping import DemoSet, ShapingContext, build_shaping_context, f_value
from .trajio import Source, TrajStep, Trajectory, format_float

# An actor maps (state, features, rng) to an action id.  Network actors
# only read the features; the scripted actor only reads the state.
Actor = Callable[[GameState, np.ndarray, np.random.Generator], int]


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.999
    lr: float = 1e-4
    total_timesteps: int = 2_000_000
    learning_starts: int = 100_000
    eps_initial: float = 0.9
    eps_final: float = 0.1
    exploration_fraction: float = 0.8
    n_thresh: int = 55
    window: int = 10
    horizon: Optional[int] = None  # None: the map's own step limit
    seed: int = 0
    eval_interval: int = 10_000
    eval_episodes: int = 100
    batch_size: int = 32
    buffer_capacity: int = 100_000
    target_sync: int = 1_000
    # "standard": all of the last `window` episodes reached the goal and
    # their mean length is <= n_thresh.  "literal": mean length of the last
    # `window` episodes is >= n_thresh, regardless of outcome.
    stop_rule: str = "standard"

    def __post_init__(self):
        if self.window < 1 or self.n_thresh < 1:
            raise ValueError("window and n_thresh must be at least 1")
        if self.stop_rule not in ("standard", "literal"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")


_GAME_DEFAULTS = {
    GameKind.MAZE: dict(total_timesteps=2_000_000, learning_starts=100_000,
                        eps_initial=0.9, eps_final=0.1, exploration_fraction=0.8,
                        n_thresh=55),
    GameKind.CTF: dict(total_timesteps=2_000_000, learning_starts=300_000,
                       eps_initial=0.9, eps_final=0.1, exploration_fraction=0.8,
                       n_thresh=40),
    GameKind.CTFE: dict(total_timesteps=1_800_000, learning_starts=300_000,
                        eps_initial=0.9, eps_final=0.001, exploration_fraction=0.99,
                        n_thresh=42),
}


def default_config(game_kind: GameKind, **overrides) -> TrainConfig:
    """Published per-game hyper-parameters, overridable field by field."""
    params = dict(_GAME_DEFAULTS[game_kind])
    params.update(overrides)
    return TrainConfig(**params)


# Episode-length ceilings for the early-stop window on the desk maps.
# Sized just above each map's optimal path, so the rule can only fire once
# the policy is close to the shortest route; looser ceilings let it fire
# on half-trained policies whose greedy argmax still loops.
_DESK_N_THRESH = {
    GameKind.MAZE: 13,
    GameKind.CTF: 16,
    GameKind.CTFE: 15,
}


def desk_config(game_kind: GameKind, **overrides) -> TrainConfig:
    """Small-budget preset for the bundled desk-scale maps.

    Uses a lower discount than the full-scale setting: with gamma near 1
    the per-step closeness rewards make loitering outscore finishing, so
    short-horizon maps train with gamma where reaching the goal dominates.
    """
    params = dict(
        gamma=0.95,
        lr=1e-3,
        total_timesteps=200_000,
        learning_starts=5_000,
        eps_initial=1.0,
        eps_final=0.01,
        exploration_fraction=0.4,
        n_thresh=_DESK_N_THRESH[game_kind],
        buffer_capacity=50_000,
        target_sync=500,
        eval_interval=5_000,
        eval_episodes=20,
    )
    params.update(overrides)
    return TrainConfig(**params)


@dataclass(frozen=True)
class EpisodeRecord:
    step: int  # environment step count when the episode finished
    episode: int  # 1-based episode index
    length: int
    ret: float  # shaped return collected by the agent
    outcome: Status
    loss: Optional[float]  # mean TD loss over the episode's updates


@dataclass
class TrainLog:
    episodes: list[EpisodeRecord] = field(default_factory=list)
    evals: list[tuple[int, "EvalResult"]] = field(default_factory=list)
    stopped_at: Optional[int] = None  # step where training actually stopped
    standard_rule_at: Optional[int] = None  # first step the standard rule held
    literal_rule_at: Optional[int] = None  # first step the literal rule held


@dataclass(frozen=True)
class EvalResult:
    episodes: int
    successes: int
    mean_length: float
    mean_return: float  # base rewards only

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes

    def better_than(self, other: Optional["EvalResult"]) -> bool:
        """Ordering for checkpoint selection: success rate first, then
        shorter mean length; earlier checkpoints win ties."""
        if other is None:
            return True
        if self.successes != other.successes:
            return self.successes > other.successes
        return self.mean_length < other.mean_length


def make_actor(policy, *, eps: float = 0.0, mode: ActMode = ActMode.GREEDY,
               temperature: float = 1.0) -> Actor:
    """Wrap a value network or classifier as an actor.

    Value networks act epsilon-greedily in Greedy mode and draw from the
    softmax of their action-values in Sample mode; classifiers use their
    output distribution directly.
    """
    if isinstance(policy, PolicyClassifier):
        def actor(state, x, rng):
            return classifier_act(policy, x, mode, rng, temperature)
    elif isinstance(policy, QNetwork):
        if mode is ActMode.SAMPLE:
            def actor(state, x, rng):
                return sample_action(policy, x, rng, temperature)
        else:
            def actor(state, x, rng):
                return act(policy, x, eps, rng)
    else:
        raise TypeError(f"cannot act with {type(policy).__name__}")
    return actor


def rollout(gm: GridMap, actor: Actor, dist: DistanceTable,
            rng: np.random.Generator, *, shaping: Optional[ShapingContext] = None,
            horizon: Optional[int] = None, source: Source = Source.DQN) -> Trajectory:
    """Run one episode from the start state until terminal (the horizon
    timeout included); records per-step base and, when a shaping context is
    given, shaped rewards."""
    state = initial_state(gm)
    steps: list[TrajStep] = []
    while state.status is Status.ACTIVE:
        x = featurize(gm, state)
        a = Action(actor(state, x, rng))
        out = step(gm, state, a, dist, horizon=horizon)
        shaped = None
        if shaping is not None:
            shaped = out.base_reward + f_value(shaping, state, a, out.next_state)
        steps.append(TrajStep(
            obs_id=obs_id(gm, state), row=state.agent[0], col=state.agent[1],
            has_key=state.has_key, action_id=int(a), base_reward=out.base_reward,
            shaped_reward=shaped))
        state = out.next_state
    return Trajectory(map_id=gm.map_id, game_kind=gm.game_kind, source=source,
                      steps=tuple(steps), outcome=state.status)


def evaluate(gm: GridMap, net, dist: DistanceTable, episodes: int,
             horizon: Optional[int] = None,
             gamma: Optional[float] = None) -> EvalResult:
    """Greedy evaluation on base rewards (dynamics are deterministic, but
    each episode is genuinely run).  With a discount factor the reported
    mean return is discounted, which keeps reward-annuity loitering from
    outscoring an actual finish."""
    actor = make_actor(net)
    rng = np.random.default_rng(0)  # greedy actors never draw from it
    successes = 0
    lengths = []
    returns = []
    for _ in range(episodes):
        traj = rollout(gm, actor, dist, rng, horizon=horizon)
        if traj.outcome is Status.GOAL_REACHED:
            successes += 1
        lengths.append(len(traj.steps))
        returns.append(traj.base_return(gamma))
    return EvalResult(episodes=episodes, successes=successes,
                      mean_length=float(np.mean(lengths)),
                      mean_return=float(np.mean(returns)))


def _window_stats(episodes: Sequence[EpisodeRecord], window: int):
    tail = episodes[-window:]
    mean_len = float(np.mean([e.length for e in tail]))
    all_goal = all(e.outcome is Status.GOAL_REACHED for e in tail)
    return mean_len, all_goal


def stopping_met(episodes: Sequence[EpisodeRecord], cfg: TrainConfig,
                 rule: Optional[str] = None) -> bool:
    """Whether the configured stopping rule holds for the episode history."""
    if len(episodes) < cfg.window:
        return False
    mean_len, all_goal = _window_stats(episodes, cfg.window)
    if (rule or cfg.stop_rule) == "literal":
        return mean_len >= cfg.n_thresh
    return all_goal and mean_len <= cfg.n_thresh


def train_expert(gm: GridMap, demos: DemoSet, cfg: TrainConfig,
                 dist: Optional[DistanceTable] = None) -> tuple[QNetwork, TrainLog]:
    """Train the expert; returns the best greedy-evaluation checkpoint and
    the full training log."""
    if dist is None:
        dist = distance_table(gm)
    shaping = build_shaping_context(gm, demos, dist, cfg.gamma)
    rng = np.random.default_rng(cfg.seed)
    net = QNetwork.create(rng, map_id=gm.map_id, game_kind=gm.game_kind.value)
    target = net.copy()
    buffer = ReplayBuffer(cfg.buffer_capacity)
    schedule = EpsilonSchedule(cfg.eps_initial, cfg.eps_final,
                               cfg.exploration_fraction, cfg.total_timesteps)
    horizon = cfg.horizon if cfg.horizon is not None else gm.horizon

    log = TrainLog()
    best: Optional[EvalResult] = None
    best_net: Optional[QNetwork] = None

    def run_eval(at_step: int):
        nonlocal best, best_net
        result = evaluate(gm, net, dist, cfg.eval_episodes, horizon=horizon)
        log.evals.append((at_step, result))
        if result.better_than(best):
            best = result
            best_net = net.copy()

    state = initial_state(gm)
    ep_return = 0.0
    ep_losses: list[float] = []
    episode = 0
    for t in range(cfg.total_timesteps):
        x = featurize(gm, state)
        a = Action(act(net, x, schedule.value(t), rng))
        out = step(gm, state, a, dist, horizon=horizon)
        shaped = out.base_reward + f_value(shaping, state, a, out.next_state)
        buffer.push(x, int(a), shaped, featurize(gm, out.next_state), out.terminal)
        ep_return += shaped

        if t >= cfg.learning_starts:
            if t % cfg.target_sync == 0:
                sync_target(net, target)
            batch = buffer.sample(cfg.batch_size, rng)
            ep_losses.append(td_update(net, target, batch, cfg.gamma, cfg.lr))

        state = out.next_state
        done_step = t + 1
        if out.terminal:
            episode += 1
            log.episodes.append(EpisodeRecord(
                step=done_step, episode=episode, length=state.steps_taken,
                ret=ep_return, outcome=state.status,
                loss=float(np.mean(ep_losses)) if ep_losses else None))
            state = initial_state(gm)
            ep_return = 0.0
            ep_losses = []
            if log.standard_rule_at is None and stopping_met(log.episodes, cfg, "standard"):
                log.standard_rule_at = done_step
            if log.literal_rule_at is None and stopping_met(log.episodes, cfg, "literal"):
                log.literal_rule_at = done_step
            # High-epsilon episodes measure exploration, not the policy:
            # small maps pass the window by luck long before any learning.
            # The stop decision therefore waits until updates have begun and
            # every episode in the window began after epsilon reached its
            # final rate, so the window reflects final-rate behaviour only.
            anneal_end = cfg.exploration_fraction * cfg.total_timesteps
            window_post_anneal = (
                len(log.episodes) >= cfg.window
                and log.episodes[-cfg.window].step - log.episodes[-cfg.window].length
                >= anneal_end)
            if (t >= cfg.learning_starts and window_post_anneal
                    and stopping_met(log.episodes, cfg)):
                # The window tracks the live learner, whose weights move
                # every step, letting it escape loops that a frozen copy
                # of the same weights sits in forever.  Only stop once a
                # frozen greedy evaluation also clears every episode,
                # re-checking at most every 500 steps.
                if not log.evals or log.evals[-1][0] <= done_step - 500:
                    run_eval(done_step)
                if log.evals and log.evals[-1][1].successes == cfg.eval_episodes:
                    log.stopped_at = done_step
                    break
        if done_step % cfg.eval_interval == 0 and done_step >= cfg.learning_starts:
            run_eval(done_step)

    final_step = log.stopped_at if log.stopped_at is not None else cfg.total_timesteps
    if not log.evals or log.evals[-1][0] != final_step:
        run_eval(final_step)
    if best is None or best.successes == 0:
        raise NoSuccessfulCheckpointError(
            "no evaluation checkpoint ever reached the goal; "
            "increase the training budget or revisit hyper-parameters")
    return best_net, log


def write_train_log_csv(log: TrainLog, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "episode", "length", "return", "outcome", "loss"])
        for e in log.episodes:
            writer.writerow([
                e.step, e.episode, e.length, format_float(e.ret),
                e.outcome.value, "" if e.loss is None else format_float(e.loss)])


def _scripted_actor(gm: GridMap, dist: DistanceTable, noise: float) -> Actor:
    """Shortest-path player with optional detours.

    Moves greedily toward the current objective (key first in games that
    have one).  With probability ``noise`` it instead takes a random
    passable side-move — never the immediate backtrack — which walks it
    into branches it must then walk out of.  When an enemy patrols, moves
    that would end within its capture range after its next patrol step are
    avoided whenever any safe move exists (waiting against a wall counts).
    """
    prev_cell: list[Optional[tuple[int, int]]] = [None]

    def actor(state: GameState, x, rng: np.random.Generator) -> int:
        cur = state.agent
        if gm.key is not None and not state.has_key:
            objective = gm.key
        else:
            objective = gm.goal
        options = []
        for a in Action:
            dr, dc = ACTION_DELTAS[a]
            nxt = (cur[0] + dr, cur[1] + dc)
            if not gm.is_passable(nxt):
                nxt = cur
            options.append((a, nxt))

        if state.enemy_index is not None:
            nxt_idx, _ = enemy_next(gm, state.enemy_index, state.enemy_dir)
            enemy_after = gm.patrol[nxt_idx]
            safe = [(a, nc) for a, nc in options if manhattan(nc, enemy_after) > 1]
            if safe:
                options = safe

        movers = [(a, nc) for a, nc in options if nc != cur]
        # Stays remain candidates: grid cells are two-colourable, so the
        # step parity at any cell is fixed, and slipping past a patrol can
        # require waiting one turn.  A stay never beats a mover otherwise,
        # since some neighbour is always strictly closer to the objective.
        pool = options

        def progress(p):
            dv = dist.d(p[1], objective)
            return (dv if dv is not None else float("inf")), int(p[0])

        best_a, best_nc = min(pool, key=progress)
        choice = (best_a, best_nc)
        if noise > 0.0 and rng.random() < noise:
            alts = [(a, nc) for a, nc in movers
                    if a is not best_a and nc != prev_cell[0]]
            if alts:
                choice = alts[int(rng.integers(len(alts)))]
        prev_cell[0] = cur
        return int(choice[0])

    return actor


def scripted_demos(gm: GridMap, dist: DistanceTable, n: int, noise: float,
                   rng: np.random.Generator,
                   horizon: Optional[int] = None) -> list[Trajectory]:
    """Generate ``n`` goal-reaching surrogate demonstrations; episodes that
    fail (timeout or capture) are discarded and retried."""
    if n < 1:
        raise ValueError("need at least one demonstration")
    demos: list[Trajectory] = []
    attempts = 0
    limit = 100 * n
    while len(demos) < n:
        attempts += 1
        if attempts > limit:
            raise TrajsynthError(
                f"scripted player produced {len(demos)}/{n} successes "
                f"in {limit} attempts; lower the noise rate")
        actor = _scripted_actor(gm, dist, noise)
        traj = rollout(gm, actor, dist, rng, horizon=horizon, source=Source.SCRIPTED)
        if traj.outcome is Status.GOAL_REACHED:
            demos.append(traj)
    return demos

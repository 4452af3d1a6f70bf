"""Training loop, rollouts, evaluation, stopping rules, scripted players."""
import numpy as np
import pytest

from trajsynth.distances import distance_table
from trajsynth.errors import NoSuccessfulCheckpointError
from trajsynth.gridworld import Action, GameKind, Status, load_map
from trajsynth.qpolicy import PolicyClassifier, QNetwork
from trajsynth.shaping import build_demo_set, build_shaping_context, f_value
from trajsynth.trajio import Source, replay_states
from trajsynth.train import (EpisodeRecord, EvalResult, TrainConfig,
                             default_config, desk_config, evaluate, make_actor,
                             rollout, scripted_demos, stopping_met,
                             train_expert, write_train_log_csv)

OPEN_3X3 = "kind=maze horizon=300\nS..\n...\n..G\n"


def const_actor(action):
    def actor(state, x, rng):
        return int(action)
    return actor


def forced_qnet(action):
    """A value network whose greedy choice is always ``action``."""
    net = QNetwork.create(np.random.default_rng(0))
    for W in net.Ws:
        W[:] = 0.0
    for b in net.bs:
        b[:] = 0.0
    net.bs[-1][action] = 1.0
    return net


# ----------------------------------------------------------------- rollouts

def test_rollout_corridor_completes(corridor, corridor_dist, rng):
    traj = rollout(corridor, const_actor(Action.RIGHT), corridor_dist, rng)
    assert traj.outcome is Status.GOAL_REACHED
    assert len(traj.steps) == 2
    assert [s.base_reward for s in traj.steps] == [0.5, 100.0]
    assert traj.base_return() == 100.5
    assert traj.source is Source.DQN


def test_rollout_times_out_at_horizon(corridor, corridor_dist, rng):
    traj = rollout(corridor, const_actor(Action.LEFT), corridor_dist, rng,
                   horizon=5)
    assert traj.outcome is Status.TIMED_OUT
    assert len(traj.steps) == 5


def test_rollout_records_shaped_rewards(corridor, corridor_dist, rng):
    demo = rollout(corridor, const_actor(Action.RIGHT), corridor_dist, rng,
                   source=Source.SCRIPTED)
    ctx = build_shaping_context(corridor, build_demo_set([demo]),
                                corridor_dist, gamma=1.0)
    traj = rollout(corridor, const_actor(Action.RIGHT), corridor_dist, rng,
                   shaping=ctx)
    states = replay_states(traj, corridor, corridor_dist)
    for i, s in enumerate(traj.steps):
        bonus = f_value(ctx, states[i], Action(s.action_id), states[i + 1])
        assert s.shaped_reward == pytest.approx(s.base_reward + bonus)
    assert [s.shaped_reward for s in traj.steps] == [0.5, 100.5]


def test_make_actor_kinds(rng):
    q = QNetwork.create(rng)
    clf = PolicyClassifier.create(rng)
    x = np.zeros(5)
    assert make_actor(q)(None, x, rng) in range(4)
    assert make_actor(clf)(None, x, rng) in range(4)
    with pytest.raises(TypeError):
        make_actor(object())


# --------------------------------------------------------------- evaluation

def test_evaluate_success_and_returns(corridor, corridor_dist):
    net = forced_qnet(Action.RIGHT)
    res = evaluate(corridor, net, corridor_dist, episodes=5)
    assert (res.successes, res.mean_length) == (5, 2.0)
    assert res.mean_return == pytest.approx(100.5)
    assert res.success_rate == 1.0
    discounted = evaluate(corridor, net, corridor_dist, 5, gamma=0.95)
    assert discounted.mean_return == pytest.approx(0.5 + 100 * 0.95)


def test_evaluate_failure(corridor, corridor_dist):
    res = evaluate(corridor, forced_qnet(Action.UP), corridor_dist,
                   episodes=3, horizon=7)
    assert res.successes == 0
    assert res.mean_length == 7.0


def test_eval_result_ordering():
    a = EvalResult(10, 10, 4.0, 50.0)
    b = EvalResult(10, 9, 3.0, 60.0)
    c = EvalResult(10, 10, 5.0, 50.0)
    assert a.better_than(None)
    assert a.better_than(b) and not b.better_than(a)
    assert a.better_than(c) and not c.better_than(a)
    assert not a.better_than(EvalResult(10, 10, 4.0, 10.0))  # exact tie: keep first


# ------------------------------------------------------------ stopping rule

def ep(step, episode, length, outcome=Status.GOAL_REACHED):
    return EpisodeRecord(step=step, episode=episode, length=length,
                         ret=0.0, outcome=outcome, loss=None)


def test_stopping_needs_full_window():
    cfg = TrainConfig(window=3, n_thresh=5)
    assert not stopping_met([ep(5, 1, 5), ep(10, 2, 5)], cfg)


def test_stopping_standard_rule():
    cfg = TrainConfig(window=3, n_thresh=5)
    hist = [ep(5, 1, 5), ep(10, 2, 5), ep(14, 3, 4)]
    assert stopping_met(hist, cfg)
    with_timeout = hist[:2] + [ep(14, 3, 4, Status.TIMED_OUT)]
    assert not stopping_met(with_timeout, cfg)
    too_long = hist[:2] + [ep(22, 3, 12)]
    assert not stopping_met(too_long, cfg)  # mean 22/3 > 5


def test_stopping_literal_rule_ignores_outcome():
    cfg = TrainConfig(window=3, n_thresh=5)
    hist = [ep(9, 1, 9, Status.TIMED_OUT), ep(18, 2, 9, Status.TIMED_OUT),
            ep(27, 3, 9, Status.TIMED_OUT)]
    assert stopping_met(hist, cfg, "literal")
    assert not stopping_met(hist, cfg, "standard")


# ------------------------------------------------------------------ configs

def test_default_config_per_game():
    maze = default_config(GameKind.MAZE)
    assert (maze.total_timesteps, maze.learning_starts) == (2_000_000, 100_000)
    assert (maze.eps_initial, maze.eps_final) == (0.9, 0.1)
    assert (maze.exploration_fraction, maze.n_thresh) == (0.8, 55)
    assert (maze.gamma, maze.lr) == (0.999, 1e-4)
    assert default_config(GameKind.CTF).n_thresh == 40
    ctfe = default_config(GameKind.CTFE)
    assert (ctfe.total_timesteps, ctfe.eps_final) == (1_800_000, 0.001)
    assert (ctfe.exploration_fraction, ctfe.n_thresh) == (0.99, 42)


def test_desk_config_thresholds_and_overrides():
    assert desk_config(GameKind.MAZE).n_thresh == 13
    assert desk_config(GameKind.CTF).n_thresh == 16
    assert desk_config(GameKind.CTFE).n_thresh == 15
    assert desk_config(GameKind.MAZE).gamma == 0.95
    assert desk_config(GameKind.MAZE, n_thresh=20).n_thresh == 20


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(window=0)
    with pytest.raises(ValueError):
        TrainConfig(stop_rule="sometimes")


# ------------------------------------------------------------ full training

def small_cfg(**overrides):
    params = dict(gamma=0.95, lr=1e-3, total_timesteps=20_000,
                  learning_starts=500, eps_initial=1.0, eps_final=0.05,
                  exploration_fraction=0.3, n_thresh=5, window=10,
                  eval_interval=1000, eval_episodes=10,
                  buffer_capacity=10_000, target_sync=250, seed=0)
    params.update(overrides)
    return TrainConfig(**params)


@pytest.fixture(scope="module")
def tiny_maze():
    gm = load_map(OPEN_3X3)
    dist = distance_table(gm)
    demos = build_demo_set(
        scripted_demos(gm, dist, 3, 0.1, np.random.default_rng(2)))
    return gm, dist, demos


def test_train_expert_learns_tiny_maze(tiny_maze):
    gm, dist, demos = tiny_maze
    net, log = train_expert(gm, demos, small_cfg(), dist)
    assert log.stopped_at is not None  # early stop fired
    res = evaluate(gm, net, dist, 10)
    assert (res.successes, res.mean_length) == (10, 4.0)


def test_train_expert_deterministic(tiny_maze):
    gm, dist, demos = tiny_maze
    net1, log1 = train_expert(gm, demos, small_cfg(), dist)
    net2, log2 = train_expert(gm, demos, small_cfg(), dist)
    assert log1.episodes == log2.episodes
    assert log1.evals == log2.evals
    for a, b in zip(net1.Ws + net1.bs, net2.Ws + net2.bs):
        np.testing.assert_array_equal(a, b)


def test_train_expert_without_winning_checkpoint_raises(tiny_maze):
    gm, dist, demos = tiny_maze
    cfg = small_cfg(total_timesteps=300, learning_starts=50,
                    eval_interval=100, eval_episodes=5, horizon=1)
    with pytest.raises(NoSuccessfulCheckpointError):
        train_expert(gm, demos, cfg, dist)


def test_write_train_log_csv(tiny_maze, tmp_path):
    gm, dist, demos = tiny_maze
    _, log = train_expert(gm, demos, small_cfg(total_timesteps=2000,
                                               eval_interval=500), dist)
    path = tmp_path / "log.csv"
    write_train_log_csv(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,episode,length,return,outcome,loss"
    assert len(lines) == len(log.episodes) + 1
    again = tmp_path / "log2.csv"
    write_train_log_csv(log, again)
    assert path.read_bytes() == again.read_bytes()


# ------------------------------------------------------------- scripted play

def test_scripted_demos_validation(maze5, maze5_dist, rng):
    with pytest.raises(ValueError):
        scripted_demos(maze5, maze5_dist, 0, 0.0, rng)


def test_scripted_demos_noiseless_are_optimal(maze5, maze5_dist, rng):
    optimal = maze5_dist.d(maze5.start, maze5.goal)
    for traj in scripted_demos(maze5, maze5_dist, 3, 0.0, rng):
        assert traj.outcome is Status.GOAL_REACHED
        assert len(traj.steps) == optimal
        assert traj.source is Source.SCRIPTED


def test_scripted_demos_noisy_still_finish(rng):
    gm = load_map(OPEN_3X3)  # open room, so side-moves exist everywhere
    dist = distance_table(gm)
    optimal = dist.d(gm.start, gm.goal)
    lengths = [len(t.steps) for t in scripted_demos(gm, dist, 5, 0.5, rng)]
    assert all(t.outcome is Status.GOAL_REACHED
               for t in scripted_demos(gm, dist, 5, 0.5, rng))
    assert all(l >= optimal for l in lengths)
    assert max(lengths) > optimal  # detours actually happen at this rate


def test_scripted_demos_survive_patrol(ctfe8, ctfe8_dist, rng):
    for traj in scripted_demos(ctfe8, ctfe8_dist, 5, 0.1, rng):
        assert traj.outcome is Status.GOAL_REACHED

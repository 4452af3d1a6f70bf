"""Dataset-aggregation imitation: mixing, aggregation, selection, synthesis."""
import numpy as np
import pytest

from trajsynth.dagger import (EXPERT_ROLLOUT, RELABELED, SEED_DEMO, AggDataset,
                              DaggerConfig, DaggerMode, generate_synthetic,
                              mixed_action, run_dagger, write_dagger_log_csv)
from trajsynth.distances import distance_table
from trajsynth.errors import ExpertNotCompetentError, InsufficientDataError
from trajsynth.gridworld import Action, Status, load_map
from trajsynth.qpolicy import ActMode, PolicyClassifier, QNetwork
from trajsynth.shaping import build_demo_set
from trajsynth.train import TrainConfig, evaluate, scripted_demos, train_expert
from trajsynth.trajio import Source, to_record

OPEN_3X3 = "kind=maze horizon=300\nS..\n...\n..G\n"


def forced_net(cls, action, logit=1.0):
    net = cls.create(np.random.default_rng(0))
    for W in net.Ws:
        W[:] = 0.0
    for b in net.bs:
        b[:] = 0.0
    net.bs[-1][action] = logit
    return net


@pytest.fixture(scope="module")
def trained():
    gm = load_map(OPEN_3X3)
    dist = distance_table(gm)
    demos = build_demo_set(
        scripted_demos(gm, dist, 3, 0.1, np.random.default_rng(2)))
    cfg = TrainConfig(gamma=0.95, lr=1e-3, total_timesteps=20_000,
                      learning_starts=500, eps_initial=1.0, eps_final=0.05,
                      exploration_fraction=0.3, n_thresh=5, window=10,
                      eval_interval=1000, eval_episodes=10,
                      buffer_capacity=10_000, target_sync=250, seed=0)
    expert, _ = train_expert(gm, demos, cfg, dist)
    return gm, dist, demos, expert


def small_dagger(mode, **overrides):
    params = dict(mode=mode, n_train=3, rollouts_per_iter=2, epochs=150,
                  clf_lr=0.15, k_validation=5, gamma=0.95, seed=0)
    params.update(overrides)
    return DaggerConfig(**params)


# ------------------------------------------------------------------- config

def test_beta_schedule_halves_each_iteration():
    cfg = DaggerConfig(beta0=1.0, beta_decay=0.5)
    assert [cfg.beta(i) for i in (1, 2, 3, 5)] == [1.0, 0.5, 0.25, 0.0625]
    flat = DaggerConfig(beta0=0.8, beta_decay=1.0)
    assert flat.beta(7) == 0.8


def test_config_validation():
    with pytest.raises(ValueError):
        DaggerConfig(n_train=0)
    with pytest.raises(ValueError):
        DaggerConfig(beta0=1.5)
    with pytest.raises(ValueError):
        DaggerConfig(beta_decay=-0.1)
    with pytest.raises(ValueError):
        DaggerConfig(gamma=0.0)


# ------------------------------------------------------------------- mixing

def test_mixed_action_extremes():
    expert = forced_net(QNetwork, 2)
    clf = forced_net(PolicyClassifier, 1, logit=50.0)
    x = np.zeros(5)
    rng = np.random.default_rng(0)
    assert all(mixed_action(1.0, expert, clf, x, rng) == 2 for _ in range(20))
    assert all(mixed_action(0.0, expert, clf, x, rng) == 1 for _ in range(20))


def test_mixed_action_half_rate():
    expert = forced_net(QNetwork, 3)
    clf = forced_net(PolicyClassifier, 1, logit=50.0)
    x = np.zeros(5)
    rng = np.random.default_rng(123)
    draws = [mixed_action(0.5, expert, clf, x, rng) for _ in range(10_000)]
    rate = draws.count(3) / 10_000
    assert rate == pytest.approx(0.5, abs=0.02)


# ------------------------------------------------------------------ dataset

def test_agg_dataset_grows_and_tags():
    ds = AggDataset()
    assert len(ds) == 0
    ds.add(np.zeros(5), 1, SEED_DEMO)
    ds.add(np.ones(5), 2, RELABELED)
    ds.add(np.ones(5), 2, RELABELED)
    assert len(ds) == 3
    X, y = ds.arrays()
    assert X.shape == (3, 5) and X.dtype == np.float64
    assert list(y) == [1, 2, 2] and y.dtype == np.intp
    assert ds.tag_counts() == {SEED_DEMO: 1, RELABELED: 2}


# -------------------------------------------------------------- preconditions

def test_incompetent_expert_rejected(trained):
    gm, dist, demos, _ = trained
    wall_banger = forced_net(QNetwork, Action.UP)  # bumps the top wall forever
    with pytest.raises(ExpertNotCompetentError):
        run_dagger(gm, wall_banger, demos,
                   small_dagger(DaggerMode.WITH_DEMOS), dist)


def test_with_demos_requires_demos(trained):
    gm, dist, _, expert = trained
    with pytest.raises(InsufficientDataError):
        run_dagger(gm, expert, None, small_dagger(DaggerMode.WITH_DEMOS), dist)


# ----------------------------------------------------------------- full runs

def test_with_demos_learns_and_logs(trained):
    gm, dist, demos, expert = trained
    clf, log = run_dagger(gm, expert, demos,
                          small_dagger(DaggerMode.WITH_DEMOS), dist)
    res = evaluate(gm, clf, dist, 5)
    assert (res.successes, res.mean_length) == (5, 4.0)
    assert clf.variant == Source.DAGGER_PLUS_E.value

    seed_pairs = sum(len(t.steps) for t in demos.trajectories)
    sizes = [r.dataset_size for r in log.iterations]
    assert sizes[0] > seed_pairs  # seeds plus the first relabeled batch
    assert sizes == sorted(sizes) and len(set(sizes)) == len(sizes)
    assert [r.iteration for r in log.iterations] == [1, 2, 3]
    assert [r.beta for r in log.iterations] == [1.0, 0.5, 0.25]

    returns = [r.val_mean_return for r in log.iterations]
    best = max(range(len(returns)), key=returns.__getitem__)  # earliest max
    assert log.best_iteration == best + 1


def test_expert_seeded_learns(trained):
    gm, dist, demos, expert = trained
    clf, log = run_dagger(gm, expert, None,
                          small_dagger(DaggerMode.EXPERT_SEEDED), dist)
    res = evaluate(gm, clf, dist, 5)
    assert (res.successes, res.mean_length) == (5, 4.0)
    assert clf.variant == Source.DAGGER_E.value
    assert log.iterations[0].dataset_size > 0


def test_run_dagger_deterministic(trained):
    gm, dist, demos, expert = trained
    cfg = small_dagger(DaggerMode.WITH_DEMOS)
    clf1, log1 = run_dagger(gm, expert, demos, cfg, dist)
    clf2, log2 = run_dagger(gm, expert, demos, cfg, dist)
    assert log1.iterations == log2.iterations
    for a, b in zip(clf1.Ws + clf1.bs, clf2.Ws + clf2.bs):
        np.testing.assert_array_equal(a, b)


def test_dagger_log_csv(trained, tmp_path):
    gm, dist, demos, expert = trained
    _, log = run_dagger(gm, expert, demos,
                        small_dagger(DaggerMode.WITH_DEMOS), dist)
    path = tmp_path / "d.csv"
    write_dagger_log_csv(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,beta,dataset_size,classifier_loss,val_mean_return"
    assert len(lines) == len(log.iterations) + 1


# ---------------------------------------------------------------- synthesis

def test_generate_synthetic_validates_n(trained):
    gm, dist, _, expert = trained
    with pytest.raises(ValueError):
        generate_synthetic(gm, expert, 0, None, np.random.default_rng(0),
                           dist=dist)


def test_generate_synthetic_repeatable(trained):
    gm, dist, _, expert = trained
    a = generate_synthetic(gm, expert, 3, None, np.random.default_rng(5),
                           mode=ActMode.SAMPLE, dist=dist)
    b = generate_synthetic(gm, expert, 3, None, np.random.default_rng(5),
                           mode=ActMode.SAMPLE, dist=dist)
    assert [to_record(t) for t in a] == [to_record(t) for t in b]


def test_generate_synthetic_sources(trained):
    gm, dist, demos, expert = trained
    rng = np.random.default_rng(1)
    from_q = generate_synthetic(gm, expert, 2, None, rng, dist=dist)
    assert {t.source for t in from_q} == {Source.DQN}

    clf, _ = run_dagger(gm, expert, demos,
                        small_dagger(DaggerMode.WITH_DEMOS), dist)
    from_clf = generate_synthetic(gm, clf, 2, None, rng, dist=dist)
    assert {t.source for t in from_clf} == {Source.DAGGER_PLUS_E}

    tagged = generate_synthetic(gm, clf, 2, None, rng, source=Source.HUMAN,
                                dist=dist)
    assert {t.source for t in tagged} == {Source.HUMAN}


def test_generate_synthetic_greedy_all_reach_goal(trained):
    gm, dist, _, expert = trained
    for traj in generate_synthetic(gm, expert, 10, None,
                                   np.random.default_rng(3), dist=dist):
        assert traj.outcome is Status.GOAL_REACHED
        assert len(traj.steps) == 4

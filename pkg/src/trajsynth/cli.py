"""Command-line front door for the full pipeline: scripted demos, expert
training, imitation, synthetic generation, similarity scoring, and the
statistics report.

Every command is deterministic given identical inputs and seed: output
files (policies, logs, trajectory sets, summaries) are byte-identical
across repeated runs.  Wall-clock timings are printed to the console
only, never written into output files.  Usage errors exit 2; runtime
errors exit 1.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, dagger as dagger_mod, similarity, stats, trajio
from .distances import distance_table
from .errors import MapMismatchError, TrajsynthError
from .gridworld import GridMap, bundled_map_names, load_bundled_map, load_map_file
from .qpolicy import ActMode, QNetwork, load_policy, save_policy
from .shaping import build_demo_set
from .train import (
    default_config,
    desk_config,
    scripted_demos,
    train_expert,
    write_train_log_csv,
)


def _existing_file(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"file not found: {value}")
    return path


def _map_arg(value: str) -> str:
    if Path(value).is_file() or value in bundled_map_names():
        return value
    raise argparse.ArgumentTypeError(
        f"{value!r} is neither a map file nor a bundled map "
        f"({', '.join(bundled_map_names())})")


def _load_map(selector: str) -> GridMap:
    path = Path(selector)
    if path.is_file():
        return load_map_file(path)
    return load_bundled_map(selector)


def _check_policy_map(policy, gm: GridMap) -> None:
    if policy.map_id and policy.map_id != gm.map_id:
        raise MapMismatchError(
            f"policy was trained on map {policy.map_id[:12]}…, "
            f"but --map resolves to {gm.map_id[:12]}…")


def _write_summary(out_dir: Path, payload: dict) -> Path:
    path = out_dir / "run_summary.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trajio.canonical_dumps(payload))
        fh.write("\n")
    return path


def _digest_entry(path: Path, base: Path) -> dict:
    return {"path": path.relative_to(base).as_posix(),
            "sha256": trajio.file_digest(path)}


def cmd_train(args) -> int:
    gm = _load_map(args.map)
    dist = distance_table(gm)
    demos = build_demo_set(trajio.load_jsonl(args.demos, gm, dist))
    make_cfg = desk_config if args.desk else default_config
    overrides = {"seed": args.seed}
    for name in ("total_timesteps", "n_thresh", "window", "gamma", "lr",
                 "learning_starts", "horizon", "eval_interval"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    cfg = make_cfg(gm.game_kind, **overrides)

    started = time.perf_counter()
    net, log = train_expert(gm, demos, cfg, dist)
    elapsed = time.perf_counter() - started

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    policy_path = out / "policy.qnet"
    save_policy(net, policy_path)
    log_path = out / "train_log.csv"
    write_train_log_csv(log, log_path)
    final_eval = log.evals[-1][1]
    _write_summary(out, {
        "command": "train",
        "version": __version__,
        "seed": cfg.seed,
        "map_id": gm.map_id,
        "demo_digest": trajio.file_digest(args.demos),
        "config": {
            "gamma": cfg.gamma, "lr": cfg.lr,
            "total_timesteps": cfg.total_timesteps,
            "learning_starts": cfg.learning_starts,
            "eps_initial": cfg.eps_initial, "eps_final": cfg.eps_final,
            "exploration_fraction": cfg.exploration_fraction,
            "n_thresh": cfg.n_thresh, "window": cfg.window,
            "stop_rule": cfg.stop_rule,
        },
        "results": {
            "episodes": len(log.episodes),
            "stopped_at": log.stopped_at,
            "standard_rule_at": log.standard_rule_at,
            "literal_rule_at": log.literal_rule_at,
            "final_eval_successes": final_eval.successes,
            "final_eval_episodes": final_eval.episodes,
            "final_eval_mean_length": final_eval.mean_length,
        },
        "outputs": [_digest_entry(policy_path, out), _digest_entry(log_path, out)],
    })
    print(f"trained {len(log.episodes)} episodes; "
          f"final greedy eval {final_eval.successes}/{final_eval.episodes}; "
          f"policy -> {policy_path}  [{elapsed:.1f}s]")
    return 0


def cmd_dagger(args) -> int:
    gm = _load_map(args.map)
    dist = distance_table(gm)
    expert = load_policy(args.expert)
    if not isinstance(expert, QNetwork):
        raise TrajsynthError(f"{args.expert} does not hold a value network")
    _check_policy_map(expert, gm)
    mode = (dagger_mod.DaggerMode.WITH_DEMOS if args.mode == "with-demos"
            else dagger_mod.DaggerMode.EXPERT_SEEDED)
    demos = None
    if mode is dagger_mod.DaggerMode.WITH_DEMOS:
        if args.demos is None:
            raise TrajsynthError("--mode with-demos requires --demos")
        demos = build_demo_set(trajio.load_jsonl(args.demos, gm, dist))
    cfg = dagger_mod.DaggerConfig(
        mode=mode, n_train=args.iters, rollouts_per_iter=args.rollouts,
        epochs=args.epochs, clf_lr=args.clf_lr, k_validation=args.k_validation,
        gamma=args.gamma, horizon=args.horizon, seed=args.seed)

    started = time.perf_counter()
    clf, log = dagger_mod.run_dagger(gm, expert, demos, cfg, dist)
    elapsed = time.perf_counter() - started

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    policy_path = out / "policy.clf"
    save_policy(clf, policy_path)
    log_path = out / "dagger_log.csv"
    dagger_mod.write_dagger_log_csv(log, log_path)
    _write_summary(out, {
        "command": "dagger",
        "version": __version__,
        "seed": cfg.seed,
        "map_id": gm.map_id,
        "mode": mode.value,
        "expert_digest": trajio.file_digest(args.expert),
        "demo_digest": trajio.file_digest(args.demos) if args.demos else None,
        "config": {
            "n_train": cfg.n_train, "beta0": cfg.beta0,
            "beta_decay": cfg.beta_decay,
            "rollouts_per_iter": cfg.rollouts_per_iter,
            "epochs": cfg.epochs, "clf_lr": cfg.clf_lr,
            "k_validation": cfg.k_validation, "gamma": cfg.gamma,
        },
        "results": {
            "best_iteration": log.best_iteration,
            "best_val_mean_return": log.iterations[log.best_iteration - 1].val_mean_return,
            "final_dataset_size": log.iterations[-1].dataset_size,
        },
        "outputs": [_digest_entry(policy_path, out), _digest_entry(log_path, out)],
    })
    print(f"imitation finished: best iteration {log.best_iteration}, "
          f"|D|={log.iterations[-1].dataset_size}; "
          f"policy -> {policy_path}  [{elapsed:.1f}s]")
    return 0


def cmd_generate(args) -> int:
    gm = _load_map(args.map)
    dist = distance_table(gm)
    policy = load_policy(args.policy)
    _check_policy_map(policy, gm)
    rng = np.random.default_rng(args.seed)
    mode = ActMode.SAMPLE if args.sample else ActMode.GREEDY
    trajs = dagger_mod.generate_synthetic(
        gm, policy, args.n, args.horizon, rng, mode=mode,
        temperature=args.temperature, dist=dist)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = trajio.save_jsonl(trajs, out)
    goals = sum(t.outcome.value == "goal_reached" for t in trajs)
    print(f"wrote {count} trajectories ({goals} reached the goal) -> {out}")
    return 0


def cmd_score(args) -> int:
    gm = _load_map(args.map)
    dist = distance_table(gm)
    generated = trajio.load_jsonl(args.generated, gm, dist)
    demos = build_demo_set(trajio.load_jsonl(args.demos, gm, dist))
    matrix = similarity.score_matrix(generated, demos, gm)
    out = Path(args.out_csv)
    out.parent.mkdir(parents=True, exist_ok=True)
    similarity.write_score_csv(matrix, out)
    means = ", ".join(f"{m:.3f}" for m in matrix.demo_means())
    print(f"scored {matrix.n_generated} x {len(matrix.demo_labels)}; "
          f"per-demo means [{means}] -> {out}")
    return 0


def cmd_stats(args) -> int:
    dqn = similarity.read_score_csv(args.scores_dqn, trajio.Source.DQN)
    de = similarity.read_score_csv(args.scores_dagger_e, trajio.Source.DAGGER_E)
    dpe = similarity.read_score_csv(args.scores_dagger_plus_e,
                                    trajio.Source.DAGGER_PLUS_E)
    anova = stats.anova_by_demo(dqn, de, dpe)
    freq = stats.freq_by_demo(dqn, de, dpe)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats.write_anova_csv(anova, dqn.demo_labels, out / "anova.csv")
    stats.write_freq_csv(freq, out / "freq.csv")
    print(stats.format_stats_tables(args.label, anova, freq), end="")
    print(f"reports -> {out / 'anova.csv'}, {out / 'freq.csv'}")
    return 0


def cmd_demo_script(args) -> int:
    gm = _load_map(args.map)
    dist = distance_table(gm)
    rng = np.random.default_rng(args.seed)
    demos = scripted_demos(gm, dist, args.n, args.noise, rng, horizon=args.horizon)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    trajio.save_jsonl(demos, out)
    lengths = [len(t.steps) for t in demos]
    print(f"wrote {len(demos)} scripted demonstrations "
          f"(lengths {min(lengths)}-{max(lengths)}, "
          f"mean {sum(lengths) / len(lengths):.1f}) -> {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(maps_dir=args.maps_dir, datasets_dir=Path(args.datasets_dir),
                     static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajsynth",
        description="Synthetic decision-trajectory pipeline: train an expert "
                    "from demonstrations, imitate it, generate and score "
                    "trajectory sets, and serve the human capture UI.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the expert agent from demonstrations")
    p.add_argument("--map", required=True, type=_map_arg)
    p.add_argument("--demos", required=True, type=_existing_file)
    p.add_argument("--out", required=True)
    p.add_argument("--timesteps", dest="total_timesteps", type=int)
    p.add_argument("--n-thresh", dest="n_thresh", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--desk", action="store_true",
                   help="small-budget preset for the bundled desk-scale maps")
    p.add_argument("--gamma", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--learning-starts", dest="learning_starts", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--eval-interval", dest="eval_interval", type=int)
    p.set_defaults(func=cmd_train)

    dc = dagger_mod.DaggerConfig()
    p = sub.add_parser("dagger", help="imitate a trained expert")
    p.add_argument("--map", required=True, type=_map_arg)
    p.add_argument("--mode", required=True, choices=("with-demos", "expert-seeded"))
    p.add_argument("--expert", required=True, type=_existing_file)
    p.add_argument("--demos", type=_existing_file)
    p.add_argument("--iters", type=int, default=dc.n_train)
    p.add_argument("--out", required=True)
    p.add_argument("--rollouts", type=int, default=dc.rollouts_per_iter)
    p.add_argument("--epochs", type=int, default=dc.epochs)
    p.add_argument("--clf-lr", dest="clf_lr", type=float, default=dc.clf_lr)
    p.add_argument("--k-validation", dest="k_validation", type=int,
                   default=dc.k_validation)
    p.add_argument("--gamma", type=float, default=dc.gamma,
                   help="discount used for validation returns")
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_dagger)

    p = sub.add_parser("generate", help="roll out a trained policy n times")
    p.add_argument("--map", required=True, type=_map_arg)
    p.add_argument("--policy", required=True, type=_existing_file)
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--horizon", type=int)
    p.add_argument("--sample", action="store_true",
                   help="draw actions from the policy distribution instead of greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="similarity matrix of generated vs demos")
    p.add_argument("--map", required=True, type=_map_arg)
    p.add_argument("--generated", required=True, type=_existing_file)
    p.add_argument("--demos", required=True, type=_existing_file)
    p.add_argument("--out-csv", dest="out_csv", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="variance analysis and frequency report")
    p.add_argument("--scores-dqn", dest="scores_dqn", required=True,
                   type=_existing_file)
    p.add_argument("--scores-dagger-e", dest="scores_dagger_e", required=True,
                   type=_existing_file)
    p.add_argument("--scores-dagger-plus-e", dest="scores_dagger_plus_e",
                   required=True, type=_existing_file)
    p.add_argument("--out-dir", dest="out_dir", default="stats_out")
    p.add_argument("--label", default="scores")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("demo-script",
                       help="scripted surrogate demonstrations (no human needed)")
    p.add_argument("--map", required=True, type=_map_arg)
    p.add_argument("-n", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_script)

    p = sub.add_parser("serve", help="run the demonstration-capture service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--maps-dir", dest="maps_dir", default=None)
    p.add_argument("--datasets-dir", dest="datasets_dir", default="datasets")
    p.add_argument("--static-dir", dest="static_dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrajsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

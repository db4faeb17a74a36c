"""Command-line entry point: train, test, baseline, sweep.

Every run writes into --out: a manifest (flat key=value), the effective
configuration, and the run's artifacts (checkpoints + training log, or a
metrics CSV).  Identical config and seed reproduce identical artifact bytes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .baselines import GreedyPolicy, HillClimbPolicy, fixed_pl_policy
from .config import RunSettings, parse_config, serialize_settings
from .errors import CheckpointError, PlatoonMarlError
from .orchestrator import (
    RngStreams,
    TrainingResult,
    append_metrics,
    config_digest,
    load_policy,
    run_testing,
    run_training,
    run_training_with_restarts,
    save_agents,
    write_training_log,
)


def _write_manifest(out_dir: Path, settings: RunSettings, entries: dict) -> None:
    base = {
        "code_version": __version__,
        "config_sha256": config_digest(serialize_settings(settings)),
    }
    base.update(entries)
    lines = "".join(f"{k} = {base[k]}\n" for k in sorted(base))
    (out_dir / "manifest.txt").write_text(lines)


def _prepare_out_dir(path: str, settings: RunSettings) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective_config.ini").write_text(serialize_settings(settings))
    except OSError as exc:
        raise PlatoonMarlError(f"cannot write to output directory {out}: {exc}") from exc
    return out


def _train_and_save(
    settings: RunSettings,
    seed: int,
    out: Path,
    episodes: int,
    pl_selection: bool,
    restarts: int,
) -> TrainingResult:
    if restarts > 1:
        result = run_training_with_restarts(
            settings.scenario,
            settings.hyper,
            settings.reward,
            seed=seed,
            episodes=episodes,
            pl_selection=pl_selection,
            restarts=restarts,
            processes=restarts,
        )
    else:
        result = run_training(
            settings.scenario,
            settings.hyper,
            settings.reward,
            seed=seed,
            episodes=episodes,
            pl_selection=pl_selection,
        )
    save_agents(out / "checkpoints", result, settings.scenario)
    write_training_log(out / "training_log.csv", result.log)
    bonus_ok = (
        result.max_v2v_rate_mbps < settings.reward.v2v_bonus
        and result.max_v2i_rate_mbps < settings.reward.v2i_bonus
    )
    if not bonus_ok:
        print(
            "warning: observed rates exceeded a delivery bonus "
            f"(max v2v {result.max_v2v_rate_mbps:.2f} Mbps, "
            f"max v2i {result.max_v2i_rate_mbps:.2f} Mbps)",
            file=sys.stderr,
        )
    return result


def _cmd_train(args) -> int:
    settings = parse_config(args.config)
    episodes = args.episodes or settings.training_episodes
    restarts = args.restarts or settings.training_restarts
    out = _prepare_out_dir(args.out, settings)
    result = _train_and_save(settings, args.seed, out, episodes, not args.fixed_pl, restarts)
    _write_manifest(
        out,
        settings,
        {
            "command": "train",
            "seed": args.seed,
            "episodes": episodes,
            "restarts": restarts,
            "pl_selection": str(not args.fixed_pl).lower(),
            "method": "marl" if not args.fixed_pl else "fixed-pl",
            "max_v2v_rate_mbps": repr(result.max_v2v_rate_mbps),
            "max_v2i_rate_mbps": repr(result.max_v2i_rate_mbps),
        },
    )
    print(f"trained {episodes} episodes -> {out}")
    return 0


def _cmd_test(args) -> int:
    settings = parse_config(args.config)
    episodes = args.episodes or settings.testing_episodes
    checkpoint_dir = Path(args.checkpoints)
    if (checkpoint_dir / "checkpoints").is_dir():
        checkpoint_dir = checkpoint_dir / "checkpoints"
    if not checkpoint_dir.is_dir():
        raise CheckpointError(f"checkpoint directory {checkpoint_dir} does not exist")
    policy = load_policy(checkpoint_dir, settings.scenario, settings.hyper.epsilon)
    method = "marl" if policy.pl_selection else "fixed-pl"
    out = _prepare_out_dir(args.out, settings)
    rows = run_testing(
        settings.scenario,
        policy,
        seed=args.seed,
        episodes=episodes,
        payloads_bytes=settings.test_payloads_bytes,
        method=method,
    )
    append_metrics(out / "metrics.csv", rows)
    _write_manifest(
        out,
        settings,
        {
            "command": "test",
            "seed": args.seed,
            "episodes": episodes,
            "method": method,
            "checkpoints": str(checkpoint_dir),
        },
    )
    print(f"tested {len(rows)} payload points -> {out / 'metrics.csv'}")
    return 0


def _cmd_baseline(args) -> int:
    settings = parse_config(args.config)
    episodes = args.episodes or settings.testing_episodes
    out = _prepare_out_dir(args.out, settings)
    if args.algo == "greedy":
        policy = GreedyPolicy()
    elif args.algo == "hill":
        streams = RngStreams.from_seed(args.seed)
        policy = HillClimbPolicy(
            settings.reward, streams.exploration, settings.hill_max_iters
        )
    else:  # fixed-pl: train without leader selection, then test frozen
        train_episodes = args.train_episodes or settings.training_episodes
        restarts = args.restarts or settings.training_restarts
        result = fixed_pl_policy(
            settings.scenario,
            settings.hyper,
            settings.reward,
            args.seed,
            train_episodes,
            restarts=restarts,
            processes=restarts,
        )
        save_agents(out / "checkpoints", result, settings.scenario)
        write_training_log(out / "training_log.csv", result.log)
        policy = load_policy(out / "checkpoints", settings.scenario, settings.hyper.epsilon)
    rows = run_testing(
        settings.scenario,
        policy,
        seed=args.seed,
        episodes=episodes,
        payloads_bytes=settings.test_payloads_bytes,
        method=args.algo if args.algo != "fixed-pl" else "fixed-pl",
    )
    append_metrics(out / "metrics.csv", rows)
    _write_manifest(
        out,
        settings,
        {
            "command": "baseline",
            "seed": args.seed,
            "episodes": episodes,
            "method": args.algo,
        },
    )
    print(f"baseline {args.algo}: {len(rows)} payload points -> {out / 'metrics.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    settings = parse_config(args.config)
    episodes = args.episodes or settings.testing_episodes
    out = _prepare_out_dir(args.out, settings)
    metrics_path = out / "metrics.csv"
    n_rows = 0
    for ckpt in args.checkpoints:
        ckpt_dir = Path(ckpt)
        cfg_file = ckpt_dir / "effective_config.ini"
        ckpt_settings = parse_config(cfg_file) if cfg_file.exists() else settings
        checkpoint_dir = ckpt_dir / "checkpoints" if (ckpt_dir / "checkpoints").is_dir() else ckpt_dir
        policy = load_policy(checkpoint_dir, ckpt_settings.scenario, ckpt_settings.hyper.epsilon)
        method = "marl" if policy.pl_selection else "fixed-pl"
        rows = run_testing(
            ckpt_settings.scenario,
            policy,
            seed=args.seed,
            episodes=episodes,
            payloads_bytes=settings.test_payloads_bytes,
            method=method,
        )
        append_metrics(metrics_path, rows)
        n_rows += len(rows)
    _write_manifest(
        out,
        settings,
        {
            "command": "sweep",
            "seed": args.seed,
            "episodes": episodes,
            "method": "sweep",
            "checkpoints": ";".join(str(c) for c in args.checkpoints),
        },
    )
    print(f"sweep wrote {n_rows} rows -> {metrics_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoon-marl",
        description="C-V2X platoon spectrum-sharing simulator and multi-agent Q-learning.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI-style configuration file")
        p.add_argument("--seed", type=int, default=0, help="master seed for all substreams")
        p.add_argument("--out", required=True, help="output directory for artifacts")

    p_train = sub.add_parser("train", help="train the agents, write checkpoints + log")
    common(p_train)
    p_train.add_argument("--episodes", type=int, help="override training_episodes")
    p_train.add_argument("--restarts", type=int, help="override training_restarts")
    p_train.add_argument(
        "--fixed-pl", action="store_true", help="disable leader selection (leader 0)"
    )
    p_train.set_defaults(func=_cmd_train)

    p_test = sub.add_parser("test", help="evaluate checkpoints over the payload sweep")
    common(p_test)
    p_test.add_argument("--checkpoints", required=True, help="train output (or checkpoints) dir")
    p_test.add_argument("--episodes", type=int, help="override testing_episodes")
    p_test.set_defaults(func=_cmd_test)

    p_base = sub.add_parser("baseline", help="run a comparison method")
    common(p_base)
    p_base.add_argument("--algo", required=True, choices=("hill", "greedy", "fixed-pl"))
    p_base.add_argument("--episodes", type=int, help="override testing_episodes")
    p_base.add_argument(
        "--train-episodes", type=int, help="training length for --algo fixed-pl"
    )
    p_base.add_argument("--restarts", type=int, help="override training_restarts (fixed-pl)")
    p_base.set_defaults(func=_cmd_baseline)

    p_sweep = sub.add_parser("sweep", help="test several checkpoint dirs over the payload grid")
    common(p_sweep)
    p_sweep.add_argument(
        "--checkpoints", nargs="+", required=True, help="one or more train output dirs"
    )
    p_sweep.add_argument("--episodes", type=int, help="override testing_episodes")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlatoonMarlError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``leopos {train,eval,bench,codebook}``.

Exit status is 0 on success, 1 for usage or configuration errors and 2
when a run fails at runtime.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import seeding
from .agent import evaluate, train, write_metrics_csv
from .baselines import BASELINE_KINDS, make_baseline
from .config import ExperimentConfig, dump_config, load_config
from .env import BeamEnv
from .errors import ConfigError
from .neural import forward, load_checkpoint, save_checkpoint

EVAL_HEADER = ["seed", "episode", "final_error_m", "mean_error_m"]
SUMMARY_HEADER = ["seed", "policy", "n_episodes", "rmse_m", "mean_error_m"]
BENCH_HEADER = ["metric", "index", "seconds"]
CHECKPOINT_NAME = "checkpoint.npz"
SNAPSHOT_NAME = "config.resolved.yaml"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])
    return path


def _resolve(args) -> tuple[ExperimentConfig, Path]:
    """Config file plus flag overrides; writes the resolved snapshot."""
    cfg = load_config(args.config)
    try:
        agent = cfg.agent
        if args.command in ("train", "bench") and args.episodes is not None:
            agent = replace(agent, episodes=args.episodes)
        if getattr(args, "steps", None) is not None:
            agent = replace(agent, steps=args.steps)
        cfg = replace(cfg, agent=agent)
        if args.command == "eval" and args.episodes is not None:
            cfg = replace(cfg, eval=replace(cfg.eval, episodes=args.episodes))
        if args.command == "codebook" and args.k is not None:
            if not 1 <= args.k <= cfg.scenario.m_beams:
                raise ValueError("--k must lie in [1, m_beams]")
            cfg = replace(cfg, codebook=replace(cfg.codebook, k=args.k))
    except ValueError as exc:
        raise ConfigError(f"invalid override: {exc}") from None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    cfg = replace(cfg, output_dir=str(out))
    out.mkdir(parents=True, exist_ok=True)
    (out / SNAPSHOT_NAME).write_text(dump_config(cfg))
    return cfg, out


# subcommands

def cmd_train(args) -> int:
    cfg, out = _resolve(args)
    log = None
    if args.verbose:
        def log(row):
            print(f"episode {row.episode:5d}  reward {row.cum_reward:10.3f}  "
                  f"error {row.mean_error_m:9.3f} m  eps {row.epsilon:.3f}", file=sys.stderr)
    result = train(cfg.agent, cfg.env_config(), seed=cfg.seed, codebook=cfg.build_codebook(),
                   checkpoint_dir=out, log=log)
    write_metrics_csv(out / "metrics.csv", result.metrics)
    save_checkpoint(out / CHECKPOINT_NAME, result.net,
                    {"seed": cfg.seed, "episodes": cfg.agent.episodes, "steps": cfg.agent.steps})
    print(f"wrote {out / 'metrics.csv'} and {out / CHECKPOINT_NAME}")
    return 0


def _policy(cfg: ExperimentConfig, baseline: str | None, checkpoint: str | None, seed: int):
    if baseline is not None:
        return make_baseline(baseline, rng=seeding.rng(seed, seeding.BASELINE),
                             footprint_radius=cfg.eval.footprint_radius_m,
                             threshold=cfg.eval.sinr_threshold)
    net, _ = load_checkpoint(checkpoint)
    return net


def _eval_one(job):
    cfg, baseline, checkpoint, seed = job
    rep = evaluate(_policy(cfg, baseline, checkpoint, seed), cfg.eval.episodes, seed,
                   env_cfg=cfg.env_config(), codebook=cfg.build_codebook())
    return seed, baseline or "dqn", rep.final_errors, rep.mean_errors


def cmd_eval(args) -> int:
    if (args.baseline is None) == (args.checkpoint is None):
        raise UsageError("eval needs exactly one of --baseline or --checkpoint")
    if args.baseline is not None and args.baseline not in BASELINE_KINDS:
        raise UsageError(f"unknown baseline {args.baseline!r}; valid names: {', '.join(BASELINE_KINDS)}")
    if args.checkpoint is not None and not Path(args.checkpoint).is_file():
        raise RuntimeError(f"checkpoint not found: {args.checkpoint}")
    if args.seeds < 1 or args.workers < 1:
        raise UsageError("--seeds and --workers must be >= 1")
    cfg, out = _resolve(args)
    seeds = [cfg.seed + i for i in range(args.seeds)]
    jobs = [(cfg, args.baseline, args.checkpoint, s) for s in seeds]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_eval_one, jobs))
    else:
        results = [_eval_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])

    rows, summary = [], []
    for seed, name, finals, means in results:
        rows += [(seed, j, f, m) for j, (f, m) in enumerate(zip(finals, means))]
        summary.append((seed, name, finals.size, float(np.sqrt(np.mean(finals**2))),
                        float(np.mean(finals))))
    # Table-style aggregate: per-seed RMSE averaged over seeds
    summary.append(("all", results[0][1], sum(r[2] for r in summary),
                    float(np.mean([r[3] for r in summary])),
                    float(np.mean([r[4] for r in summary]))))
    _write_csv(out / "eval.csv", EVAL_HEADER, rows)
    _write_csv(out / "eval_summary.csv", SUMMARY_HEADER, summary)
    agg = summary[-1]
    print(f"{agg[1]}: RMSE {agg[3]:.4f} m, mean error {agg[4]:.4f} m over {len(seeds)} seed(s)")
    return 0


def cmd_bench(args) -> int:
    cfg, out = _resolve(args)
    agent = replace(cfg.agent, learning_starts=min(cfg.agent.learning_starts, cfg.agent.batch))
    result = train(agent, cfg.env_config(), seed=cfg.seed, codebook=cfg.build_codebook())
    rows = [("train_episode", i, s) for i, s in enumerate(result.episode_seconds)]

    env = BeamEnv(cfg.env_config(), cfg.build_codebook())
    state = env.reset(seeding.stream(cfg.seed, seeding.EVAL_EPISODE, 0))
    lat = []
    for _ in range(args.inference_steps):
        t0 = time.perf_counter()
        a = int(np.argmax(forward(result.net, state)))
        lat.append(time.perf_counter() - t0)
        out_ = env.step(a)
        state = out_.next_state
        if out_.done:
            state = env.reset(seeding.stream(cfg.seed, seeding.EVAL_EPISODE, 1))
    rows.append(("inference_step_mean", "", float(np.mean(lat))))
    n_steps = max(1, result.n_env_steps)
    rows.append(("train_step_mean", "", float(np.sum(result.episode_seconds)) / n_steps))
    _write_csv(out / "bench.csv", BENCH_HEADER, rows)
    print(f"train {rows[-1][2] * 1e3:.3f} ms/step, inference {rows[-2][2] * 1e6:.1f} us/step")
    return 0


def cmd_codebook(args) -> int:
    cfg, out = _resolve(args)
    cb = cfg.build_codebook()
    header = ["index"] + [f"w{i}" for i in range(cb.m)]
    _write_csv(out / "codebook.csv", header, ([i, *row] for i, row in enumerate(cb.actions)))
    print(f"{cb.size} actions ({cb.mode}) -> {out / 'codebook.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="leopos", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment config (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="top-level seed (overrides config)")
        sp.add_argument("--out", help="output directory (overrides config output_dir)")

    t = sub.add_parser("train", help="train the DQN and write metrics.csv + checkpoint")
    common(t)
    t.add_argument("--episodes", type=int)
    t.add_argument("--steps", type=int)
    t.add_argument("-v", "--verbose", action="store_true", help="log every episode to stderr")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="greedy evaluation of a checkpoint or a baseline")
    common(e)
    e.add_argument("--checkpoint")
    e.add_argument("--baseline", help=f"one of: {', '.join(BASELINE_KINDS)}")
    e.add_argument("--episodes", type=int, help="evaluation episodes per seed")
    e.add_argument("--steps", type=int)
    e.add_argument("--seeds", type=int, default=1, help="evaluate seeds seed..seed+N-1")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="training and inference timing")
    common(b)
    b.add_argument("--episodes", type=int, default=3)
    b.add_argument("--steps", type=int)
    b.add_argument("--inference-steps", type=int, default=200)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("codebook", help="dump the action table")
    common(c)
    c.add_argument("--k", type=int, help="largest support size")
    c.set_defaults(func=cmd_codebook)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
